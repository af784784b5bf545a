fn main() {
    std::process::exit(efg_solver::cli::main_with_args(std::env::args_os()));
}
