//! Command-line driver: runs one solver (`run`) or several on the same game
//! under a shared gradient budget (`compare`), emitting plot-ready CSV.
//!
//! Exit codes: 0 when the residual target is reached, 2 when the iteration
//! or gradient budget runs out first, 1 on configuration or I/O errors.

use crate::cfr::{run_cfr, CfrVariant};
use crate::egt::{run_egt, EgtConfig, EgtVariant};
use crate::game::{
    build_sequence_form, kuhn_poker, leduc_holdem, load_game, matching_pennies, river_endgame,
    GameInstance, RiverParams,
};
use crate::metrics::{ConvergenceRecord, RunControl, RunResult};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::io::Write;
use std::path::PathBuf;

pub const EXIT_TARGET_REACHED: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_BUDGET_EXHAUSTED: i32 = 2;

/// Environment variable supplying the default thread count.
pub const THREADS_ENV: &str = "EFG_SOLVER_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "efg-solver",
    about = "First-order equilibrium solvers for two-player zero-sum extensive-form games",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one algorithm on one game and emit a convergence CSV.
    Run(RunArgs),
    /// Run several algorithms on the same game under a shared gradient
    /// budget and emit a long-format CSV keyed by algorithm.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Algorithm {
    CfrRm,
    CfrRmp,
    CfrPlus,
    Egt,
    EgtAs,
    EgtTheory,
}

impl Algorithm {
    fn name(self) -> &'static str {
        match self {
            Algorithm::CfrRm => "cfr-rm",
            Algorithm::CfrRmp => "cfr-rmp",
            Algorithm::CfrPlus => "cfr-plus",
            Algorithm::Egt => "egt",
            Algorithm::EgtAs => "egt-as",
            Algorithm::EgtTheory => "egt-theory",
        }
    }
}

#[derive(Debug, Args, Clone)]
struct CommonArgs {
    /// Game selector: kuhn | leduc | pennies | river[:k=v,...] | file:<path>.
    /// River keys: ranks, pot, stack, cap, bb, fracs (levels ';'-separated,
    /// sizes '|'-separated, e.g. fracs=0.5|1;1).
    #[arg(long)]
    game: String,

    /// Residual target, relative to the game's payoff range L.
    #[arg(long)]
    eps: Option<f64>,

    /// Iteration budget.
    #[arg(long, default_value_t = 1000)]
    max_iters: u64,

    /// Initial smoothing overrides for the EGT family.
    #[arg(long)]
    mu0_x: Option<f64>,
    #[arg(long)]
    mu0_y: Option<f64>,

    /// EGT/as: grow the stepsize again after accepted steps.
    #[arg(long, default_value_t = false)]
    tau_growth: bool,

    /// Measure the residual every this many iterations.
    #[arg(long, default_value_t = 1)]
    measure_every: u64,

    /// Count measurement gradients in the reported grad_count column.
    #[arg(long, default_value_t = false)]
    merge_grad_ledgers: bool,

    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Random seed. All solvers are deterministic; accepted for interface
    /// stability and recorded nowhere.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Internal data-parallelism bound; defaults to EFG_SOLVER_THREADS or
    /// all cores.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,

    /// Algorithm to run.
    #[arg(long)]
    alg: Algorithm,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[command(flatten)]
    common: CommonArgs,

    /// Comma-separated list of algorithms.
    #[arg(long, value_delimiter = ',', required = true)]
    algs: Vec<Algorithm>,

    /// Shared per-algorithm budget of algorithm gradient computations.
    #[arg(long)]
    grad_budget: Option<u64>,
}

fn parse_river_params(spec: &str) -> Result<RiverParams, String> {
    let mut params = RiverParams::default();
    if spec.is_empty() {
        return Ok(params);
    }
    for kv in spec.split(',') {
        let (key, value) = kv
            .split_once('=')
            .ok_or_else(|| format!("river parameter '{kv}' is not key=value"))?;
        macro_rules! parsed {
            () => {
                value
                    .parse()
                    .map_err(|_| format!("invalid value '{value}' for river parameter '{key}'"))?
            };
        }
        match key {
            "ranks" => params.num_ranks = parsed!(),
            "pot" => params.pot = parsed!(),
            "stack" => params.stack = parsed!(),
            "cap" => params.raise_cap = parsed!(),
            "bb" => params.big_blind = Some(parsed!()),
            "fracs" => {
                params.bet_fractions = value
                    .split(';')
                    .map(|level| {
                        level
                            .split('|')
                            .map(|f| {
                                f.parse::<f64>()
                                    .map_err(|_| format!("invalid bet fraction '{f}'"))
                            })
                            .collect::<Result<Vec<_>, _>>()
                    })
                    .collect::<Result<Vec<_>, _>>()?;
            }
            other => return Err(format!("unknown river parameter '{other}'")),
        }
    }
    Ok(params)
}

fn load_instance(selector: &str) -> Result<GameInstance, String> {
    let game = match selector {
        "kuhn" => kuhn_poker(),
        "leduc" => leduc_holdem(),
        "pennies" => matching_pennies(),
        other => {
            if let Some(path) = other.strip_prefix("file:") {
                load_game(path).map_err(|e| format!("failed to load '{path}': {e}"))?
            } else if other == "river" {
                river_endgame(&RiverParams::default()).map_err(|e| e.to_string())?
            } else if let Some(spec) = other.strip_prefix("river:") {
                river_endgame(&parse_river_params(spec)?).map_err(|e| e.to_string())?
            } else {
                return Err(format!(
                    "unknown game '{other}' (expected kuhn, leduc, pennies, river[:params], or file:<path>)"
                ));
            }
        }
    };
    build_sequence_form(&game).map_err(|e| e.to_string())
}

fn control_from(common: &CommonArgs, inst: &GameInstance, grad_budget: Option<u64>) -> RunControl {
    RunControl {
        max_iters: common.max_iters,
        target_eps: common.eps.map(|e| e * inst.payoff_range),
        measure_every: common.measure_every.max(1),
        max_algo_grads: grad_budget,
        merge_grad_ledgers: common.merge_grad_ledgers,
    }
}

fn run_algorithm(
    inst: &GameInstance,
    alg: Algorithm,
    common: &CommonArgs,
    control: &RunControl,
) -> Result<RunResult, String> {
    match alg {
        Algorithm::CfrRm => run_cfr(inst, CfrVariant::Rm, control).map_err(|e| e.to_string()),
        Algorithm::CfrRmp => run_cfr(inst, CfrVariant::RmPlus, control).map_err(|e| e.to_string()),
        Algorithm::CfrPlus => run_cfr(inst, CfrVariant::Plus, control).map_err(|e| e.to_string()),
        Algorithm::Egt | Algorithm::EgtAs | Algorithm::EgtTheory => {
            let variant = match alg {
                Algorithm::Egt => EgtVariant::Balanced,
                Algorithm::EgtAs => EgtVariant::Adaptive,
                _ => EgtVariant::Theory,
            };
            let mut cfg = EgtConfig::new(variant);
            cfg.mu0_x = common.mu0_x;
            cfg.mu0_y = common.mu0_y;
            cfg.tau_growth = common.tau_growth;
            run_egt(inst, &cfg, control)
                .map(|out| out.result)
                .map_err(|e| e.to_string())
        }
    }
}

fn format_record(rec: &ConvergenceRecord, prefix: &str) -> String {
    let mbb = rec.eps_sad_mbb.map_or(String::new(), |v| format!("{v}"));
    format!(
        "{prefix}{},{},{:.6},{},{}",
        rec.iter, rec.grad_count, rec.wall_s, rec.eps_sad, mbb
    )
}

fn write_output(path: Option<&PathBuf>, content: &str) -> Result<(), String> {
    match path {
        Some(p) => std::fs::write(p, content).map_err(|e| format!("cannot write {p:?}: {e}")),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(content.as_bytes()).map_err(|e| e.to_string())
        }
    }
}

fn execute_run(args: &RunArgs) -> Result<i32, String> {
    let inst = load_instance(&args.common.game)?;
    let control = control_from(&args.common, &inst, None);
    let result = run_algorithm(&inst, args.alg, &args.common, &control)?;

    let mut csv = String::from("iter,grad_count,wall_s,eps_sad,eps_sad_mbb\n");
    for rec in &result.records {
        csv.push_str(&format_record(rec, ""));
        csv.push('\n');
    }
    write_output(args.common.out.as_ref(), &csv)?;
    Ok(if result.reached_target { EXIT_TARGET_REACHED } else { EXIT_BUDGET_EXHAUSTED })
}

fn execute_compare(args: &CompareArgs) -> Result<i32, String> {
    if args.algs.is_empty() {
        return Err("at least one algorithm is required".to_string());
    }
    let inst = load_instance(&args.common.game)?;
    let max_iters = if args.grad_budget.is_some() && args.common.max_iters == 1000 {
        // With an explicit gradient budget the iteration cap is a backstop.
        u64::MAX - 1
    } else {
        args.common.max_iters
    };

    let mut csv = String::from("alg,iter,grad_count,wall_s,eps_sad,eps_sad_mbb\n");
    let mut all_reached = true;
    for &alg in &args.algs {
        let mut common = args.common.clone();
        common.max_iters = max_iters;
        let control = control_from(&common, &inst, args.grad_budget);
        let result = run_algorithm(&inst, alg, &common, &control)?;
        all_reached &= result.reached_target;
        for rec in &result.records {
            csv.push_str(&format_record(rec, &format!("{},", alg.name())));
            csv.push('\n');
        }
    }
    write_output(args.common.out.as_ref(), &csv)?;
    Ok(if args.common.eps.is_none() || all_reached {
        EXIT_TARGET_REACHED
    } else {
        EXIT_BUDGET_EXHAUSTED
    })
}

fn thread_count(common: &CommonArgs) -> Option<usize> {
    common
        .threads
        .or_else(|| std::env::var(THREADS_ENV).ok().and_then(|v| v.parse().ok()))
}

/// Parses arguments and runs the requested command, returning the process
/// exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap reports --help/--version through Err as well.
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_TARGET_REACHED };
        }
    };

    let common = match &cli.command {
        Command::Run(args) => &args.common,
        Command::Compare(args) => &args.common,
    };
    let body = || match &cli.command {
        Command::Run(args) => execute_run(args),
        Command::Compare(args) => execute_compare(args),
    };

    let outcome = match thread_count(common) {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(body),
            Err(e) => Err(format!("cannot build thread pool: {e}")),
        },
        None => body(),
    };

    match outcome {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            EXIT_ERROR
        }
    }
}
