//! Solvers for two-player zero-sum extensive-form games.
//!
//! The strategy space of each player is a treeplex (a tree of simplexes in
//! sequence form), and equilibrium computation is posed as a bilinear
//! saddle-point problem over the two treeplexes. Two solver families are
//! provided: the excessive gap technique smoothed with a dilated entropy
//! regularizer ([`egt`]), and regret-matching-based counterfactual regret
//! minimization ([`cfr`]). The [`cli`] module drives both and emits
//! plot-ready convergence telemetry.

pub mod cfr;
pub mod cli;
pub mod dgf;
pub mod egt;
pub mod game;
pub mod linops;
pub mod metrics;
pub mod treeplex;
