//! Regret-minimizing equilibrium solvers: vanilla CFR, and outcome-sampling
//! MCCFR with exploration, optional biasing toward target information states
//! and regret kick-starting.

mod cfr;
mod mccfr;
mod regret;
pub mod rng;

pub use cfr::{run_cfr, Cfr};
pub use mccfr::{run_mccfr, BiasMeaning, Mccfr, MccfrOutput, Snapshot, SolverConfig, UpdateScheme};
pub use regret::{kickstart_regrets, regret_matching, regret_matching_into, RegretTable};
