//! Coordinate-ascent equilibrium search with safe iterates, plus feasible
//! starts, Slater constants and Nash verification.

pub mod estimate;
pub mod explore;
pub mod init;
pub mod known;
pub mod nash;
pub mod slater;
pub mod solver;
pub mod trace;

pub use estimate::{estimate_value_mc, ValueEstimate};
pub use explore::{ca_cmpg_explore, ExploreConfig};
pub use init::{
    feasible_init_independent, feasible_init_single_constraint, FactoredAgent, FactoredGame,
    FactoredInit,
};
pub use known::{ca_cmpg_known, known_update_bound, select_agent, CaOutcome, INIT_FEASIBILITY_TOL};
pub use nash::{verify_nash, NashReport};
pub use slater::{slater_constant, slater_upper_bound, SlaterEstimate};
pub use solver::{
    CmdpSolver, GenerativeSolver, LpSolver, PrimalDualSolver, SafeStreamSolver, SolveContext,
    SolverOutput,
};
pub use trace::{CycleRecord, RunTrace};
