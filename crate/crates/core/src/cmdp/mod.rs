//! Single-agent constrained models: induction from a game, exact and
//! sample-based solvers, and best-policy selection.

pub mod generative;
pub mod induce;
pub mod lp;
pub mod mdp;
pub mod model;
pub mod online_to_batch;
pub mod primal_dual;

pub use generative::{build_empirical_cmdp, GenerativeModel};
pub use induce::{induce_cmdp, induce_cmdp_with};
pub use lp::{solve_cmdp_lp, LpSolution, LP_RESIDUAL_TOL};
pub use mdp::{solve_mdp, MdpSolution};
pub use model::{Cmdp, CmdpParts, CmdpValues};
pub use online_to_batch::{
    online_to_batch_select, select_from_stream, selection_episodes, FixedStream, SafePolicyStream,
    Selection, ValueSource,
};
pub use primal_dual::{
    primal_dual_solve, solve_cmdp_generative, GenerativeSolution, PrimalDualConfig,
    PrimalDualOutput,
};
