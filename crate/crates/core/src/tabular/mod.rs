//! Game data model, policies and exact evaluation.

pub mod episode;
pub mod eval;
pub mod joint;
pub mod model;
pub mod policy;
pub mod schema;
pub mod transitions;

pub use episode::{sample_episode, sample_episode_with, Episode, Step};
pub use eval::{
    evaluate, evaluate_with, is_feasible, potential_gap, EvalResult, Feasibility, Marginalizer,
    StepValues,
};
pub use joint::{CountTables, JointSpace};
pub use model::{Cmpg, CmpgParts};
pub use policy::{AgentPolicy, JointPolicy};
pub use schema::GameDocument;
pub use transitions::Transitions;
