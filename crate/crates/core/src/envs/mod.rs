//! Benchmark environments and random instances.

pub mod bimatrix;
pub mod congestion;
pub mod grid;
pub mod random;

pub use bimatrix::{build_bimatrix, counterexample, zero_gap_example};
pub use congestion::{build_congestion_game, even_split_policy, CongestionConfig};
pub use grid::{build_grid_world, example_route_pair, route_policy, GridWorldConfig};
