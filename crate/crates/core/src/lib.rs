//! Selecting the team of experts whose simple-average forecast has the
//! smallest sum of squared errors over a recorded history.
//!
//! The crate provides the data model and objectives ([`model`]), the convex
//! relaxation over the probability simplex ([`qp`]), swap-based tabu search
//! ([`tabu`]), baseline heuristics and an exhaustive oracle ([`heuristics`]),
//! instances built from regular graphs ([`reduction`]), synthetic expert
//! populations ([`scenarios`]) and a seeded experiment harness ([`bench`]).

pub mod algorithm;
pub mod bench;
pub mod error;
pub mod heuristics;
pub mod io;
pub mod model;
pub mod qp;
pub mod reduction;
pub mod scenarios;
pub mod seed;
pub mod tabu;

pub use algorithm::{solve, Algorithm, SolveSettings};
pub use error::{Error, Result};
pub use model::{
    build_error_matrix, build_gram, sse_team, sse_weights, ErrorMatrix, GramMatrix, PredictionProfile, Team,
    WeightVector,
};
pub use qp::{lower_bound, max_weights_init, solve_simplex_qp, RelaxedSolution, SolverConfig, StepRule};
pub use tabu::{run_tabu, tabu_search, TabuParams};
