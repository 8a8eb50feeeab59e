//! Minimum torch placement on discrete heightmaps.
//!
//! A heightmap is reduced to a set-cover style constraint system `Dx >= 1`
//! over its floor tiles, which is then attacked either through an ADMM loop
//! that solves one QUBO per iteration, through a slack-variable penalty QUBO,
//! or through the classical greedy and branch-and-bound baselines.
//!
//! The crate is `no_std` (it needs `alloc`). The default `std` feature only
//! lets the hybrid solver run its two searches on separate threads; results
//! are identical either way.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod admm;
pub mod baselines;
pub mod geometry;
pub mod heightmap;
pub mod qubo;
pub mod solvers;

mod rng;

pub use admm::{run_admm, AdmmConfig, AdmmOutcome, AdmmState, IterationRecord, IterationTrace};
pub use baselines::{exhaustive_min_cover, greedy_cover, to_setcover, SetCoverInstance};
pub use geometry::{
    block_empty, coverage_matrix, distance_field, light_levels, CoverageMatrix, DistanceCache,
    DistanceField, LightParams, TorchLayout,
};
pub use heightmap::{generate_perlin_map, parse_heightmap, Heightmap, PerlinParams, Tile, TileIndex};
pub use qubo::{
    build_admm_step_qubo, build_lse_constraints, build_slack_qubo, energy, LinearConstraintSystem,
    LseConstraint, QuboInstance, SlackQubo,
};
pub use rng::derive_seed;
pub use solvers::{solve, solve_from, solve_hybrid, SaParams, SolveResult, SolverConfig, SolverKind, TabuParams};

/// Largest instance the enumerating oracles accept.
pub const MAX_EXHAUSTIVE_VARS: usize = 25;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("line {line}: expected {expected} tokens, found {found}")]
    RaggedRow { line: usize, expected: usize, found: usize },
    #[error("line {line}: invalid token `{token}`")]
    BadToken { line: usize, token: alloc::string::String },
    #[error("heightmap has no floor tiles")]
    EmptyInstance,
    #[error("invalid dimensions {width}x{height}")]
    InvalidDimensions { width: usize, height: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("tile ({row}, {col}) is a wall")]
    WallSource { row: usize, col: usize },
    #[error("{n} variables exceed the exhaustive limit of {limit}")]
    Capacity { n: usize, limit: usize },
}

pub type Result<T> = core::result::Result<T, Error>;
