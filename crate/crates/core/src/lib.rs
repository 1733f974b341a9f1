//! Smoothing proximal gradient solvers for regression with structured
//! sparsity: overlapping group lasso and graph-guided fusion penalties, in
//! single- and multi-task form, with baselines, test oracles and synthetic
//! data generators.

pub mod baselines;
pub mod checks;
mod clock;
pub mod datagen;
pub mod error;
pub mod io;
pub mod linalg;
pub mod model;
pub mod multitask;
pub mod oracle;
pub mod penalty;
pub mod solver;

pub use error::{Error, Result};
pub use model::{
    Edge, FusionGraph, Group, GroupStructure, MultiTaskProblem, MultiTaskSolveResult, RegressionProblem,
    Smoothing, SolveResult, SolverConfig, TracePoint,
};
pub use penalty::{build_fusion_map, build_group_map, PenaltyLinearMap};
pub use solver::{spg_solve, spg_solve_warm};
