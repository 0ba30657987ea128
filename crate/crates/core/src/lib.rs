//! Solver for the generalized Heron-waist problem.
//!
//! Given closed convex sets `C_1..C_m` and `S` in `R^n` plus nonnegative
//! weights `rho` and `omega`, find points `a_i` in `C_i` and a hub `x` in
//! `S` minimising
//!
//! ```text
//! J(a, x) = sum_i rho_i |a_i - a_{i+1}| + sum_i omega_i |a_i - x|      (a_{m+1} = a_1)
//! ```
//!
//! The crate provides the set catalogue ([`geometry`]), the problem model
//! and its structural diagnostics ([`problem`]), closed-form subgradients
//! ([`subgradient`]), the projected subgradient solver ([`solver`]), an
//! equilibrium-based optimality check ([`optimality`]), file formats
//! ([`io`]) and SVG output ([`render`]).

pub mod bundled;
pub mod error;
pub mod geometry;
pub mod io;
pub mod optimality;
pub mod point;
pub mod problem;
pub mod render;
pub mod solver;
pub mod subgradient;

pub use error::{GhwpError, Result};
pub use geometry::ConvexSet;
pub use optimality::{verify, OptimalityReport, Residual, Verdict};
pub use point::Point;
pub use problem::{Component, Configuration, Problem, ProblemOptions, Weights};
pub use solver::{solve, InitStrategy, SolveResult, SolverConfig, StepRule, StopReason};
pub use subgradient::{full_subgradient, subgradient_bound, SubgradientVector};
