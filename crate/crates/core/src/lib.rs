//! Sparse shape composition with knoll level sets.
//!
//! Shapes are represented as the positive support of `-c + sum_i alpha_i psi_i`,
//! a lifted combination of dictionary knolls, and the coefficients are fitted
//! by a Gauss-Newton method whose steps solve an asymmetric-l1 BPDN problem.
//! The core is generic over `f32` / `f64`; the aliases below fix the scalar.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ct;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod knoll;
pub mod pgm;
pub mod scalar;
pub mod segmentation;
pub mod shape;
pub mod solver;

pub use error::{Error, Result};
pub use grid::{Grid, RegionMask, ScalarField};
pub use knoll::{Dictionary, Knoll};
pub use scalar::Real;
pub use shape::Shape;
pub use solver::{SolveStatus, SolveTrace, SolverParams};

pub type Grid64 = Grid<f64>;
pub type Grid32 = Grid<f32>;
pub type Shape64 = Shape<f64>;
pub type Shape32 = Shape<f32>;
pub type Dictionary64 = Dictionary<f64>;
pub type Dictionary32 = Dictionary<f32>;
pub type SolverParams64 = SolverParams<f64>;
pub type SolverParams32 = SolverParams<f32>;
pub type SegmentationProblem64 = segmentation::SegmentationProblem<f64>;
pub type SegmentationProblem32 = segmentation::SegmentationProblem<f32>;
pub type CtProblem64 = ct::CtProblem<f64>;
pub type CtProblem32 = ct::CtProblem<f32>;
