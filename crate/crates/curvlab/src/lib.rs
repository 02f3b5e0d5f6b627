//! Numerical toolkit for algebraic curvature operators and the metric
//! deformations built on top of them: surgery-stability certificates for
//! curvature conditions, warped-product profiles, Gromov–Lawson bending
//! curves and the torpedo standardization of rotationally symmetric disc
//! metrics.
//!
//! Everything is a pure function of immutable inputs. Randomized searches
//! take an explicit seed and derive per-task streams from it, so results do
//! not depend on evaluation order.

pub mod bending;
pub mod conditions;
pub mod curvature_algebra;
pub mod disc_deformations;
pub mod error;
pub mod fixtures;
pub mod jet;
pub mod numeric;
pub mod stiefel;
pub mod tolerance;
pub mod verify;
pub mod warped_metrics;

pub use error::{CurvError, Result};
