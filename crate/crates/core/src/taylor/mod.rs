//! Analytic maps on [0, 1], their Taylor data, and piecewise-polynomial densities.

mod density;
mod map;
mod moments;
mod poly;
mod series;

use thiserror::Error;

pub use density::{PiecewiseTaylorDensity, TaylorPiece};
pub(crate) use map::logistic;
pub use map::{ratio, AnalyticMapSpec, BlackBox, SigmoidTerm};
pub use moments::moment_integral;
pub use poly::{
    poly_antiderivative, poly_compose, poly_eval, poly_eval_f64, poly_integral, poly_mul,
    poly_pow, poly_shift,
};
pub use series::{finite_diff_coefficient, logistic_series, truncate_series, SeriesSource};

/// Default cap on polynomial degrees.
pub const DEGREE_CAP: usize = 64;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum TaylorError {
    #[error("degree {needed} exceeds the cap {cap}")]
    DegreeCap { needed: usize, cap: usize },
    #[error("finite differences need {needed} bits (budget {budget})")]
    PrecisionExhausted { needed: u32, budget: u32 },
    #[error("interval diameter {diam} is not below 1/(2 eta) = {limit}; refine the partition")]
    Diameter { diam: f64, limit: f64 },
    #[error("map leaves [0, 1]: f({x}) = {value}")]
    Range { x: f64, value: f64 },
    #[error("invalid map: {0}")]
    Invalid(String),
}
