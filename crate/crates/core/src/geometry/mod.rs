//! Metrics, quadratic forms, signature counting and the causality
//! classification of velocity spaces.
//!
//! A real mass term `√g(v,v)` needs `g(v,v) ≥ 0`. Whether that condition
//! bounds the coordinate speed depends only on how many positive ("time")
//! directions the metric has, so the classification works on the
//! [`SignatureReport`] alone.

mod metric;
mod signature;

use thiserror::Error;

pub use metric::{MetricField, MetricKind};
pub use signature::{
    causality_class, classify_metric, signature, spatial_speed_sq, CausalityClass, CausalityReport,
    SignatureReport, DEFAULT_EIGEN_TOL,
};

use crate::{DMat, DVec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("metric is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },
    #[error("metric is degenerate (det = {det:e})")]
    Degenerate { det: f64 },
    #[error("degenerate signature: {n_zero} null eigenvalue(s)")]
    DegenerateSignature { n_zero: usize },
    #[error("{n_plus} time directions but no spatial direction: no speed to bound")]
    NoSpatialDirection { n_plus: usize },
}

/// `v·g·v`.
pub fn quadratic_form(g: &DMat, v: &DVec) -> Result<f64, GeometryError> {
    if g.nrows() != v.len() || g.ncols() != v.len() {
        return Err(GeometryError::DimensionMismatch {
            expected: g.nrows(),
            found: v.len(),
        });
    }
    Ok(v.dot(&(g * v)))
}
