//! Smooth scalar functions of position used to build position-dependent
//! backgrounds (curved metrics, modulated tensors, gauge functions).

use nalgebra as na;
use serde::{Deserialize, Serialize};

use crate::{DMat, DVec};

/// A scalar field `φ(x)` with closed-form gradient and Hessian.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScalarProfile {
    /// `φ(x) = offset + c·x`
    Linear { coeffs: Vec<f64>, offset: f64 },
    /// `φ(x) = a·cos(k·x + phase)`
    Cosine {
        amplitude: f64,
        wavevector: Vec<f64>,
        phase: f64,
    },
    /// `φ(x) = a·exp(−|x − c|² / (2w²))`
    Gaussian {
        amplitude: f64,
        center: Vec<f64>,
        width: f64,
    },
}

impl ScalarProfile {
    /// Number of coordinates the profile expects.
    pub fn dim(&self) -> usize {
        match self {
            ScalarProfile::Linear { coeffs, .. } => coeffs.len(),
            ScalarProfile::Cosine { wavevector, .. } => wavevector.len(),
            ScalarProfile::Gaussian { center, .. } => center.len(),
        }
    }

    pub fn value(&self, x: &DVec) -> f64 {
        match self {
            ScalarProfile::Linear { coeffs, offset } => {
                offset
                    + coeffs
                        .iter()
                        .zip(x.iter())
                        .map(|(c, xi)| c * xi)
                        .sum::<f64>()
            }
            ScalarProfile::Cosine {
                amplitude,
                wavevector,
                phase,
            } => amplitude * (dot(wavevector, x) + phase).cos(),
            ScalarProfile::Gaussian {
                amplitude,
                center,
                width,
            } => amplitude * (-dist2(center, x) / (2.0 * width * width)).exp(),
        }
    }

    pub fn gradient(&self, x: &DVec) -> DVec {
        let n = self.dim();
        match self {
            ScalarProfile::Linear { coeffs, .. } => DVec::from_column_slice(coeffs),
            ScalarProfile::Cosine {
                amplitude,
                wavevector,
                phase,
            } => {
                let s = -amplitude * (dot(wavevector, x) + phase).sin();
                DVec::from_iterator(n, wavevector.iter().map(|k| s * k))
            }
            ScalarProfile::Gaussian {
                amplitude,
                center,
                width,
            } => {
                let w2 = width * width;
                let e = amplitude * (-dist2(center, x) / (2.0 * w2)).exp();
                DVec::from_iterator(n, (0..n).map(|i| -e * (x[i] - center[i]) / w2))
            }
        }
    }

    pub fn hessian(&self, x: &DVec) -> DMat {
        let n = self.dim();
        match self {
            ScalarProfile::Linear { .. } => DMat::zeros(n, n),
            ScalarProfile::Cosine {
                amplitude,
                wavevector,
                phase,
            } => {
                let c = -amplitude * (dot(wavevector, x) + phase).cos();
                let k = na::DVector::from_column_slice(wavevector);
                &k * k.transpose() * c
            }
            ScalarProfile::Gaussian {
                amplitude,
                center,
                width,
            } => {
                let w2 = width * width;
                let e = amplitude * (-dist2(center, x) / (2.0 * w2)).exp();
                let d = DVec::from_iterator(n, (0..n).map(|i| x[i] - center[i]));
                (&d * d.transpose() / (w2 * w2) - DMat::identity(n, n) / w2) * e
            }
        }
    }
}

fn dot(k: &[f64], x: &DVec) -> f64 {
    k.iter().zip(x.iter()).map(|(a, b)| a * b).sum()
}

fn dist2(c: &[f64], x: &DVec) -> f64 {
    c.iter().zip(x.iter()).map(|(a, b)| (b - a) * (b - a)).sum()
}
