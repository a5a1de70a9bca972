use std::fmt;
use std::sync::Arc;

use crate::profile::ScalarProfile;
use crate::{DMat, DVec};

const FD_STEP: f64 = 1e-6;

type PotentialFn = Arc<dyn Fn(&DVec) -> DVec + Send + Sync>;

/// Electromagnetic covector potential `A_α(x)`.
#[derive(Clone)]
pub enum VectorPotentialField {
    Zero {
        dim: usize,
    },
    Constant(DVec),
    /// Uniform field of strength `field` in the `(i, j)` coordinate plane:
    /// `A_i = −B x^j / 2`, `A_j = B x^i / 2`, so `∂_i A_j − ∂_j A_i = B`.
    UniformMagnetic {
        dim: usize,
        field: f64,
        plane: (usize, usize),
    },
    /// `A + ∇f`, a pure gauge transformation of `base`.
    GaugeShifted {
        base: Box<VectorPotentialField>,
        gauge: ScalarProfile,
    },
    /// User evaluator; the Jacobian is taken by central differences.
    Custom {
        dim: usize,
        f: PotentialFn,
    },
}

impl fmt::Debug for VectorPotentialField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zero { dim } => write!(f, "Zero({dim})"),
            Self::Constant(a) => write!(f, "Constant({:?})", a.as_slice()),
            Self::UniformMagnetic { field, plane, .. } => {
                write!(f, "UniformMagnetic(B={field}, plane={plane:?})")
            }
            Self::GaugeShifted { base, gauge } => write!(f, "GaugeShifted({base:?}, {gauge:?})"),
            Self::Custom { dim, .. } => write!(f, "Custom({dim})"),
        }
    }
}

impl VectorPotentialField {
    pub fn custom(dim: usize, f: impl Fn(&DVec) -> DVec + Send + Sync + 'static) -> Self {
        Self::Custom {
            dim,
            f: Arc::new(f),
        }
    }

    pub fn gauge_shifted(self, gauge: ScalarProfile) -> Self {
        Self::GaugeShifted {
            base: Box::new(self),
            gauge,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Zero { dim } | Self::UniformMagnetic { dim, .. } | Self::Custom { dim, .. } => {
                *dim
            }
            Self::Constant(a) => a.len(),
            Self::GaugeShifted { base, .. } => base.dim(),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Self::Zero { .. })
    }

    /// True when `A` does not depend on position.
    pub fn is_constant(&self) -> bool {
        matches!(self, Self::Zero { .. } | Self::Constant(_))
    }

    pub fn value(&self, x: &DVec) -> DVec {
        match self {
            Self::Zero { dim } => DVec::zeros(*dim),
            Self::Constant(a) => a.clone(),
            Self::UniformMagnetic { dim, field, plane } => {
                let (i, j) = *plane;
                let mut a = DVec::zeros(*dim);
                a[i] = -0.5 * field * x[j];
                a[j] = 0.5 * field * x[i];
                a
            }
            Self::GaugeShifted { base, gauge } => base.value(x) + gauge.gradient(x),
            Self::Custom { f, .. } => f(x),
        }
    }

    /// `J[(α, k)] = ∂_k A_α`.
    pub fn jacobian(&self, x: &DVec) -> DMat {
        let n = self.dim();
        match self {
            Self::Zero { .. } | Self::Constant(_) => DMat::zeros(n, n),
            Self::UniformMagnetic { field, plane, .. } => {
                let (i, j) = *plane;
                let mut jac = DMat::zeros(n, n);
                jac[(i, j)] = -0.5 * field;
                jac[(j, i)] = 0.5 * field;
                jac
            }
            Self::GaugeShifted { base, gauge } => base.jacobian(x) + gauge.hessian(x),
            Self::Custom { f, .. } => {
                let mut jac = DMat::zeros(n, n);
                for k in 0..n {
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[k] += FD_STEP;
                    xm[k] -= FD_STEP;
                    jac.set_column(k, &((f(&xp) - f(&xm)) / (2.0 * FD_STEP)));
                }
                jac
            }
        }
    }

    /// Field strength `F_{kα} = ∂_k A_α − ∂_α A_k`.
    pub fn field_strength(&self, x: &DVec) -> DMat {
        let j = self.jacobian(x);
        j.transpose() - j
    }
}
