use std::fmt;
use std::sync::Arc;

use crate::profile::ScalarProfile;
use crate::{DMat, DVec};

use super::GeometryError;

const SYMMETRY_TOL: f64 = 1e-14;
const DEGENERACY_TOL: f64 = 1e-12;
const FD_STEP: f64 = 1e-6;

type MetricFn = Arc<dyn Fn(&DVec) -> DMat + Send + Sync>;

/// How a [`MetricField`] produces its matrix.
#[derive(Clone)]
pub enum MetricKind {
    Constant(DMat),
    /// `g_00 = 1 + 2φ(x)`, `g_ii = −1`: a weak static potential on flat space.
    DiagonalAnalytic(ScalarProfile),
    /// Arbitrary evaluator; derivatives fall back to central differences.
    Custom(MetricFn),
}

impl fmt::Debug for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricKind::Constant(g) => f.debug_tuple("Constant").field(g).finish(),
            MetricKind::DiagonalAnalytic(p) => f.debug_tuple("DiagonalAnalytic").field(p).finish(),
            MetricKind::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// Position-dependent symmetric `N×N` metric `g_{αβ}(x)`.
#[derive(Debug, Clone)]
pub struct MetricField {
    dim: usize,
    kind: MetricKind,
}

impl MetricField {
    /// `diag(1, −1, …, −1)`.
    pub fn minkowski(dim: usize) -> Self {
        let mut d = vec![-1.0; dim];
        d[0] = 1.0;
        Self::diagonal(&d).expect("nonzero diagonal")
    }

    pub fn euclidean(dim: usize) -> Self {
        Self::diagonal(&vec![1.0; dim]).expect("nonzero diagonal")
    }

    pub fn diagonal(entries: &[f64]) -> Result<Self, GeometryError> {
        Self::constant(DMat::from_diagonal(&DVec::from_column_slice(entries)))
    }

    /// Constant metric; rejects asymmetric or degenerate matrices.
    pub fn constant(g: DMat) -> Result<Self, GeometryError> {
        if !g.is_square() || g.nrows() == 0 {
            return Err(GeometryError::DimensionMismatch {
                expected: g.nrows(),
                found: g.ncols(),
            });
        }
        check_matrix(&g)?;
        Ok(Self {
            dim: g.nrows(),
            kind: MetricKind::Constant(g),
        })
    }

    /// Weak-field static metric `g_00 = 1 + 2φ(x)`, spatial block `−I`.
    pub fn weak_field(profile: ScalarProfile) -> Self {
        Self {
            dim: profile.dim(),
            kind: MetricKind::DiagonalAnalytic(profile),
        }
    }

    pub fn custom(dim: usize, f: impl Fn(&DVec) -> DMat + Send + Sync + 'static) -> Self {
        Self {
            dim,
            kind: MetricKind::Custom(Arc::new(f)),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &MetricKind {
        &self.kind
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.kind, MetricKind::Constant(_))
    }

    /// `g_{αβ}(x)`.
    pub fn eval(&self, x: &DVec) -> DMat {
        match &self.kind {
            MetricKind::Constant(g) => g.clone(),
            MetricKind::DiagonalAnalytic(phi) => {
                let mut g = -DMat::identity(self.dim, self.dim);
                g[(0, 0)] = 1.0 + 2.0 * phi.value(x);
                g
            }
            MetricKind::Custom(f) => f(x),
        }
    }

    /// `∂_k g_{αβ}(x)` for each coordinate `k`.
    pub fn derivatives(&self, x: &DVec) -> Vec<DMat> {
        let n = self.dim;
        match &self.kind {
            MetricKind::Constant(_) => vec![DMat::zeros(n, n); n],
            MetricKind::DiagonalAnalytic(phi) => {
                let grad = phi.gradient(x);
                (0..n)
                    .map(|k| {
                        let mut d = DMat::zeros(n, n);
                        d[(0, 0)] = 2.0 * grad[k];
                        d
                    })
                    .collect()
            }
            MetricKind::Custom(f) => (0..n)
                .map(|k| {
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[k] += FD_STEP;
                    xm[k] -= FD_STEP;
                    (f(&xp) - f(&xm)) / (2.0 * FD_STEP)
                })
                .collect(),
        }
    }

    /// Evaluates and checks symmetry and non-degeneracy at `x`.
    pub fn eval_checked(&self, x: &DVec) -> Result<DMat, GeometryError> {
        if x.len() != self.dim {
            return Err(GeometryError::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        let g = self.eval(x);
        check_matrix(&g)?;
        Ok(g)
    }
}

fn check_matrix(g: &DMat) -> Result<(), GeometryError> {
    let asym = (g - g.transpose()).amax();
    if asym > SYMMETRY_TOL {
        return Err(GeometryError::NotSymmetric { asymmetry: asym });
    }
    let det = g.determinant();
    if det.abs() <= DEGENERACY_TOL {
        return Err(GeometryError::Degenerate { det });
    }
    Ok(())
}
