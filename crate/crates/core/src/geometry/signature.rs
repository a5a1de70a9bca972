use serde::Serialize;

use crate::{DMat, DVec};

use super::GeometryError;

/// Eigenvalues within `±DEFAULT_EIGEN_TOL` count as null directions.
pub const DEFAULT_EIGEN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignatureReport {
    pub n_plus: usize,
    pub n_minus: usize,
    pub n_zero: usize,
    pub tolerance: f64,
}

impl SignatureReport {
    pub fn dim(&self) -> usize {
        self.n_plus + self.n_minus + self.n_zero
    }
}

/// Which of the three velocity-space regimes a non-degenerate metric falls in.
///
/// The witness of [`CausalityClass::MultiTimeUnbounded`] is expressed in the
/// normalized diagonal frame `diag(+1,…,+1,−1,…,−1)` (time slots first) with
/// `w⁰ = 1`, so its spatial speed is read off directly.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "class")]
pub enum CausalityClass {
    /// No positive direction: `g(v,v) < 0` for every `v ≠ 0`.
    NoTimeInfeasible,
    /// Two or more positive directions: `g(w,w) ≥ 0` with spatial speed > 1.
    MultiTimeUnbounded { witness: Vec<f64> },
    /// Exactly one positive direction: `g(v,v) ≥ 0` forces spatial speed ≤ 1.
    OneTimeBounded,
}

impl CausalityClass {
    pub fn name(&self) -> &'static str {
        match self {
            CausalityClass::NoTimeInfeasible => "NoTimeInfeasible",
            CausalityClass::MultiTimeUnbounded { .. } => "MultiTimeUnbounded",
            CausalityClass::OneTimeBounded => "OneTimeBounded",
        }
    }

    pub fn witness(&self) -> Option<&[f64]> {
        match self {
            CausalityClass::MultiTimeUnbounded { witness } => Some(witness),
            _ => None,
        }
    }
}

/// Classification of a concrete metric together with the frame change that
/// brings it to normalized diagonal form.
#[derive(Debug, Clone, Serialize)]
pub struct CausalityReport {
    pub signature: SignatureReport,
    pub class: CausalityClass,
    /// Eigenvalues of `g`, ordered positive first then negative.
    pub eigenvalues: Vec<f64>,
    /// Columns `e_i/√|λ_i|`; `basisᵀ·g·basis` is the normalized diagonal form.
    #[serde(skip)]
    pub basis: DMat,
    /// Witness mapped back to the original coordinates (`basis · w`).
    pub witness_coordinates: Option<Vec<f64>>,
}

pub fn signature(g: &DMat, tol: f64) -> SignatureReport {
    let eig = g.clone().symmetric_eigen();
    let mut report = SignatureReport {
        n_plus: 0,
        n_minus: 0,
        n_zero: 0,
        tolerance: tol,
    };
    for &l in eig.eigenvalues.iter() {
        if l > tol {
            report.n_plus += 1;
        } else if l < -tol {
            report.n_minus += 1;
        } else {
            report.n_zero += 1;
        }
    }
    report
}

/// Spatial speed squared of `w` in the normalized diagonal frame whose first
/// `n_plus` slots are time directions; the coordinate time is slot 0.
pub fn spatial_speed_sq(w: &[f64], n_plus: usize) -> f64 {
    w[n_plus..].iter().map(|x| x * x).sum::<f64>() / (w[0] * w[0])
}

pub fn causality_class(sig: &SignatureReport) -> Result<CausalityClass, GeometryError> {
    if sig.n_zero > 0 {
        return Err(GeometryError::DegenerateSignature { n_zero: sig.n_zero });
    }
    match sig.n_plus {
        0 => Ok(CausalityClass::NoTimeInfeasible),
        1 => Ok(CausalityClass::OneTimeBounded),
        n_plus => {
            if sig.n_minus == 0 {
                return Err(GeometryError::NoSpatialDirection { n_plus });
            }
            // v⁰ = 1, second time component λ̇ = 2, first spatial component 2:
            // g(w,w) = 1 + 4 − 4 = 1 while the spatial speed is 2.
            let mut w = vec![0.0; sig.dim()];
            w[0] = 1.0;
            w[1] = 2.0;
            w[n_plus] = 2.0;
            Ok(CausalityClass::MultiTimeUnbounded { witness: w })
        }
    }
}

pub fn classify_metric(g: &DMat, tol: f64) -> Result<CausalityReport, GeometryError> {
    if !g.is_square() {
        return Err(GeometryError::DimensionMismatch {
            expected: g.nrows(),
            found: g.ncols(),
        });
    }
    let sig = signature(g, tol);
    let class = causality_class(&sig)?;

    let eig = g.clone().symmetric_eigen();
    let n = g.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    // positive eigenvalues first (largest first), then negative (closest to zero first)
    order.sort_by(|&a, &b| {
        let (la, lb) = (eig.eigenvalues[a], eig.eigenvalues[b]);
        match (la > 0.0, lb > 0.0) {
            (true, false) => std::cmp::Ordering::Less,
            (false, true) => std::cmp::Ordering::Greater,
            (true, true) => lb.total_cmp(&la),
            (false, false) => lb.total_cmp(&la),
        }
    });
    let mut basis = DMat::zeros(n, n);
    let mut eigenvalues = Vec::with_capacity(n);
    for (col, &i) in order.iter().enumerate() {
        let l = eig.eigenvalues[i];
        eigenvalues.push(l);
        basis.set_column(col, &(eig.eigenvectors.column(i) / l.abs().sqrt()));
    }
    let witness_coordinates = class.witness().map(|w| {
        (&basis * DVec::from_column_slice(w))
            .iter()
            .copied()
            .collect()
    });
    Ok(CausalityReport {
        signature: sig,
        class,
        eigenvalues,
        basis,
        witness_coordinates,
    })
}
