//! Extended objects: a `D`-dimensional parameter box embedded in an
//! `N`-dimensional target.
//!
//! The generalized velocity `ω^Γ` collects the `D×D` minors of the Jacobian
//! `∂x/∂z`, one per strictly increasing index set `Γ`, ordered
//! lexicographically. The volume term uses the multivector metric
//! `g_{Γ₁Γ₂} = det[g_{α_i β_j}]`, so by Cauchy–Binet
//! `g_{Γ₁Γ₂} ω^{Γ₁} ω^{Γ₂} = det(Jᵀ g J)`. With `D = 1` everything
//! reduces to the point-particle Lagrangian.

mod embedding;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

pub use embedding::{
    grid_points, CylinderPatch, Embedding, FnEmbedding, GraphEmbedding, GriddedEmbedding,
    Reparameterized,
};

use crate::geometry::MetricField;
use crate::lagrangian::{
    signed_root, ExtraTerm, LagrangianError, LagrangianSpec, NonrelExpansion, SymmetricTensorField,
    VectorPotentialField, NULL_TOL,
};
use crate::{DMat, DVec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BraneError {
    #[error("brane dimension {brane} must satisfy 1 <= D <= {target}")]
    InvalidDimension { brane: usize, target: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid parameter box: {0}")]
    InvalidBox(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("point {z:?} lies outside the parameter box")]
    OutsideBox { z: Vec<f64> },
    #[error("negative radicand {value:e} in cell {cell:?}")]
    NegativeRadicand { cell: Vec<usize>, value: f64 },
    #[error(
        "coordinates x^1..x^D cannot label the brane: internal minor {value:e} in cell {cell:?}"
    )]
    LabelingUnavailable { cell: Vec<usize>, value: f64 },
    #[error("integral gauge violated: internal minor deviates from 1 by {deviation:e}")]
    GaugeViolation { deviation: f64 },
    #[error("multivector metric is not one-time diagonal at this point: {0}")]
    NotOneTime(String),
    #[error("cell {cell:?} outside a grid with {cells:?} cells")]
    CellOutOfRange { cell: Vec<usize>, cells: Vec<usize> },
    #[error("csv: {0}")]
    Csv(String),
    #[error(transparent)]
    Lagrangian(#[from] LagrangianError),
}

/// `C(dim_m, d)`, the number of generalized-velocity components.
pub fn component_count(dim_m: usize, d: usize) -> Result<usize, BraneError> {
    if d == 0 || d > dim_m {
        return Err(BraneError::InvalidDimension {
            brane: d,
            target: dim_m,
        });
    }
    Ok((0..d).fold(1usize, |acc, i| acc * (dim_m - i) / (i + 1)))
}

/// Strictly increasing `d`-subsets of `0..dim_m`, lexicographic.
pub fn multi_indices(dim_m: usize, d: usize) -> Vec<Vec<usize>> {
    fn rec(dim_m: usize, d: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == d {
            out.push(cur.clone());
            return;
        }
        for i in start..dim_m {
            cur.push(i);
            rec(dim_m, d, i + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(dim_m, d, 0, &mut Vec::with_capacity(d), &mut out);
    out
}

fn det(m: DMat) -> f64 {
    if m.nrows() == 1 {
        m[(0, 0)]
    } else {
        m.determinant()
    }
}

/// Minors of a `dim_m × d` Jacobian in [`multi_indices`] order.
pub fn minors(jacobian: &DMat) -> DVec {
    let idx = multi_indices(jacobian.nrows(), jacobian.ncols());
    DVec::from_iterator(
        idx.len(),
        idx.iter().map(|rows| det(jacobian.select_rows(rows))),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeneralizedVelocity {
    pub z: Vec<f64>,
    pub components: Vec<f64>,
}

pub fn generalized_velocity(
    emb: &dyn Embedding,
    z: &DVec,
) -> Result<GeneralizedVelocity, BraneError> {
    let j = emb.jacobian(z)?;
    Ok(GeneralizedVelocity {
        z: z.as_slice().to_vec(),
        components: minors(&j).as_slice().to_vec(),
    })
}

/// `det[g_{α_i β_j}]` for `Γ₁ = (α_i)`, `Γ₂ = (β_j)`.
pub fn multivector_metric(g: &DMat, gamma1: &[usize], gamma2: &[usize]) -> f64 {
    det(g.select_rows(gamma1).select_columns(gamma2))
}

/// The full `C × C` multivector metric.
pub fn multivector_metric_matrix(g: &DMat, d: usize) -> DMat {
    let idx = multi_indices(g.nrows(), d);
    let c = idx.len();
    let mut out = DMat::zeros(c, c);
    for i in 0..c {
        for j in i..c {
            let v = multivector_metric(g, &idx[i], &idx[j]);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

/// Brane Lagrangian
/// `q A_Γ ω^Γ + T √(g_{Γ₁Γ₂} ω^{Γ₁} ω^{Γ₂}) + Σ Q_n (S_n(ω,…,ω))^{1/n}`
/// over the `C(N, D)`-dimensional space of generalized velocities.
#[derive(Debug, Clone)]
pub struct BraneSpec {
    brane_dim: usize,
    metric: MetricField,
    tension: f64,
    charge: f64,
    potential: VectorPotentialField,
    extra: Vec<ExtraTerm>,
}

impl BraneSpec {
    pub fn new(brane_dim: usize, metric: MetricField, tension: f64) -> Result<Self, BraneError> {
        let c = component_count(metric.dim(), brane_dim)?;
        if !(tension >= 0.0) {
            return Err(LagrangianError::NegativeMass(tension).into());
        }
        Ok(Self {
            brane_dim,
            metric,
            tension,
            charge: 0.0,
            potential: VectorPotentialField::Zero { dim: c },
            extra: Vec::new(),
        })
    }

    /// `A_Γ(x)` with `C(N, D)` components, evaluated at target points.
    pub fn with_potential(
        mut self,
        charge: f64,
        potential: VectorPotentialField,
    ) -> Result<Self, BraneError> {
        self.check_components(potential.dim())?;
        self.charge = charge;
        self.potential = potential;
        Ok(self)
    }

    pub fn with_extra(
        mut self,
        coupling: f64,
        field: SymmetricTensorField,
    ) -> Result<Self, BraneError> {
        self.check_components(field.dim())?;
        if field.rank() < 3 {
            return Err(LagrangianError::InvalidRank(field.rank()).into());
        }
        if self.extra.iter().any(|t| t.field.rank() == field.rank()) {
            return Err(LagrangianError::DuplicateRank(field.rank()).into());
        }
        self.extra.push(ExtraTerm { coupling, field });
        self.extra.sort_by_key(|t| t.field.rank());
        Ok(self)
    }

    /// The `D = 1` brane carrying the same terms as a particle Lagrangian.
    pub fn from_particle(spec: &LagrangianSpec) -> Self {
        Self {
            brane_dim: 1,
            metric: spec.metric().clone(),
            tension: spec.mass(),
            charge: spec.charge(),
            potential: spec.potential().clone(),
            extra: spec.extra_terms().to_vec(),
        }
    }

    fn check_components(&self, found: usize) -> Result<(), BraneError> {
        let expected = self.components();
        if found != expected {
            return Err(BraneError::DimensionMismatch { expected, found });
        }
        Ok(())
    }

    pub fn brane_dim(&self) -> usize {
        self.brane_dim
    }

    pub fn target_dim(&self) -> usize {
        self.metric.dim()
    }

    pub fn components(&self) -> usize {
        multi_indices(self.target_dim(), self.brane_dim).len()
    }

    pub fn metric(&self) -> &MetricField {
        &self.metric
    }

    /// Term values at target point `x` and generalized velocity `ω`:
    /// `(potential, volume, extras)`. The volume radicand is returned
    /// unrooted when negative.
    fn terms(
        &self,
        x: &DVec,
        omega: &DVec,
    ) -> Result<(f64, Result<f64, f64>, f64), LagrangianError> {
        let em = if self.charge == 0.0 {
            0.0
        } else {
            self.charge * self.potential.value(x).dot(omega)
        };
        let volume = if self.tension == 0.0 {
            Ok(0.0)
        } else {
            let gm = multivector_metric_matrix(&self.metric.eval(x), self.brane_dim);
            let q = omega.dot(&(&gm * omega));
            let scale = omega.norm_squared() * gm.amax();
            if q < -NULL_TOL * scale {
                Err(q)
            } else {
                Ok(self.tension * q.max(0.0).sqrt())
            }
        };
        let mut extra = 0.0;
        for t in &self.extra {
            let p = t.field.eval(x, omega);
            extra += t.coupling * signed_root(p, t.field.rank())?;
        }
        Ok((em, volume, extra))
    }

    /// Integrand at a parameter point.
    pub fn integrand(&self, emb: &dyn Embedding, z: &DVec) -> Result<f64, BraneError> {
        self.integrand_in_cell(emb, z, &[])
    }

    fn integrand_in_cell(
        &self,
        emb: &dyn Embedding,
        z: &DVec,
        cell: &[usize],
    ) -> Result<f64, BraneError> {
        let x = emb.position(z)?;
        let omega = minors(&emb.jacobian(z)?);
        let (em, volume, extra) = self.terms(&x, &omega)?;
        let volume = volume.map_err(|value| BraneError::NegativeRadicand {
            cell: cell.to_vec(),
            value,
        })?;
        Ok(em + volume + extra)
    }

    fn check_embedding(&self, emb: &dyn Embedding) -> Result<(), BraneError> {
        if emb.brane_dim() != self.brane_dim {
            return Err(BraneError::DimensionMismatch {
                expected: self.brane_dim,
                found: emb.brane_dim(),
            });
        }
        if emb.target_dim() != self.target_dim() {
            return Err(BraneError::DimensionMismatch {
                expected: self.target_dim(),
                found: emb.target_dim(),
            });
        }
        Ok(())
    }
}

/// Cell midpoints and the common cell volume of a regular grid over the box.
pub fn cell_midpoints(param_box: &[(f64, f64)], cells: &[usize]) -> (Vec<(Vec<usize>, DVec)>, f64) {
    let steps: Vec<f64> = param_box
        .iter()
        .zip(cells)
        .map(|(&(lo, hi), &n)| (hi - lo) / n as f64)
        .collect();
    let volume = steps.iter().product();
    let mids = grid_points(cells)
        .map(|idx| {
            let z = DVec::from_iterator(
                idx.len(),
                idx.iter()
                    .zip(param_box)
                    .zip(&steps)
                    .map(|((&i, &(lo, _)), &h)| lo + (i as f64 + 0.5) * h),
            );
            (idx, z)
        })
        .collect();
    (mids, volume)
}

fn check_cells(emb: &dyn Embedding, cells: &[usize]) -> Result<(), BraneError> {
    if cells.len() != emb.brane_dim() || cells.contains(&0) {
        return Err(BraneError::InvalidGrid(format!(
            "need at least one cell on each of {} axes, got {cells:?}",
            emb.brane_dim()
        )));
    }
    Ok(())
}

/// Midpoint-rule integral of the brane Lagrangian with `cells[a]` cells on
/// axis `a`.
///
/// Cells are evaluated in parallel and summed in grid order, so the result
/// does not depend on the thread count.
pub fn brane_action(
    spec: &BraneSpec,
    emb: &dyn Embedding,
    cells: &[usize],
) -> Result<f64, BraneError> {
    spec.check_embedding(emb)?;
    check_cells(emb, cells)?;
    let (mids, volume) = cell_midpoints(emb.param_box(), cells);
    let values: Vec<Result<f64, BraneError>> = mids
        .par_iter()
        .map(|(idx, z)| spec.integrand_in_cell(emb, z, idx))
        .collect();
    let mut total = 0.0;
    for v in values {
        total += v?;
    }
    Ok(total * volume)
}

/// Largest `|ω^{(1…D)} − 1|` over the cell midpoints, where `ω^{(1…D)}` is
/// the minor of the first `D` target coordinates.
///
/// Fails when that minor vanishes or changes sign on the grid, since then
/// the first `D` coordinates cannot serve as brane labels.
pub fn integral_gauge_check(emb: &dyn Embedding, cells: &[usize]) -> Result<f64, BraneError> {
    check_cells(emb, cells)?;
    let d = emb.brane_dim();
    let (mids, _) = cell_midpoints(emb.param_box(), cells);
    let mut worst: f64 = 0.0;
    let mut sign = 0.0;
    for (idx, z) in &mids {
        let j = emb.jacobian(z)?;
        let internal = det(j.rows(0, d).into_owned());
        if internal == 0.0 || (sign != 0.0 && internal.signum() != sign) {
            return Err(BraneError::LabelingUnavailable {
                cell: idx.clone(),
                value: internal,
            });
        }
        sign = internal.signum();
        worst = worst.max((internal - 1.0).abs());
    }
    Ok(worst)
}

/// Exact cell integrand against
/// `q A_Γ ω^Γ + T(1 − ½ Σ_{Γ≠0} |g_ΓΓ| (ω^Γ)²) + extras` at the midpoint of
/// `cell`.
///
/// Needs the integral gauge (internal minor `ω⁰ = 1`) and a diagonal
/// multivector metric with `g_00 = 1` and negative spatial entries.
pub fn nonrel_brane_expand(
    spec: &BraneSpec,
    emb: &dyn Embedding,
    cells: &[usize],
    cell: &[usize],
) -> Result<NonrelExpansion, BraneError> {
    const TOL: f64 = 1e-12;
    spec.check_embedding(emb)?;
    check_cells(emb, cells)?;
    if cell.len() != cells.len() || cell.iter().zip(cells).any(|(i, n)| i >= n) {
        return Err(BraneError::CellOutOfRange {
            cell: cell.to_vec(),
            cells: cells.to_vec(),
        });
    }
    let z = DVec::from_iterator(
        cell.len(),
        cell.iter()
            .zip(emb.param_box())
            .zip(cells)
            .map(|((&i, &(lo, hi)), &n)| lo + (i as f64 + 0.5) * (hi - lo) / n as f64),
    );
    let x = emb.position(&z)?;
    let omega = minors(&emb.jacobian(&z)?);
    let deviation = (omega[0] - 1.0).abs();
    if deviation > TOL {
        return Err(BraneError::GaugeViolation { deviation });
    }
    let gm = multivector_metric_matrix(&spec.metric.eval(&x), spec.brane_dim);
    let c = gm.nrows();
    if (gm[(0, 0)] - 1.0).abs() > TOL {
        return Err(BraneError::NotOneTime(format!("g_00 = {}", gm[(0, 0)])));
    }
    for i in 0..c {
        for j in 0..c {
            if i != j && gm[(i, j)].abs() > TOL {
                return Err(BraneError::NotOneTime(format!("g_{i}{j} = {}", gm[(i, j)])));
            }
        }
        if i > 0 && gm[(i, i)] >= 0.0 {
            return Err(BraneError::NotOneTime(format!(
                "g_{i}{i} = {} >= 0",
                gm[(i, i)]
            )));
        }
    }
    let (em, volume, extra) = spec.terms(&x, &omega)?;
    let volume = volume.map_err(|value| BraneError::NegativeRadicand {
        cell: cell.to_vec(),
        value,
    })?;
    let speed_sq: f64 = (1..c).map(|i| gm[(i, i)].abs() * omega[i] * omega[i]).sum();
    Ok(NonrelExpansion {
        exact: em + volume + extra,
        quadratic: em + spec.tension * (1.0 - 0.5 * speed_sq) + extra,
    })
}
