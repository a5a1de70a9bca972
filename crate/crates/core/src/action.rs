//! Discrete actions on polylines and their stationary points.
//!
//! A path `P_0, …, P_{K+1}` with fixed ends carries the action
//! `S = Σ_k L(x̄_k, Δx_k)` with `x̄_k` the segment midpoint. Because `L` is
//! first-order homogeneous, `L(x̄, Δx/Δτ)·Δτ = L(x̄, Δx)` for any positive
//! `Δτ`, so the sum does not depend on how the segments are parameterized.
//!
//! Timelike extremals are saddles rather than minima, so [`extremize`] drives
//! `‖∇S‖²` to zero with a damped Gauss–Newton (Levenberg–Marquardt) iteration
//! instead of minimizing `S`. The Hessian of `S` is assembled from central
//! differences of the analytic gradient, three colors of interior points at a
//! time since each point only couples to its neighbours.

use serde::Serialize;
use thiserror::Error;

use crate::lagrangian::{LagrangianError, LagrangianSpec};
use crate::{DMat, DVec};

/// Upper bound on `|λ|/max|λ|` for a near-degenerate Hessian direction.
pub const DEGENERATE_RATIO: f64 = 1e-2;
const HESSIAN_STEP: f64 = 1e-6;
const MAX_REJECTIONS: usize = 60;

#[derive(Debug, Error, Clone)]
pub enum ActionError {
    #[error(transparent)]
    Lagrangian(#[from] LagrangianError),
    #[error("segment {segment} is spacelike (g(Δx,Δx) = {norm:e})")]
    SpacelikeSegment { segment: usize, norm: f64 },
    #[error("Δτ[{index}] = {value} must be positive")]
    NonPositiveStep { index: usize, value: f64 },
    #[error("expected {expected} Δτ values, got {found}")]
    StepCount { expected: usize, found: usize },
    #[error("a path needs at least one interior point")]
    NoInteriorPoints,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("no stationary point after {} iterations: {reason} (best |∇S|∞ = {:e})", best.iterations, best.grad_norm)]
    NonConvergence {
        best: Box<ExtremizeReport>,
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscretePath {
    start: DVec,
    end: DVec,
    interior: Vec<DVec>,
}

impl DiscretePath {
    pub fn new(start: DVec, end: DVec, interior: Vec<DVec>) -> Result<Self, ActionError> {
        if interior.is_empty() {
            return Err(ActionError::NoInteriorPoints);
        }
        let n = start.len();
        for p in std::iter::once(&end).chain(&interior) {
            if p.len() != n {
                return Err(ActionError::DimensionMismatch {
                    expected: n,
                    found: p.len(),
                });
            }
        }
        Ok(Self {
            start,
            end,
            interior,
        })
    }

    /// `k` interior points evenly spaced on the chord.
    pub fn straight(start: DVec, end: DVec, k: usize) -> Result<Self, ActionError> {
        let interior = (1..=k)
            .map(|j| {
                let t = j as f64 / (k + 1) as f64;
                &start * (1.0 - t) + &end * t
            })
            .collect();
        Self::new(start, end, interior)
    }

    pub fn dim(&self) -> usize {
        self.start.len()
    }

    pub fn interior_len(&self) -> usize {
        self.interior.len()
    }

    pub fn start(&self) -> &DVec {
        &self.start
    }

    pub fn end(&self) -> &DVec {
        &self.end
    }

    pub fn interior(&self) -> &[DVec] {
        &self.interior
    }

    /// All `K + 2` points, endpoints included.
    pub fn points(&self) -> impl Iterator<Item = &DVec> {
        std::iter::once(&self.start)
            .chain(&self.interior)
            .chain(std::iter::once(&self.end))
    }

    /// Segment midpoints and displacements.
    pub fn segments(&self) -> Vec<(DVec, DVec)> {
        let pts: Vec<&DVec> = self.points().collect();
        pts.windows(2)
            .map(|w| ((w[0] + w[1]) * 0.5, w[1] - w[0]))
            .collect()
    }

    /// Interior coordinates flattened point by point.
    pub fn to_flat(&self) -> DVec {
        let n = self.dim();
        let mut out = DVec::zeros(n * self.interior.len());
        for (j, p) in self.interior.iter().enumerate() {
            out.rows_mut(j * n, n).copy_from(p);
        }
        out
    }

    pub fn with_flat(&self, flat: &DVec) -> Self {
        let n = self.dim();
        let interior = (0..self.interior.len())
            .map(|j| flat.rows(j * n, n).into_owned())
            .collect();
        Self {
            start: self.start.clone(),
            end: self.end.clone(),
            interior,
        }
    }

    /// Copy with `offset(j)` added to interior point `j`.
    pub fn perturbed(&self, mut offset: impl FnMut(usize) -> DVec) -> Self {
        let interior = self
            .interior
            .iter()
            .enumerate()
            .map(|(j, p)| p + offset(j))
            .collect();
        Self {
            start: self.start.clone(),
            end: self.end.clone(),
            interior,
        }
    }
}

fn segment_value(
    spec: &LagrangianSpec,
    k: usize,
    mid: &DVec,
    dx: &DVec,
) -> Result<f64, ActionError> {
    spec.eval(mid, dx).map_err(|e| segment_error(e, k))
}

fn segment_error(e: LagrangianError, segment: usize) -> ActionError {
    match e {
        LagrangianError::SpacelikeVelocity { norm } => {
            ActionError::SpacelikeSegment { segment, norm }
        }
        other => ActionError::Lagrangian(other),
    }
}

fn check_dim(spec: &LagrangianSpec, path: &DiscretePath) -> Result<(), ActionError> {
    if spec.dim() != path.dim() {
        return Err(ActionError::DimensionMismatch {
            expected: spec.dim(),
            found: path.dim(),
        });
    }
    Ok(())
}

/// `Σ_k L(x̄_k, Δx_k)`.
pub fn discrete_action(spec: &LagrangianSpec, path: &DiscretePath) -> Result<f64, ActionError> {
    check_dim(spec, path)?;
    let mut total = 0.0;
    for (k, (mid, dx)) in path.segments().iter().enumerate() {
        total += segment_value(spec, k, mid, dx)?;
    }
    Ok(total)
}

/// `|Σ_k L(x̄_k, Δx_k/Δτ_k)·Δτ_k − S|`.
pub fn reparam_invariance_residual(
    spec: &LagrangianSpec,
    path: &DiscretePath,
    dtau: &[f64],
) -> Result<f64, ActionError> {
    let segs = path.segments();
    if dtau.len() != segs.len() {
        return Err(ActionError::StepCount {
            expected: segs.len(),
            found: dtau.len(),
        });
    }
    if let Some((index, &value)) = dtau.iter().enumerate().find(|(_, t)| !(**t > 0.0)) {
        return Err(ActionError::NonPositiveStep { index, value });
    }
    let reference = discrete_action(spec, path)?;
    let mut total = 0.0;
    for (k, ((mid, dx), &t)) in segs.iter().zip(dtau).enumerate() {
        total += segment_value(spec, k, mid, &(dx / t))? * t;
    }
    Ok((total - reference).abs())
}

/// `∂S/∂P_j` for the interior points, flattened.
pub fn action_gradient(spec: &LagrangianSpec, path: &DiscretePath) -> Result<DVec, ActionError> {
    check_dim(spec, path)?;
    let n = path.dim();
    let kk = path.interior_len();
    let mut grad = DVec::zeros(n * kk);
    for (k, (mid, dx)) in path.segments().iter().enumerate() {
        let d = spec.derivatives(mid, dx).map_err(|e| segment_error(e, k))?;
        let half_force = &d.force * 0.5;
        // segment k joins point k (left) and point k+1 (right); interior j is point j+1
        if k >= 1 {
            let j = k - 1;
            let mut g = grad.rows_mut(j * n, n);
            g += &half_force - &d.momentum;
        }
        if k < kk {
            let mut g = grad.rows_mut(k * n, n);
            g += &half_force + &d.momentum;
        }
    }
    Ok(grad)
}

/// Hessian of `S` by central differences of [`action_gradient`].
pub fn action_hessian(spec: &LagrangianSpec, path: &DiscretePath) -> Result<DMat, ActionError> {
    let n = path.dim();
    let kk = path.interior_len();
    let base = path.to_flat();
    // relative to the path extent, so the solve is translation-equivariant
    let extent = path
        .points()
        .map(|p| (p - path.start()).amax())
        .fold(1.0, f64::max);
    let h = HESSIAN_STEP * extent;
    let mut hess = DMat::zeros(n * kk, n * kk);
    for color in 0..3.min(kk) {
        for c in 0..n {
            let mut plus = base.clone();
            let mut minus = base.clone();
            for j in (color..kk).step_by(3) {
                plus[j * n + c] += h;
                minus[j * n + c] -= h;
            }
            let gp = action_gradient(spec, &path.with_flat(&plus))?;
            let gm = action_gradient(spec, &path.with_flat(&minus))?;
            let diff = (gp - gm) / (2.0 * h);
            for j in (color..kk).step_by(3) {
                let col = j * n + c;
                let lo = j.saturating_sub(1);
                let hi = (j + 1).min(kk - 1);
                for row_pt in lo..=hi {
                    for r in 0..n {
                        hess[(row_pt * n + r, col)] = diff[row_pt * n + r];
                    }
                }
            }
        }
    }
    Ok((&hess + hess.transpose()) * 0.5)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtremizeOptions {
    pub max_iters: usize,
    pub grad_tol: f64,
}

impl Default for ExtremizeOptions {
    fn default() -> Self {
        Self {
            max_iters: 500,
            grad_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExtremizeReport {
    #[serde(skip)]
    pub path: DiscretePath,
    pub action: f64,
    /// `‖∇S‖∞` at the returned path.
    pub grad_norm: f64,
    pub iterations: usize,
    /// Near-zero Hessian directions (points sliding along the curve).
    pub degenerate_modes: usize,
}

/// Near-flat Hessian directions that mostly slide points along the curve.
///
/// Longitudinal and transverse eigenvalues overlap in scale on fine paths,
/// so a mode counts when its eigenvalue is small and more than half of its
/// eigenvector lies along the local chord directions `P_{j+1} − P_{j−1}`.
pub fn degenerate_modes(path: &DiscretePath, hess: &DMat) -> usize {
    let n = path.dim();
    let pts: Vec<&DVec> = path.points().collect();
    let tangents: Vec<DVec> = pts.windows(3).map(|w| (w[2] - w[0]).normalize()).collect();
    let eig = hess.clone().symmetric_eigen();
    let max = eig.eigenvalues.amax();
    eig.eigenvalues
        .iter()
        .zip(eig.eigenvectors.column_iter())
        .filter(|(l, e)| {
            let along: f64 = tangents
                .iter()
                .enumerate()
                .map(|(j, t)| t.dot(&e.rows(j * n, n)).powi(2))
                .sum();
            l.abs() <= DEGENERATE_RATIO * max && along > 0.5
        })
        .count()
}

/// Stationary point of [`discrete_action`] over the interior points.
pub fn extremize(
    spec: &LagrangianSpec,
    path0: &DiscretePath,
    opts: ExtremizeOptions,
) -> Result<ExtremizeReport, ActionError> {
    let mut path = path0.clone();
    let mut action = discrete_action(spec, &path)?;
    let mut grad = action_gradient(spec, &path)?;
    let mut damping = 1e-6;
    let mut iterations = 0;

    let report = |path: &DiscretePath,
                  action: f64,
                  grad: &DVec,
                  iterations: usize|
     -> Result<ExtremizeReport, ActionError> {
        let hess = action_hessian(spec, path)?;
        Ok(ExtremizeReport {
            path: path.clone(),
            action,
            grad_norm: grad.amax(),
            iterations,
            degenerate_modes: degenerate_modes(path, &hess),
        })
    };

    while grad.amax() > opts.grad_tol {
        if iterations == opts.max_iters {
            return Err(ActionError::NonConvergence {
                best: Box::new(report(&path, action, &grad, iterations)?),
                reason: format!("max_iters = {} reached", opts.max_iters),
            });
        }
        iterations += 1;
        let hess = action_hessian(spec, &path)?;
        let jtj = hess.transpose() * &hess;
        let jtr = hess.transpose() * &grad;
        let scale = jtj.diagonal().amax().max(f64::MIN_POSITIVE);
        let current = grad.norm_squared();
        // undamped Newton first; it resolves the near-flat sliding modes that
        // damping would freeze
        if let Some(step) = hess.clone().lu().solve(&(-&grad)) {
            let trial = path.with_flat(&(path.to_flat() + step));
            if let Ok(g) = action_gradient(spec, &trial) {
                if g.norm_squared() < current {
                    action = discrete_action(spec, &trial)?;
                    path = trial;
                    grad = g;
                    continue;
                }
            }
        }
        let mut rejections = 0;
        loop {
            let mut lhs = jtj.clone();
            for i in 0..lhs.nrows() {
                lhs[(i, i)] += damping * scale;
            }
            let accepted = lhs.cholesky().and_then(|ch| {
                let step = ch.solve(&(-&jtr));
                let trial = path.with_flat(&(path.to_flat() + step));
                // trial paths leaving the timelike cone count as rejected steps
                let g = action_gradient(spec, &trial).ok()?;
                (g.norm_squared() < current).then_some((trial, g))
            });
            match accepted {
                Some((trial, g)) => {
                    action = discrete_action(spec, &trial)?;
                    path = trial;
                    grad = g;
                    damping = (damping / 3.0).max(1e-15);
                    break;
                }
                None => {
                    damping *= 4.0;
                    rejections += 1;
                    if rejections >= MAX_REJECTIONS {
                        let err = action_gradient(
                            spec,
                            &path.with_flat(&(path.to_flat() - &jtr / scale)),
                        );
                        if let Err(e @ ActionError::SpacelikeSegment { .. }) = err {
                            return Err(e);
                        }
                        return Err(ActionError::NonConvergence {
                            best: Box::new(report(&path, action, &grad, iterations)?),
                            reason: "no decreasing step found".into(),
                        });
                    }
                }
            }
        }
    }
    report(&path, action, &grad, iterations)
}
