//! Gauge-fixed Euler–Lagrange integration of world lines.
//!
//! The velocity Hessian of a homogeneous Lagrangian is singular along `v`,
//! so the raw equations do not determine the acceleration. Two gauges fix
//! the parameterization:
//!
//! - [`GaugeChoice::CoordinateTime`]: `v⁰ ≡ 1`, the parameter is `x⁰`; the
//!   spatial accelerations come from the reduced `(N−1)×(N−1)` Hessian.
//! - [`GaugeChoice::ProperTime`]: `g(v,v) ≡ 1`; the Hessian is bordered with
//!   the differentiated gauge condition, and `v` is projected back onto the
//!   unit shell after every step.
//!
//! Both use fixed-step RK4.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lagrangian::{mass_shell_residual, LagrangianError, LagrangianSpec};
use crate::{DMat, DVec};

/// Largest accepted gauge deviation.
pub const GAUGE_TOL: f64 = 1e-8;
/// Reduced Hessians whose smallest `|λ|` falls below this fraction of the
/// reference curvature `max(max|λ|, Σ|terms| / |v|²)` are rejected.
pub const SINGULAR_RATIO: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error(transparent)]
    Lagrangian(#[from] LagrangianError),
    #[error("dynamics need a mass term (m > 0)")]
    Massless,
    #[error("gauge violated at tau = {tau}: deviation {deviation:e}")]
    GaugeViolation { tau: f64, deviation: f64 },
    #[error("reduced velocity Hessian is singular at tau = {tau} (eigenvalue ratio {ratio:e})")]
    SingularReducedHessian { tau: f64, ratio: f64 },
    #[error("step and end parameter must be positive and finite (step {step}, end {end})")]
    InvalidStep { step: f64, end: f64 },
    #[error("non-finite state at tau = {0}")]
    NonFinite(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GaugeChoice {
    CoordinateTime,
    ProperTime,
}

#[derive(Debug, Clone)]
pub struct WorldlineSample {
    pub tau: f64,
    pub x: DVec,
    pub v: DVec,
    pub mass_shell: f64,
}

#[derive(Debug, Clone)]
pub struct Worldline {
    pub gauge: GaugeChoice,
    pub samples: Vec<WorldlineSample>,
    /// Per-step `|√g(v,v) − 1|` removed by projection (proper-time gauge only).
    pub renormalization: Vec<f64>,
}

impl Worldline {
    pub fn last(&self) -> &WorldlineSample {
        self.samples
            .last()
            .expect("worldline has at least one sample")
    }

    /// Spatial position at coordinate time `t = x⁰`, by cubic Hermite
    /// interpolation in the parameter.
    pub fn position_at_time(&self, t: f64) -> Option<DVec> {
        let s = &self.samples;
        let k = s
            .windows(2)
            .position(|w| w[0].x[0] <= t && t <= w[1].x[0])?;
        let (a, b) = (&s[k], &s[k + 1]);
        let h = b.tau - a.tau;
        let hermite = |u: f64, i: usize| {
            let (u2, u3) = (u * u, u * u * u);
            (2.0 * u3 - 3.0 * u2 + 1.0) * a.x[i]
                + (u3 - 2.0 * u2 + u) * h * a.v[i]
                + (-2.0 * u3 + 3.0 * u2) * b.x[i]
                + (u3 - u2) * h * b.v[i]
        };
        // x⁰ is monotone on the interval; bisection then Newton polish
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if hermite(mid, 0) < t {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let u = 0.5 * (lo + hi);
        Some(DVec::from_iterator(
            a.x.len(),
            (0..a.x.len()).map(|i| hermite(u, i)),
        ))
    }
}

/// `d/dτ(∂L/∂v) − ∂L/∂x` expanded with acceleration `a`.
pub fn el_residual(
    spec: &LagrangianSpec,
    x: &DVec,
    v: &DVec,
    a: &DVec,
) -> Result<DVec, LagrangianError> {
    let d = spec.derivatives(x, v)?;
    Ok(&d.hess_vv * a + &d.hess_vx * v - d.force)
}

/// Acceleration consistent with the Euler–Lagrange equations in `gauge`.
pub fn acceleration(
    spec: &LagrangianSpec,
    gauge: GaugeChoice,
    x: &DVec,
    v: &DVec,
    tau: f64,
) -> Result<DVec, DynamicsError> {
    let n = spec.dim();
    let d = spec.derivatives(x, v)?;
    let rhs = &d.force - &d.hess_vx * v;
    match gauge {
        GaugeChoice::CoordinateTime => {
            let reduced = d.hess_vv.view((1, 1), (n - 1, n - 1)).into_owned();
            check_conditioning(&reduced, d.scale / v.norm_squared(), tau)?;
            let a_space = reduced
                .lu()
                .solve(&rhs.rows(1, n - 1).into_owned())
                .ok_or(DynamicsError::SingularReducedHessian { tau, ratio: 0.0 })?;
            let mut a = DVec::zeros(n);
            a.rows_mut(1, n - 1).copy_from(&a_space);
            Ok(a)
        }
        GaugeChoice::ProperTime => {
            // d/dτ g(v,v) = 0  ⇒  2(gv)·a + Σ_k v^k v·∂_k g·v = 0
            let g = spec.metric().eval(x);
            let w = &g * v;
            let dg = spec.metric().derivatives(x);
            let c = -0.5
                * dg.iter()
                    .enumerate()
                    .map(|(k, dgk)| v[k] * v.dot(&(dgk * v)))
                    .sum::<f64>();
            let mut bordered = DMat::zeros(n + 1, n + 1);
            bordered.view_mut((0, 0), (n, n)).copy_from(&d.hess_vv);
            bordered.view_mut((0, n), (n, 1)).copy_from(&w);
            bordered.view_mut((n, 0), (1, n)).copy_from(&w.transpose());
            check_conditioning(&bordered, d.scale / v.norm_squared(), tau)?;
            let mut b = DVec::zeros(n + 1);
            b.rows_mut(0, n).copy_from(&rhs);
            b[n] = c;
            let sol = bordered
                .lu()
                .solve(&b)
                .ok_or(DynamicsError::SingularReducedHessian { tau, ratio: 0.0 })?;
            Ok(sol.rows(0, n).into_owned())
        }
    }
}

fn check_conditioning(m: &DMat, reference: f64, tau: f64) -> Result<(), DynamicsError> {
    let eig = m.clone().symmetric_eigen();
    let max = eig.eigenvalues.amax().max(reference);
    let min = eig
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |acc, l| acc.min(l.abs()));
    let ratio = if max > 0.0 { min / max } else { 0.0 };
    if ratio < SINGULAR_RATIO {
        return Err(DynamicsError::SingularReducedHessian { tau, ratio });
    }
    Ok(())
}

fn gauge_deviation(spec: &LagrangianSpec, gauge: GaugeChoice, x: &DVec, v: &DVec) -> f64 {
    match gauge {
        GaugeChoice::CoordinateTime => (v[0] - 1.0).abs(),
        GaugeChoice::ProperTime => {
            let g = spec.metric().eval(x);
            (v.dot(&(g * v)) - 1.0).abs()
        }
    }
}

/// Fixed-step RK4 from `(x0, v0)` to parameter `tau_end`.
pub fn integrate(
    spec: &LagrangianSpec,
    gauge: GaugeChoice,
    x0: &DVec,
    v0: &DVec,
    tau_end: f64,
    step: f64,
) -> Result<Worldline, DynamicsError> {
    if !(step > 0.0 && step.is_finite() && tau_end > 0.0 && tau_end.is_finite()) {
        return Err(DynamicsError::InvalidStep { step, end: tau_end });
    }
    if spec.mass() <= 0.0 {
        return Err(DynamicsError::Massless);
    }
    spec.check_dims(x0, v0)?;
    let dev = gauge_deviation(spec, gauge, x0, v0);
    if dev > GAUGE_TOL {
        return Err(DynamicsError::GaugeViolation {
            tau: 0.0,
            deviation: dev,
        });
    }
    // surfaces a singular Hessian at the initial point before stepping
    acceleration(spec, gauge, x0, v0, 0.0)?;

    let n_steps = (tau_end / step - 1e-9).ceil().max(1.0) as usize;
    let mut samples = Vec::with_capacity(n_steps + 1);
    let mut renormalization = Vec::new();
    let (mut x, mut v) = (x0.clone(), v0.clone());
    samples.push(WorldlineSample {
        tau: 0.0,
        mass_shell: mass_shell_residual(spec, &x, &v)?,
        x: x.clone(),
        v: v.clone(),
    });

    for k in 0..n_steps {
        let tau = k as f64 * step;
        let tau_next = if k + 1 == n_steps {
            tau_end
        } else {
            (k + 1) as f64 * step
        };
        let h = tau_next - tau;
        let (k1x, k1v) = (v.clone(), acceleration(spec, gauge, &x, &v, tau)?);
        let (x2, v2) = (&x + &k1x * (0.5 * h), &v + &k1v * (0.5 * h));
        let (k2x, k2v) = (
            v2.clone(),
            acceleration(spec, gauge, &x2, &v2, tau + 0.5 * h)?,
        );
        let (x3, v3) = (&x + &k2x * (0.5 * h), &v + &k2v * (0.5 * h));
        let (k3x, k3v) = (
            v3.clone(),
            acceleration(spec, gauge, &x3, &v3, tau + 0.5 * h)?,
        );
        let (x4, v4) = (&x + &k3x * h, &v + &k3v * h);
        let (k4x, k4v) = (v4.clone(), acceleration(spec, gauge, &x4, &v4, tau_next)?);
        x += (k1x + k2x * 2.0 + k3x * 2.0 + k4x) * (h / 6.0);
        v += (k1v + k2v * 2.0 + k3v * 2.0 + k4v) * (h / 6.0);
        if gauge == GaugeChoice::CoordinateTime {
            v[0] = 1.0;
        }

        if !(x.iter().chain(v.iter()).all(|c| c.is_finite())) {
            return Err(DynamicsError::NonFinite(tau_next));
        }
        if gauge == GaugeChoice::ProperTime {
            let g = spec.metric().eval(&x);
            let norm = v.dot(&(g * &v));
            if !(norm > 0.0) {
                return Err(DynamicsError::GaugeViolation {
                    tau: tau_next,
                    deviation: (norm - 1.0).abs(),
                });
            }
            let s = norm.sqrt();
            renormalization.push((s - 1.0).abs());
            v /= s;
        }
        let dev = gauge_deviation(spec, gauge, &x, &v);
        if dev > GAUGE_TOL {
            return Err(DynamicsError::GaugeViolation {
                tau: tau_next,
                deviation: dev,
            });
        }
        samples.push(WorldlineSample {
            tau: tau_next,
            mass_shell: mass_shell_residual(spec, &x, &v)?,
            x: x.clone(),
            v: v.clone(),
        });
    }
    Ok(Worldline {
        gauge,
        samples,
        renormalization,
    })
}

/// Maximum `|π·g⁻¹·π − m²|` over the samples, recomputed from `spec`.
pub fn conserved_drift(wl: &Worldline, spec: &LagrangianSpec) -> Result<f64, LagrangianError> {
    let mut max: f64 = 0.0;
    for s in &wl.samples {
        max = max.max(mass_shell_residual(spec, &s.x, &s.v)?.abs());
    }
    Ok(max)
}

/// Least-squares circle through planar points: `(center_x, center_y, radius)`.
pub fn fit_circle(points: &[(f64, f64)]) -> (f64, f64, f64) {
    // x² + y² = 2a x + 2b y + c, linear in (a, b, c); shift to the centroid first
    let n = points.len() as f64;
    let (mx, my) = points
        .iter()
        .fold((0.0, 0.0), |(sx, sy), &(x, y)| (sx + x / n, sy + y / n));
    let mut ata = nalgebra::Matrix3::<f64>::zeros();
    let mut atb = nalgebra::Vector3::<f64>::zeros();
    for &(x, y) in points {
        let (u, w) = (x - mx, y - my);
        let row = nalgebra::Vector3::new(2.0 * u, 2.0 * w, 1.0);
        ata += row * row.transpose();
        atb += row * (u * u + w * w);
    }
    let sol = ata.lu().solve(&atb).unwrap_or_default();
    let (a, b, c) = (sol[0], sol[1], sol[2]);
    (a + mx, b + my, (c + a * a + b * b).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::MetricField;
    use crate::lagrangian::{SymmetricTensor, SymmetricTensorField, VectorPotentialField};

    fn v(xs: &[f64]) -> DVec {
        DVec::from_column_slice(xs)
    }

    #[test]
    fn free_particle_straight_line() {
        let spec = LagrangianSpec::free(MetricField::minkowski(4), 1.0).unwrap();
        let wl = integrate(
            &spec,
            GaugeChoice::CoordinateTime,
            &DVec::zeros(4),
            &v(&[1.0, 0.3, 0.0, 0.0]),
            10.0,
            0.01,
        )
        .unwrap();
        let last = wl.last();
        assert_eq!(last.tau, 10.0);
        assert!((last.x.clone() - v(&[10.0, 3.0, 0.0, 0.0])).amax() < 1e-10);
        assert!(conserved_drift(&wl, &spec).unwrap() <= 1e-12);
        let a = el_residual(
            &spec,
            &DVec::zeros(4),
            &v(&[1.0, 0.3, 0.0, 0.0]),
            &DVec::zeros(4),
        )
        .unwrap();
        assert!(a.amax() < 1e-15);
    }

    #[test]
    fn rejects_bad_inputs() {
        let spec = LagrangianSpec::free(MetricField::minkowski(3), 1.0).unwrap();
        let x = DVec::zeros(3);
        assert!(matches!(
            integrate(
                &spec,
                GaugeChoice::CoordinateTime,
                &x,
                &v(&[1.1, 0.0, 0.0]),
                1.0,
                0.1
            ),
            Err(DynamicsError::GaugeViolation { .. })
        ));
        assert!(matches!(
            integrate(
                &spec,
                GaugeChoice::ProperTime,
                &x,
                &v(&[1.0, 0.5, 0.0]),
                1.0,
                0.1
            ),
            Err(DynamicsError::GaugeViolation { .. })
        ));
        assert!(matches!(
            integrate(
                &spec,
                GaugeChoice::CoordinateTime,
                &x,
                &v(&[1.0, 0.0, 0.0]),
                1.0,
                0.0
            ),
            Err(DynamicsError::InvalidStep { .. })
        ));
        let massless = LagrangianSpec::free(MetricField::minkowski(3), 0.0).unwrap();
        assert!(matches!(
            integrate(
                &massless,
                GaugeChoice::CoordinateTime,
                &x,
                &v(&[1.0, 0.0, 0.0]),
                1.0,
                0.1
            ),
            Err(DynamicsError::Massless)
        ));
    }

    #[test]
    fn degenerate_extra_term_is_singular() {
        // S₄(v⁴) = g(v,v)² with Q₄ = −m cancels the mass term: L ≡ 0.
        let eta = MetricField::minkowski(3);
        let mut s4 = SymmetricTensor::new(4, 3);
        // (v0² − v1² − v2²)² expanded over sorted indices
        s4.set(&[0, 0, 0, 0], 1.0).unwrap();
        s4.set(&[1, 1, 1, 1], 1.0).unwrap();
        s4.set(&[2, 2, 2, 2], 1.0).unwrap();
        s4.set(&[0, 0, 1, 1], -1.0 / 3.0).unwrap();
        s4.set(&[0, 0, 2, 2], -1.0 / 3.0).unwrap();
        s4.set(&[1, 1, 2, 2], 1.0 / 3.0).unwrap();
        let spec = LagrangianSpec::free(eta, 1.0)
            .unwrap()
            .with_extra(-1.0, SymmetricTensorField::constant(s4))
            .unwrap();
        let x = DVec::zeros(3);
        let vel = v(&[1.0, 0.2, 0.1]);
        assert!(spec.eval(&x, &vel).unwrap().abs() < 1e-15);
        assert!(matches!(
            integrate(&spec, GaugeChoice::CoordinateTime, &x, &vel, 1.0, 0.1),
            Err(DynamicsError::SingularReducedHessian { .. })
        ));
    }

    #[test]
    fn charge_sign_symmetry_is_exact() {
        let run = |q: f64, b: f64| {
            let spec = LagrangianSpec::new(
                MetricField::minkowski(4),
                q,
                VectorPotentialField::UniformMagnetic {
                    dim: 4,
                    field: b,
                    plane: (1, 2),
                },
                1.0,
            )
            .unwrap();
            integrate(
                &spec,
                GaugeChoice::CoordinateTime,
                &DVec::zeros(4),
                &v(&[1.0, 0.6, 0.0, 0.1]),
                2.0,
                1e-2,
            )
            .unwrap()
        };
        let (a, b) = (run(1.0, 1.0), run(-1.0, -1.0));
        for (sa, sb) in a.samples.iter().zip(&b.samples) {
            assert!((&sa.x - &sb.x).amax() <= 1e-12);
        }
    }

    #[test]
    fn circle_fit_recovers_radius() {
        let pts: Vec<_> = (0..50)
            .map(|k| {
                let t = k as f64 * 0.1;
                (1.0 + 0.75 * t.cos(), -2.0 + 0.75 * t.sin())
            })
            .collect();
        let (cx, cy, r) = fit_circle(&pts);
        assert!((cx - 1.0).abs() < 1e-12 && (cy + 2.0).abs() < 1e-12 && (r - 0.75).abs() < 1e-12);
    }
}
