use homolag::dynamics::{conserved_drift, el_residual, fit_circle, integrate, GaugeChoice};
use homolag::lagrangian::VectorPotentialField;
use homolag::{DVec, LagrangianSpec, MetricField, ScalarProfile};

const Q: f64 = 1.0;
const M: f64 = 1.0;
const B: f64 = 1.0;
const U: f64 = 0.6;

/// Charged particle in a uniform field along the 3-axis (plane 1-2).
fn cyclotron_spec(q: f64, b: f64) -> LagrangianSpec {
    LagrangianSpec::new(
        MetricField::minkowski(4),
        q,
        VectorPotentialField::UniformMagnetic {
            dim: 4,
            field: b,
            plane: (1, 2),
        },
        M,
    )
    .unwrap()
}

/// Analytic orbit starting at the origin with velocity `(U, 0)`:
/// `x = R sin ωt`, `y = R(1 − cos ωt)`, `R = mγu/(qB)`, `ω = qB/(mγ)`.
struct Orbit {
    radius: f64,
    omega: f64,
}

impl Orbit {
    fn new() -> Self {
        let gamma = 1.0 / (1.0 - U * U).sqrt();
        Self {
            radius: M * gamma * U / (Q * B),
            omega: Q * B / (M * gamma),
        }
    }
    fn position(&self, t: f64) -> DVec {
        let w = self.omega * t;
        DVec::from_vec(vec![
            t,
            self.radius * w.sin(),
            self.radius * (1.0 - w.cos()),
            0.0,
        ])
    }
    fn velocity(&self, t: f64) -> DVec {
        let w = self.omega * t;
        DVec::from_vec(vec![1.0, U * w.cos(), U * w.sin(), 0.0])
    }
    fn acceleration(&self, t: f64) -> DVec {
        let w = self.omega * t;
        DVec::from_vec(vec![
            0.0,
            -U * self.omega * w.sin(),
            U * self.omega * w.cos(),
            0.0,
        ])
    }
}

fn start() -> (DVec, DVec) {
    (DVec::zeros(4), DVec::from_vec(vec![1.0, U, 0.0, 0.0]))
}

#[test]
fn analytic_orbit_radius_is_three_quarters() {
    assert!((Orbit::new().radius - 0.75).abs() < 1e-15);
}

#[test]
fn el_residual_vanishes_on_analytic_orbit() {
    let spec = cyclotron_spec(Q, B);
    let orbit = Orbit::new();
    let mut worst: f64 = 0.0;
    for k in 0..100 {
        let t = k as f64 * 0.1;
        let r = el_residual(
            &spec,
            &orbit.position(t),
            &orbit.velocity(t),
            &orbit.acceleration(t),
        )
        .unwrap();
        worst = worst.max(r.amax());
    }
    assert!(worst <= 1e-8, "max EL residual {worst:e}");
}

#[test]
fn cyclotron_radius_and_drift() {
    let spec = cyclotron_spec(Q, B);
    let (x0, v0) = start();
    let wl = integrate(&spec, GaugeChoice::CoordinateTime, &x0, &v0, 10.0, 1e-3).unwrap();
    assert_eq!(wl.samples.len(), 10_001);
    let pts: Vec<_> = wl.samples.iter().map(|s| (s.x[1], s.x[2])).collect();
    let (cx, cy, r) = fit_circle(&pts);
    assert!((r - 0.75).abs() <= 1e-6, "radius {r}");
    assert!(cx.abs() < 1e-6 && (cy - 0.75).abs() < 1e-6);
    assert!(conserved_drift(&wl, &spec).unwrap() <= 1e-8);
    let orbit = Orbit::new();
    let err = (&wl.last().x - orbit.position(10.0)).amax();
    assert!(err < 1e-9, "final position error {err:e}");
}

fn global_error(step: f64) -> f64 {
    let spec = cyclotron_spec(Q, B);
    let (x0, v0) = start();
    let wl = integrate(&spec, GaugeChoice::CoordinateTime, &x0, &v0, 8.0, step).unwrap();
    (&wl.last().x - Orbit::new().position(8.0)).norm()
}

#[test]
fn rk4_convergence_order() {
    let steps: [f64; 5] = [0.2, 0.1, 0.05, 0.025, 0.0125];
    let pts: Vec<(f64, f64)> = steps
        .iter()
        .map(|&h| (h.ln(), global_error(h).ln()))
        .collect();
    let n = pts.len() as f64;
    let (mx, my) = pts
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + x / n, b + y / n));
    let slope = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum::<f64>();
    assert!((slope - 4.0).abs() <= 0.2, "measured order {slope}");
}

#[test]
fn proper_time_and_coordinate_time_trace_the_same_curve() {
    let spec = cyclotron_spec(Q, B);
    let (x0, v0) = start();
    let coord = integrate(&spec, GaugeChoice::CoordinateTime, &x0, &v0, 6.0, 1e-3).unwrap();
    let gamma = 1.0 / (1.0 - U * U).sqrt();
    let proper = integrate(
        &spec,
        GaugeChoice::ProperTime,
        &x0,
        &(&v0 * gamma),
        6.0 / gamma,
        1e-3,
    )
    .unwrap();
    assert!(proper.renormalization.iter().all(|r| *r < 1e-10));
    let mut worst: f64 = 0.0;
    for k in 1..40 {
        let t = k as f64 * 0.12;
        let a = coord.position_at_time(t).unwrap();
        let b = proper.position_at_time(t).unwrap();
        worst = worst.max((a - b).amax());
    }
    assert!(worst <= 1e-6, "max spatial mismatch {worst:e}");
}

#[test]
fn static_weak_field_conserves_energy() {
    // φ depends only on space, so p_0 = m g_00 v⁰/√g(v,v) is conserved
    let phi = ScalarProfile::Gaussian {
        amplitude: -0.05,
        center: vec![0.0, 0.0, 0.0, 0.0],
        width: 1.0,
    };
    // evaluate φ at x⁰ = 0 so the metric is static
    let metric = MetricField::custom(4, move |x| {
        let mut xs = x.clone();
        xs[0] = 0.0;
        let mut g = -homolag::DMat::identity(4, 4);
        g[(0, 0)] = 1.0 + 2.0 * phi.value(&xs);
        g
    });
    let spec = LagrangianSpec::free(metric, 1.0).unwrap();
    let x0 = DVec::from_vec(vec![0.0, -2.0, 0.3, 0.0]);
    let v0 = DVec::from_vec(vec![1.0, 0.4, 0.0, 0.0]);
    let wl = integrate(&spec, GaugeChoice::CoordinateTime, &x0, &v0, 8.0, 1e-2).unwrap();
    let p0 = |s: &homolag::dynamics::WorldlineSample| {
        homolag::lagrangian::momentum(&spec, &s.x, &s.v).unwrap()[0]
    };
    let e0 = p0(&wl.samples[0]);
    let drift = wl
        .samples
        .iter()
        .map(|s| (p0(s) - e0).abs())
        .fold(0.0, f64::max);
    assert!(drift < 1e-8, "energy drift {drift:e}");
    // the trajectory is deflected towards the well
    assert!(wl.last().x[2] < 0.3);
}
