//! Seeded property sweeps over random Lagrangians.
//!
//! Every property draws its own stream from `seed`, so a sweep is
//! reproducible and independent of which other properties run with it.
//! Residuals are made relative to a cancellation-free scale of the
//! quantities involved.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::action::{reparam_invariance_residual, DiscretePath};
use crate::geometry::MetricField;
use crate::lagrangian::fd::{self, DerivativeMode};
use crate::lagrangian::{
    generalized_momentum, homogeneity_residual, mass_shell_residual, LagrangianSpec,
    SymmetricTensor, SymmetricTensorField, VectorPotentialField,
};
use crate::profile::ScalarProfile;
use crate::{DMat, DVec};

pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_SAMPLES: usize = 1000;

/// Largest spatial speed in the local orthonormal frame, so `γ ≤ 5/3`.
const MAX_SPEED: f64 = 0.8;
/// Extra-term radicands must keep this fraction of their absolute sum.
const RADICAND_MARGIN: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    Homogeneity,
    EulerAnalytic,
    EulerFiniteDifference,
    MassShell,
    GeneralizedMomentumInvariance,
    MomentumFiniteDifference,
    Reparametrization,
}

impl Property {
    pub const ALL: [Property; 7] = [
        Property::Homogeneity,
        Property::EulerAnalytic,
        Property::EulerFiniteDifference,
        Property::MassShell,
        Property::GeneralizedMomentumInvariance,
        Property::MomentumFiniteDifference,
        Property::Reparametrization,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Property::Homogeneity => "homogeneity",
            Property::EulerAnalytic => "euler_analytic",
            Property::EulerFiniteDifference => "euler_finite_difference",
            Property::MassShell => "mass_shell",
            Property::GeneralizedMomentumInvariance => "generalized_momentum_invariance",
            Property::MomentumFiniteDifference => "momentum_finite_difference",
            Property::Reparametrization => "reparametrization",
        }
    }

    pub fn tolerance(self) -> f64 {
        match self {
            Property::Homogeneity | Property::Reparametrization => 1e-11,
            Property::EulerAnalytic => 1e-10,
            Property::EulerFiniteDifference | Property::MomentumFiniteDifference => 1e-6,
            Property::MassShell => 1e-9,
            Property::GeneralizedMomentumInvariance => 1e-12,
        }
    }

    fn stream(self) -> u64 {
        Property::ALL.iter().position(|p| *p == self).unwrap() as u64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyResult {
    pub property: String,
    pub samples: usize,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Metric families the sweep draws from, each with an orthonormal frame
/// `e(x)` such that `g(x) = e(x)ᵀ η e(x)`.
#[derive(Debug, Clone)]
enum Background {
    /// `Λᵀ η Λ` for a random near-identity `Λ`.
    Congruent(DMat),
    /// `g_00 = 1 + 2φ(x)`, spatial `−I`.
    WeakField(ScalarProfile),
}

impl Background {
    fn metric(&self) -> MetricField {
        match self {
            Background::Congruent(l) => {
                let eta = MetricField::minkowski(l.nrows()).eval(&DVec::zeros(l.nrows()));
                MetricField::constant(l.transpose() * eta * l).expect("congruent to Minkowski")
            }
            Background::WeakField(p) => MetricField::weak_field(p.clone()),
        }
    }

    /// `e(x)⁻¹ w`: maps a frame vector to coordinates.
    fn from_frame(&self, x: &DVec, w: &DVec) -> DVec {
        match self {
            Background::Congruent(l) => l.clone().lu().solve(w).expect("invertible frame"),
            Background::WeakField(p) => {
                let mut v = w.clone();
                v[0] /= (1.0 + 2.0 * p.value(x)).sqrt();
                v
            }
        }
    }
}

/// A random Lagrangian together with the background it was built on.
#[derive(Debug, Clone)]
pub struct RandomSpec {
    pub spec: LagrangianSpec,
    background: Background,
}

fn uniform_vec(rng: &mut impl Rng, n: usize, r: f64) -> DVec {
    DVec::from_fn(n, |_, _| rng.gen_range(-r..r))
}

fn random_profile(rng: &mut impl Rng, n: usize, amplitude: f64) -> ScalarProfile {
    if rng.gen_bool(0.5) {
        ScalarProfile::Gaussian {
            amplitude: rng.gen_range(-amplitude..amplitude),
            center: uniform_vec(rng, n, 1.0).as_slice().to_vec(),
            width: rng.gen_range(0.5..2.0),
        }
    } else {
        ScalarProfile::Cosine {
            amplitude: rng.gen_range(-amplitude..amplitude),
            wavevector: uniform_vec(rng, n, 2.0).as_slice().to_vec(),
            phase: rng.gen_range(0.0..std::f64::consts::TAU),
        }
    }
}

fn random_potential(rng: &mut impl Rng, n: usize) -> VectorPotentialField {
    let base = match rng.gen_range(0..3) {
        0 => VectorPotentialField::Zero { dim: n },
        1 => VectorPotentialField::Constant(uniform_vec(rng, n, 2.0)),
        _ => {
            let i = rng.gen_range(0..n);
            let j = (i + rng.gen_range(1..n)) % n;
            VectorPotentialField::UniformMagnetic {
                dim: n,
                field: rng.gen_range(-2.0..2.0),
                plane: (i.min(j), i.max(j)),
            }
        }
    };
    if rng.gen_bool(0.3) {
        base.gauge_shifted(random_profile(rng, n, 1.0))
    } else {
        base
    }
}

/// `Σ_r w_r (u_r ⊗ … ⊗ u_r)`; even ranks get positive weights so their
/// radicand is nonnegative everywhere.
fn random_tensor(rng: &mut impl Rng, rank: usize, n: usize) -> SymmetricTensorField {
    let terms: Vec<(f64, DVec)> = (0..rng.gen_range(1..=3))
        .map(|_| {
            let w = rng.gen_range(0.2..1.5);
            let w = if rank % 2 == 0 || rng.gen_bool(0.7) {
                w
            } else {
                -w
            };
            (w, uniform_vec(rng, n, 1.0))
        })
        .collect();
    let tensor = SymmetricTensor::from_rank_one(rank, &terms);
    if rng.gen_bool(0.3) {
        // 1 + φ stays above 0.7
        SymmetricTensorField::modulated(tensor, random_profile(rng, n, 0.3))
    } else {
        SymmetricTensorField::constant(tensor)
    }
}

impl RandomSpec {
    /// Dimension 2 to 4, positive mass, EM coupling and up to two extra ranks.
    pub fn draw(rng: &mut impl Rng) -> Self {
        let n = rng.gen_range(2..=4);
        let background = if rng.gen_bool(0.5) {
            Background::Congruent(
                DMat::identity(n, n) + DMat::from_fn(n, n, |_, _| rng.gen_range(-0.3..0.3)),
            )
        } else {
            // 1 + 2φ ≥ 0.6
            Background::WeakField(random_profile(rng, n, 0.2))
        };
        let mass = rng.gen_range(0.1..3.0);
        let mut spec = LagrangianSpec::new(
            background.metric(),
            rng.gen_range(-3.0..3.0),
            random_potential(rng, n),
            mass,
        )
        .expect("consistent random spec");
        for rank in [3, 4] {
            if rng.gen_bool(0.6) {
                let coupling = rng.gen_range(-2.0..2.0);
                spec = spec
                    .with_extra(coupling, random_tensor(rng, rank, n))
                    .expect("distinct ranks");
            }
        }
        Self { spec, background }
    }

    /// Random future-timelike velocity at `x` with frame speed below
    /// [`MAX_SPEED`] and overall scale in `[0.3, 3)`.
    pub fn timelike(&self, rng: &mut impl Rng, x: &DVec) -> DVec {
        let n = self.spec.dim();
        let dir = uniform_vec(rng, n - 1, 1.0);
        let speed = rng.gen_range(0.0..MAX_SPEED);
        let dir = if dir.norm() > 0.0 {
            dir.normalize()
        } else {
            dir
        };
        let scale = rng.gen_range(0.3..3.0);
        let mut w = DVec::zeros(n);
        w[0] = scale;
        w.rows_mut(1, n - 1).copy_from(&(dir * speed * scale));
        self.background.from_frame(x, &w)
    }

    /// Whether every extra radicand keeps [`RADICAND_MARGIN`] of its
    /// absolute sum at `v`, keeping odd roots off their branch point.
    fn radicands_clear(&self, v: &DVec) -> bool {
        self.spec.extra_terms().iter().all(|t| {
            let s = t.field.tensor.contract(v);
            let abs: f64 = t
                .field
                .tensor
                .entries()
                .map(|(idx, c)| {
                    (c * crate::lagrangian::multiplicity(idx)
                        * idx.iter().map(|&a| v[a]).product::<f64>())
                    .abs()
                })
                .sum();
            s.abs() >= RADICAND_MARGIN * abs
        })
    }

    /// A point in `[−1, 1]^N` and a timelike velocity there that clears the
    /// radicand margin.
    pub fn sample(&self, rng: &mut impl Rng) -> (DVec, DVec) {
        loop {
            let x = uniform_vec(rng, self.spec.dim(), 1.0);
            let v = self.timelike(rng, &x);
            if self.radicands_clear(&v) {
                return (x, v);
            }
        }
    }
}

fn relative(residual: f64, scale: f64) -> f64 {
    residual.abs() / scale.max(f64::MIN_POSITIVE)
}

/// One relative residual for `property` from a fresh random draw.
fn draw_residual(property: Property, rng: &mut ChaCha8Rng) -> f64 {
    let rs = RandomSpec::draw(rng);
    let spec = &rs.spec;
    let (x, v) = rs.sample(rng);
    match property {
        Property::Homogeneity => {
            let lambda = 10f64.powf(rng.gen_range(-3.0..3.0));
            let r = homogeneity_residual(spec, &x, &v, lambda).expect("draws stay in the domain");
            let scale = lambda * spec.terms(&x, &v).unwrap().magnitude();
            relative(r, scale)
        }
        Property::EulerAnalytic | Property::EulerFiniteDifference => {
            let mode = if property == Property::EulerAnalytic {
                DerivativeMode::Analytic
            } else {
                DerivativeMode::FiniteDifference {
                    step: fd::DEFAULT_STEP,
                }
            };
            let r = fd::hamiltonian_residual(spec, &x, &v, mode).expect("draws stay in the domain");
            let d = spec.derivatives(&x, &v).unwrap();
            relative(r, d.momentum.dot(&v).abs() + d.value.abs())
        }
        Property::MassShell => {
            let r = mass_shell_residual(spec, &x, &v).expect("draws stay in the domain");
            relative(r, spec.mass() * spec.mass())
        }
        Property::GeneralizedMomentumInvariance => {
            let pi = generalized_momentum(spec, &x, &v).unwrap();
            let couplings: Vec<f64> = spec
                .extra_terms()
                .iter()
                .map(|_| rng.gen_range(-5.0..5.0))
                .collect();
            let other = spec
                .with_potential(
                    rng.gen_range(-10.0..10.0),
                    random_potential(rng, spec.dim()),
                )
                .unwrap()
                .with_couplings(&couplings);
            let moved = generalized_momentum(&other, &x, &v).unwrap();
            relative((pi.clone() - moved).amax(), pi.amax())
        }
        Property::MomentumFiniteDifference => {
            let p = spec.derivatives(&x, &v).unwrap().momentum;
            let p_fd = fd::momentum(spec, &x, &v, fd::DEFAULT_STEP).unwrap();
            relative((&p - p_fd).amax(), p.amax())
        }
        Property::Reparametrization => {
            let k = rng.gen_range(2..=8);
            let mut points = vec![x];
            for _ in 0..k {
                let last = points.last().unwrap().clone();
                let v = loop {
                    let v = rs.timelike(rng, &last) * 0.1;
                    if rs.radicands_clear(&v) {
                        break v;
                    }
                };
                points.push(last + v);
            }
            let end = points.pop().unwrap();
            let start = points.remove(0);
            let path = DiscretePath::new(start, end, points).unwrap();
            let dtau: Vec<f64> = (0..k)
                .map(|_| 10f64.powf(rng.gen_range(-2.0..2.0)))
                .collect();
            let r =
                reparam_invariance_residual(spec, &path, &dtau).expect("draws stay in the domain");
            let scale: f64 = path
                .segments()
                .iter()
                .map(|(mid, dx)| spec.terms(mid, dx).unwrap().magnitude())
                .sum();
            relative(r, scale)
        }
    }
}

/// Runs `samples` draws of one property from the stream derived from `seed`.
pub fn run_property(property: Property, seed: u64, samples: usize) -> PropertyResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(property.stream());
    let max_residual = (0..samples)
        .map(|_| draw_residual(property, &mut rng))
        .fold(0.0, f64::max);
    PropertyResult {
        property: property.name().to_string(),
        samples,
        max_residual,
        tolerance: property.tolerance(),
        pass: max_residual <= property.tolerance(),
    }
}

/// Every property, in [`Property::ALL`] order, run concurrently.
pub fn run_all(seed: u64, samples: usize) -> Vec<PropertyResult> {
    Property::ALL
        .par_iter()
        .map(|&p| run_property(p, seed, samples))
        .collect()
}
