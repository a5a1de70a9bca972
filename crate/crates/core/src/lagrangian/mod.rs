//! The canonical first-order homogeneous Lagrangian
//!
//! ```text
//! L(x, v) = q·A_α v^α + m·√(g_αβ v^α v^β) + Σ_n Q_n·(S_n(v,…,v))^{1/n}
//! ```
//!
//! with its momenta, the Euler identity `p·v − L ≡ 0`, the mass-shell
//! identity and the coordinate-time expansion.
//!
//! Every term is degree one in `v`, so the velocity Hessian always has `v`
//! in its kernel. Derivatives are closed-form; [`fd`] keeps a central
//! difference mode that only calls [`LagrangianSpec::eval`].

pub mod fd;
mod identities;
mod potential;
mod tensor;

use thiserror::Error;

pub use identities::{
    generalized_momentum, hamiltonian_residual, homogeneity_residual, mass_shell_residual,
    momentum, nonrel_expand, NonrelExpansion,
};
pub use potential::VectorPotentialField;
pub use tensor::{multiplicity, sorted_indices, SymmetricTensor, SymmetricTensorField};

use crate::geometry::{GeometryError, MetricField};
use crate::{DMat, DVec};

/// Relative threshold below which `g(v,v)` counts as null.
pub const NULL_TOL: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LagrangianError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("spacelike velocity: g(v,v) = {norm:e} < 0")]
    SpacelikeVelocity { norm: f64 },
    #[error("null velocity: g(v,v) = 0, mass-term momentum undefined")]
    NullVelocity,
    #[error("rank-{rank} term has negative radicand {value:e}")]
    NegativeEvenRadicand { rank: usize, value: f64 },
    #[error("rank-{rank} term vanishes; its momentum is undefined")]
    ZeroRadicand { rank: usize },
    #[error("mass must be nonnegative, got {0}")]
    NegativeMass(f64),
    #[error("extra terms need rank >= 3, got {0}")]
    InvalidRank(usize),
    #[error("rank {0} appears more than once")]
    DuplicateRank(usize),
    #[error("invalid tensor index {index:?}: {reason}")]
    InvalidIndex { index: Vec<usize>, reason: String },
    #[error("modulated tensor scale 1+φ(x) = {0} must stay positive")]
    NonPositiveScale(f64),
    #[error("metric is not diagonal one-time with g_00 = 1 at this point: {0}")]
    NotOneTime(String),
    #[error("coordinate speed {0} must be below 1")]
    SuperluminalSpeed(f64),
    #[error("scale factor must be positive, got {0}")]
    NonPositiveScaleFactor(f64),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// `Q_n · (S_n(v,…,v))^{1/n}`.
#[derive(Debug, Clone)]
pub struct ExtraTerm {
    pub coupling: f64,
    pub field: SymmetricTensorField,
}

#[derive(Debug, Clone)]
pub struct LagrangianSpec {
    charge: f64,
    mass: f64,
    metric: MetricField,
    potential: VectorPotentialField,
    extra: Vec<ExtraTerm>,
}

impl LagrangianSpec {
    pub fn new(
        metric: MetricField,
        charge: f64,
        potential: VectorPotentialField,
        mass: f64,
    ) -> Result<Self, LagrangianError> {
        if !(mass >= 0.0) {
            return Err(LagrangianError::NegativeMass(mass));
        }
        if potential.dim() != metric.dim() {
            return Err(LagrangianError::DimensionMismatch {
                expected: metric.dim(),
                found: potential.dim(),
            });
        }
        Ok(Self {
            charge,
            mass,
            metric,
            potential,
            extra: Vec::new(),
        })
    }

    /// Neutral particle of mass `m`.
    pub fn free(metric: MetricField, mass: f64) -> Result<Self, LagrangianError> {
        let dim = metric.dim();
        Self::new(metric, 0.0, VectorPotentialField::Zero { dim }, mass)
    }

    pub fn with_extra(
        mut self,
        coupling: f64,
        field: SymmetricTensorField,
    ) -> Result<Self, LagrangianError> {
        let rank = field.rank();
        if rank < 3 {
            return Err(LagrangianError::InvalidRank(rank));
        }
        if field.dim() != self.dim() {
            return Err(LagrangianError::DimensionMismatch {
                expected: self.dim(),
                found: field.dim(),
            });
        }
        if self.extra.iter().any(|t| t.field.rank() == rank) {
            return Err(LagrangianError::DuplicateRank(rank));
        }
        self.extra.push(ExtraTerm { coupling, field });
        self.extra.sort_by_key(|t| t.field.rank());
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.metric.dim()
    }
    pub fn charge(&self) -> f64 {
        self.charge
    }
    pub fn mass(&self) -> f64 {
        self.mass
    }
    pub fn metric(&self) -> &MetricField {
        &self.metric
    }
    pub fn potential(&self) -> &VectorPotentialField {
        &self.potential
    }
    pub fn extra_terms(&self) -> &[ExtraTerm] {
        &self.extra
    }

    /// Copy with different electromagnetic coupling.
    pub fn with_potential(
        &self,
        charge: f64,
        potential: VectorPotentialField,
    ) -> Result<Self, LagrangianError> {
        let mut s = Self::new(self.metric.clone(), charge, potential, self.mass)?;
        s.extra = self.extra.clone();
        Ok(s)
    }

    /// Copy with the extra-term couplings replaced (same order as [`Self::extra_terms`]).
    pub fn with_couplings(&self, couplings: &[f64]) -> Self {
        let mut s = self.clone();
        for (t, &c) in s.extra.iter_mut().zip(couplings) {
            t.coupling = c;
        }
        s
    }

    pub(crate) fn check_dims(&self, x: &DVec, v: &DVec) -> Result<(), LagrangianError> {
        for len in [x.len(), v.len()] {
            if len != self.dim() {
                return Err(LagrangianError::DimensionMismatch {
                    expected: self.dim(),
                    found: len,
                });
            }
        }
        Ok(())
    }

    /// Individual term values `(EM, mass, extras…)`.
    pub fn terms(&self, x: &DVec, v: &DVec) -> Result<TermValues, LagrangianError> {
        self.check_dims(x, v)?;
        let em = self.charge * self.potential.value(x).dot(v);
        let mass = if self.mass > 0.0 {
            let g = self.metric.eval(x);
            self.mass * mass_root(&g, v)?
        } else {
            0.0
        };
        let mut extra = Vec::with_capacity(self.extra.len());
        for t in &self.extra {
            let (f, _) = checked_scale(&t.field, x)?;
            let p = f * t.field.tensor.contract(v);
            extra.push(t.coupling * signed_root(p, t.field.rank())?);
        }
        Ok(TermValues { em, mass, extra })
    }

    /// `L(x, v)`.
    pub fn eval(&self, x: &DVec, v: &DVec) -> Result<f64, LagrangianError> {
        Ok(self.terms(x, v)?.total())
    }

    /// Value, gradients and second derivatives in closed form.
    pub fn derivatives(&self, x: &DVec, v: &DVec) -> Result<Derivatives, LagrangianError> {
        self.check_dims(x, v)?;
        let n = self.dim();
        let mut d = Derivatives::zeros(n);

        // q A·v
        if self.charge != 0.0 {
            let a = self.potential.value(x);
            let jac = self.potential.jacobian(x);
            let em = self.charge * a.dot(v);
            d.value += em;
            d.scale += em.abs();
            d.momentum += &a * self.charge;
            d.force += jac.tr_mul(v) * self.charge;
            d.hess_vx += jac * self.charge;
        }

        // m √g(v,v)
        if self.mass > 0.0 {
            let mt = mass_term(self.mass, &self.metric, x, v)?;
            d.value += mt.value;
            d.scale += mt.value.abs();
            d.momentum += mt.momentum;
            d.force += mt.force;
            d.hess_vv += mt.hess_vv;
            d.hess_vx += mt.hess_vx;
        }

        // Q_n S_n^{1/n}
        for t in &self.extra {
            let rank = t.field.rank();
            let nf = rank as f64;
            let (f, grad_f) = checked_scale(&t.field, x)?;
            let p0 = t.field.tensor.contract(v);
            let p = f * p0;
            let root = signed_root(p, rank)?;
            if p == 0.0 {
                return Err(LagrangianError::ZeroRadicand { rank });
            }
            let t0 = t.field.tensor.contract_all_but_one(v);
            let u0 = t.field.tensor.contract_all_but_two(v);
            let tv = &t0 * f;
            // |P|^{1/n − 1}
            let w = p.abs().powf(1.0 / nf - 1.0);
            let q = t.coupling;
            d.value += q * root;
            d.scale += (q * root).abs();
            d.momentum += &tv * (q * w);
            d.hess_vv += (u0 * f - &tv * tv.transpose() / p) * (q * (nf - 1.0) * w);
            // ∂_k P = ∂_k f · P₀ and ∂_k T = ∂_k f · T₀
            d.force += &grad_f * (q * w * p0 / nf);
            let mixed =
                &t0 * grad_f.transpose() + (&tv * grad_f.transpose()) * ((1.0 / nf - 1.0) * p0 / p);
            d.hess_vx += mixed * (q * w);
        }
        Ok(d)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TermValues {
    pub em: f64,
    pub mass: f64,
    pub extra: Vec<f64>,
}

impl TermValues {
    pub fn total(&self) -> f64 {
        self.em + self.mass + self.extra.iter().sum::<f64>()
    }

    /// `Σ |term|`, a cancellation-free magnitude of `L`.
    pub fn magnitude(&self) -> f64 {
        self.em.abs() + self.mass.abs() + self.extra.iter().map(|t| t.abs()).sum::<f64>()
    }
}

/// Closed-form derivatives of `L` at `(x, v)`.
#[derive(Debug, Clone)]
pub struct Derivatives {
    pub value: f64,
    /// `Σ |term|`.
    pub scale: f64,
    /// `p_α = ∂L/∂v^α`.
    pub momentum: DVec,
    /// `∂L/∂x^k`.
    pub force: DVec,
    /// `∂²L/∂v^α∂v^β`.
    pub hess_vv: DMat,
    /// `∂²L/∂v^α∂x^k`, row `α`, column `k`.
    pub hess_vx: DMat,
}

impl Derivatives {
    fn zeros(n: usize) -> Self {
        Self {
            value: 0.0,
            scale: 0.0,
            momentum: DVec::zeros(n),
            force: DVec::zeros(n),
            hess_vv: DMat::zeros(n, n),
            hess_vx: DMat::zeros(n, n),
        }
    }
}

pub(crate) struct MassTerm {
    pub value: f64,
    pub momentum: DVec,
    pub force: DVec,
    pub hess_vv: DMat,
    pub hess_vx: DMat,
}

/// Derivatives of `m√g(v,v)`; needs `g(v,v) > 0`.
pub(crate) fn mass_term(
    m: f64,
    metric: &MetricField,
    x: &DVec,
    v: &DVec,
) -> Result<MassTerm, LagrangianError> {
    let g = metric.eval(x);
    let s = mass_root(&g, v)?;
    if s == 0.0 {
        return Err(LagrangianError::NullVelocity);
    }
    let w = &g * v;
    let dg = metric.derivatives(x);
    let n = v.len();
    let mut force = DVec::zeros(n);
    let mut hess_vx = DMat::zeros(n, n);
    let s3 = s * s * s;
    for (k, dgk) in dg.iter().enumerate() {
        let dgv = dgk * v;
        let dq = v.dot(&dgv);
        force[k] = m * dq / (2.0 * s);
        hess_vx.set_column(k, &((dgv / s - &w * (dq / (2.0 * s3))) * m));
    }
    Ok(MassTerm {
        value: m * s,
        momentum: &w * (m / s),
        force,
        hess_vv: (g / s - &w * w.transpose() / s3) * m,
        hess_vx,
    })
}

/// `√g(v,v)`, with null vectors (up to round-off) mapped to 0.
pub(crate) fn mass_root(g: &DMat, v: &DVec) -> Result<f64, LagrangianError> {
    let q = v.dot(&(g * v));
    let scale = v.norm_squared() * g.amax();
    if q < -NULL_TOL * scale {
        return Err(LagrangianError::SpacelikeVelocity { norm: q });
    }
    if q <= NULL_TOL * scale {
        return Ok(0.0);
    }
    Ok(q.sqrt())
}

/// Real `n`-th root; odd ranks keep the sign of the radicand.
pub(crate) fn signed_root(p: f64, rank: usize) -> Result<f64, LagrangianError> {
    if rank % 2 == 0 {
        if p < 0.0 {
            return Err(LagrangianError::NegativeEvenRadicand { rank, value: p });
        }
        Ok(p.powf(1.0 / rank as f64))
    } else if rank == 3 {
        Ok(p.cbrt())
    } else {
        Ok(p.signum() * p.abs().powf(1.0 / rank as f64))
    }
}

fn checked_scale(field: &SymmetricTensorField, x: &DVec) -> Result<(f64, DVec), LagrangianError> {
    let (f, g) = field.scale(x);
    if f <= 0.0 {
        return Err(LagrangianError::NonPositiveScale(f));
    }
    Ok((f, g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::ScalarProfile;

    fn v(xs: &[f64]) -> DVec {
        DVec::from_column_slice(xs)
    }

    #[test]
    fn eval_examples() {
        let eta = MetricField::minkowski(4);
        let origin = DVec::zeros(4);
        let free = LagrangianSpec::free(eta.clone(), 2.0).unwrap();
        assert_eq!(free.eval(&origin, &v(&[1.0, 0.0, 0.0, 0.0])).unwrap(), 2.0);

        let charged = LagrangianSpec::new(
            eta.clone(),
            1.0,
            VectorPotentialField::Constant(v(&[0.5, 0.0, 0.0, 0.0])),
            1.0,
        )
        .unwrap();
        assert_eq!(
            charged.eval(&origin, &v(&[1.0, 0.0, 0.0, 0.0])).unwrap(),
            1.5
        );

        let unit = LagrangianSpec::free(eta, 1.0).unwrap();
        let l = unit.eval(&origin, &v(&[1.0, 0.6, 0.0, 0.0])).unwrap();
        assert!((l - 0.8).abs() < 1e-15);
    }

    #[test]
    fn eval_errors() {
        let eta = MetricField::minkowski(4);
        let x = DVec::zeros(4);
        let free = LagrangianSpec::free(eta.clone(), 1.0).unwrap();
        assert!(matches!(
            free.eval(&x, &v(&[1.0, 2.0, 0.0, 0.0])),
            Err(LagrangianError::SpacelikeVelocity { .. })
        ));
        assert!(matches!(
            free.eval(&x, &v(&[1.0, 0.0, 0.0])),
            Err(LagrangianError::DimensionMismatch {
                expected: 4,
                found: 3
            })
        ));
        let mut s4 = SymmetricTensor::new(4, 4);
        s4.set(&[0, 0, 0, 1], 1.0).unwrap();
        let spec = free
            .with_extra(1.0, SymmetricTensorField::constant(s4))
            .unwrap();
        // S(v^4) = 4 v0³ v1 < 0 for v1 < 0
        assert!(matches!(
            spec.eval(&x, &v(&[1.0, -0.5, 0.0, 0.0])),
            Err(LagrangianError::NegativeEvenRadicand { rank: 4, .. })
        ));
        assert!(matches!(
            momentum_of(
                &LagrangianSpec::free(eta, 1.0).unwrap(),
                &v(&[1.0, 1.0, 0.0, 0.0])
            ),
            Err(LagrangianError::NullVelocity)
        ));
    }

    fn momentum_of(spec: &LagrangianSpec, v: &DVec) -> Result<DVec, LagrangianError> {
        spec.derivatives(&DVec::zeros(v.len()), v)
            .map(|d| d.momentum)
    }

    #[test]
    fn spec_validation() {
        let eta = MetricField::minkowski(3);
        assert!(matches!(
            LagrangianSpec::free(eta.clone(), -1.0),
            Err(LagrangianError::NegativeMass(_))
        ));
        let s3 = SymmetricTensor::from_rank_one(3, &[(1.0, v(&[1.0, 0.0, 0.0]))]);
        let spec = LagrangianSpec::free(eta.clone(), 1.0)
            .unwrap()
            .with_extra(0.1, SymmetricTensorField::constant(s3.clone()))
            .unwrap();
        assert!(matches!(
            spec.with_extra(0.2, SymmetricTensorField::constant(s3)),
            Err(LagrangianError::DuplicateRank(3))
        ));
        let wrong_dim = SymmetricTensor::from_rank_one(3, &[(1.0, v(&[1.0, 0.0]))]);
        assert!(LagrangianSpec::free(eta, 1.0)
            .unwrap()
            .with_extra(0.1, SymmetricTensorField::constant(wrong_dim))
            .is_err());
    }

    #[test]
    fn odd_rank_uses_signed_root() {
        let eta = MetricField::minkowski(2);
        let mut s3 = SymmetricTensor::new(3, 2);
        s3.set(&[1, 1, 1], 1.0).unwrap();
        let spec = LagrangianSpec::free(eta, 0.0)
            .unwrap()
            .with_extra(2.0, SymmetricTensorField::constant(s3))
            .unwrap();
        let l = spec.eval(&DVec::zeros(2), &v(&[1.0, -0.5])).unwrap();
        assert!((l - 2.0 * -0.5).abs() < 1e-15);
    }

    /// Second derivatives checked against differences of the analytic
    /// first derivatives, for every term type at once.
    #[test]
    fn hessians_match_differenced_gradients() {
        let phi = ScalarProfile::Cosine {
            amplitude: 0.05,
            wavevector: vec![0.3, 1.0, -0.7, 0.2],
            phase: 0.2,
        };
        let s3 = SymmetricTensor::from_rank_one(
            3,
            &[
                (0.5, v(&[1.0, 0.2, -0.1, 0.3])),
                (0.3, v(&[0.8, -0.4, 0.5, 0.0])),
            ],
        );
        let s4 = SymmetricTensor::from_rank_one(4, &[(0.2, v(&[1.0, 0.1, 0.3, -0.2]))]);
        let spec = LagrangianSpec::new(
            MetricField::weak_field(phi.clone()),
            0.7,
            VectorPotentialField::UniformMagnetic {
                dim: 4,
                field: 0.9,
                plane: (1, 2),
            }
            .gauge_shifted(phi.clone()),
            1.3,
        )
        .unwrap()
        .with_extra(0.4, SymmetricTensorField::modulated(s3, phi))
        .unwrap()
        .with_extra(0.25, SymmetricTensorField::constant(s4))
        .unwrap();
        let x = v(&[0.1, 0.4, -0.3, 0.2]);
        let vel = v(&[1.0, 0.3, -0.2, 0.1]);
        let d = spec.derivatives(&x, &vel).unwrap();
        assert!((d.value - spec.eval(&x, &vel).unwrap()).abs() < 1e-14);
        let h = 1e-6;
        for k in 0..4 {
            let mut vp = vel.clone();
            let mut vm = vel.clone();
            vp[k] += h;
            vm[k] -= h;
            let dp = spec.derivatives(&x, &vp).unwrap();
            let dm = spec.derivatives(&x, &vm).unwrap();
            let col = (dp.momentum - dm.momentum) / (2.0 * h);
            assert!((d.hess_vv.column(k) - col).amax() < 1e-7, "hess_vv col {k}");

            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[k] += h;
            xm[k] -= h;
            let dp = spec.derivatives(&xp, &vel).unwrap();
            let dm = spec.derivatives(&xm, &vel).unwrap();
            let col = (dp.momentum - dm.momentum) / (2.0 * h);
            assert!((d.hess_vx.column(k) - col).amax() < 1e-7, "hess_vx col {k}");
            let fd = (dp.value - dm.value) / (2.0 * h);
            assert!((d.force[k] - fd).abs() < 1e-7, "force {k}");
        }
        // homogeneity: the velocity Hessian annihilates v
        assert!((&d.hess_vv * &vel).amax() < 1e-12);
    }
}
