use serde::Serialize;

use crate::DVec;

use super::{mass_term, LagrangianError, LagrangianSpec};

/// `p_α = ∂L/∂v^α`.
pub fn momentum(spec: &LagrangianSpec, x: &DVec, v: &DVec) -> Result<DVec, LagrangianError> {
    Ok(spec.derivatives(x, v)?.momentum)
}

/// `π_α = p_α − qA_α − (extra-term gradients) = m g_αβ v^β / √g(v,v)`.
///
/// Evaluated directly from the mass term, so it is bit-for-bit independent of
/// `q`, `A` and the extra couplings.
pub fn generalized_momentum(
    spec: &LagrangianSpec,
    x: &DVec,
    v: &DVec,
) -> Result<DVec, LagrangianError> {
    spec.check_dims(x, v)?;
    if spec.mass() == 0.0 {
        return Ok(DVec::zeros(spec.dim()));
    }
    Ok(mass_term(spec.mass(), spec.metric(), x, v)?.momentum)
}

/// `h = p·v − L`; vanishes for every first-order homogeneous `L`.
pub fn hamiltonian_residual(
    spec: &LagrangianSpec,
    x: &DVec,
    v: &DVec,
) -> Result<f64, LagrangianError> {
    let d = spec.derivatives(x, v)?;
    Ok(d.momentum.dot(v) - d.value)
}

/// `π_α (g⁻¹)^{αβ} π_β − m²`.
pub fn mass_shell_residual(
    spec: &LagrangianSpec,
    x: &DVec,
    v: &DVec,
) -> Result<f64, LagrangianError> {
    let pi = generalized_momentum(spec, x, v)?;
    let g = spec.metric().eval_checked(x)?;
    let raised = g
        .lu()
        .solve(&pi)
        .ok_or(crate::geometry::GeometryError::Degenerate { det: 0.0 })?;
    Ok(pi.dot(&raised) - spec.mass() * spec.mass())
}

/// `L(x, λv) − λ L(x, v)`.
pub fn homogeneity_residual(
    spec: &LagrangianSpec,
    x: &DVec,
    v: &DVec,
    lambda: f64,
) -> Result<f64, LagrangianError> {
    if !(lambda > 0.0) {
        return Err(LagrangianError::NonPositiveScaleFactor(lambda));
    }
    let scaled = v * lambda;
    Ok(spec.eval(x, &scaled)? - lambda * spec.eval(x, v)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NonrelExpansion {
    pub exact: f64,
    pub quadratic: f64,
}

impl NonrelExpansion {
    pub fn gap(&self) -> f64 {
        (self.exact - self.quadratic).abs()
    }
}

/// Coordinate-time gauge `v = (1, ω)` in a diagonal one-time chart with
/// `g_00 = 1`: the exact Lagrangian against
/// `q(A_0 + A_i ω^i) + m(1 − ½ Σ|g_ii|(ω^i)²)`.
///
/// Extra tensor terms, if any, enter both values unexpanded.
pub fn nonrel_expand(
    spec: &LagrangianSpec,
    x: &DVec,
    omega: &DVec,
) -> Result<NonrelExpansion, LagrangianError> {
    let n = spec.dim();
    if omega.len() + 1 != n {
        return Err(LagrangianError::DimensionMismatch {
            expected: n - 1,
            found: omega.len(),
        });
    }
    let g = spec.metric().eval_checked(x)?;
    check_one_time(&g)?;
    let speed_sq: f64 = (0..n - 1)
        .map(|i| g[(i + 1, i + 1)].abs() * omega[i] * omega[i])
        .sum();
    if speed_sq >= 1.0 {
        return Err(LagrangianError::SuperluminalSpeed(speed_sq.sqrt()));
    }
    let mut v = DVec::zeros(n);
    v[0] = 1.0;
    v.rows_mut(1, n - 1).copy_from(omega);

    let terms = spec.terms(x, &v)?;
    let quadratic =
        terms.em + spec.mass() * (1.0 - 0.5 * speed_sq) + terms.extra.iter().sum::<f64>();
    Ok(NonrelExpansion {
        exact: terms.total(),
        quadratic,
    })
}

fn check_one_time(g: &crate::DMat) -> Result<(), LagrangianError> {
    const TOL: f64 = 1e-12;
    let n = g.nrows();
    if (g[(0, 0)] - 1.0).abs() > TOL {
        return Err(LagrangianError::NotOneTime(format!("g_00 = {}", g[(0, 0)])));
    }
    for i in 0..n {
        for j in 0..n {
            if i != j && g[(i, j)].abs() > TOL {
                return Err(LagrangianError::NotOneTime(format!(
                    "g_{i}{j} = {}",
                    g[(i, j)]
                )));
            }
        }
        if i > 0 && g[(i, i)] >= 0.0 {
            return Err(LagrangianError::NotOneTime(format!(
                "g_{i}{i} = {} >= 0",
                g[(i, i)]
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::MetricField;
    use crate::lagrangian::{SymmetricTensor, SymmetricTensorField, VectorPotentialField};

    fn v(xs: &[f64]) -> DVec {
        DVec::from_column_slice(xs)
    }

    fn eta_spec(q: f64, a: &[f64], m: f64) -> LagrangianSpec {
        LagrangianSpec::new(
            MetricField::minkowski(4),
            q,
            VectorPotentialField::Constant(v(a)),
            m,
        )
        .unwrap()
    }

    #[test]
    fn momentum_examples() {
        let x = DVec::zeros(4);
        let p = momentum(
            &eta_spec(0.0, &[0.0; 4], 2.0),
            &x,
            &v(&[1.0, 0.0, 0.0, 0.0]),
        )
        .unwrap();
        assert_eq!(p, v(&[2.0, 0.0, 0.0, 0.0]));
        let p = momentum(
            &eta_spec(1.0, &[0.3, 0.1, 0.0, 0.0], 1.0),
            &x,
            &v(&[1.0, 0.0, 0.0, 0.0]),
        )
        .unwrap();
        assert!((p - v(&[1.3, 0.1, 0.0, 0.0])).amax() < 1e-15);
    }

    #[test]
    fn generalized_momentum_examples() {
        let x = DVec::zeros(4);
        let vel = v(&[1.0, 0.6, 0.0, 0.0]);
        let pi = generalized_momentum(&eta_spec(0.0, &[0.0; 4], 1.0), &x, &vel).unwrap();
        assert!((pi.clone() - v(&[1.25, -0.75, 0.0, 0.0])).amax() < 1e-15);
        let huge =
            generalized_momentum(&eta_spec(5.0, &[1e6, -3e5, 2e7, 1.0], 1.0), &x, &vel).unwrap();
        assert_eq!(pi, huge);
    }

    #[test]
    fn identity_examples() {
        let x = DVec::zeros(4);
        let spec = eta_spec(0.0, &[0.0; 4], 2.0);
        let rest = v(&[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(hamiltonian_residual(&spec, &x, &rest).unwrap(), 0.0);
        assert_eq!(mass_shell_residual(&spec, &x, &rest).unwrap(), 0.0);
        let unit = eta_spec(0.0, &[0.0; 4], 1.0);
        let r = mass_shell_residual(&unit, &x, &v(&[1.0, 0.6, 0.0, 0.0])).unwrap();
        assert!(r.abs() < 1e-15);
        for lambda in [2.0, 0.001] {
            let vel = v(&[1.0, 0.2, -0.3, 0.1]);
            let r = homogeneity_residual(&unit, &x, &vel, lambda).unwrap();
            assert!(r.abs() <= 1e-12 * lambda * unit.eval(&x, &vel).unwrap());
        }
        assert!(homogeneity_residual(&unit, &x, &rest, 0.0).is_err());
    }

    #[test]
    fn nonrel_examples() {
        let spec = eta_spec(0.0, &[0.0; 4], 1.0);
        let x = DVec::zeros(4);
        let e = nonrel_expand(&spec, &x, &DVec::zeros(3)).unwrap();
        assert_eq!((e.exact, e.quadratic), (1.0, 1.0));
        let e = nonrel_expand(&spec, &x, &v(&[0.1, 0.0, 0.0])).unwrap();
        assert!((e.exact - 0.99f64.sqrt()).abs() < 1e-15);
        assert!((e.quadratic - 0.995).abs() < 1e-15);
        // √0.99 − 0.995 ≈ −(0.1⁴/8 + 0.1⁶/16)
        assert!((e.gap() - 1.2563e-5).abs() < 1e-8);
        let bad =
            LagrangianSpec::free(MetricField::diagonal(&[1.0, 1.0, -1.0, -1.0]).unwrap(), 1.0)
                .unwrap();
        assert!(matches!(
            nonrel_expand(&bad, &x, &DVec::zeros(3)),
            Err(LagrangianError::NotOneTime(_))
        ));
        assert!(matches!(
            nonrel_expand(&spec, &x, &v(&[0.8, 0.7, 0.0])),
            Err(LagrangianError::SuperluminalSpeed(_))
        ));
    }

    #[test]
    fn euler_identity_with_extra_terms() {
        let s3 = SymmetricTensor::from_rank_one(3, &[(0.6, v(&[1.0, 0.3, 0.0, -0.2]))]);
        let spec = eta_spec(0.4, &[0.2, 0.1, -0.3, 0.05], 1.1)
            .with_extra(0.3, SymmetricTensorField::constant(s3))
            .unwrap();
        let x = DVec::zeros(4);
        let vel = v(&[1.2, 0.3, -0.4, 0.2]);
        let h = hamiltonian_residual(&spec, &x, &vel).unwrap();
        assert!(h.abs() < 1e-14);
    }
}
