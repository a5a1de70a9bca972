use serde::Serialize;

use crate::lagrangian::LagrangianSpec;
use crate::{DMat, DVec};

use super::{c, CMat, CliffordError, GammaSet, C64};

fn check_len(gam: &GammaSet, found: usize) -> Result<(), CliffordError> {
    if found != gam.len() {
        return Err(CliffordError::DimensionMismatch {
            expected: gam.len(),
            found,
        });
    }
    Ok(())
}

/// `H = γ^α (p_α − q A_α) − m I` for a constant covector `A`.
pub fn dirac_operator(
    q: f64,
    m: f64,
    a: &DVec,
    p: &DVec,
    gam: &GammaSet,
) -> Result<CMat, CliffordError> {
    check_len(gam, a.len())?;
    check_len(gam, p.len())?;
    let size = gam.matrix_size();
    Ok(gam.contract(&(p - a * q)) - CMat::identity(size, size) * c(m, 0.0))
}

/// [`dirac_operator`] with charge, mass and `A(x)` taken from a particle
/// Lagrangian; specs with extra tensor terms are rejected.
pub fn dirac_operator_for(
    spec: &LagrangianSpec,
    x: &DVec,
    p: &DVec,
    gam: &GammaSet,
) -> Result<CMat, CliffordError> {
    if !spec.extra_terms().is_empty() {
        return Err(CliffordError::ExtraTermsUnsupported);
    }
    check_len(gam, x.len())?;
    let a = spec.potential().value(x);
    dirac_operator(spec.charge(), spec.mass(), &a, p, gam)
}

/// `|det H − (π_α h^{αβ} π_β − m²)²|` with `π = p − qA`.
pub fn mass_shell_determinant_residual(
    q: f64,
    m: f64,
    a: &DVec,
    p: &DVec,
    gam: &GammaSet,
) -> Result<f64, CliffordError> {
    let h = dirac_operator(q, m, a, p, gam)?;
    let pi = p - a * q;
    let pi_sq = pi.dot(&(gam.form() * &pi));
    let expected = (pi_sq - m * m).powi(2);
    Ok((h.determinant() - c(expected, 0.0)).norm())
}

/// Determinant by the Leibniz permutation sum; an independent check on LU.
pub fn leibniz_determinant(m: &CMat) -> C64 {
    fn rec(m: &CMat, row: usize, used: &mut Vec<bool>, sign: f64, acc: C64, out: &mut C64) {
        let n = m.nrows();
        if row == n {
            *out += acc * sign;
            return;
        }
        // inversions contributed by placing `row` in column `col`
        for col in 0..n {
            if used[col] {
                continue;
            }
            let flips = used[col + 1..].iter().filter(|u| **u).count();
            used[col] = true;
            let s = if flips % 2 == 0 { sign } else { -sign };
            rec(m, row + 1, used, s, acc * m[(row, col)], out);
            used[col] = false;
        }
    }
    let mut out = C64::new(0.0, 0.0);
    rec(
        m,
        0,
        &mut vec![false; m.nrows()],
        1.0,
        C64::new(1.0, 0.0),
        &mut out,
    );
    out
}

fn check_form(gam: &GammaSet, g: &DMat) -> Result<(), CliffordError> {
    check_len(gam, g.nrows())?;
    let n = gam.len();
    let mismatch = (g * gam.form() - DMat::identity(n, n)).amax();
    if mismatch > 1e-12 {
        return Err(CliffordError::FormMismatch(mismatch));
    }
    Ok(())
}

/// `‖g_{αβ} γ^α γ^β − N I‖_F` with `g` the inverse of the gamma-set form.
pub fn mass_term_trace_identity(gam: &GammaSet, g: &DMat) -> Result<f64, CliffordError> {
    check_form(gam, g)?;
    let n = gam.len();
    let size = gam.matrix_size();
    let mut sum = CMat::zeros(size, size);
    for a in 0..n {
        for b in 0..n {
            if g[(a, b)] != 0.0 {
                sum += &gam.gammas()[a] * &gam.gammas()[b] * c(g[(a, b)], 0.0);
            }
        }
    }
    Ok((sum - CMat::identity(size, size) * c(n as f64, 0.0)).norm())
}

/// The two candidate normalizations of the matrix mass term: the strict
/// contraction `√(g_{αβ} γ^α γ^β) = √N·I` and the unit convention `m·I`
/// used by [`dirac_operator`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MassTermNormalization {
    pub trace_residual: f64,
    pub contraction: f64,
    pub sqrt_contraction: f64,
    pub operator_convention: f64,
}

pub fn mass_term_normalization(
    gam: &GammaSet,
    g: &DMat,
) -> Result<MassTermNormalization, CliffordError> {
    let trace_residual = mass_term_trace_identity(gam, g)?;
    let n = gam.len() as f64;
    Ok(MassTermNormalization {
        trace_residual,
        contraction: n,
        sqrt_contraction: n.sqrt(),
        operator_convention: 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clifford::Form;

    fn v(xs: &[f64]) -> DVec {
        DVec::from_column_slice(xs)
    }

    #[test]
    fn operator_examples() {
        let g = GammaSet::dirac(Form::Minkowski);
        let z = DVec::zeros(4);
        let h = dirac_operator(0.0, 1.0, &z, &z, &g).unwrap();
        assert_eq!(h, -CMat::identity(4, 4));
        let rest = dirac_operator(0.0, 2.0, &z, &v(&[2.0, 0.0, 0.0, 0.0]), &g).unwrap();
        assert_eq!(
            rest,
            &g.gammas()[0] * c(2.0, 0.0) - CMat::identity(4, 4) * c(2.0, 0.0)
        );
        assert_eq!(rest.rank(1e-12), 2);
        let shifted = dirac_operator(
            1.0,
            1.0,
            &v(&[0.2, 0.0, 0.0, 0.0]),
            &v(&[1.2, 0.0, 0.0, 0.0]),
            &g,
        )
        .unwrap();
        let plain = dirac_operator(0.0, 1.0, &z, &v(&[1.0, 0.0, 0.0, 0.0]), &g).unwrap();
        assert!((shifted - plain).norm() < 1e-15);
    }

    #[test]
    fn leibniz_matches_known_determinants() {
        let m = CMat::from_fn(3, 3, |i, j| {
            c((i * 3 + j) as f64, 0.0) + c(if i == j { 1.0 } else { 0.0 }, 0.0)
        });
        // [[1,1,2],[3,5,5],[6,7,9]]
        assert!((leibniz_determinant(&m) - c(-5.0, 0.0)).norm() < 1e-12);
        assert_eq!(leibniz_determinant(&CMat::identity(4, 4)), c(1.0, 0.0));
        let swap =
            CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(leibniz_determinant(&swap), c(-1.0, 0.0));
    }

    #[test]
    fn determinant_example() {
        let g = GammaSet::dirac(Form::Minkowski);
        let pi = v(&[1.3, 0.2, -0.4, 0.1]);
        let z = DVec::zeros(4);
        let h = dirac_operator(0.0, 1.0, &z, &pi, &g).unwrap();
        assert!((leibniz_determinant(&h) - c(0.2304, 0.0)).norm() < 1e-12);
        assert!(mass_shell_determinant_residual(0.0, 1.0, &z, &pi, &g).unwrap() <= 1e-10);
    }

    #[test]
    fn trace_identity_and_normalization() {
        let eta = Form::Minkowski.matrix(4);
        let m = GammaSet::dirac(Form::Minkowski);
        assert!(mass_term_trace_identity(&m, &eta).unwrap() <= 1e-13);
        let e = GammaSet::dirac(Form::Euclidean);
        assert!(mass_term_trace_identity(&e, &DMat::identity(4, 4)).unwrap() <= 1e-13);
        assert!(
            mass_term_trace_identity(&GammaSet::pauli_toy(), &DMat::identity(2, 2)).unwrap() == 0.0
        );
        assert!(matches!(
            mass_term_trace_identity(&m, &DMat::identity(4, 4)),
            Err(CliffordError::FormMismatch(_))
        ));
        let n = mass_term_normalization(&m, &eta).unwrap();
        assert_eq!(
            (n.contraction, n.sqrt_contraction, n.operator_convention),
            (4.0, 2.0, 1.0)
        );
    }
}
