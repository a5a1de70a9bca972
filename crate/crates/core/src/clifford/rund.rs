use serde::Serialize;

use crate::{DMat, DVec};

use super::{c, commutator, CMat, CliffordError, GammaSet, LieAlgebraSpec};

/// Generators whose solve residual is below this count as feasible.
pub const FEASIBLE_TOL: f64 = 1e-8;
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Serialize)]
pub struct RundSolution {
    /// `(x_i)_{αβ}`, one `N × N` array per generator.
    #[serde(skip)]
    pub coefficients: Vec<DMat>,
    /// `X_i = (x_i)_{αβ} γ^α γ^β`.
    #[serde(skip)]
    pub generators: Vec<CMat>,
    /// `‖A x_i − b_i‖₂` of the stacked real system, trace row included.
    pub residuals: Vec<f64>,
    /// Homogeneous solutions counted in the span of the products `γ^α γ^β`.
    pub kernel_dims: Vec<usize>,
    pub feasible: bool,
}

impl RundSolution {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

/// Real and imaginary parts of a complex matrix, stacked column-major.
fn realify(m: &CMat) -> impl Iterator<Item = f64> + '_ {
    m.iter().map(|z| z.re).chain(m.iter().map(|z| z.im))
}

fn rank(m: &DMat) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let tol = RANK_TOL * sv.max().max(f64::MIN_POSITIVE);
    sv.iter().filter(|s| **s > tol).count()
}

/// `−ρ^α_β γ^β`.
fn covariance_rhs(rho: &DMat, gam: &GammaSet, alpha: usize) -> CMat {
    let size = gam.matrix_size();
    gam.gammas()
        .iter()
        .enumerate()
        .fold(CMat::zeros(size, size), |acc, (b, g)| {
            acc - g * c(rho[(alpha, b)], 0.0)
        })
}

/// Minimum-norm least-squares solve of the covariance condition for every
/// generator, with `tr X_i = 0` appended as two real rows.
pub fn rund_solve(alg: &LieAlgebraSpec, gam: &GammaSet) -> Result<RundSolution, CliffordError> {
    let n = gam.len();
    if alg.vector_dim() != n {
        return Err(CliffordError::DimensionMismatch {
            expected: n,
            found: alg.vector_dim(),
        });
    }
    let size = gam.matrix_size();
    let products: Vec<CMat> = (0..n * n)
        .map(|col| &gam.gammas()[col / n] * &gam.gammas()[col % n])
        .collect();

    let block = 2 * size * size;
    let mut comm = DMat::zeros(n * block, n * n);
    let mut span = DMat::zeros(block, n * n);
    let mut trace = DMat::zeros(2, n * n);
    for (col, p) in products.iter().enumerate() {
        for (alpha, g) in gam.gammas().iter().enumerate() {
            for (r, v) in realify(&commutator(p, g)).enumerate() {
                comm[(alpha * block + r, col)] = v;
            }
        }
        for (r, v) in realify(p).enumerate() {
            span[(r, col)] = v;
        }
        let t = p.trace();
        trace[(0, col)] = t.re;
        trace[(1, col)] = t.im;
    }
    let mut system = DMat::zeros(comm.nrows() + 2, n * n);
    system.rows_mut(0, comm.nrows()).copy_from(&comm);
    system.rows_mut(comm.nrows(), 2).copy_from(&trace);
    let svd = system.clone().svd(true, true);
    let eps = RANK_TOL * svd.singular_values.max().max(f64::MIN_POSITIVE);
    let kernel = rank(&span) - rank(&comm);

    let mut sol = RundSolution {
        coefficients: Vec::with_capacity(alg.len()),
        generators: Vec::with_capacity(alg.len()),
        residuals: Vec::with_capacity(alg.len()),
        kernel_dims: vec![kernel; alg.len()],
        feasible: true,
    };
    for rho in alg.representation() {
        let mut b = DVec::zeros(system.nrows());
        for alpha in 0..n {
            for (r, v) in realify(&covariance_rhs(rho, gam, alpha)).enumerate() {
                b[alpha * block + r] = v;
            }
        }
        let x = svd.solve(&b, eps).expect("svd has both factors");
        let residual = (&system * &x - &b).norm();
        let generator = products
            .iter()
            .zip(x.iter())
            .fold(CMat::zeros(size, size), |acc, (p, &xi)| {
                acc + p * c(xi, 0.0)
            });
        sol.feasible &= residual <= FEASIBLE_TOL;
        sol.coefficients
            .push(DMat::from_row_slice(n, n, x.as_slice()));
        sol.generators.push(generator);
        sol.residuals.push(residual);
    }
    Ok(sol)
}

/// `max_{i,j} ‖[X_i, X_j] − C_ij^k X_k‖_F`.
pub fn verify_lie_closure(sol: &RundSolution, alg: &LieAlgebraSpec) -> f64 {
    let x = &sol.generators;
    let mut worst: f64 = 0.0;
    for i in 0..x.len() {
        for j in 0..x.len() {
            let mut r = commutator(&x[i], &x[j]);
            for (k, xk) in x.iter().enumerate() {
                r -= xk * c(alg.structure_constant(i, j, k), 0.0);
            }
            worst = worst.max(r.norm());
        }
    }
    worst
}

/// `max_{i,α} ‖[X_i, γ^α] + ρ(X_i)^α_β γ^β‖_F`.
pub fn vector_covariance_check(sol: &RundSolution, alg: &LieAlgebraSpec, gam: &GammaSet) -> f64 {
    let mut worst: f64 = 0.0;
    for (x, rho) in sol.generators.iter().zip(alg.representation()) {
        for (alpha, g) in gam.gammas().iter().enumerate() {
            let r = commutator(x, g) - covariance_rhs(rho, gam, alpha);
            worst = worst.max(r.norm());
        }
    }
    worst
}

/// `ρ^α_β = −tr([X, γ^α] γ_β) / tr(I)` with `γ_β = h_{βδ} γ^δ`, which
/// inverts the covariance condition on an exact Clifford set.
pub fn recovered_representation(sol: &RundSolution, gam: &GammaSet) -> Vec<DMat> {
    let n = gam.len();
    let lower = gam
        .form()
        .clone()
        .try_inverse()
        .unwrap_or_else(|| DMat::zeros(n, n));
    let lowered: Vec<CMat> = (0..n)
        .map(|b| gam.contract(&lower.row(b).transpose()))
        .collect();
    let dim = gam.matrix_size() as f64;
    sol.generators
        .iter()
        .map(|x| {
            DMat::from_fn(n, n, |a, b| {
                -(commutator(x, &gam.gammas()[a]) * &lowered[b]).trace().re / dim
            })
        })
        .collect()
}
