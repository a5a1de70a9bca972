//! Gamma matrices, the linear solve for quadratic generators and the
//! first-order Dirac operator.
//!
//! Given a Lie algebra acting on vectors through `ρ`, [`rund_solve`] looks
//! for generators of the form `X_i = (x_i)_{αβ} γ^α γ^β` with
//!
//! ```text
//! [X_i, γ^α] = −ρ(X_i)^α_β γ^β,    tr X_i = 0.
//! ```
//!
//! The minus sign makes `X ↦ ρ` a homomorphism, so `[X_i, X_j] = C_ij^k X_k`
//! whenever `[ρ_i, ρ_j] = C_ij^k ρ_k`. The system is only consistent when
//! the γ's anticommute to a multiple of the identity.

mod dirac;
mod lie;
mod rund;

use nalgebra::Complex;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use dirac::{
    dirac_operator, dirac_operator_for, leibniz_determinant, mass_shell_determinant_residual,
    mass_term_normalization, mass_term_trace_identity, MassTermNormalization,
};
pub use lie::LieAlgebraSpec;
pub use rund::{
    recovered_representation, rund_solve, vector_covariance_check, verify_lie_closure,
    RundSolution, FEASIBLE_TOL,
};

use crate::{DMat, DVec};

pub type C64 = Complex<f64>;
pub type CMat = nalgebra::DMatrix<C64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CliffordError {
    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("generators do not close: residual {residual:e}")]
    NotClosed { residual: f64 },
    #[error("structure constants fail the Jacobi identity by {0:e}")]
    Jacobi(f64),
    #[error("metric does not match the gamma-set form (residual {0:e})")]
    FormMismatch(f64),
    #[error("the Dirac operator is defined for the electromagnetic and mass terms only")]
    ExtraTermsUnsupported,
    #[error("index {index} out of range for {count} gammas")]
    IndexOutOfRange { index: usize, count: usize },
}

/// Bilinear form of a standard gamma set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Form {
    /// `diag(+1, −1, −1, −1)`.
    Minkowski,
    Euclidean,
}

impl Form {
    pub fn matrix(self, n: usize) -> DMat {
        match self {
            Form::Minkowski => {
                let mut d = -DMat::identity(n, n);
                d[(0, 0)] = 1.0;
                d
            }
            Form::Euclidean => DMat::identity(n, n),
        }
    }
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn pauli() -> [CMat; 3] {
    let (o, l, i) = (c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0));
    [
        CMat::from_row_slice(2, 2, &[o, l, l, o]),
        CMat::from_row_slice(2, 2, &[o, -i, i, o]),
        CMat::from_row_slice(2, 2, &[l, o, o, -l]),
    ]
}

/// Block matrix `[[a, b], [c, d]]` from 2×2 blocks.
fn blocks(a: &CMat, b: &CMat, cc: &CMat, d: &CMat) -> CMat {
    let mut m = CMat::zeros(4, 4);
    m.view_mut((0, 0), (2, 2)).copy_from(a);
    m.view_mut((0, 2), (2, 2)).copy_from(b);
    m.view_mut((2, 0), (2, 2)).copy_from(cc);
    m.view_mut((2, 2), (2, 2)).copy_from(d);
    m
}

/// `{A, B} = AB + BA`.
pub fn anticommutator(a: &CMat, b: &CMat) -> CMat {
    a * b + b * a
}

/// `[A, B] = AB − BA`.
pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

/// Spectral norm.
pub fn operator_norm(m: &CMat) -> f64 {
    m.clone().svd(false, false).singular_values.max()
}

/// `N` square complex matrices with a symmetric bilinear form `h^{αβ}`.
#[derive(Debug, Clone)]
pub struct GammaSet {
    gammas: Vec<CMat>,
    form: DMat,
}

impl GammaSet {
    /// `γ⁰ = diag(I, −I)`, `γ^i = [[0, σ_i], [−σ_i, 0]]`; the Euclidean set
    /// multiplies the spatial matrices by `i`.
    pub fn dirac(form: Form) -> Self {
        let z = CMat::zeros(2, 2);
        let one = CMat::identity(2, 2);
        let mut gammas = vec![blocks(&one, &z, &z, &(-&one))];
        for s in pauli() {
            let g = blocks(&z, &s, &(-&s), &z);
            gammas.push(match form {
                Form::Minkowski => g,
                Form::Euclidean => g * c(0.0, 1.0),
            });
        }
        Self {
            gammas,
            form: form.matrix(4),
        }
    }

    /// Two Euclidean 2×2 gammas, `σ₁` and `σ₂`.
    pub fn pauli_toy() -> Self {
        let [s1, s2, _] = pauli();
        Self {
            gammas: vec![s1, s2],
            form: DMat::identity(2, 2),
        }
    }

    pub fn new(gammas: Vec<CMat>, form: DMat) -> Result<Self, CliffordError> {
        let n = gammas.len();
        if form.nrows() != n || form.ncols() != n {
            return Err(CliffordError::DimensionMismatch {
                expected: n,
                found: form.nrows(),
            });
        }
        let size = gammas.first().map(|g| g.nrows()).unwrap_or(0);
        if size == 0
            || gammas
                .iter()
                .any(|g| g.nrows() != size || g.ncols() != size)
        {
            return Err(CliffordError::UnsupportedDimension(size));
        }
        Ok(Self { gammas, form })
    }

    pub fn len(&self) -> usize {
        self.gammas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gammas.is_empty()
    }

    /// Side of the square matrices.
    pub fn matrix_size(&self) -> usize {
        self.gammas[0].nrows()
    }

    pub fn gammas(&self) -> &[CMat] {
        &self.gammas
    }

    /// `h^{αβ}`.
    pub fn form(&self) -> &DMat {
        &self.form
    }

    /// `max_{α,β} ‖{γ^α, γ^β} − 2h^{αβ} I‖_F`.
    pub fn anticommutator_residual(&self) -> f64 {
        let size = self.matrix_size();
        let id = CMat::identity(size, size);
        let mut worst: f64 = 0.0;
        for (a, ga) in self.gammas.iter().enumerate() {
            for (b, gb) in self.gammas.iter().enumerate() {
                let r = anticommutator(ga, gb) - &id * c(2.0 * self.form[(a, b)], 0.0);
                worst = worst.max(r.norm());
            }
        }
        worst
    }

    /// `γ_α π^α`-style contraction `Σ_α w_α γ^α`.
    pub fn contract(&self, w: &DVec) -> CMat {
        let size = self.matrix_size();
        self.gammas
            .iter()
            .zip(w.iter())
            .fold(CMat::zeros(size, size), |acc, (g, &wi)| {
                acc + g * c(wi, 0.0)
            })
    }

    /// Copy with `γ^index += magnitude · H/‖H‖` for a random Hermitian `H`.
    pub fn perturbed(
        &self,
        index: usize,
        magnitude: f64,
        rng: &mut impl Rng,
    ) -> Result<Self, CliffordError> {
        if index >= self.len() {
            return Err(CliffordError::IndexOutOfRange {
                index,
                count: self.len(),
            });
        }
        let size = self.matrix_size();
        let r = CMat::from_fn(size, size, |_, _| {
            c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let h = (&r + r.adjoint()) * c(0.5, 0.0);
        let h = &h * c(magnitude / operator_norm(&h), 0.0);
        let mut out = self.clone();
        out.gammas[index] += h;
        Ok(out)
    }
}
