use crate::DMat;

use super::CliffordError;

const CLOSURE_TOL: f64 = 1e-12;

/// Generators `ρ_i` acting on `N`-vectors and their structure constants
/// `[ρ_i, ρ_j] = C_ij^k ρ_k`.
#[derive(Debug, Clone)]
pub struct LieAlgebraSpec {
    rho: Vec<DMat>,
    /// `structure[i][j][k] = C_ij^k`.
    structure: Vec<Vec<Vec<f64>>>,
    labels: Vec<String>,
}

impl LieAlgebraSpec {
    /// Derives `C` by projecting each commutator onto the generators and
    /// rejects sets that do not close.
    pub fn from_representation(rho: Vec<DMat>, labels: Vec<String>) -> Result<Self, CliffordError> {
        let g = rho.len();
        let n = rho.first().map(|r| r.nrows()).unwrap_or(0);
        if let Some(r) = rho.iter().find(|r| r.nrows() != n || r.ncols() != n) {
            return Err(CliffordError::DimensionMismatch {
                expected: n,
                found: r.nrows(),
            });
        }
        let basis = DMat::from_fn(n * n, g, |row, k| rho[k].as_slice()[row]);
        let svd = basis.clone().svd(true, true);
        let eps = 1e-12 * svd.singular_values.max().max(1.0);
        let mut structure = vec![vec![vec![0.0; g]; g]; g];
        let mut residual: f64 = 0.0;
        for i in 0..g {
            for j in 0..g {
                let comm = &rho[i] * &rho[j] - &rho[j] * &rho[i];
                let target = crate::DVec::from_column_slice(comm.as_slice());
                let coeffs = svd.solve(&target, eps).expect("svd has both factors");
                residual = residual.max((&basis * &coeffs - &target).amax());
                structure[i][j] = coeffs.iter().copied().collect();
            }
        }
        if residual > CLOSURE_TOL {
            return Err(CliffordError::NotClosed { residual });
        }
        let labels = if labels.len() == g {
            labels
        } else {
            (0..g).map(|i| format!("X{i}")).collect()
        };
        let spec = Self {
            rho,
            structure,
            labels,
        };
        let jacobi = spec.jacobi_residual();
        if jacobi > CLOSURE_TOL {
            return Err(CliffordError::Jacobi(jacobi));
        }
        Ok(spec)
    }

    /// `(ρ^{μν})^α_β = h^{μα} δ^ν_β − h^{να} δ^μ_β` for each listed pair.
    pub fn rotations(form: &DMat, pairs: &[(usize, usize)]) -> Result<Self, CliffordError> {
        let n = form.nrows();
        let mut rho = Vec::with_capacity(pairs.len());
        for &(mu, nu) in pairs {
            if mu >= n || nu >= n {
                return Err(CliffordError::IndexOutOfRange {
                    index: mu.max(nu),
                    count: n,
                });
            }
            rho.push(DMat::from_fn(n, n, |a, b| {
                form[(mu, a)] * f64::from(u8::from(b == nu))
                    - form[(nu, a)] * f64::from(u8::from(b == mu))
            }));
        }
        let labels = pairs.iter().map(|(m, n)| format!("X{m}{n}")).collect();
        Self::from_representation(rho, labels)
    }

    /// All pairs `μ < ν` of an `n`-dimensional form.
    pub fn all_pairs(n: usize) -> Vec<(usize, usize)> {
        (0..n)
            .flat_map(|m| (m + 1..n).map(move |k| (m, k)))
            .collect()
    }

    /// `so(1,3)` on Minkowski vectors, generators ordered 01, 02, 03, 12, 13, 23.
    pub fn lorentz() -> Self {
        let eta = super::Form::Minkowski.matrix(4);
        Self::rotations(&eta, &Self::all_pairs(4)).expect("Lorentz algebra closes")
    }

    /// Spatial rotations 12, 13, 23 inside the Minkowski vector representation.
    pub fn so3() -> Self {
        let eta = super::Form::Minkowski.matrix(4);
        Self::rotations(&eta, &[(1, 2), (1, 3), (2, 3)]).expect("so(3) closes")
    }

    /// One generator with trivial action on `n`-vectors.
    pub fn abelian(n: usize) -> Self {
        Self::from_representation(vec![DMat::zeros(n, n)], vec!["X0".into()]).expect("zero closes")
    }

    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    pub fn vector_dim(&self) -> usize {
        self.rho.first().map(|r| r.nrows()).unwrap_or(0)
    }

    pub fn representation(&self) -> &[DMat] {
        &self.rho
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn structure_constant(&self, i: usize, j: usize, k: usize) -> f64 {
        self.structure[i][j][k]
    }

    /// `max |C_ij^k + C_ji^k|`.
    pub fn antisymmetry_residual(&self) -> f64 {
        let g = self.len();
        let mut worst: f64 = 0.0;
        for i in 0..g {
            for j in 0..g {
                for k in 0..g {
                    worst = worst.max((self.structure[i][j][k] + self.structure[j][i][k]).abs());
                }
            }
        }
        worst
    }

    /// `max |C_ij^m C_mk^l + C_jk^m C_mi^l + C_ki^m C_mj^l|`.
    pub fn jacobi_residual(&self) -> f64 {
        let g = self.len();
        let c = &self.structure;
        let mut worst: f64 = 0.0;
        for i in 0..g {
            for j in 0..g {
                for k in 0..g {
                    for l in 0..g {
                        let s: f64 = (0..g)
                            .map(|m| {
                                c[i][j][m] * c[m][k][l]
                                    + c[j][k][m] * c[m][i][l]
                                    + c[k][i][m] * c[m][j][l]
                            })
                            .sum();
                        worst = worst.max(s.abs());
                    }
                }
            }
        }
        worst
    }
}
