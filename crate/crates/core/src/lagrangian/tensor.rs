//! Fully symmetric tensors stored by sorted multi-index.
//!
//! Only non-decreasing index tuples `α₁ ≤ … ≤ α_n` are stored; the value of
//! any permutation equals the stored one. Contractions weight each stored
//! entry by the number of distinct permutations of its multi-index.

use std::collections::BTreeMap;

use crate::profile::ScalarProfile;
use crate::{DMat, DVec};

use super::LagrangianError;

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricTensor {
    rank: usize,
    dim: usize,
    entries: BTreeMap<Vec<usize>, f64>,
}

impl SymmetricTensor {
    pub fn new(rank: usize, dim: usize) -> Self {
        Self {
            rank,
            dim,
            entries: BTreeMap::new(),
        }
    }

    /// Builds `Σ_r w_r (u_r ⊗ … ⊗ u_r)`, so `S(v,…,v) = Σ_r w_r (u_r·v)^n`.
    pub fn from_rank_one(rank: usize, terms: &[(f64, DVec)]) -> Self {
        let dim = terms.first().map_or(0, |(_, u)| u.len());
        let mut t = Self::new(rank, dim);
        for idx in sorted_indices(rank, dim) {
            let c: f64 = terms
                .iter()
                .map(|(w, u)| w * idx.iter().map(|&a| u[a]).product::<f64>())
                .sum();
            if c != 0.0 {
                t.entries.insert(idx, c);
            }
        }
        t
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> impl Iterator<Item = (&[usize], f64)> {
        self.entries.iter().map(|(k, &v)| (k.as_slice(), v))
    }

    /// Sets the component for `index` (any order). Returns `true` if the
    /// index had to be reordered.
    pub fn set(&mut self, index: &[usize], value: f64) -> Result<bool, LagrangianError> {
        if index.len() != self.rank {
            return Err(LagrangianError::InvalidIndex {
                index: index.to_vec(),
                reason: format!("expected {} indices", self.rank),
            });
        }
        if let Some(&bad) = index.iter().find(|&&a| a >= self.dim) {
            return Err(LagrangianError::InvalidIndex {
                index: index.to_vec(),
                reason: format!("index {bad} out of range for dimension {}", self.dim),
            });
        }
        let mut sorted = index.to_vec();
        sorted.sort_unstable();
        let reordered = sorted != index;
        if value == 0.0 {
            self.entries.remove(&sorted);
        } else {
            self.entries.insert(sorted, value);
        }
        Ok(reordered)
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        let mut sorted = index.to_vec();
        sorted.sort_unstable();
        self.entries.get(&sorted).copied().unwrap_or(0.0)
    }

    /// `S(v,…,v)`.
    pub fn contract(&self, v: &DVec) -> f64 {
        self.entries
            .iter()
            .map(|(idx, c)| c * multiplicity(idx) * product(idx, v))
            .sum()
    }

    /// `T_α = S_{α β₂…β_n} v^{β₂}…v^{β_n}`; satisfies `v·T = S(v,…,v)`.
    pub fn contract_all_but_one(&self, v: &DVec) -> DVec {
        let mut t = DVec::zeros(self.dim);
        let mut rest = Vec::with_capacity(self.rank);
        for (idx, c) in &self.entries {
            for_each_distinct(idx, |pos| {
                remove_at(idx, pos, &mut rest);
                t[idx[pos]] += c * multiplicity(&rest) * product(&rest, v);
            });
        }
        t
    }

    /// `U_{αβ} = S_{αβ γ₃…γ_n} v^{γ₃}…v^{γ_n}`.
    pub fn contract_all_but_two(&self, v: &DVec) -> DMat {
        let mut u = DMat::zeros(self.dim, self.dim);
        if self.rank < 2 {
            return u;
        }
        let mut once = Vec::with_capacity(self.rank);
        let mut twice = Vec::with_capacity(self.rank);
        for (idx, c) in &self.entries {
            for_each_distinct(idx, |p| {
                remove_at(idx, p, &mut once);
                let a = idx[p];
                let first = once.clone();
                for_each_distinct(&first, |q| {
                    remove_at(&first, q, &mut twice);
                    u[(a, first[q])] += c * multiplicity(&twice) * product(&twice, v);
                });
            });
        }
        u
    }
}

/// Number of distinct orderings of a sorted multi-index: `n! / Π k_i!`.
pub fn multiplicity(sorted: &[usize]) -> f64 {
    let mut m = factorial(sorted.len());
    let mut run = 1;
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            m /= factorial(run);
            run = 1;
        }
    }
    if !sorted.is_empty() {
        m /= factorial(run);
    }
    m
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn product(idx: &[usize], v: &DVec) -> f64 {
    idx.iter().map(|&a| v[a]).product()
}

fn for_each_distinct(idx: &[usize], mut f: impl FnMut(usize)) {
    for pos in 0..idx.len() {
        if pos == 0 || idx[pos] != idx[pos - 1] {
            f(pos);
        }
    }
}

fn remove_at(idx: &[usize], pos: usize, out: &mut Vec<usize>) {
    out.clear();
    out.extend(
        idx.iter()
            .enumerate()
            .filter(|&(i, _)| i != pos)
            .map(|(_, &a)| a),
    );
}

/// All non-decreasing multi-indices of length `rank` over `0..dim`.
pub fn sorted_indices(rank: usize, dim: usize) -> Vec<Vec<usize>> {
    fn rec(rank: usize, dim: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == rank {
            out.push(cur.clone());
            return;
        }
        for a in start..dim {
            cur.push(a);
            rec(rank, dim, a, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(rank, dim, 0, &mut Vec::with_capacity(rank), &mut out);
    out
}

/// A symmetric tensor with an optional position-dependent scale
/// `S(x) = (1 + φ(x))·S₀`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricTensorField {
    pub tensor: SymmetricTensor,
    pub modulation: Option<ScalarProfile>,
}

impl SymmetricTensorField {
    pub fn constant(tensor: SymmetricTensor) -> Self {
        Self {
            tensor,
            modulation: None,
        }
    }

    pub fn modulated(tensor: SymmetricTensor, profile: ScalarProfile) -> Self {
        Self {
            tensor,
            modulation: Some(profile),
        }
    }

    pub fn rank(&self) -> usize {
        self.tensor.rank()
    }

    pub fn dim(&self) -> usize {
        self.tensor.dim()
    }

    /// `(1 + φ(x), ∇φ(x))`.
    pub fn scale(&self, x: &DVec) -> (f64, DVec) {
        match &self.modulation {
            None => (1.0, DVec::zeros(self.dim())),
            Some(p) => (1.0 + p.value(x), p.gradient(x)),
        }
    }

    pub fn eval(&self, x: &DVec, v: &DVec) -> f64 {
        self.scale(x).0 * self.tensor.contract(v)
    }
}
