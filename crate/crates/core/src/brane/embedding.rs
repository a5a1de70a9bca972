use std::fmt;
use std::io::Read;
use std::sync::Arc;

use crate::profile::ScalarProfile;
use crate::{DMat, DVec};

use super::BraneError;

const FD_STEP: f64 = 1e-6;

/// A map `z ↦ x(z)` from a parameter box in `R^D` into the target.
pub trait Embedding: Send + Sync {
    fn brane_dim(&self) -> usize;
    fn target_dim(&self) -> usize;
    /// One `(lo, hi)` interval per parameter axis.
    fn param_box(&self) -> &[(f64, f64)];
    fn position_unchecked(&self, z: &DVec) -> DVec;
    /// `J[(α, a)] = ∂x^α/∂z^a`, `target_dim × brane_dim`.
    fn jacobian_unchecked(&self, z: &DVec) -> DMat;

    fn contains(&self, z: &DVec) -> bool {
        const SLACK: f64 = 1e-12;
        z.len() == self.brane_dim()
            && self
                .param_box()
                .iter()
                .zip(z.iter())
                .all(|(&(lo, hi), &t)| {
                    let pad = SLACK * (hi - lo).abs().max(1.0);
                    t >= lo - pad && t <= hi + pad
                })
    }

    fn position(&self, z: &DVec) -> Result<DVec, BraneError> {
        self.check(z)?;
        Ok(self.position_unchecked(z))
    }

    fn jacobian(&self, z: &DVec) -> Result<DMat, BraneError> {
        self.check(z)?;
        Ok(self.jacobian_unchecked(z))
    }

    fn check(&self, z: &DVec) -> Result<(), BraneError> {
        if self.contains(z) {
            Ok(())
        } else {
            Err(BraneError::OutsideBox {
                z: z.as_slice().to_vec(),
            })
        }
    }
}

fn validate_box(param_box: &[(f64, f64)]) -> Result<(), BraneError> {
    if param_box.is_empty() {
        return Err(BraneError::InvalidBox("no parameter axes".into()));
    }
    for (a, &(lo, hi)) in param_box.iter().enumerate() {
        if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(BraneError::InvalidBox(format!("axis {a}: [{lo}, {hi}]")));
        }
    }
    Ok(())
}

/// `x = (z¹, …, z^D, h₁(z), …, h_k(z))`.
#[derive(Debug, Clone)]
pub struct GraphEmbedding {
    param_box: Vec<(f64, f64)>,
    heights: Vec<ScalarProfile>,
}

impl GraphEmbedding {
    pub fn new(
        param_box: Vec<(f64, f64)>,
        heights: Vec<ScalarProfile>,
    ) -> Result<Self, BraneError> {
        validate_box(&param_box)?;
        let d = param_box.len();
        if let Some(h) = heights.iter().find(|h| h.dim() != d) {
            return Err(BraneError::DimensionMismatch {
                expected: d,
                found: h.dim(),
            });
        }
        Ok(Self { param_box, heights })
    }

    /// `x = (z¹, z², a·z¹)` over the unit square.
    pub fn tilted_plane(slope: f64) -> Self {
        Self {
            param_box: vec![(0.0, 1.0); 2],
            heights: vec![ScalarProfile::Linear {
                coeffs: vec![slope, 0.0],
                offset: 0.0,
            }],
        }
    }
}

impl Embedding for GraphEmbedding {
    fn brane_dim(&self) -> usize {
        self.param_box.len()
    }

    fn target_dim(&self) -> usize {
        self.param_box.len() + self.heights.len()
    }

    fn param_box(&self) -> &[(f64, f64)] {
        &self.param_box
    }

    fn position_unchecked(&self, z: &DVec) -> DVec {
        let d = self.brane_dim();
        let mut x = DVec::zeros(self.target_dim());
        x.rows_mut(0, d).copy_from(z);
        for (i, h) in self.heights.iter().enumerate() {
            x[d + i] = h.value(z);
        }
        x
    }

    fn jacobian_unchecked(&self, z: &DVec) -> DMat {
        let d = self.brane_dim();
        let mut j = DMat::zeros(self.target_dim(), d);
        j.view_mut((0, 0), (d, d)).fill_with_identity();
        for (i, h) in self.heights.iter().enumerate() {
            j.set_row(d + i, &h.gradient(z).transpose());
        }
        j
    }
}

/// `x = (R cos z¹, R sin z¹, z²)`.
#[derive(Debug, Clone)]
pub struct CylinderPatch {
    radius: f64,
    param_box: Vec<(f64, f64)>,
}

impl CylinderPatch {
    pub fn new(radius: f64, angle: (f64, f64), height: (f64, f64)) -> Result<Self, BraneError> {
        let param_box = vec![angle, height];
        validate_box(&param_box)?;
        if !(radius > 0.0) {
            return Err(BraneError::InvalidBox(format!(
                "radius {radius} must be positive"
            )));
        }
        Ok(Self { radius, param_box })
    }
}

impl Embedding for CylinderPatch {
    fn brane_dim(&self) -> usize {
        2
    }

    fn target_dim(&self) -> usize {
        3
    }

    fn param_box(&self) -> &[(f64, f64)] {
        &self.param_box
    }

    fn position_unchecked(&self, z: &DVec) -> DVec {
        DVec::from_vec(vec![
            self.radius * z[0].cos(),
            self.radius * z[0].sin(),
            z[1],
        ])
    }

    fn jacobian_unchecked(&self, z: &DVec) -> DMat {
        let r = self.radius;
        DMat::from_row_slice(3, 2, &[-r * z[0].sin(), 0.0, r * z[0].cos(), 0.0, 0.0, 1.0])
    }
}

type PositionFn = Arc<dyn Fn(&DVec) -> DVec + Send + Sync>;
type JacobianFn = Arc<dyn Fn(&DVec) -> DMat + Send + Sync>;

/// User-supplied map; without a Jacobian closure derivatives are central
/// differences.
#[derive(Clone)]
pub struct FnEmbedding {
    target_dim: usize,
    param_box: Vec<(f64, f64)>,
    position: PositionFn,
    jacobian: Option<JacobianFn>,
}

impl fmt::Debug for FnEmbedding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "FnEmbedding({:?} -> R^{})",
            self.param_box, self.target_dim
        )
    }
}

impl FnEmbedding {
    pub fn new(
        target_dim: usize,
        param_box: Vec<(f64, f64)>,
        position: impl Fn(&DVec) -> DVec + Send + Sync + 'static,
    ) -> Result<Self, BraneError> {
        validate_box(&param_box)?;
        if param_box.len() > target_dim {
            return Err(BraneError::InvalidDimension {
                brane: param_box.len(),
                target: target_dim,
            });
        }
        Ok(Self {
            target_dim,
            param_box,
            position: Arc::new(position),
            jacobian: None,
        })
    }

    pub fn with_jacobian(
        mut self,
        jacobian: impl Fn(&DVec) -> DMat + Send + Sync + 'static,
    ) -> Self {
        self.jacobian = Some(Arc::new(jacobian));
        self
    }
}

impl Embedding for FnEmbedding {
    fn brane_dim(&self) -> usize {
        self.param_box.len()
    }

    fn target_dim(&self) -> usize {
        self.target_dim
    }

    fn param_box(&self) -> &[(f64, f64)] {
        &self.param_box
    }

    fn position_unchecked(&self, z: &DVec) -> DVec {
        (self.position)(z)
    }

    fn jacobian_unchecked(&self, z: &DVec) -> DMat {
        if let Some(j) = &self.jacobian {
            return j(z);
        }
        let mut j = DMat::zeros(self.target_dim, z.len());
        for a in 0..z.len() {
            let mut zp = z.clone();
            let mut zm = z.clone();
            zp[a] += FD_STEP;
            zm[a] -= FD_STEP;
            j.set_column(
                a,
                &(((self.position)(&zp) - (self.position)(&zm)) / (2.0 * FD_STEP)),
            );
        }
        j
    }
}

/// Node values on a regular grid, multilinearly interpolated.
///
/// The derivative of the interpolant at a cell center is the cell-centered
/// difference of the corner nodes, second-order accurate there.
#[derive(Debug, Clone)]
pub struct GriddedEmbedding {
    param_box: Vec<(f64, f64)>,
    /// Points per axis.
    shape: Vec<usize>,
    target_dim: usize,
    /// Row-major over the grid, last axis fastest.
    nodes: Vec<DVec>,
}

impl GriddedEmbedding {
    pub fn new(
        param_box: Vec<(f64, f64)>,
        shape: Vec<usize>,
        nodes: Vec<DVec>,
    ) -> Result<Self, BraneError> {
        validate_box(&param_box)?;
        if shape.len() != param_box.len() || shape.iter().any(|&n| n < 2) {
            return Err(BraneError::InvalidGrid(format!(
                "shape {shape:?} needs at least 2 points on each of {} axes",
                param_box.len()
            )));
        }
        let total: usize = shape.iter().product();
        if nodes.len() != total {
            return Err(BraneError::InvalidGrid(format!(
                "expected {total} nodes, got {}",
                nodes.len()
            )));
        }
        let target_dim = nodes[0].len();
        if target_dim < param_box.len() || nodes.iter().any(|x| x.len() != target_dim) {
            return Err(BraneError::InvalidGrid(
                "inconsistent target dimension".into(),
            ));
        }
        Ok(Self {
            param_box,
            shape,
            target_dim,
            nodes,
        })
    }

    /// Samples `emb` at every node of a grid with `shape` points per axis.
    pub fn sample(emb: &dyn Embedding, shape: Vec<usize>) -> Result<Self, BraneError> {
        let param_box = emb.param_box().to_vec();
        if shape.len() != param_box.len() || shape.iter().any(|&n| n < 2) {
            return Err(BraneError::InvalidGrid(format!("bad shape {shape:?}")));
        }
        let nodes = grid_points(&shape)
            .map(|idx| {
                let z = DVec::from_iterator(
                    idx.len(),
                    idx.iter()
                        .zip(&shape)
                        .zip(&param_box)
                        .map(|((&i, &n), &(lo, hi))| lo + (hi - lo) * i as f64 / (n - 1) as f64),
                );
                emb.position_unchecked(&z)
            })
            .collect();
        Self::new(param_box, shape, nodes)
    }

    /// Rows of `D` parameter values followed by the target coordinates, in
    /// any order. A non-numeric first row is taken as a header.
    pub fn from_csv(reader: impl Read, brane_dim: usize) -> Result<Self, BraneError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(reader);
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| BraneError::Csv(e.to_string()))?;
            let parsed: Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
            match parsed {
                Ok(r) => rows.push(r),
                Err(_) if line == 0 => continue,
                Err(e) => return Err(BraneError::Csv(format!("row {}: {e}", line + 1))),
            }
        }
        let width = rows.first().map(Vec::len).unwrap_or(0);
        if width <= brane_dim || rows.iter().any(|r| r.len() != width) {
            return Err(BraneError::Csv(format!(
                "every row needs {brane_dim} parameter columns plus target coordinates"
            )));
        }
        let axes: Vec<Vec<f64>> = (0..brane_dim)
            .map(|a| {
                let mut vals: Vec<f64> = rows.iter().map(|r| r[a]).collect();
                vals.sort_by(f64::total_cmp);
                vals.dedup();
                vals
            })
            .collect();
        for (a, vals) in axes.iter().enumerate() {
            if vals.len() < 2 {
                return Err(BraneError::InvalidGrid(format!(
                    "axis {a} has a single value"
                )));
            }
            let h = (vals[vals.len() - 1] - vals[0]) / (vals.len() - 1) as f64;
            if vals
                .windows(2)
                .any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h.abs().max(1.0))
            {
                return Err(BraneError::InvalidGrid(format!(
                    "axis {a} is not evenly spaced"
                )));
            }
        }
        let shape: Vec<usize> = axes.iter().map(Vec::len).collect();
        let mut nodes: Vec<Option<DVec>> = vec![None; shape.iter().product()];
        for r in &rows {
            let mut flat = 0;
            for a in 0..brane_dim {
                let i = axes[a]
                    .binary_search_by(|v| v.total_cmp(&r[a]))
                    .expect("value present");
                flat = flat * shape[a] + i;
            }
            if nodes[flat]
                .replace(DVec::from_column_slice(&r[brane_dim..]))
                .is_some()
            {
                return Err(BraneError::InvalidGrid(format!(
                    "duplicate node at {:?}",
                    &r[..brane_dim]
                )));
            }
        }
        let nodes = nodes
            .into_iter()
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| BraneError::InvalidGrid("grid has missing nodes".into()))?;
        let param_box = axes.iter().map(|v| (v[0], v[v.len() - 1])).collect();
        Self::new(param_box, shape, nodes)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    /// Cells per axis.
    pub fn cells(&self) -> Vec<usize> {
        self.shape.iter().map(|n| n - 1).collect()
    }

    fn node(&self, idx: &[usize]) -> &DVec {
        let flat = idx
            .iter()
            .zip(&self.shape)
            .fold(0, |acc, (&i, &n)| acc * n + i);
        &self.nodes[flat]
    }

    /// Cell index and local coordinate `t ∈ [0, 1]` per axis.
    fn locate(&self, z: &DVec) -> (Vec<usize>, Vec<f64>, Vec<f64>) {
        let mut cell = Vec::with_capacity(z.len());
        let mut t = Vec::with_capacity(z.len());
        let mut h = Vec::with_capacity(z.len());
        for (a, &(lo, hi)) in self.param_box.iter().enumerate() {
            let n = self.shape[a] - 1;
            let step = (hi - lo) / n as f64;
            let s = ((z[a] - lo) / step).clamp(0.0, n as f64);
            let i = (s.floor() as usize).min(n - 1);
            cell.push(i);
            t.push(s - i as f64);
            h.push(step);
        }
        (cell, t, h)
    }

    /// Visits the `2^D` corners of a cell with their multilinear weights and
    /// weight derivatives.
    fn corners(&self, z: &DVec, mut f: impl FnMut(&DVec, f64, &[f64])) {
        let d = z.len();
        let (cell, t, h) = self.locate(z);
        let mut idx = vec![0; d];
        let mut dw = vec![0.0; d];
        for mask in 0..(1usize << d) {
            let mut w = 1.0;
            for a in 0..d {
                let hi = mask >> a & 1 == 1;
                idx[a] = cell[a] + hi as usize;
                w *= if hi { t[a] } else { 1.0 - t[a] };
            }
            for a in 0..d {
                let mut g = if mask >> a & 1 == 1 { 1.0 } else { -1.0 } / h[a];
                for b in (0..d).filter(|&b| b != a) {
                    g *= if mask >> b & 1 == 1 { t[b] } else { 1.0 - t[b] };
                }
                dw[a] = g;
            }
            f(self.node(&idx), w, &dw);
        }
    }
}

impl Embedding for GriddedEmbedding {
    fn brane_dim(&self) -> usize {
        self.param_box.len()
    }

    fn target_dim(&self) -> usize {
        self.target_dim
    }

    fn param_box(&self) -> &[(f64, f64)] {
        &self.param_box
    }

    fn position_unchecked(&self, z: &DVec) -> DVec {
        let mut x = DVec::zeros(self.target_dim);
        self.corners(z, |node, w, _| x += node * w);
        x
    }

    fn jacobian_unchecked(&self, z: &DVec) -> DMat {
        let mut j = DMat::zeros(self.target_dim, z.len());
        self.corners(z, |node, _, dw| {
            for (a, g) in dw.iter().enumerate() {
                let mut col = j.column_mut(a);
                col += node * *g;
            }
        });
        j
    }
}

/// `inner ∘ ψ` with the axis-wise warp
/// `ψ(t) = t + (ε/π) sin(πt)` on normalized box coordinates.
///
/// `|ε| < 1` keeps ψ an orientation-preserving diffeomorphism of the box.
pub struct Reparameterized<E> {
    inner: E,
    warp: Vec<f64>,
}

impl<E: Embedding> Reparameterized<E> {
    pub fn new(inner: E, warp: Vec<f64>) -> Result<Self, BraneError> {
        if warp.len() != inner.brane_dim() || warp.iter().any(|e| !(e.abs() < 1.0)) {
            return Err(BraneError::InvalidBox(format!(
                "warp {warp:?} must have |ε| < 1 per axis"
            )));
        }
        Ok(Self { inner, warp })
    }

    fn map(&self, z: &DVec) -> (DVec, DVec) {
        let pi = std::f64::consts::PI;
        let mut u = z.clone();
        let mut du = DVec::zeros(z.len());
        for (a, &(lo, hi)) in self.inner.param_box().iter().enumerate() {
            let t = (z[a] - lo) / (hi - lo);
            let e = self.warp[a];
            u[a] = lo + (hi - lo) * (t + e / pi * (pi * t).sin());
            du[a] = 1.0 + e * (pi * t).cos();
        }
        (u, du)
    }
}

impl<E: Embedding> Embedding for Reparameterized<E> {
    fn brane_dim(&self) -> usize {
        self.inner.brane_dim()
    }

    fn target_dim(&self) -> usize {
        self.inner.target_dim()
    }

    fn param_box(&self) -> &[(f64, f64)] {
        self.inner.param_box()
    }

    fn position_unchecked(&self, z: &DVec) -> DVec {
        self.inner.position_unchecked(&self.map(z).0)
    }

    fn jacobian_unchecked(&self, z: &DVec) -> DMat {
        let (u, du) = self.map(z);
        self.inner.jacobian_unchecked(&u) * DMat::from_diagonal(&du)
    }
}

/// Row-major multi-indices of a grid with `shape` points per axis.
pub fn grid_points(shape: &[usize]) -> impl Iterator<Item = Vec<usize>> + '_ {
    let total: usize = shape.iter().product();
    (0..total).map(move |mut flat| {
        let mut idx = vec![0; shape.len()];
        for a in (0..shape.len()).rev() {
            idx[a] = flat % shape[a];
            flat /= shape[a];
        }
        idx
    })
}
