//! TOML run configuration.
//!
//! Parsing happens in two passes: serde rejects unknown keys and bad types
//! (the `toml` error carries the line), then [`RunConfig::parse`] checks
//! cross-section consistency and builds the library objects. Every error
//! names the offending key.

use std::fmt;
use std::fs::File;
use std::path::{Path, PathBuf};

use homolag::brane::{BraneSpec, CylinderPatch, Embedding, GraphEmbedding, GriddedEmbedding};
use homolag::clifford::Form;
use homolag::dynamics::GaugeChoice;
use homolag::geometry::MetricField;
use homolag::lagrangian::{
    LagrangianSpec, SymmetricTensor, SymmetricTensorField, VectorPotentialField,
};
use homolag::{DMat, DVec, ScalarProfile};
use serde::{Deserialize, Serialize};
use toml::Spanned;

use crate::Subcommand;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub key: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "`{}` (line {line}): {}", self.key, self.message),
            None => write!(f, "`{}`: {}", self.key, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Raw {
    seed: Option<u64>,
    metric: Option<Spanned<RawMetric>>,
    particle: Option<Spanned<RawParticle>>,
    potential: Option<Spanned<RawPotential>>,
    #[serde(default)]
    extra: Vec<Spanned<RawExtra>>,
    signature: Option<RawSignature>,
    check: Option<RawCheck>,
    simulate: Option<Spanned<RawSimulate>>,
    extremize: Option<Spanned<RawExtremize>>,
    brane: Option<Spanned<RawBrane>>,
    clifford: Option<RawClifford>,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
enum MetricKindName {
    Minkowski,
    Euclidean,
    Diagonal,
    Matrix,
    WeakField,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMetric {
    kind: MetricKindName,
    dim: Option<usize>,
    entries: Option<Vec<f64>>,
    rows: Option<Vec<Vec<f64>>>,
    profile: Option<ScalarProfile>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParticle {
    mass: f64,
    #[serde(default)]
    charge: f64,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
enum PotentialKindName {
    Zero,
    Constant,
    UniformMagnetic,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPotential {
    kind: PotentialKindName,
    components: Option<Spanned<Vec<f64>>>,
    field: Option<f64>,
    plane: Option<[usize; 2]>,
    gauge: Option<ScalarProfile>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEntry {
    index: Vec<usize>,
    value: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExtra {
    rank: usize,
    coupling: f64,
    entries: Vec<Spanned<RawEntry>>,
    modulation: Option<ScalarProfile>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSignature {
    at: Option<Spanned<Vec<f64>>>,
    tolerance: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCheck {
    samples: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSimulate {
    gauge: GaugeChoice,
    x0: Spanned<Vec<f64>>,
    v0: Spanned<Vec<f64>>,
    tau_end: f64,
    step: f64,
    stride: Option<usize>,
    circle_plane: Option<[usize; 2]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExtremize {
    start: Spanned<Vec<f64>>,
    end: Spanned<Vec<f64>>,
    interior: usize,
    perturbation: Option<f64>,
    max_iters: Option<usize>,
    grad_tol: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawEmbedding {
    TiltedPlane {
        slope: f64,
    },
    Graph {
        #[serde(rename = "box")]
        param_box: Vec<[f64; 2]>,
        heights: Vec<ScalarProfile>,
    },
    Cylinder {
        radius: f64,
        angle: [f64; 2],
        height: [f64; 2],
    },
    Gridded {
        path: PathBuf,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBrane {
    dim: usize,
    tension: f64,
    cells: Spanned<Vec<usize>>,
    embedding: Spanned<RawEmbedding>,
    charge: Option<f64>,
    potential: Option<Spanned<Vec<f64>>>,
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum AlgebraName {
    Lorentz,
    So3,
    Abelian,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawClifford {
    algebra: AlgebraName,
    form: Form,
    perturbation: Option<f64>,
    perturbed_index: Option<usize>,
    determinant_samples: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct SignatureConfig {
    pub at: DVec,
    pub tolerance: f64,
}

#[derive(Debug, Clone)]
pub struct SimulateConfig {
    pub gauge: GaugeChoice,
    pub x0: DVec,
    pub v0: DVec,
    pub tau_end: f64,
    pub step: f64,
    /// Every `stride`-th sample goes to the CSV.
    pub stride: usize,
    pub circle_plane: Option<(usize, usize)>,
}

#[derive(Debug, Clone)]
pub struct ExtremizeConfig {
    pub start: DVec,
    pub end: DVec,
    pub interior: usize,
    /// Uniform lateral offsets of this size on the initial straight path.
    pub perturbation: f64,
    pub max_iters: usize,
    pub grad_tol: f64,
}

pub struct BraneConfig {
    pub spec: BraneSpec,
    pub embedding: Box<dyn Embedding>,
    pub cells: Vec<usize>,
}

impl fmt::Debug for BraneConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BraneConfig")
            .field("spec", &self.spec)
            .field("cells", &self.cells)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone)]
pub struct CliffordConfig {
    pub algebra: AlgebraName,
    pub form: Form,
    pub perturbation: f64,
    pub perturbed_index: usize,
    pub determinant_samples: usize,
}

/// A validated configuration; each subcommand reads the sections it needs.
#[derive(Debug)]
pub struct RunConfig {
    pub seed: u64,
    pub metric: Option<MetricField>,
    pub spec: Option<LagrangianSpec>,
    pub signature: SignatureConfig,
    pub check_samples: usize,
    pub simulate: Option<SimulateConfig>,
    pub extremize: Option<ExtremizeConfig>,
    pub brane: Option<BraneConfig>,
    pub clifford: Option<CliffordConfig>,
    /// Non-fatal normalizations applied while parsing.
    pub warnings: Vec<String>,
}

/// 1-based line of a byte offset.
fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

struct Ctx<'a> {
    text: &'a str,
}

impl Ctx<'_> {
    fn err<T>(
        &self,
        key: &str,
        span: Option<std::ops::Range<usize>>,
        message: impl Into<String>,
    ) -> Result<T, ConfigError> {
        Err(ConfigError {
            key: key.to_string(),
            line: span.map(|s| line_of(self.text, s.start)),
            message: message.into(),
        })
    }

    fn line(&self, span: std::ops::Range<usize>) -> usize {
        line_of(self.text, span.start)
    }

    /// Rejects a vector whose length differs from the metric dimension,
    /// naming both keys.
    fn check_dim(
        &self,
        key: &str,
        v: &Spanned<Vec<f64>>,
        metric: &Spanned<RawMetric>,
        dim: usize,
    ) -> Result<DVec, ConfigError> {
        if v.get_ref().len() != dim {
            return self.err(
                key,
                Some(v.span()),
                format!(
                    "dimension mismatch: `{key}` has {} components but `metric` (line {}) has dimension {dim}",
                    v.get_ref().len(),
                    self.line(metric.span())
                ),
            );
        }
        Ok(DVec::from_column_slice(v.get_ref()))
    }

    fn require<T>(&self, key: &str, section: Option<T>) -> Result<T, ConfigError> {
        section.ok_or_else(|| ConfigError {
            key: key.to_string(),
            line: None,
            message: format!("missing required section [{key}]"),
        })
    }
}

fn unused(
    ctx: &Ctx,
    key: &str,
    present: bool,
    span: std::ops::Range<usize>,
    kind: &str,
) -> Result<(), ConfigError> {
    if present {
        return ctx.err(key, Some(span), format!("not used by kind `{kind}`"));
    }
    Ok(())
}

fn build_metric(ctx: &Ctx, m: &Spanned<RawMetric>) -> Result<MetricField, ConfigError> {
    let span = m.span();
    let raw = m.get_ref();
    let kind = format!("{:?}", raw.kind).to_lowercase();
    let need_dim = |ctx: &Ctx| match raw.dim {
        Some(d) if d > 0 => Ok(d),
        Some(_) => ctx.err("metric.dim", Some(span.clone()), "must be positive"),
        None => ctx.err(
            "metric.dim",
            Some(span.clone()),
            format!("required by kind `{kind}`"),
        ),
    };
    let bad = |e: homolag::geometry::GeometryError, key: &str| ConfigError {
        key: key.to_string(),
        line: Some(ctx.line(span.clone())),
        message: e.to_string(),
    };
    match raw.kind {
        MetricKindName::Minkowski | MetricKindName::Euclidean => {
            unused(
                ctx,
                "metric.entries",
                raw.entries.is_some(),
                span.clone(),
                &kind,
            )?;
            unused(ctx, "metric.rows", raw.rows.is_some(), span.clone(), &kind)?;
            unused(
                ctx,
                "metric.profile",
                raw.profile.is_some(),
                span.clone(),
                &kind,
            )?;
            let d = need_dim(ctx)?;
            Ok(if raw.kind == MetricKindName::Minkowski {
                MetricField::minkowski(d)
            } else {
                MetricField::euclidean(d)
            })
        }
        MetricKindName::Diagonal => {
            unused(ctx, "metric.rows", raw.rows.is_some(), span.clone(), &kind)?;
            unused(
                ctx,
                "metric.profile",
                raw.profile.is_some(),
                span.clone(),
                &kind,
            )?;
            let entries = match &raw.entries {
                Some(e) if !e.is_empty() => e,
                _ => {
                    return ctx.err(
                        "metric.entries",
                        Some(span),
                        "kind `diagonal` needs a nonempty list",
                    )
                }
            };
            if let Some(d) = raw.dim {
                if d != entries.len() {
                    return ctx.err(
                        "metric.dim",
                        Some(span),
                        format!(
                            "dimension mismatch: `metric.dim` = {d} but `metric.entries` has {}",
                            entries.len()
                        ),
                    );
                }
            }
            MetricField::diagonal(entries).map_err(|e| bad(e, "metric.entries"))
        }
        MetricKindName::Matrix => {
            unused(
                ctx,
                "metric.entries",
                raw.entries.is_some(),
                span.clone(),
                &kind,
            )?;
            unused(
                ctx,
                "metric.profile",
                raw.profile.is_some(),
                span.clone(),
                &kind,
            )?;
            let rows = match &raw.rows {
                Some(r) if !r.is_empty() => r,
                _ => {
                    return ctx.err(
                        "metric.rows",
                        Some(span),
                        "kind `matrix` needs a nonempty list of rows",
                    )
                }
            };
            let n = rows.len();
            if let Some(i) = rows.iter().position(|r| r.len() != n) {
                return ctx.err(
                    "metric.rows",
                    Some(span),
                    format!("row {i} has {} entries, expected {n}", rows[i].len()),
                );
            }
            let g = DMat::from_fn(n, n, |i, j| rows[i][j]);
            MetricField::constant(g).map_err(|e| bad(e, "metric.rows"))
        }
        MetricKindName::WeakField => {
            unused(
                ctx,
                "metric.entries",
                raw.entries.is_some(),
                span.clone(),
                &kind,
            )?;
            unused(ctx, "metric.rows", raw.rows.is_some(), span.clone(), &kind)?;
            let Some(p) = &raw.profile else {
                return ctx.err(
                    "metric.profile",
                    Some(span),
                    "kind `weak_field` needs a profile",
                );
            };
            if let Some(d) = raw.dim {
                if d != p.dim() {
                    return ctx.err(
                        "metric.dim",
                        Some(span),
                        format!("dimension mismatch: `metric.dim` = {d} but `metric.profile` has dimension {}", p.dim()),
                    );
                }
            }
            Ok(MetricField::weak_field(p.clone()))
        }
    }
}

fn check_profile(
    ctx: &Ctx,
    key: &str,
    p: &ScalarProfile,
    span: std::ops::Range<usize>,
    dim: usize,
) -> Result<(), ConfigError> {
    if p.dim() != dim {
        return ctx.err(
            key,
            Some(span),
            format!(
                "dimension mismatch: `{key}` has dimension {} but `metric` has dimension {dim}",
                p.dim()
            ),
        );
    }
    Ok(())
}

fn build_potential(
    ctx: &Ctx,
    p: &Spanned<RawPotential>,
    metric: &Spanned<RawMetric>,
    dim: usize,
) -> Result<VectorPotentialField, ConfigError> {
    let span = p.span();
    let raw = p.get_ref();
    let kind = format!("{:?}", raw.kind);
    let base = match raw.kind {
        PotentialKindName::Zero => {
            unused(
                ctx,
                "potential.components",
                raw.components.is_some(),
                span.clone(),
                &kind,
            )?;
            unused(
                ctx,
                "potential.field",
                raw.field.is_some(),
                span.clone(),
                &kind,
            )?;
            unused(
                ctx,
                "potential.plane",
                raw.plane.is_some(),
                span.clone(),
                &kind,
            )?;
            VectorPotentialField::Zero { dim }
        }
        PotentialKindName::Constant => {
            unused(
                ctx,
                "potential.field",
                raw.field.is_some(),
                span.clone(),
                &kind,
            )?;
            unused(
                ctx,
                "potential.plane",
                raw.plane.is_some(),
                span.clone(),
                &kind,
            )?;
            let Some(c) = &raw.components else {
                return ctx.err(
                    "potential.components",
                    Some(span),
                    "kind `constant` needs components",
                );
            };
            VectorPotentialField::Constant(ctx.check_dim("potential.components", c, metric, dim)?)
        }
        PotentialKindName::UniformMagnetic => {
            unused(
                ctx,
                "potential.components",
                raw.components.is_some(),
                span.clone(),
                &kind,
            )?;
            let (Some(field), Some([i, j])) = (raw.field, raw.plane) else {
                return ctx.err(
                    "potential",
                    Some(span),
                    "kind `uniform_magnetic` needs `field` and `plane`",
                );
            };
            if i == j || i.max(j) >= dim {
                return ctx.err(
                    "potential.plane",
                    Some(span),
                    format!("plane [{i}, {j}] needs two distinct indices below the metric dimension {dim}"),
                );
            }
            VectorPotentialField::UniformMagnetic {
                dim,
                field,
                plane: (i, j),
            }
        }
    };
    Ok(match &raw.gauge {
        Some(g) => {
            check_profile(ctx, "potential.gauge", g, span, dim)?;
            base.gauge_shifted(g.clone())
        }
        None => base,
    })
}

fn build_extra(
    ctx: &Ctx,
    k: usize,
    e: &Spanned<RawExtra>,
    dim: usize,
    warnings: &mut Vec<String>,
) -> Result<SymmetricTensorField, ConfigError> {
    let raw = e.get_ref();
    let key = format!("extra[{k}]");
    if raw.rank < 3 {
        return ctx.err(
            &format!("{key}.rank"),
            Some(e.span()),
            format!("rank {} must be at least 3", raw.rank),
        );
    }
    let mut tensor = SymmetricTensor::new(raw.rank, dim);
    let mut seen = std::collections::BTreeMap::new();
    for (i, entry) in raw.entries.iter().enumerate() {
        let ekey = format!("{key}.entries[{i}].index");
        let idx = &entry.get_ref().index;
        let mut sorted = idx.clone();
        sorted.sort_unstable();
        if let Some(prev) = seen.insert(sorted.clone(), i) {
            return ctx.err(
                &ekey,
                Some(entry.span()),
                format!(
                    "index {idx:?} repeats `{key}.entries[{prev}]` after sorting to {sorted:?}"
                ),
            );
        }
        match tensor.set(idx, entry.get_ref().value) {
            Ok(true) => warnings.push(format!(
                "`{ekey}` (line {}): index {idx:?} normalized to {sorted:?}",
                ctx.line(entry.span())
            )),
            Ok(false) => {}
            Err(err) => return ctx.err(&ekey, Some(entry.span()), err.to_string()),
        }
    }
    Ok(match &raw.modulation {
        Some(p) => {
            check_profile(ctx, &format!("{key}.modulation"), p, e.span(), dim)?;
            SymmetricTensorField::modulated(tensor, p.clone())
        }
        None => SymmetricTensorField::constant(tensor),
    })
}

fn build_spec(
    ctx: &Ctx,
    raw: &Raw,
    metric: &Spanned<RawMetric>,
    field: MetricField,
    warnings: &mut Vec<String>,
) -> Result<Option<LagrangianSpec>, ConfigError> {
    let dim = field.dim();
    let Some(particle) = &raw.particle else {
        if let Some(p) = &raw.potential {
            return ctx.err("potential", Some(p.span()), "needs a [particle] section");
        }
        if let Some(e) = raw.extra.first() {
            return ctx.err("extra", Some(e.span()), "needs a [particle] section");
        }
        return Ok(None);
    };
    let pspan = particle.span();
    let particle = particle.get_ref();
    let potential = match &raw.potential {
        Some(p) => build_potential(ctx, p, metric, dim)?,
        None => VectorPotentialField::Zero { dim },
    };
    let mut spec = LagrangianSpec::new(field, particle.charge, potential, particle.mass)
        .or_else(|e| ctx.err("particle.mass", Some(pspan), e.to_string()))?;
    for (k, e) in raw.extra.iter().enumerate() {
        let tensor = build_extra(ctx, k, e, dim, warnings)?;
        spec = spec
            .with_extra(e.get_ref().coupling, tensor)
            .or_else(|err| ctx.err(&format!("extra[{k}].rank"), Some(e.span()), err.to_string()))?;
    }
    Ok(Some(spec))
}

fn pair(a: [f64; 2]) -> (f64, f64) {
    (a[0], a[1])
}

fn build_brane(
    ctx: &Ctx,
    b: &Spanned<RawBrane>,
    metric: Option<(&Spanned<RawMetric>, &MetricField)>,
    base_dir: &Path,
) -> Result<BraneConfig, ConfigError> {
    let raw = b.get_ref();
    let (mspan, field) = ctx.require("metric", metric)?;
    let espan = raw.embedding.span();
    let emb_err = |e: homolag::brane::BraneError| ConfigError {
        key: "brane.embedding".into(),
        line: Some(ctx.line(espan.clone())),
        message: e.to_string(),
    };
    let embedding: Box<dyn Embedding> = match raw.embedding.get_ref() {
        RawEmbedding::TiltedPlane { slope } => Box::new(GraphEmbedding::tilted_plane(*slope)),
        RawEmbedding::Graph { param_box, heights } => Box::new(
            GraphEmbedding::new(
                param_box.iter().copied().map(pair).collect(),
                heights.clone(),
            )
            .map_err(emb_err)?,
        ),
        RawEmbedding::Cylinder {
            radius,
            angle,
            height,
        } => Box::new(CylinderPatch::new(*radius, pair(*angle), pair(*height)).map_err(emb_err)?),
        RawEmbedding::Gridded { path } => {
            let full = base_dir.join(path);
            let file = File::open(&full).or_else(|e| {
                ctx.err(
                    "brane.embedding.path",
                    Some(espan.clone()),
                    format!("{}: {e}", full.display()),
                )
            })?;
            Box::new(GriddedEmbedding::from_csv(file, raw.dim).map_err(emb_err)?)
        }
    };
    if embedding.brane_dim() != raw.dim {
        return ctx.err(
            "brane.dim",
            Some(b.span()),
            format!(
                "dimension mismatch: `brane.dim` = {} but `brane.embedding` (line {}) has {} parameters",
                raw.dim,
                ctx.line(espan),
                embedding.brane_dim()
            ),
        );
    }
    if embedding.target_dim() != field.dim() {
        return ctx.err(
            "brane.embedding",
            Some(espan),
            format!(
                "dimension mismatch: `brane.embedding` lands in {} dimensions but `metric` (line {}) has dimension {}",
                embedding.target_dim(),
                ctx.line(mspan.span()),
                field.dim()
            ),
        );
    }
    let cells = raw.cells.get_ref().clone();
    if cells.len() != raw.dim || cells.contains(&0) {
        return ctx.err(
            "brane.cells",
            Some(raw.cells.span()),
            format!("need {} positive cell counts, got {cells:?}", raw.dim),
        );
    }
    let mut spec = BraneSpec::new(raw.dim, field.clone(), raw.tension)
        .or_else(|e| ctx.err("brane.tension", Some(b.span()), e.to_string()))?;
    if let Some(a) = &raw.potential {
        let c = spec.components();
        if a.get_ref().len() != c {
            return ctx.err(
                "brane.potential",
                Some(a.span()),
                format!(
                    "needs {c} components, one per generalized-velocity component, got {}",
                    a.get_ref().len()
                ),
            );
        }
        spec = spec
            .with_potential(
                raw.charge.unwrap_or(1.0),
                VectorPotentialField::Constant(DVec::from_column_slice(a.get_ref())),
            )
            .or_else(|e| ctx.err("brane.potential", Some(a.span()), e.to_string()))?;
    } else if raw.charge.is_some() {
        return ctx.err("brane.charge", Some(b.span()), "needs `brane.potential`");
    }
    Ok(BraneConfig {
        spec,
        embedding,
        cells,
    })
}

impl RunConfig {
    /// Parses and validates `text`; relative paths resolve against `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, ConfigError> {
        let raw: Raw = toml::from_str(text).map_err(|e| ConfigError {
            key: parse_error_key(&e),
            line: e.span().map(|s| line_of(text, s.start)),
            message: e.message().to_string(),
        })?;
        let ctx = Ctx { text };
        let mut warnings = Vec::new();

        let metric = match &raw.metric {
            Some(m) => Some((m, build_metric(&ctx, m)?)),
            None => None,
        };
        let spec = match &metric {
            Some((m, field)) => build_spec(&ctx, &raw, m, field.clone(), &mut warnings)?,
            None => {
                if raw.particle.is_some() {
                    return ctx.err(
                        "particle",
                        raw.particle.as_ref().map(|p| p.span()),
                        "needs a [metric] section",
                    );
                }
                None
            }
        };
        let dim = metric.as_ref().map(|(_, f)| f.dim());

        let sig = raw.signature.unwrap_or_default();
        let at = match (&sig.at, &metric) {
            (Some(at), Some((m, f))) => ctx.check_dim("signature.at", at, m, f.dim())?,
            _ => DVec::zeros(dim.unwrap_or(0)),
        };
        let signature = SignatureConfig {
            at,
            tolerance: sig
                .tolerance
                .unwrap_or(homolag::geometry::DEFAULT_EIGEN_TOL),
        };

        let simulate = match &raw.simulate {
            Some(s) => {
                let (m, f) = ctx.require("metric", metric.as_ref())?;
                let r = s.get_ref();
                if let Some([i, j]) = r.circle_plane {
                    if i == j || i.max(j) >= f.dim() {
                        return ctx.err(
                            "simulate.circle_plane",
                            Some(s.span()),
                            format!("[{i}, {j}] is not a coordinate plane"),
                        );
                    }
                }
                Some(SimulateConfig {
                    gauge: r.gauge,
                    x0: ctx.check_dim("simulate.x0", &r.x0, m, f.dim())?,
                    v0: ctx.check_dim("simulate.v0", &r.v0, m, f.dim())?,
                    tau_end: r.tau_end,
                    step: r.step,
                    stride: r.stride.unwrap_or(1).max(1),
                    circle_plane: r.circle_plane.map(|[i, j]| (i, j)),
                })
            }
            None => None,
        };

        let extremize = match &raw.extremize {
            Some(s) => {
                let (m, f) = ctx.require("metric", metric.as_ref())?;
                let r = s.get_ref();
                if r.interior == 0 {
                    return ctx.err(
                        "extremize.interior",
                        Some(s.span()),
                        "needs at least one interior point",
                    );
                }
                let defaults = homolag::action::ExtremizeOptions::default();
                Some(ExtremizeConfig {
                    start: ctx.check_dim("extremize.start", &r.start, m, f.dim())?,
                    end: ctx.check_dim("extremize.end", &r.end, m, f.dim())?,
                    interior: r.interior,
                    perturbation: r.perturbation.unwrap_or(0.0),
                    max_iters: r.max_iters.unwrap_or(defaults.max_iters),
                    grad_tol: r.grad_tol.unwrap_or(defaults.grad_tol),
                })
            }
            None => None,
        };

        let brane = match &raw.brane {
            Some(b) => Some(build_brane(
                &ctx,
                b,
                metric.as_ref().map(|(m, f)| (*m, f)),
                base_dir,
            )?),
            None => None,
        };

        let clifford = raw.clifford.map(|c| CliffordConfig {
            algebra: c.algebra,
            form: c.form,
            perturbation: c.perturbation.unwrap_or(0.0),
            perturbed_index: c.perturbed_index.unwrap_or(1),
            determinant_samples: c.determinant_samples.unwrap_or(1000),
        });

        Ok(Self {
            seed: raw.seed.unwrap_or(0),
            metric: metric.map(|(_, f)| f),
            spec,
            signature,
            check_samples: raw
                .check
                .and_then(|c| c.samples)
                .unwrap_or(homolag::sweep::DEFAULT_SAMPLES),
            simulate,
            extremize,
            brane,
            clifford,
            warnings,
        })
    }

    /// Fails unless the sections `sub` reads are present.
    pub fn require(&self, sub: Subcommand) -> Result<(), ConfigError> {
        let missing = |key: &str| ConfigError {
            key: key.to_string(),
            line: None,
            message: format!("missing required section [{key}] for `{}`", sub.name()),
        };
        match sub {
            Subcommand::Check => Ok(()),
            Subcommand::Signature => self
                .metric
                .as_ref()
                .map(|_| ())
                .ok_or_else(|| missing("metric")),
            Subcommand::Simulate | Subcommand::Extremize => {
                self.metric.as_ref().ok_or_else(|| missing("metric"))?;
                self.spec.as_ref().ok_or_else(|| missing("particle"))?;
                if sub == Subcommand::Simulate {
                    self.simulate
                        .as_ref()
                        .map(|_| ())
                        .ok_or_else(|| missing("simulate"))
                } else {
                    self.extremize
                        .as_ref()
                        .map(|_| ())
                        .ok_or_else(|| missing("extremize"))
                }
            }
            Subcommand::Brane => self
                .brane
                .as_ref()
                .map(|_| ())
                .ok_or_else(|| missing("brane")),
            Subcommand::Clifford => self
                .clifford
                .as_ref()
                .map(|_| ())
                .ok_or_else(|| missing("clifford")),
        }
    }
}

/// The key named by a serde error such as "unknown field `foo`", or the
/// innermost table the error points into.
fn parse_error_key(e: &toml::de::Error) -> String {
    let msg = e.message();
    msg.split('`')
        .nth(1)
        .map(str::to_string)
        .unwrap_or_else(|| "<document>".to_string())
}
