//! One function per subcommand: validated config in, report payload and
//! CSV artifacts out.

use homolag::action::{extremize, DiscretePath, ExtremizeOptions};
use homolag::brane::{brane_action, component_count, integral_gauge_check, BraneError};
use homolag::clifford::{
    mass_shell_determinant_residual, mass_term_trace_identity, rund_solve, vector_covariance_check,
    verify_lie_closure, Form, GammaSet, LieAlgebraSpec,
};
use homolag::dynamics::{conserved_drift, fit_circle, integrate, GaugeChoice};
use homolag::geometry::{classify_metric, spatial_speed_sq, SignatureReport};
use homolag::sweep::{run_all, PropertyResult};
use homolag::DVec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{AlgebraName, RunConfig};
use crate::output::csv_table;

/// A payload plus CSV artifacts `(suffix, contents)`.
pub struct Artifacts<T> {
    pub payload: T,
    pub tables: Vec<(&'static str, String)>,
    /// Whether the run met its own acceptance bar; only `check` can fail it.
    pub ok: bool,
}

fn only<T>(payload: T) -> Artifacts<T> {
    Artifacts {
        payload,
        tables: Vec::new(),
        ok: true,
    }
}

#[derive(Debug, Serialize)]
pub struct SignaturePayload {
    pub class: &'static str,
    pub signature: SignatureReport,
    pub eigenvalues: Vec<f64>,
    /// In the normalized diagonal frame, time slots first.
    pub witness: Option<Vec<f64>>,
    pub witness_coordinates: Option<Vec<f64>>,
    /// `g(w, w)` evaluated in the original coordinates.
    pub witness_norm: Option<f64>,
    pub witness_spatial_speed: Option<f64>,
}

pub fn signature(cfg: &RunConfig) -> Result<Artifacts<SignaturePayload>, String> {
    let metric = cfg.metric.as_ref().expect("required section");
    let g = metric.eval(&cfg.signature.at);
    let report = classify_metric(&g, cfg.signature.tolerance).map_err(|e| e.to_string())?;
    let witness_norm = report.witness_coordinates.as_ref().map(|w| {
        let w = DVec::from_column_slice(w);
        w.dot(&(&g * &w))
    });
    let witness_spatial_speed = report
        .class
        .witness()
        .map(|w| spatial_speed_sq(w, report.signature.n_plus).sqrt());
    Ok(only(SignaturePayload {
        class: report.class.name(),
        signature: report.signature,
        eigenvalues: report.eigenvalues.clone(),
        witness: report.class.witness().map(<[f64]>::to_vec),
        witness_coordinates: report.witness_coordinates.clone(),
        witness_norm,
        witness_spatial_speed,
    }))
}

#[derive(Debug, Serialize)]
pub struct CheckPayload {
    pub properties: Vec<PropertyResult>,
    pub pass: bool,
}

pub fn check(cfg: &RunConfig) -> Artifacts<CheckPayload> {
    let properties = run_all(cfg.seed, cfg.check_samples);
    let pass = properties.iter().all(|p| p.pass);
    Artifacts {
        payload: CheckPayload { properties, pass },
        tables: Vec::new(),
        ok: pass,
    }
}

#[derive(Debug, Serialize)]
pub struct Circle {
    pub center: [f64; 2],
    pub radius: f64,
}

#[derive(Debug, Serialize)]
pub struct SimulatePayload {
    pub gauge: GaugeChoice,
    pub steps: usize,
    pub tau_end: f64,
    pub final_x: Vec<f64>,
    pub final_v: Vec<f64>,
    pub max_mass_shell_residual: f64,
    pub circle: Option<Circle>,
}

pub fn simulate(cfg: &RunConfig) -> Result<Artifacts<SimulatePayload>, String> {
    let spec = cfg.spec.as_ref().expect("required section");
    let s = cfg.simulate.as_ref().expect("required section");
    let wl =
        integrate(spec, s.gauge, &s.x0, &s.v0, s.tau_end, s.step).map_err(|e| e.to_string())?;
    let drift = conserved_drift(&wl, spec).map_err(|e| e.to_string())?;
    let circle = s.circle_plane.map(|(i, j)| {
        let pts: Vec<(f64, f64)> = wl.samples.iter().map(|p| (p.x[i], p.x[j])).collect();
        let (cx, cy, radius) = fit_circle(&pts);
        Circle {
            center: [cx, cy],
            radius,
        }
    });
    let n = spec.dim();
    let mut header = vec!["tau".to_string()];
    header.extend((0..n).map(|a| format!("x{a}")));
    header.extend((0..n).map(|a| format!("v{a}")));
    header.push("mass_shell_residual".into());
    let last = wl.samples.len() - 1;
    let rows = wl
        .samples
        .iter()
        .enumerate()
        .filter(|(k, _)| k % s.stride == 0 || *k == last)
        .map(|(_, p)| {
            let mut row = vec![p.tau];
            row.extend(p.x.iter());
            row.extend(p.v.iter());
            row.push(p.mass_shell);
            row
        });
    let table = csv_table(&header, rows);
    let end = wl.last();
    Ok(Artifacts {
        payload: SimulatePayload {
            gauge: s.gauge,
            steps: last,
            tau_end: end.tau,
            final_x: end.x.as_slice().to_vec(),
            final_v: end.v.as_slice().to_vec(),
            max_mass_shell_residual: drift,
            circle,
        },
        tables: vec![("trajectory.csv", table)],
        ok: true,
    })
}

#[derive(Debug, Serialize)]
pub struct ExtremizePayload {
    pub action: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub degenerate_modes: usize,
    pub interior_points: usize,
}

pub fn extremize_path(cfg: &RunConfig) -> Result<Artifacts<ExtremizePayload>, String> {
    let spec = cfg.spec.as_ref().expect("required section");
    let e = cfg.extremize.as_ref().expect("required section");
    let straight = DiscretePath::straight(e.start.clone(), e.end.clone(), e.interior)
        .map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let amp = e.perturbation;
    let path0 = if amp > 0.0 {
        straight.perturbed(|_| DVec::from_fn(spec.dim(), |_, _| rng.gen_range(-amp..amp)))
    } else {
        straight
    };
    let opts = ExtremizeOptions {
        max_iters: e.max_iters,
        grad_tol: e.grad_tol,
    };
    let report = extremize(spec, &path0, opts).map_err(|e| e.to_string())?;
    let n = spec.dim();
    let mut header = vec!["index".to_string()];
    header.extend((0..n).map(|a| format!("x{a}")));
    let rows = report.path.points().into_iter().enumerate().map(|(k, p)| {
        let mut row = vec![k as f64];
        row.extend(p.iter());
        row
    });
    let table = csv_table(&header, rows);
    Ok(Artifacts {
        payload: ExtremizePayload {
            action: report.action,
            grad_norm: report.grad_norm,
            iterations: report.iterations,
            degenerate_modes: report.degenerate_modes,
            interior_points: e.interior,
        },
        tables: vec![("path.csv", table)],
        ok: true,
    })
}

#[derive(Debug, Serialize)]
pub struct BranePayload {
    pub action: f64,
    pub component_count: usize,
    /// `max |ω^{(1…D)} − 1|`; absent when the first coordinates cannot
    /// label the brane.
    pub gauge_deviation: Option<f64>,
    pub gauge_note: Option<String>,
    pub cells: Vec<usize>,
}

pub fn brane(cfg: &RunConfig) -> Result<Artifacts<BranePayload>, String> {
    let b = cfg.brane.as_ref().expect("required section");
    let action =
        brane_action(&b.spec, b.embedding.as_ref(), &b.cells).map_err(|e| e.to_string())?;
    let (gauge_deviation, gauge_note) = match integral_gauge_check(b.embedding.as_ref(), &b.cells) {
        Ok(d) => (Some(d), None),
        Err(e @ BraneError::LabelingUnavailable { .. }) => (None, Some(e.to_string())),
        Err(e) => return Err(e.to_string()),
    };
    Ok(only(BranePayload {
        action,
        component_count: component_count(b.spec.target_dim(), b.spec.brane_dim())
            .map_err(|e| e.to_string())?,
        gauge_deviation,
        gauge_note,
        cells: b.cells.clone(),
    }))
}

#[derive(Debug, Serialize)]
pub struct DeterminantCheck {
    pub samples: usize,
    /// `max |det(γ·π − m) − (π² − m²)²| / max(1, (π² − m²)²)`.
    pub max_relative_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Serialize)]
pub struct CliffordPayload {
    pub algebra: AlgebraName,
    pub form: Form,
    pub perturbation: f64,
    pub anticommutator_residual: f64,
    pub trace_identity_residual: f64,
    pub residuals: Vec<f64>,
    pub kernel_dims: Vec<usize>,
    pub feasible: bool,
    pub closure_residual: f64,
    pub covariance_residual: f64,
    pub determinant_check: DeterminantCheck,
}

const DETERMINANT_TOL: f64 = 1e-9;

pub fn clifford(cfg: &RunConfig) -> Result<Artifacts<CliffordPayload>, String> {
    let c = cfg.clifford.as_ref().expect("required section");
    let h = c.form.matrix(4);
    let alg = match c.algebra {
        AlgebraName::Lorentz => LieAlgebraSpec::rotations(&h, &LieAlgebraSpec::all_pairs(4)),
        AlgebraName::So3 => LieAlgebraSpec::rotations(&h, &[(1, 2), (1, 3), (2, 3)]),
        AlgebraName::Abelian => Ok(LieAlgebraSpec::abelian(4)),
    }
    .map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let exact = GammaSet::dirac(c.form);
    let gam = if c.perturbation > 0.0 {
        exact
            .perturbed(c.perturbed_index, c.perturbation, &mut rng)
            .map_err(|e| e.to_string())?
    } else {
        exact
    };
    let sol = rund_solve(&alg, &gam).map_err(|e| e.to_string())?;
    let trace_identity_residual = mass_term_trace_identity(&gam, &h).map_err(|e| e.to_string())?;

    let zero = DVec::zeros(4);
    let mut worst: f64 = 0.0;
    for _ in 0..c.determinant_samples {
        let pi = DVec::from_fn(4, |_, _| rng.gen_range(-3.0..3.0));
        let m = rng.gen_range(0.0..2.0);
        let expected = (pi.dot(&(&h * &pi)) - m * m).powi(2);
        let r =
            mass_shell_determinant_residual(0.0, m, &zero, &pi, &gam).map_err(|e| e.to_string())?;
        worst = worst.max(r / expected.max(1.0));
    }
    let determinant_check = DeterminantCheck {
        samples: c.determinant_samples,
        max_relative_residual: worst,
        tolerance: DETERMINANT_TOL,
        pass: worst <= DETERMINANT_TOL,
    };
    Ok(only(CliffordPayload {
        algebra: c.algebra,
        form: c.form,
        perturbation: c.perturbation,
        anticommutator_residual: gam.anticommutator_residual(),
        trace_identity_residual,
        closure_residual: verify_lie_closure(&sol, &alg),
        covariance_residual: vector_covariance_check(&sol, &alg, &gam),
        residuals: sol.residuals,
        kernel_dims: sol.kernel_dims,
        feasible: sol.feasible,
        determinant_check,
    }))
}
