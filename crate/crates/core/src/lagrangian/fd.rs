//! Central finite differences of [`LagrangianSpec::eval`].
//!
//! This path never touches the closed-form derivative code, which makes it a
//! usable cross-check for it.

use crate::DVec;

use super::{LagrangianError, LagrangianSpec};

pub const DEFAULT_STEP: f64 = 1e-5;

/// How momenta are obtained when checking identities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DerivativeMode {
    Analytic,
    FiniteDifference { step: f64 },
}

/// `∂L/∂v` by central differences with step `h·max(1, |v|∞)`.
pub fn momentum(
    spec: &LagrangianSpec,
    x: &DVec,
    v: &DVec,
    step: f64,
) -> Result<DVec, LagrangianError> {
    let h = step * v.amax().max(1.0);
    let mut p = DVec::zeros(v.len());
    for a in 0..v.len() {
        let mut vp = v.clone();
        let mut vm = v.clone();
        vp[a] += h;
        vm[a] -= h;
        p[a] = (spec.eval(x, &vp)? - spec.eval(x, &vm)?) / (2.0 * h);
    }
    Ok(p)
}

/// `∂L/∂x` by central differences.
pub fn force(
    spec: &LagrangianSpec,
    x: &DVec,
    v: &DVec,
    step: f64,
) -> Result<DVec, LagrangianError> {
    let h = step * x.amax().max(1.0);
    let mut f = DVec::zeros(x.len());
    for k in 0..x.len() {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[k] += h;
        xm[k] -= h;
        f[k] = (spec.eval(&xp, v)? - spec.eval(&xm, v)?) / (2.0 * h);
    }
    Ok(f)
}

/// `p·v − L` with the momentum taken in the requested mode.
pub fn hamiltonian_residual(
    spec: &LagrangianSpec,
    x: &DVec,
    v: &DVec,
    mode: DerivativeMode,
) -> Result<f64, LagrangianError> {
    match mode {
        DerivativeMode::Analytic => super::hamiltonian_residual(spec, x, v),
        DerivativeMode::FiniteDifference { step } => {
            Ok(momentum(spec, x, v, step)?.dot(v) - spec.eval(x, v)?)
        }
    }
}
