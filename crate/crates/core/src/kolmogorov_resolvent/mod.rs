//! The nonlocal resolvent equation `λv − Av − b·Dv = f` on a torus, solved
//! spectrally, and the transform `ψ = id + u_λ` that conjugates the flow of
//! `dX = b(X) dt + dL` to an equation with Lipschitz coefficients.
//!
//! `A` is the generator of the stable noise, the Fourier multiplier
//! `−c_α|ξ|^α`. Drifts must be periodic on the chosen torus.

mod conjugation;
mod spectral;

pub use conjugation::{ito_tanaka_lambda_search, psi_transform, verify_conjugation, ItoTanaka, PsiTransform};
pub use spectral::{SpectralField, TorusGrid};

use serde::Serialize;

use crate::drift_fields::DriftField;
use crate::error::{Error, Result};
use crate::levy_noise::StableSpec;

/// Fourier multiplier `−c|ξ|^α` for any `α > 0` (`α = 2` gives `c Δ`).
pub fn fractional_multiplier(c: f64, alpha: f64, v: &SpectralField) -> SpectralField {
    v.map_modes(|xi| -c * norm(xi).powf(alpha))
}

/// `Av` for the noise generator.
pub fn apply_generator(spec: &StableSpec, v: &SpectralField) -> SpectralField {
    fractional_multiplier(spec.c_alpha, spec.alpha, v)
}

/// `(λ − A)⁻¹ f`, mode by mode.
pub fn resolvent_free(lambda: f64, spec: &StableSpec, f: &SpectralField) -> Result<SpectralField> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidSpec(format!("λ must be positive, got {lambda}")));
    }
    let (c, a) = (spec.c_alpha, spec.alpha);
    Ok(f.map_modes(|xi| 1.0 / (lambda + c * norm(xi).powf(a))))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Solution of the resolvent equation with its residual certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolventSolution {
    pub v: SpectralField,
    pub iterations: usize,
    /// `max_j |λv − Av − b·Dv − f|(x_j)`.
    pub residual: f64,
    /// Last ratio of successive update sizes.
    pub rate: f64,
}

/// Resolvent report fields for text output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResolventSummary {
    pub lambda: f64,
    pub alpha: f64,
    pub residual: f64,
    pub iterations: usize,
    pub du_norm: f64,
}

/// Nodal values of `b` on the torus, after checking that `b` is periodic.
pub(crate) fn periodic_drift_values(b: &DriftField, grid: &TorusGrid) -> Result<Vec<Vec<f64>>> {
    if b.dim() != grid.dim {
        return Err(Error::InvalidSpec("drift and torus dimensions differ".into()));
    }
    let nodes = grid.nodes();
    let mut shifted = vec![0.0; grid.dim];
    for x in nodes.iter().step_by((nodes.len() / 64).max(1)) {
        let bx = b.eval(x);
        for a in 0..grid.dim {
            shifted.copy_from_slice(x);
            shifted[a] += grid.period;
            let by = b.eval(&shifted);
            let gap = bx.iter().zip(&by).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
            if gap > 1e-10 * (1.0 + bx.iter().map(|v| v.abs()).fold(0.0, f64::max)) {
                return Err(Error::InvalidSpec(format!(
                    "drift `{}` is not periodic with period {}",
                    b.name(),
                    grid.period
                )));
            }
        }
    }
    Ok(nodes.iter().map(|x| b.eval(x)).collect())
}

/// Nodal values of `b·Dv`.
pub(crate) fn transport_term(bvals: &[Vec<f64>], v: &SpectralField) -> Vec<f64> {
    let d = v.grid.dim;
    let grads: Vec<Vec<f64>> = (0..d).map(|a| v.derivative(a).values()).collect();
    bvals
        .iter()
        .enumerate()
        .map(|(j, bj)| (0..d).map(|a| bj[a] * grads[a][j]).sum())
        .collect()
}

/// Fixed-point iteration `v ← (λ − A)⁻¹(f + b·Dv)` until the nodal residual
/// drops below `tol`.
pub fn solve_resolvent(
    lambda: f64,
    spec: &StableSpec,
    b: &DriftField,
    f: &SpectralField,
    tol: f64,
    max_iter: usize,
) -> Result<ResolventSolution> {
    let grid = f.grid;
    let bvals = periodic_drift_values(b, &grid)?;
    let fvals = f.values();
    let mut v = SpectralField::zeros(grid);
    let mut prev_step = f64::NAN;
    let mut rate = f64::NAN;
    for it in 1..=max_iter {
        let bdv = transport_term(&bvals, &v);
        let rhs: Vec<f64> = fvals.iter().zip(&bdv).map(|(a, c)| a + c).collect();
        let next = resolvent_free(lambda, spec, &SpectralField::from_values(grid, &rhs)?)?;
        let step = next
            .values()
            .iter()
            .zip(v.values())
            .fold(0.0, |m: f64, (a, c)| m.max((a - c).abs()));
        if prev_step.is_finite() && prev_step > 0.0 {
            rate = step / prev_step;
        }
        prev_step = step;
        v = next;
        let residual = residual(lambda, spec, &bvals, &v, &fvals)?;
        if !residual.is_finite() {
            return Err(Error::ContractionFailure { iterations: it, rate });
        }
        if residual <= tol {
            return Ok(ResolventSolution {
                v,
                iterations: it,
                residual,
                rate,
            });
        }
    }
    Err(Error::ContractionFailure {
        iterations: max_iter,
        rate,
    })
}

fn residual(lambda: f64, spec: &StableSpec, bvals: &[Vec<f64>], v: &SpectralField, fvals: &[f64]) -> Result<f64> {
    let av = apply_generator(spec, v).values();
    let bdv = transport_term(bvals, v);
    Ok(v.values()
        .iter()
        .zip(&av)
        .zip(&bdv)
        .zip(fvals)
        .fold(0.0, |m: f64, (((v, a), t), f)| m.max((lambda * v - a - t - f).abs())))
}

/// Nodal residual `max |λv − Av − b·Dv − f|` of a candidate solution.
pub fn resolvent_residual(lambda: f64, spec: &StableSpec, b: &DriftField, v: &SpectralField, f: &SpectralField) -> Result<f64> {
    let bvals = periodic_drift_values(b, &v.grid)?;
    residual(lambda, spec, &bvals, v, &f.values())
}
