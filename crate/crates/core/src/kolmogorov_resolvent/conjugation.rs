use super::{apply_generator, solve_resolvent, SpectralField, TorusGrid};
use crate::drift_fields::DriftField;
use crate::error::{Error, Result};
use crate::flow_engine::solve_forward;
use crate::levy_noise::{LevyPath, SimulationMode, StableSpec};

/// Result of the λ search: `u_λ` solves `λu − Au − b·Du = b` componentwise.
#[derive(Debug, Clone, PartialEq)]
pub struct ItoTanaka {
    pub lambda: f64,
    pub u: Vec<SpectralField>,
    /// Nodal `max ‖Du_λ‖` (operator norm).
    pub du_norm: f64,
    /// Every λ tried with its `‖Du_λ‖`, `None` where the solve did not
    /// contract.
    pub history: Vec<(f64, Option<f64>)>,
    /// Largest residual certificate among the component solves.
    pub residual: f64,
    pub iterations: usize,
}

fn largest_singular_value(m: &[f64], d: usize) -> f64 {
    match d {
        1 => m[0].abs(),
        _ => {
            let (a, b, c, e) = (m[0], m[1], m[2], m[3]);
            let s = a * a + b * b + c * c + e * e;
            let det = a * e - b * c;
            (0.5 * (s + (s * s - 4.0 * det * det).max(0.0).sqrt())).sqrt()
        }
    }
}

fn smallest_singular_value(m: &[f64], d: usize) -> f64 {
    match d {
        1 => m[0].abs(),
        _ => {
            let top = largest_singular_value(m, d);
            let det = (m[0] * m[3] - m[1] * m[2]).abs();
            if top == 0.0 {
                0.0
            } else {
                det / top
            }
        }
    }
}

/// Nodal Jacobian matrices `∂_j u_i`, row-major, one per node.
fn jacobians(u: &[SpectralField]) -> Vec<Vec<f64>> {
    let d = u.len();
    let grid = u[0].grid;
    let parts: Vec<Vec<Vec<f64>>> = u
        .iter()
        .map(|ui| (0..d).map(|j| ui.derivative(j).values()).collect())
        .collect();
    (0..grid.len())
        .map(|k| {
            let mut m = vec![0.0; d * d];
            for i in 0..d {
                for j in 0..d {
                    m[i * d + j] = parts[i][j][k];
                }
            }
            m
        })
        .collect()
}

fn du_norm(u: &[SpectralField]) -> f64 {
    let d = u.len();
    jacobians(u)
        .iter()
        .map(|m| largest_singular_value(m, d))
        .fold(0.0, f64::max)
}

fn components(b: &DriftField, grid: &TorusGrid) -> Vec<SpectralField> {
    (0..b.dim())
        .map(|i| SpectralField::from_fn(*grid, |x| b.eval(x)[i]))
        .collect()
}

/// Solves `λu − Au − b·Du = b` for one λ; returns `(u, ‖Du‖, residual, iterations)`.
pub(crate) fn solve_for_lambda(
    lambda: f64,
    b: &DriftField,
    spec: &StableSpec,
    grid: &TorusGrid,
    tol: f64,
) -> Result<(Vec<SpectralField>, f64, f64, usize)> {
    let mut u = Vec::new();
    let mut residual: f64 = 0.0;
    let mut iterations = 0;
    for f in components(b, grid) {
        let sol = solve_resolvent(lambda, spec, b, &f, tol, 500)?;
        residual = residual.max(sol.residual);
        iterations = iterations.max(sol.iterations);
        u.push(sol.v);
    }
    let norm = du_norm(&u);
    Ok((u, norm, residual, iterations))
}

/// Smallest `λ ∈ {1, 2, 4, …, 2^30}` with nodal `‖Du_λ‖ ≤ 1/3`.
pub fn ito_tanaka_lambda_search(b: &DriftField, spec: &StableSpec, grid: &TorusGrid, tol: f64) -> Result<ItoTanaka> {
    let mut history = Vec::new();
    for p in 0..=30 {
        let lambda = 2f64.powi(p);
        match solve_for_lambda(lambda, b, spec, grid, tol) {
            Ok((u, norm, residual, iterations)) => {
                history.push((lambda, Some(norm)));
                if norm <= 1.0 / 3.0 {
                    return Ok(ItoTanaka {
                        lambda,
                        u,
                        du_norm: norm,
                        history,
                        residual,
                        iterations,
                    });
                }
            }
            Err(Error::ContractionFailure { .. }) => history.push((lambda, None)),
            Err(e) => return Err(e),
        }
    }
    Err(Error::SearchFailure(format!(
        "‖Du_λ‖ ≤ 1/3 not reached up to λ = 2^30 for drift `{}`",
        b.name()
    )))
}

/// `ψ = id + u` and its inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiTransform {
    pub lambda: f64,
    pub u: Vec<SpectralField>,
    /// Nodal `‖Du‖`.
    pub du_norm: f64,
}

/// Builds `ψ = id + u`; requires nodal `‖Du‖ ≤ 1/3`.
pub fn psi_transform(u: Vec<SpectralField>, lambda: f64) -> Result<PsiTransform> {
    if u.is_empty() || u.len() != u[0].grid.dim {
        return Err(Error::InvalidSpec("ψ needs one component per dimension".into()));
    }
    let norm = du_norm(&u);
    if norm > 1.0 / 3.0 + 1e-12 {
        return Err(Error::InvalidSpec(format!("‖Du‖ = {norm} exceeds 1/3")));
    }
    Ok(PsiTransform { lambda, u, du_norm: norm })
}

impl PsiTransform {
    pub fn dim(&self) -> usize {
        self.u.len()
    }

    pub fn u_at(&self, x: &[f64]) -> Vec<f64> {
        self.u.iter().map(|c| c.eval(x)).collect()
    }

    pub fn psi(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(self.u_at(x)).map(|(a, b)| a + b).collect()
    }

    /// `ψ⁻¹(y)` by `x ← y − u(x)`; returns the point and the iteration count.
    pub fn psi_inverse(&self, y: &[f64]) -> Result<(Vec<f64>, usize)> {
        let scale = 1.0 + y.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let mut x = y.to_vec();
        for it in 1..=80 {
            let next: Vec<f64> = y.iter().zip(self.u_at(&x)).map(|(a, b)| a - b).collect();
            let step = next.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            x = next;
            if step <= 1e-15 * scale {
                return Ok((x, it));
            }
        }
        Err(Error::Numeric {
            step: 80,
            context: "ψ⁻¹ fixed point did not converge".into(),
        })
    }

    /// Smallest and largest singular values of `Dψ = I + Du` over the nodes.
    pub fn jacobian_bounds(&self) -> (f64, f64) {
        let d = self.dim();
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for mut m in jacobians(&self.u) {
            for i in 0..d {
                m[i * d + i] += 1.0;
            }
            lo = lo.min(smallest_singular_value(&m, d));
            hi = hi.max(largest_singular_value(&m, d));
        }
        (lo, hi)
    }
}

/// Conjugation defect `max_k |ψ(φ_{t_k}(x)) − Y_{t_k}(ψ(x))|`.
///
/// `Y` is advanced cell by cell: a drift step with `λu − Au` evaluated at
/// `ψ⁻¹(Y)`, then the cell increment `ΔL` as a jump with coefficient
/// `u(ψ⁻¹(Y⁻) + ΔL) − u(ψ⁻¹(Y⁻))`. The compensator of the small jumps is
/// the `−Au` part of the drift, so no separate ν-integral is needed.
pub fn verify_conjugation(
    b: &DriftField,
    spec: &StableSpec,
    path: &LevyPath,
    x: &[f64],
    transform: &PsiTransform,
) -> Result<f64> {
    if path.spec().mode == SimulationMode::ExactIncrement {
        return Err(Error::Capability(
            "conjugation check needs a jump-decomposition path".into(),
        ));
    }
    let d = x.len();
    let au: Vec<SpectralField> = transform.u.iter().map(|c| apply_generator(spec, c)).collect();
    let lambda = transform.lambda;
    let traj = solve_forward(b, x, path)?;
    let mut y = transform.psi(x);
    let mut worst: f64 = 0.0;
    let mut shifted = vec![0.0; d];
    for k in 0..path.n_cells() {
        let dt = path.grid().dt(k);
        let (z, _) = transform.psi_inverse(&y)?;
        let uz = transform.u_at(&z);
        for i in 0..d {
            y[i] += (lambda * uz[i] - au[i].eval(&z)) * dt;
        }
        let dl = path.cell_increment(k);
        if dl.iter().any(|v| *v != 0.0) {
            let (zm, _) = transform.psi_inverse(&y)?;
            for i in 0..d {
                shifted[i] = zm[i] + dl[i];
            }
            let after = transform.u_at(&shifted);
            let before = transform.u_at(&zm);
            for i in 0..d {
                y[i] += dl[i] + after[i] - before[i];
            }
        }
        let target = transform.psi(traj.at(k + 1));
        let gap = target.iter().zip(&y).map(|(a, c)| (a - c) * (a - c)).sum::<f64>().sqrt();
        if !gap.is_finite() {
            return Err(Error::Numeric {
                step: k,
                context: "conjugated process left the finite range".into(),
            });
        }
        worst = worst.max(gap);
    }
    Ok(worst)
}
