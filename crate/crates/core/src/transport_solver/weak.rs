use serde::Serialize;

use super::{pull_back, snapshot_matrix, TestFunction, TransportSolution};
use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::levy_noise::{nu_radial_integral_tol, surface_factor, SimulationMode, SmallJumpPolicy, StableSpec};

const DIRECTIONS: usize = 16;

/// The five terms of the Marcus weak identity
/// `u_t(θ) = initial + drift + small_jumps + large_jumps + compensator`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeakTerms {
    /// `∫ u₀ θ`.
    pub initial: f64,
    /// `∫_0^t ∫ u [b·Dθ + div b θ]`.
    pub drift: f64,
    /// Realized jumps with `|ΔL| ≤ 1` minus their `ν ⊗ dt` compensator.
    pub small_jumps: f64,
    /// Realized jumps with `|ΔL| > 1`.
    pub large_jumps: f64,
    /// `∫_0^t ∫_{|z|≤1} ∫ u [θ(x+z) − θ(x) − z·Dθ(x)] ν(dz)`.
    pub compensator: f64,
    /// Left-hand side `u_t(θ)` on the same lattice.
    pub pairing: f64,
}

impl WeakTerms {
    pub fn sum(&self) -> f64 {
        self.initial + self.drift + self.small_jumps + self.large_jumps + self.compensator
    }

    pub fn residual(&self) -> f64 {
        (self.pairing - self.sum()).abs()
    }
}

/// `∫_{rmin<|z|<rmax} [θ(x+z) − θ(x) − z·Dθ(x)] ν(dz)`.
///
/// Radii below `1e-3 R_θ` are integrated with the second-order Taylor
/// expansion, where the difference quotient would lose all its digits.
pub(crate) fn nu_weight(theta: &TestFunction, spec: &StableSpec, x: &[f64], rmin: f64, rmax: f64) -> Result<f64> {
    if rmin >= rmax {
        return Ok(0.0);
    }
    let d = x.len();
    let r0 = 1e-3 * theta.support_radius;
    let mut total = 0.0;
    if rmin < r0 {
        let top = r0.min(rmax);
        let a = 2.0 - spec.alpha;
        let c = theta.laplacian(x) / (2.0 * d as f64);
        total += surface_factor(d) * spec.levy_density_constant * c * (top.powf(a) - rmin.powf(a)) / a;
    }
    let lo = rmin.max(r0);
    if lo < rmax {
        total += nu_radial_integral_tol(spec, |r| theta.sphere_average_increment(x, r, DIRECTIONS), lo, rmax, 1e-9)?;
    }
    Ok(total)
}

fn check_path(solution: &TransportSolution) -> Result<()> {
    let spec = solution.path.spec();
    if spec.mode == SimulationMode::ExactIncrement {
        return Err(Error::Capability(
            "the weak identity needs a jump-decomposition path (no jump ledger in exact-increment mode)".into(),
        ));
    }
    if !(1..=2).contains(&spec.dim) {
        return Err(Error::Capability("weak-form quadrature is implemented for d ∈ {1, 2}".into()));
    }
    Ok(())
}

/// Evaluates the five weak-form terms at grid time `t`.
///
/// Every cell increment of the path is treated as a jump at the cell's right
/// node, acting on the snapshot at the left node. Under the `Drop` policy the
/// compensator of the realized small jumps covers `δ < |z| ≤ 1` only, so the
/// residual carries the `O(δ^{2−α})` truncation of the dropped jumps.
/// Spatial sums use a lattice of the solution's spacing over `supp θ + B(1)`.
pub fn marcus_weak_terms(solution: &TransportSolution, theta: &TestFunction, t: f64) -> Result<WeakTerms> {
    check_path(solution)?;
    let path = &solution.path;
    let spec = *path.spec();
    let b = &solution.drift;
    let div = b.divergence_handle()?;
    let d = spec.dim;
    let n = path.grid().index_of(t)?;
    let h = solution.xgrid.spacing();
    let wide = Lattice::cube(&theta.center, theta.support_radius + 1.0, h)?;
    let vol = wide.cell_volume();
    let nodes: Vec<usize> = (0..=n).collect();
    let u = snapshot_matrix(b, &solution.datum, path, &nodes, &wide)?;
    let points = wide.points();

    let integrate = |values: &[f64], weights: &[f64]| -> f64 {
        values.iter().zip(weights).map(|(u, w)| u * w).sum::<f64>() * vol
    };

    let theta_w: Vec<f64> = points.iter().map(|x| theta.eval(x)).collect();
    let mut grad = vec![0.0; d];
    let mut bv = vec![0.0; d];
    let drift_w: Vec<f64> = points
        .iter()
        .zip(&theta_w)
        .map(|(x, th)| {
            theta.gradient_into(x, &mut grad);
            if *th == 0.0 && grad.iter().all(|g| *g == 0.0) {
                return 0.0;
            }
            b.eval_into(x, &mut bv);
            bv.iter().zip(&grad).map(|(a, g)| a * g).sum::<f64>() + div(x) * th
        })
        .collect();
    let full_w = points
        .iter()
        .map(|x| nu_weight(theta, &spec, x, 0.0, 1.0))
        .collect::<Result<Vec<f64>>>()?;
    let comp_min = match spec.small_jump_policy {
        SmallJumpPolicy::Drop => spec.cutoff_delta,
        SmallJumpPolicy::Gaussian => 0.0,
    };
    let comp_w = if comp_min == 0.0 {
        full_w.clone()
    } else {
        points
            .iter()
            .map(|x| nu_weight(theta, &spec, x, comp_min, 1.0))
            .collect::<Result<Vec<f64>>>()?
    };

    let narrow = Lattice::cube(&theta.center, theta.support_radius, h)?;
    let narrow_points = narrow.points();
    let mut terms = WeakTerms {
        initial: integrate(&u[0], &theta_w),
        drift: 0.0,
        small_jumps: 0.0,
        large_jumps: 0.0,
        compensator: 0.0,
        pairing: integrate(&u[n], &theta_w),
    };
    let mut shifted = vec![0.0; d];
    for k in 0..n {
        let dt = path.grid().dt(k);
        terms.drift += dt * integrate(&u[k], &drift_w);
        terms.compensator += dt * integrate(&u[k], &full_w);
        terms.small_jumps -= dt * integrate(&u[k], &comp_w);
        let dl = path.cell_increment(k);
        let size = dl.iter().map(|v| v * v).sum::<f64>().sqrt();
        if size == 0.0 {
            continue;
        }
        if size <= 1.0 {
            let mut acc = 0.0;
            for (j, x) in points.iter().enumerate() {
                if u[k][j] == 0.0 {
                    continue;
                }
                for i in 0..d {
                    shifted[i] = x[i] + dl[i];
                }
                acc += u[k][j] * (theta.eval(&shifted) - theta_w[j]);
            }
            terms.small_jumps += acc * vol;
        } else {
            // ∫ u_k(w − ΔL) θ(w) dw − ∫ u_k θ, with u_k pulled back on demand
            let mut acc = 0.0;
            for w in &narrow_points {
                let th = theta.eval(w);
                if th == 0.0 {
                    continue;
                }
                for i in 0..d {
                    shifted[i] = w[i] - dl[i];
                }
                acc += th * (pull_back(b, &solution.datum, path, k, &shifted)? - pull_back(b, &solution.datum, path, k, w)?);
            }
            terms.large_jumps += acc * narrow.cell_volume();
        }
    }
    Ok(terms)
}

/// `|u_t(θ) − Σ terms|` for the Marcus weak identity.
pub fn weak_residual(solution: &TransportSolution, theta: &TestFunction, t: f64) -> Result<f64> {
    Ok(marcus_weak_terms(solution, theta, t)?.residual())
}
