//! Euler flows of `dX = b(X) dt + dL` on a realized noise path: forward and
//! inverse maps, derivative flows, Jacobians and ensemble diagnostics.
//!
//! The drift is evaluated at the left end point of each cell and the cell's
//! noise increment (including any jump landing on its right node) is added
//! afterwards, so trajectories are right-continuous at jump times. Restarting
//! the recursion from an intermediate node reproduces the same numbers, which
//! makes the discrete scheme an exact semiflow.

mod derivative;
mod ensemble;
mod io;
mod sobolev;

pub use derivative::{
    derivative_flow_fd, derivative_flow_fd_full, derivative_flow_variational, inverse_derivative, log_jacobian,
    DerivativeFlow, DerivativeMethod,
};
pub use ensemble::{
    ensemble_discrepancy, flow_ensemble, moment_estimate, stability_sweep, EnsembleConfig, Estimate, FlowResult,
};
pub use io::{write_derivatives, write_trajectories};
pub use sobolev::discrete_sobolev_seminorm;

pub use crate::levy_noise::TimeGrid;

use crate::drift_fields::DriftField;
use crate::error::{Error, Result};
use crate::levy_noise::LevyPath;

/// States at consecutive grid nodes `first, first + 1, …`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub first: usize,
    pub dim: usize,
    pub values: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Last node covered.
    pub fn last_node(&self) -> usize {
        self.first + self.len() - 1
    }

    /// State at grid node `node`.
    pub fn at(&self, node: usize) -> &[f64] {
        let k = node - self.first;
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    pub fn last(&self) -> &[f64] {
        self.at(self.last_node())
    }
}

fn check_dims(b: &DriftField, x: &[f64], path: &LevyPath) -> Result<()> {
    if b.dim() != x.len() || path.dim() != x.len() {
        return Err(Error::InvalidSpec(format!(
            "dimension mismatch: drift {}, point {}, path {}",
            b.dim(),
            x.len(),
            path.dim()
        )));
    }
    Ok(())
}

fn check_finite(state: &[f64], step: usize, what: &str) -> Result<()> {
    if state.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Numeric {
            step,
            context: format!("{what} produced a non-finite state"),
        })
    }
}

/// `φ_{0,t}(x0)` at every grid node.
pub fn solve_forward(b: &DriftField, x0: &[f64], path: &LevyPath) -> Result<Trajectory> {
    solve_between(b, x0, path, 0, path.n_cells())
}

/// `φ_{s,t}(x)` for the nodes `s..=t` (given as node indices).
pub fn solve_between(b: &DriftField, x: &[f64], path: &LevyPath, s: usize, t: usize) -> Result<Trajectory> {
    check_dims(b, x, path)?;
    if s > t || t > path.n_cells() {
        return Err(Error::InvalidSpec(format!("bad node range {s}..={t}")));
    }
    let d = x.len();
    let mut values = Vec::with_capacity((t - s + 1) * d);
    values.extend_from_slice(x);
    let mut state = x.to_vec();
    let mut drift = vec![0.0; d];
    let grid = path.grid();
    for k in s..t {
        let dt = grid.dt(k);
        b.eval_into(&state, &mut drift);
        let dl = path.cell_increment(k);
        for i in 0..d {
            state[i] = state[i] + drift[i] * dt + dl[i];
        }
        check_finite(&state, k, "forward Euler step")?;
        values.extend_from_slice(&state);
    }
    Ok(Trajectory { first: s, dim: d, values })
}

/// `φ_{s,t}(x)` for grid times `s ≤ t`.
pub fn flow_map(b: &DriftField, x: &[f64], path: &LevyPath, s: f64, t: f64) -> Result<Vec<f64>> {
    let i = path.grid().index_of(s)?;
    let j = path.grid().index_of(t)?;
    if i > j {
        return Err(Error::Query { time: s });
    }
    Ok(solve_between(b, x, path, i, j)?.last().to_vec())
}

/// `φ⁻¹_{s,t_end}(y)` for every grid time `s ≤ t_end`, by the backward
/// recursion `Y_k = Y_{k+1} − b(Y_{k+1}) Δt_k − ΔL_k` started from `y`.
pub fn inverse_flow(b: &DriftField, y: &[f64], path: &LevyPath, t_end: f64) -> Result<Trajectory> {
    let n = path.grid().index_of(t_end)?;
    inverse_between(b, y, path, 0, n)
}

/// Backward recursion between node indices; entry at node `s` is
/// `φ⁻¹_{s,t}(y)`.
pub fn inverse_between(b: &DriftField, y: &[f64], path: &LevyPath, s: usize, t: usize) -> Result<Trajectory> {
    check_dims(b, y, path)?;
    if s > t || t > path.n_cells() {
        return Err(Error::InvalidSpec(format!("bad node range {s}..={t}")));
    }
    let d = y.len();
    let len = t - s + 1;
    let mut values = vec![0.0; len * d];
    values[(len - 1) * d..].copy_from_slice(y);
    let mut state = y.to_vec();
    let mut drift = vec![0.0; d];
    let grid = path.grid();
    for k in (s..t).rev() {
        let dt = grid.dt(k);
        b.eval_into(&state, &mut drift);
        let dl = path.cell_increment(k);
        for i in 0..d {
            state[i] = state[i] - drift[i] * dt - dl[i];
        }
        check_finite(&state, k, "inverse Euler step")?;
        values[(k - s) * d..(k - s + 1) * d].copy_from_slice(&state);
    }
    Ok(Trajectory { first: s, dim: d, values })
}

/// `φ⁻¹_{s,t}(y)` alone, without storing the intermediate states.
pub fn inverse_map(b: &DriftField, y: &[f64], path: &LevyPath, s: usize, t: usize) -> Result<Vec<f64>> {
    check_dims(b, y, path)?;
    if s > t || t > path.n_cells() {
        return Err(Error::InvalidSpec(format!("bad node range {s}..={t}")));
    }
    let d = y.len();
    let mut state = y.to_vec();
    let mut drift = vec![0.0; d];
    let grid = path.grid();
    for k in (s..t).rev() {
        let dt = grid.dt(k);
        b.eval_into(&state, &mut drift);
        let dl = path.cell_increment(k);
        for i in 0..d {
            state[i] = state[i] - drift[i] * dt - dl[i];
        }
        check_finite(&state, k, "inverse Euler step")?;
    }
    Ok(state)
}

/// `|φ_{s,t}(x) − φ_{r,t}(φ_{s,r}(x))|` for grid times `s ≤ r ≤ t`.
pub fn semiflow_defect(b: &DriftField, path: &LevyPath, s: f64, r: f64, t: f64, x: &[f64]) -> Result<f64> {
    let grid = path.grid();
    let (i, j, k) = (grid.index_of(s)?, grid.index_of(r)?, grid.index_of(t)?);
    if !(i <= j && j <= k) {
        return Err(Error::Query { time: r });
    }
    let direct = solve_between(b, x, path, i, k)?;
    let mid = solve_between(b, x, path, i, j)?;
    let composed = solve_between(b, mid.last(), path, j, k)?;
    Ok(distance(direct.last(), composed.last()))
}

pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}
