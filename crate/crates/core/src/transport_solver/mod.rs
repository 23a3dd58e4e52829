//! Transport solutions `u(t, x) = u₀(φ_t⁻¹(x))` built from the inverse flow,
//! together with the weak-form and perturbative residual checks.

mod functions;
mod io;
mod nonuniqueness;
mod perturbative;
mod weak;

pub use functions::{InitialDatum, TestFunction};
pub use io::{write_snapshots, ResidualReport};
pub use nonuniqueness::{nonuniqueness_demo, NonuniquenessReport, NoiseSeparation};
pub use perturbative::perturbative_residual;
pub use weak::{marcus_weak_terms, weak_residual, WeakTerms};

use rayon::prelude::*;

use crate::drift_fields::DriftField;
use crate::error::{Error, Result};
use crate::flow_engine::inverse_map;
use crate::lattice::Lattice;
use crate::levy_noise::LevyPath;

/// Snapshots of `u(t, ·)` on a lattice at selected grid nodes.
#[derive(Debug, Clone)]
pub struct TransportSolution {
    pub xgrid: Lattice,
    pub nodes: Vec<usize>,
    pub times: Vec<f64>,
    /// `snapshots[i][j] = u(times[i], x_j)`.
    pub snapshots: Vec<Vec<f64>>,
    pub path: LevyPath,
    pub drift: DriftField,
    pub datum: InitialDatum,
}

impl TransportSolution {
    pub fn snapshot(&self, t: f64) -> Option<&[f64]> {
        self.times.iter().position(|s| *s == t).map(|i| self.snapshots[i].as_slice())
    }

    /// `u(t_node, x)` evaluated directly through the inverse flow.
    pub fn value(&self, node: usize, x: &[f64]) -> Result<f64> {
        pull_back(&self.drift, &self.datum, &self.path, node, x)
    }

    /// Largest `|u|` over all snapshots.
    pub fn sup(&self) -> f64 {
        self.snapshots
            .iter()
            .flat_map(|s| s.iter())
            .fold(0.0, |m: f64, v| m.max(v.abs()))
    }
}

pub(crate) fn pull_back(b: &DriftField, u0: &InitialDatum, path: &LevyPath, node: usize, x: &[f64]) -> Result<f64> {
    Ok(u0.eval(&inverse_map(b, x, path, 0, node)?))
}

/// `u(t_k, x_j)` for every node `k` in `nodes` and every lattice cell.
pub(crate) fn snapshot_matrix(
    b: &DriftField,
    u0: &InitialDatum,
    path: &LevyPath,
    nodes: &[usize],
    lattice: &Lattice,
) -> Result<Vec<Vec<f64>>> {
    let d = lattice.dim();
    let columns = (0..lattice.len())
        .into_par_iter()
        .map(|j| {
            let mut x = vec![0.0; d];
            lattice.point(j, &mut x);
            nodes.iter().map(|&k| pull_back(b, u0, path, k, &x)).collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((0..nodes.len())
        .map(|i| columns.iter().map(|c| c[i]).collect())
        .collect())
}

/// Inverse-flow representation sampled at grid times `times` on `xgrid`.
pub fn solve(
    b: &DriftField,
    u0: &InitialDatum,
    path: &LevyPath,
    times: &[f64],
    xgrid: Lattice,
) -> Result<TransportSolution> {
    if b.dim() != path.dim() || xgrid.dim() != path.dim() {
        return Err(Error::InvalidSpec("transport: dimension mismatch".into()));
    }
    let nodes = times
        .iter()
        .map(|t| path.grid().index_of(*t))
        .collect::<Result<Vec<_>>>()?;
    let snapshots = snapshot_matrix(b, u0, path, &nodes, &xgrid)?;
    Ok(TransportSolution {
        xgrid,
        nodes,
        times: times.to_vec(),
        snapshots,
        path: path.clone(),
        drift: b.clone(),
        datum: u0.clone(),
    })
}

/// `u_t(θ) = ∫ θ(x) u(t, x) dx` by the midpoint rule on the solution lattice.
pub fn pairing(solution: &TransportSolution, theta: &TestFunction, t: f64) -> Result<f64> {
    if !solution.xgrid.contains_ball(&theta.center, theta.support_radius) {
        return Err(Error::Coverage("solution lattice does not cover the test function support".into()));
    }
    let snap = solution
        .snapshot(t)
        .ok_or_else(|| Error::Coverage(format!("no snapshot at t = {t}")))?;
    let lat = &solution.xgrid;
    let mut x = vec![0.0; lat.dim()];
    let mut acc = 0.0;
    for j in lat.indices_near(&theta.center, theta.support_radius) {
        lat.point(j, &mut x);
        acc += snap[j] * theta.eval(&x);
    }
    Ok(acc * lat.cell_volume())
}
