use rayon::prelude::*;
use serde::Serialize;

use super::{distance, solve_forward, Trajectory};
use crate::drift_fields::DriftField;
use crate::error::Result;
use crate::levy_noise::{sample_path, LevyPath, StableSpec};
use crate::rng::path_seed;

/// Forward trajectories of several initial points on one path.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowResult {
    pub initial_points: Vec<Vec<f64>>,
    pub trajectories: Vec<Trajectory>,
    pub path_seed: u64,
    pub times: Vec<f64>,
}

pub fn flow_ensemble(b: &DriftField, points: &[Vec<f64>], path: &LevyPath) -> Result<FlowResult> {
    let trajectories = points
        .par_iter()
        .map(|x| solve_forward(b, x, path))
        .collect::<Result<Vec<_>>>()?;
    Ok(FlowResult {
        initial_points: points.to_vec(),
        trajectories,
        path_seed: path.seed(),
        times: path.times().to_vec(),
    })
}

/// Monte Carlo setup: path `i` is sampled with seed `path_seed(master_seed, i)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleConfig {
    pub spec: StableSpec,
    pub horizon: f64,
    pub base_dt: f64,
    pub n_paths: usize,
    pub master_seed: u64,
}

impl EnsembleConfig {
    pub fn path(&self, index: usize) -> Result<LevyPath> {
        sample_path(&self.spec, self.horizon, self.base_dt, path_seed(self.master_seed, index as u64))
    }

    /// Evaluates `f` on every path in parallel; results come back in path
    /// order.
    pub fn map_paths<T, F>(&self, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(&LevyPath) -> Result<T> + Sync,
    {
        (0..self.n_paths)
            .into_par_iter()
            .map(|i| f(&self.path(i)?))
            .collect()
    }
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub n: usize,
}

impl Estimate {
    pub fn from_samples(samples: &[f64]) -> Estimate {
        let n = samples.len();
        if n == 0 {
            return Estimate { mean: f64::NAN, std_error: f64::NAN, n };
        }
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            samples.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        Estimate {
            mean,
            std_error: (var / n as f64).sqrt(),
            n,
        }
    }
}

fn sup_distance_pow(a: &Trajectory, b: &Trajectory, p: f64) -> f64 {
    (a.first..=a.last_node())
        .map(|k| distance(a.at(k), b.at(k)).powf(p))
        .fold(0.0, f64::max)
}

/// `E sup_{t ≤ T} |X^x_t − X^y_t|^p` with both solutions on common paths.
pub fn moment_estimate(b: &DriftField, cfg: &EnsembleConfig, x: &[f64], y: &[f64], p: f64) -> Result<Estimate> {
    let samples = cfg.map_paths(|path| {
        let a = solve_forward(b, x, path)?;
        let c = solve_forward(b, y, path)?;
        Ok(sup_distance_pow(&a, &c, p))
    })?;
    Ok(Estimate::from_samples(&samples))
}

/// For each pair `(b_1, b_2)`, `E[mean_x sup_t |φ^{b_1}_t(x) − φ^{b_2}_t(x)|^p]`
/// with every pair driven by the same paths.
pub fn ensemble_discrepancy(
    pairs: &[(DriftField, DriftField)],
    cfg: &EnsembleConfig,
    points: &[Vec<f64>],
    p: f64,
) -> Result<Vec<Estimate>> {
    let per_path = cfg.map_paths(|path| {
        pairs
            .iter()
            .map(|(b1, b2)| {
                let mut acc = 0.0;
                for x in points {
                    let a = solve_forward(b1, x, path)?;
                    let c = solve_forward(b2, x, path)?;
                    acc += sup_distance_pow(&a, &c, p);
                }
                Ok(acc / points.len() as f64)
            })
            .collect::<Result<Vec<f64>>>()
    })?;
    Ok((0..pairs.len())
        .map(|j| Estimate::from_samples(&per_path.iter().map(|row| row[j]).collect::<Vec<_>>()))
        .collect())
}

/// `E sup_t |φ^n − φ|^p` for each approximant `b_n` of `b`.
pub fn stability_sweep(
    b: &DriftField,
    approximants: &[DriftField],
    cfg: &EnsembleConfig,
    points: &[Vec<f64>],
    p: f64,
) -> Result<Vec<Estimate>> {
    let pairs: Vec<(DriftField, DriftField)> = approximants.iter().map(|a| (a.clone(), b.clone())).collect();
    ensemble_discrepancy(&pairs, cfg, points, p)
}
