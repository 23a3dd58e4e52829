use rayon::prelude::*;
use serde::Serialize;

use crate::drift_fields::DriftField;
use crate::error::Result;
use crate::flow_engine::solve_forward;
use crate::levy_noise::{sample_path, LevyPath, StableSpec};
use crate::rng::path_seed;

/// Separation of perturbed and unperturbed trajectories of `ẋ = b(x) + L̇`
/// started near the non-uniqueness point 0 of the counterexample drift.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonuniquenessReport {
    pub gamma: f64,
    pub radius: f64,
    pub horizon: f64,
    pub dt: f64,
    pub perturbations: Vec<f64>,
    pub times: Vec<f64>,
    /// Without noise: `|X^{p}_t − X^{0}_t|` per perturbation and grid time.
    pub deterministic: Vec<Vec<f64>>,
    /// With noise on common paths, one entry per perturbation.
    pub noisy: Vec<NoiseSeparation>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseSeparation {
    pub perturbation: f64,
    /// Median over paths of the separation at the horizon.
    pub median_final: f64,
    pub finals: Vec<f64>,
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Runs the deterministic and, when `spec` is given, the noisy experiment for
/// the drift `counterexample(gamma, radius)`.
#[allow(clippy::too_many_arguments)]
pub fn nonuniqueness_demo(
    gamma: f64,
    radius: f64,
    spec: Option<&StableSpec>,
    perturbations: &[f64],
    n_paths: usize,
    horizon: f64,
    dt: f64,
    master_seed: u64,
) -> Result<NonuniquenessReport> {
    let b = DriftField::counterexample(gamma, radius)?;
    let quiet = LevyPath::zero(StableSpec::new(1.0, 1.0, 1)?, horizon, dt)?;
    let zero = solve_forward(&b, &[0.0], &quiet)?;
    let deterministic = perturbations
        .iter()
        .map(|&p| {
            let pert = solve_forward(&b, &[p], &quiet)?;
            Ok((0..=quiet.n_cells()).map(|k| (pert.at(k)[0] - zero.at(k)[0]).abs()).collect())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;

    let noisy = match spec {
        None => Vec::new(),
        Some(spec) => {
            let finals = (0..n_paths)
                .into_par_iter()
                .map(|i| {
                    let path = sample_path(spec, horizon, dt, path_seed(master_seed, i as u64))?;
                    let base = solve_forward(&b, &[0.0], &path)?.last()[0];
                    perturbations
                        .iter()
                        .map(|&p| Ok((solve_forward(&b, &[p], &path)?.last()[0] - base).abs()))
                        .collect::<Result<Vec<f64>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            perturbations
                .iter()
                .enumerate()
                .map(|(j, &p)| {
                    let f: Vec<f64> = finals.iter().map(|row| row[j]).collect();
                    NoiseSeparation {
                        perturbation: p,
                        median_final: median(&f),
                        finals: f,
                    }
                })
                .collect()
        }
    };
    Ok(NonuniquenessReport {
        gamma,
        radius,
        horizon,
        dt,
        perturbations: perturbations.to_vec(),
        times: quiet.times().to_vec(),
        deterministic,
        noisy,
    })
}
