use rayon::prelude::*;
use serde::Serialize;

use super::{sample_path_with_rng, sample_stable_increment, SimulationMode, StableSpec};
use crate::error::Result;
use crate::rng::ensemble_rng;

#[derive(Debug, Clone, Serialize)]
pub struct SymbolCheck {
    pub xi: Vec<f64>,
    pub empirical: f64,
    pub analytic: f64,
    pub std_error: f64,
    pub deviation: f64,
    /// `|deviation| ≤ 3 std_error`
    pub within_three_se: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SymbolReport {
    pub n_samples: usize,
    pub checks: Vec<SymbolCheck>,
}

impl SymbolReport {
    pub fn all_within(&self) -> bool {
        self.checks.iter().all(|c| c.within_three_se)
    }
}

const BATCH: usize = 10_000;

/// Compares the empirical characteristic function of `L_1` with
/// `exp(-c_alpha |ξ|^α)` for each `ξ`.
///
/// Samples are drawn in the spec's simulation mode, in fixed batches with one
/// stream per batch, so the report does not depend on thread scheduling.
pub fn validate_symbol(spec: &StableSpec, xi_list: &[Vec<f64>], n_samples: usize, seed: u64) -> Result<SymbolReport> {
    spec.validate()?;
    let n_batches = n_samples.div_ceil(BATCH);
    let samples: Vec<Vec<f64>> = (0..n_batches)
        .into_par_iter()
        .map(|b| -> Result<Vec<Vec<f64>>> {
            let mut rng = ensemble_rng(seed, b as u64);
            let len = BATCH.min(n_samples - b * BATCH);
            (0..len)
                .map(|_| match spec.mode {
                    SimulationMode::ExactIncrement => sample_stable_increment(spec, 1.0, &mut rng),
                    SimulationMode::JumpDecomposition => {
                        let path = sample_path_with_rng(spec, 1.0, 1.0, &mut rng, seed)?;
                        Ok(path.increment_between(0, path.n_cells()))
                    }
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();

    let n = samples.len() as f64;
    let checks = xi_list
        .iter()
        .map(|xi| {
            let values: Vec<f64> = samples
                .iter()
                .map(|l| l.iter().zip(xi).map(|(a, b)| a * b).sum::<f64>().cos())
                .collect();
            let mean = values.iter().sum::<f64>() / n;
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
            let std_error = (var / n).sqrt();
            let xi_norm = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
            let analytic = (-spec.symbol(xi_norm)).exp();
            let deviation = mean - analytic;
            SymbolCheck {
                xi: xi.clone(),
                empirical: mean,
                analytic,
                std_error,
                deviation,
                within_three_se: deviation.abs() <= 3.0 * std_error + 1e-15,
            }
        })
        .collect();
    Ok(SymbolReport { n_samples, checks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy_noise::SmallJumpPolicy;

    #[test]
    fn zero_frequency_is_exact() {
        let spec = StableSpec::new(1.5, 1.0, 2).unwrap();
        let r = validate_symbol(&spec, &[vec![0.0, 0.0]], 1000, 1).unwrap();
        assert_eq!(r.checks[0].empirical, 1.0);
        assert_eq!(r.checks[0].deviation, 0.0);
    }

    #[test]
    fn cauchy_symbol() {
        let spec = StableSpec::new(1.0, 1.0, 1).unwrap();
        let r = validate_symbol(&spec, &[vec![1.0]], 100_000, 8).unwrap();
        assert!(r.all_within(), "{:?}", r.checks);
        assert!((r.checks[0].analytic - 0.367_879_441_171_442_3).abs() < 1e-15);
    }

    #[test]
    fn heavy_tail_and_moderate_indices() {
        for &alpha in &[0.7, 1.5] {
            let spec = StableSpec::new(alpha, 1.0, 1).unwrap();
            let r = validate_symbol(&spec, &[vec![1.0]], 50_000, 5).unwrap();
            assert!(r.all_within(), "alpha {alpha}: {:?}", r.checks);
        }
    }

    #[test]
    fn jump_decomposition_marginals() {
        // Drop policy with a small cutoff approaches the exact marginal.
        let spec = StableSpec::new(1.2, 1.0, 1)
            .unwrap()
            .with_mode(SimulationMode::JumpDecomposition)
            .with_policy(SmallJumpPolicy::Drop)
            .with_cutoff(1e-3);
        let r = validate_symbol(&spec, &[vec![1.0]], 20_000, 3).unwrap();
        assert!(r.all_within(), "{:?}", r.checks);
        // Gaussian surrogate at unit cutoff also matches at ξ = 1 within MC error.
        let spec = spec.with_policy(SmallJumpPolicy::Gaussian).with_cutoff(0.5);
        let r = validate_symbol(&spec, &[vec![0.5]], 20_000, 4).unwrap();
        assert!(r.all_within(), "{:?}", r.checks);
    }
}
