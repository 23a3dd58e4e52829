use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{ConvergenceTarget, ExperimentConfig};
use super::output::Table;
use crate::error::{Error, Result};
use crate::flow_engine::{inverse_map, solve_forward};
use crate::lattice::Lattice;
use crate::levy_noise::{sample_path, LevyPath, SimulationMode, SmallJumpPolicy};
use crate::rng::path_seed;
use crate::transport_solver::{perturbative_residual, solve, weak_residual, InitialDatum, TestFunction};

/// Observed order of a refinement series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum FittedOrder {
    /// Every value is exactly zero.
    Exact,
    Fitted { order: f64, std_error: f64 },
    /// Some but not all values are zero, so no log-log fit exists.
    Degenerate,
}

impl fmt::Display for FittedOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FittedOrder::Exact => write!(f, "exact"),
            FittedOrder::Fitted { order, std_error } => write!(f, "{order:.3} ± {std_error:.3}"),
            FittedOrder::Degenerate => write!(f, "degenerate"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub steps: Vec<f64>,
    pub values: Vec<f64>,
    pub order: FittedOrder,
    /// False when some level does not improve on the previous one.
    pub monotone: bool,
}

impl ConvergenceTable {
    pub fn to_table(&self, name: &str) -> Table {
        let mut t = Table::new(name, &["level", "step", "value"]);
        for (i, (s, v)) in self.steps.iter().zip(&self.values).enumerate() {
            t.push(vec![i as f64, *s, *v]);
        }
        t.note("order", self.order);
        t.note("monotone", self.monotone);
        t
    }
}

/// Least-squares slope of `log value` against `log step`.
pub fn fit_order(steps: &[f64], values: &[f64]) -> Result<ConvergenceTable> {
    if steps.len() != values.len() || steps.len() < 3 {
        return Err(Error::validation("levels", "a convergence table needs at least 3 levels"));
    }
    let monotone = values.windows(2).all(|w| w[1] < w[0]) || values.iter().all(|v| *v == 0.0);
    let order = if values.iter().all(|v| *v == 0.0) {
        FittedOrder::Exact
    } else if values.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        FittedOrder::Degenerate
    } else {
        let xs: Vec<f64> = steps.iter().map(|s| s.ln()).collect();
        let ys: Vec<f64> = values.iter().map(|v| v.ln()).collect();
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let slope = sxy / sxx;
        let rss: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| {
                let r = y - my - slope * (x - mx);
                r * r
            })
            .sum();
        FittedOrder::Fitted {
            order: slope,
            std_error: (rss / (n - 2.0) / sxx).sqrt(),
        }
    };
    Ok(ConvergenceTable {
        steps: steps.to_vec(),
        values: values.to_vec(),
        order,
        monotone,
    })
}

pub(crate) fn median(values: &[f64]) -> f64 {
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

/// Jump cutoff at refinement level `level`: shrinks so that the dropped
/// second moment `∝ δ^{2−α}` halves with the time step.
pub fn weak_cutoff(delta0: f64, alpha: f64, level: usize) -> f64 {
    delta0 * 2f64.powf(-(level as f64) / (2.0 - alpha))
}

fn level_paths(cfg: &ExperimentConfig, target: ConvergenceTarget, levels: usize, index: usize) -> Result<Vec<LevyPath>> {
    let mut spec = cfg.stable_spec()?;
    let finest = levels - 1;
    let seed = path_seed(cfg.ensemble.master_seed, index as u64);
    let dt = cfg.discretization.base_dt / (1usize << finest) as f64;
    if target == ConvergenceTarget::Weak {
        spec = spec
            .with_mode(SimulationMode::JumpDecomposition)
            .with_policy(SmallJumpPolicy::Drop)
            .with_cutoff(weak_cutoff(spec.cutoff_delta, spec.alpha, finest));
    }
    let fine = sample_path(&spec, cfg.discretization.horizon, dt, seed)?;
    (0..levels)
        .map(|l| {
            let p = fine.coarsen(1 << (finest - l))?;
            if target == ConvergenceTarget::Weak && l < finest {
                p.drop_jumps_below(weak_cutoff(cfg.noise.cutoff_delta, spec.alpha, l))
            } else {
                Ok(p)
            }
        })
        .collect()
}

fn round_trip(cfg: &ExperimentConfig, path: &LevyPath, points: &[Vec<f64>]) -> Result<f64> {
    let b = cfg.drift_field()?;
    let n = path.n_cells();
    let mut worst: f64 = 0.0;
    for x in points {
        let y = solve_forward(&b, x, path)?.last().to_vec();
        let back = inverse_map(&b, &y, path, 0, n)?;
        worst = worst.max(crate::flow_engine::distance(&back, x));
    }
    Ok(worst)
}

fn transport_residual(cfg: &ExperimentConfig, target: ConvergenceTarget, path: &LevyPath, h: f64) -> Result<f64> {
    let b = cfg.drift_field()?;
    let (theta, u0) = test_pair(cfg);
    let lattice = Lattice::cube(&cfg.center(), cfg.discretization.half_width, h)?;
    let sol = solve(&b, &u0, path, &[0.0], lattice)?;
    let t = cfg.discretization.horizon;
    match target {
        ConvergenceTarget::Perturbative => perturbative_residual(&sol, &theta, t),
        _ => weak_residual(&sol, &theta, t),
    }
}

/// Test function and initial datum configured by `theta_*` and `datum_*`.
pub(crate) fn test_pair(cfg: &ExperimentConfig) -> (TestFunction, InitialDatum) {
    let d = cfg.noise.dim;
    let p = &cfg.params;
    let theta = TestFunction::bump(
        p.theta_center.clone().unwrap_or_else(|| vec![0.0; d]),
        p.theta_radius.unwrap_or(0.7),
    );
    let mut dc = vec![0.0; d];
    dc[0] = 0.1;
    let u0 = InitialDatum::bump(p.datum_center.clone().unwrap_or(dc), p.datum_radius.unwrap_or(0.9), 1.0);
    (theta, u0)
}

/// Default round-trip points: 21 equispaced points across the box in 1D,
/// the lattice cell centres otherwise.
pub(crate) fn round_trip_points(cfg: &ExperimentConfig) -> Result<Vec<Vec<f64>>> {
    if cfg.params.points.is_some() || cfg.noise.dim != 1 {
        return cfg.points();
    }
    let c = cfg.center()[0];
    let w = cfg.discretization.half_width;
    Ok((0..21).map(|i| vec![c - w + 2.0 * w * i as f64 / 20.0]).collect())
}

/// Median over paths of the target quantity at each level; level `l` uses
/// `base_dt / 2^l` and `h / 2^l` on nested paths.
pub fn convergence_table(cfg: &ExperimentConfig, levels: usize) -> Result<ConvergenceTable> {
    if levels < 3 {
        return Err(Error::validation("params.levels", "at least 3 refinement levels are needed"));
    }
    let target = cfg.params.target.unwrap_or(ConvergenceTarget::RoundTrip);
    let points = round_trip_points(cfg)?;
    let per_path = (0..cfg.ensemble.n_paths)
        .into_par_iter()
        .map(|i| {
            let paths = level_paths(cfg, target, levels, i)?;
            paths
                .iter()
                .enumerate()
                .map(|(l, p)| {
                    let h = cfg.discretization.h / (1usize << l) as f64;
                    match target {
                        ConvergenceTarget::RoundTrip => round_trip(cfg, p, &points),
                        _ => transport_residual(cfg, target, p, h),
                    }
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let values: Vec<f64> = (0..levels)
        .map(|l| median(&per_path.iter().map(|r| r[l]).collect::<Vec<_>>()))
        .collect();
    let steps: Vec<f64> = (0..levels)
        .map(|l| cfg.discretization.base_dt / (1usize << l) as f64)
        .collect();
    fit_order(&steps, &values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_series_is_exact() {
        let t = fit_order(&[0.1, 0.05, 0.025], &[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(t.order, FittedOrder::Exact);
        assert_eq!(t.order.to_string(), "exact");
        assert!(t.monotone);
    }

    #[test]
    fn first_order_series() {
        let e = 0.37;
        let t = fit_order(&[0.1, 0.05, 0.025], &[e, e / 2.0, e / 4.0]).unwrap();
        match t.order {
            FittedOrder::Fitted { order, std_error } => {
                assert!((order - 1.0).abs() < 0.01);
                assert!(std_error < 0.01);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn non_monotone_is_flagged_not_fatal() {
        let t = fit_order(&[0.1, 0.05, 0.025], &[1.0, 2.0, 0.5]).unwrap();
        assert!(!t.monotone);
        assert!(matches!(t.order, FittedOrder::Fitted { .. }));
        let t = fit_order(&[0.1, 0.05, 0.025], &[1.0, 0.0, 0.5]).unwrap();
        assert_eq!(t.order, FittedOrder::Degenerate);
        assert!(fit_order(&[0.1, 0.05], &[1.0, 0.5]).is_err());
    }

    #[test]
    fn cutoff_schedule() {
        assert!((weak_cutoff(1.0, 1.5, 2) - 1.0 / 16.0).abs() < 1e-15);
        assert_eq!(weak_cutoff(0.5, 1.0, 0), 0.5);
    }
}
