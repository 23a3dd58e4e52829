//! Monte Carlo over seeded path ensembles: two-point moments and the
//! stability of flows under mollification of the drift.

use levy_transport::drift_fields::{mollify, DriftField, MollifierSpec};
use levy_transport::experiments::fit_order;
use levy_transport::flow_engine::{moment_estimate, stability_sweep, EnsembleConfig};
use levy_transport::levy_noise::StableSpec;

fn main() -> levy_transport::Result<()> {
    let cfg = EnsembleConfig {
        spec: StableSpec::new(1.5, 1.0, 1)?,
        horizon: 1.0,
        base_dt: 0.01,
        n_paths: 500,
        master_seed: 1,
    };
    let b = DriftField::counterexample(0.6, 1.0)?;
    let seps = [1e-1, 1e-2, 1e-3];
    let mut means = Vec::new();
    for s in seps {
        let e = moment_estimate(&b, &cfg, &[0.0], &[s], 2.0)?;
        println!("|x - y| = {s:e}: E sup|X^x - X^y|^2 = {:.3e} ± {:.1e}", e.mean, e.std_error);
        means.push(e.mean);
    }
    println!("log-log slope {}", fit_order(&seps, &means)?.order);

    let approximants = [0.2, 0.1, 0.05]
        .iter()
        .map(|&e| mollify(&b, &MollifierSpec::new(e, 1)?))
        .collect::<levy_transport::Result<Vec<_>>>()?;
    let cfg = EnsembleConfig { n_paths: 100, ..cfg };
    let points = vec![vec![-0.5], vec![0.0], vec![0.5]];
    for (e, est) in [0.2, 0.1, 0.05].iter().zip(stability_sweep(&b, &approximants, &cfg, &points, 2.0)?) {
        println!("eps = {e}: E sup|phi^eps - phi|^2 = {:.3e}", est.mean);
    }
    Ok(())
}
