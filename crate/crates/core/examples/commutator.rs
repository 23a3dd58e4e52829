//! Mollification of the Hölder counterexample drift and the commutator
//! `R_ε[b,u]` tested against a density transported by the flow.

use levy_transport::drift_fields::{commutator, mollify, DriftField, MollifierSpec};
use levy_transport::experiments::{commutator_sweep, Experiment, ExperimentConfig};
use levy_transport::lattice::{GridField, Lattice};

fn main() -> levy_transport::Result<()> {
    let b = DriftField::counterexample(0.7, 1.0)?;
    for eps in [0.2, 0.1, 0.05] {
        let m = MollifierSpec::new(eps, 1)?;
        let be = mollify(&b, &m)?;
        println!(
            "eps = {eps}: b^eps(0.01) = {:.5} (b = {:.5}), div b^eps(0) = {:.3}",
            be.eval(&[0.01])[0],
            b.eval(&[0.01])[0],
            be.divergence(&[0.0])?
        );
    }

    let u = GridField::sample(Lattice::cube(&[0.0], 1.0, 0.002)?, |x| (-4.0 * x[0] * x[0]).exp());
    for eps in [0.2, 0.1, 0.05] {
        let r = commutator(&b, &u, &MollifierSpec::new(eps, 1)?, &[0.1])?;
        println!("R_eps[b,u](0.1) = {r:.4e} at eps = {eps}");
    }

    let mut cfg = ExperimentConfig::default_for(Experiment::Commutator);
    cfg.ensemble.n_paths = 2;
    let eps = [0.2, 0.1, 0.05, 0.025];
    for (e, est) in eps.iter().zip(commutator_sweep(&cfg, &eps)?) {
        println!("eps = {e}: |int R_eps(phi(x)) rho(x) dx| = {:.3e}", est.mean);
    }
    Ok(())
}
