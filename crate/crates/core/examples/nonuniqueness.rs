//! `ẋ = sign(x)|x|^γ` has two solutions from 0; common noise selects one
//! and makes nearby starts stick together.

use levy_transport::levy_noise::StableSpec;
use levy_transport::transport_solver::nonuniqueness_demo;

fn main() -> levy_transport::Result<()> {
    let spec = StableSpec::new(1.5, 1.0, 1)?;
    let perts = [1e-2, 1e-4, 1e-6];
    let r = nonuniqueness_demo(0.5, 4.0, Some(&spec), &perts, 100, 2.0, 1e-3, 0)?;
    for (p, (det, noisy)) in perts.iter().zip(r.deterministic.iter().zip(&r.noisy)) {
        println!(
            "x0 = {p:e}: without noise |X^x0 - X^0|(2) = {:.4}, with noise median {:.3e}",
            det.last().unwrap(),
            noisy.median_final
        );
    }
    Ok(())
}
