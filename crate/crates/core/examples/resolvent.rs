//! Resolvent of the fractional generator with drift on the torus, the λ
//! search for the Itô–Tanaka transform and its conjugation defect.

use levy_transport::drift_fields::DriftField;
use levy_transport::kolmogorov_resolvent::{
    ito_tanaka_lambda_search, psi_transform, resolvent_free, solve_resolvent, verify_conjugation, SpectralField,
    TorusGrid,
};
use levy_transport::levy_noise::{sample_path, SimulationMode, StableSpec};

fn main() -> levy_transport::Result<()> {
    let grid = TorusGrid::new(std::f64::consts::TAU, 64, 1)?;
    let spec = StableSpec::new(1.0, 1.0, 1)?;
    let f = SpectralField::from_fn(grid, |x| x[0].cos());
    let v = resolvent_free(1.0, &spec, &f)?;
    println!("(1 - A)^-1 cos at 0: {:.15}", v.eval(&[0.0]));

    let spec = StableSpec::new(1.5, 1.0, 1)?.with_mode(SimulationMode::JumpDecomposition);
    let b = DriftField::trig(1, 0.5, 1.0);
    let sol = solve_resolvent(4.0, &spec, &b, &f, 1e-10, 200)?;
    println!("lambda = 4: {} iterations, residual {:.2e}", sol.iterations, sol.residual);

    let it = ito_tanaka_lambda_search(&b, &spec, &grid, 1e-10)?;
    for (lambda, norm) in &it.history {
        println!("  lambda = {lambda}: |Du| = {norm:?}");
    }
    let psi = psi_transform(it.u, it.lambda)?;
    let (lo, hi) = psi.jacobian_bounds();
    println!("lambda = {}, Dpsi in [{lo:.4}, {hi:.4}]", it.lambda);
    let fine: Vec<_> = (0..10)
        .map(|seed| sample_path(&spec, 1.0, 0.005, seed))
        .collect::<levy_transport::Result<_>>()?;
    for factor in [4, 2, 1] {
        let mut total = 0.0;
        for p in &fine {
            total += verify_conjugation(&b, &spec, &p.coarsen(factor)?, &[0.5], &psi)?;
        }
        println!("dt = {}: mean conjugation defect {:.3e}", 0.005 * factor as f64, total / 10.0);
    }
    Ok(())
}
