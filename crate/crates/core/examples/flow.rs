//! Forward and inverse flows of `dX = b(X) dt + dL` on one noise path, with
//! the round-trip defect and the Jacobian along a trajectory.

use levy_transport::drift_fields::DriftField;
use levy_transport::flow_engine::{
    derivative_flow_variational, inverse_map, log_jacobian, semiflow_defect, solve_forward,
};
use levy_transport::levy_noise::{sample_path, StableSpec};

fn main() -> levy_transport::Result<()> {
    let spec = StableSpec::new(1.2, 1.0, 2)?;
    let b = DriftField::trig(2, 1.0, 1.0);
    let x = [0.3, -0.2];
    // nested grids: the coarse paths merge cells of the fine one
    let fine = sample_path(&spec, 1.0, 0.005, 5)?;
    for factor in [4, 2, 1] {
        let path = fine.coarsen(factor)?;
        let dt = 0.005 * factor as f64;
        let n = path.n_cells();
        let y = solve_forward(&b, &x, &path)?.last().to_vec();
        let back = inverse_map(&b, &y, &path, 0, n)?;
        let err = ((back[0] - x[0]).powi(2) + (back[1] - x[1]).powi(2)).sqrt();
        println!("dt = {dt}: phi(x) = ({:.5}, {:.5}), |phi^-1(phi(x)) - x| = {err:.3e}", y[0], y[1]);
    }

    let path = sample_path(&spec, 1.0, 0.01, 5)?;
    let d = derivative_flow_variational(&b, &x, &path)?;
    let logj = log_jacobian(&b, &x, &path)?;
    let n = path.n_cells();
    println!("det Dphi = {:.6}, exp(log J) = {:.6}", d.determinant(n), logj[n].exp());
    let t = path.times();
    println!("semiflow defect {:.1e}", semiflow_defect(&b, &path, 0.0, t[n / 3], t[n], &x)?);
    Ok(())
}
