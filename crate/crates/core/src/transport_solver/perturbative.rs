use rayon::prelude::*;

use super::{pull_back, TestFunction, TransportSolution};
use crate::error::Result;
use crate::lattice::Lattice;

/// `|u_t(θ) − ∫θ(x + L_t) u₀(x) dx − ∫_0^t ∫ [b·Dθ + div b θ](x + L_t − L_r) u(r, x) dx dr|`.
///
/// The spatial integrals are taken in the shifted variable `w = x + L_t − L_r`
/// on a lattice over `supp θ`, with `u(r, w − L_t + L_r)` pulled back through
/// the inverse flow, so no jump ledger and no lattice inflation are needed.
/// The time integral is the left-end-point sum over grid cells.
pub fn perturbative_residual(solution: &TransportSolution, theta: &TestFunction, t: f64) -> Result<f64> {
    let path = &solution.path;
    let b = &solution.drift;
    let u0 = &solution.datum;
    let div = b.divergence_handle()?;
    let d = path.dim();
    let n = path.grid().index_of(t)?;
    let lat = Lattice::cube(&theta.center, theta.support_radius, solution.xgrid.spacing())?;
    let vol = lat.cell_volume();
    let support: Vec<(Vec<f64>, f64, Vec<f64>)> = lat
        .points()
        .into_iter()
        .filter_map(|w| {
            let th = theta.eval(&w);
            let mut g = vec![0.0; d];
            theta.gradient_into(&w, &mut g);
            (th != 0.0 || g.iter().any(|v| *v != 0.0)).then_some((w, th, g))
        })
        .collect();
    let lt = path.value_at_node(n).to_vec();

    let per_point = support
        .par_iter()
        .map(|(w, th, g)| -> Result<(f64, f64)> {
            let lhs = th * pull_back(b, u0, path, n, w)?;
            let mut x: Vec<f64> = w.iter().zip(&lt).map(|(a, l)| a - l).collect();
            let mut rhs = th * u0.eval(&x);
            let mut bv = vec![0.0; d];
            for k in 0..n {
                let lk = path.value_at_node(k);
                for i in 0..d {
                    x[i] = w[i] - (lt[i] - lk[i]);
                }
                b.eval_into(&x, &mut bv);
                let flux = bv.iter().zip(g).map(|(a, c)| a * c).sum::<f64>() + div(&x) * th;
                if flux != 0.0 {
                    rhs += path.grid().dt(k) * flux * pull_back(b, u0, path, k, &x)?;
                }
            }
            Ok((lhs, rhs))
        })
        .collect::<Result<Vec<_>>>()?;
    let (lhs, rhs) = per_point.iter().fold((0.0, 0.0), |(a, c), (l, r)| (a + l, c + r));
    Ok(((lhs - rhs) * vol).abs())
}
