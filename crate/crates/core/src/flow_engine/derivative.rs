use nalgebra::DMatrix;

use super::{check_dims, solve_between, solve_forward, Trajectory};
use crate::drift_fields::DriftField;
use crate::error::{Error, Result};
use crate::levy_noise::LevyPath;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DerivativeMethod {
    Variational,
    DifferenceQuotient(f64),
}

/// `Dφ_{0,t}(x)` at every grid node, row-major `d × d` per node.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeFlow {
    pub method: DerivativeMethod,
    pub dim: usize,
    pub matrices: Vec<f64>,
}

impl DerivativeFlow {
    pub fn len(&self) -> usize {
        self.matrices.len() / (self.dim * self.dim)
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    pub fn at(&self, node: usize) -> &[f64] {
        let m = self.dim * self.dim;
        &self.matrices[node * m..(node + 1) * m]
    }

    pub fn determinant(&self, node: usize) -> f64 {
        DMatrix::from_row_slice(self.dim, self.dim, self.at(node)).determinant()
    }
}

/// Variational equation `M_{k+1} = (I + Db(X_k) Δt_k) M_k`, `M_0 = I`.
pub fn derivative_flow_variational(b: &DriftField, x: &[f64], path: &LevyPath) -> Result<DerivativeFlow> {
    if !b.has_jacobian() {
        return Err(Error::Capability(format!(
            "drift `{}` has no jacobian; mollify it first",
            b.name()
        )));
    }
    let traj = solve_forward(b, x, path)?;
    let d = x.len();
    let dd = d * d;
    let n = path.n_cells();
    let mut matrices = Vec::with_capacity((n + 1) * dd);
    let mut m = vec![0.0; dd];
    for i in 0..d {
        m[i * d + i] = 1.0;
    }
    matrices.extend_from_slice(&m);
    let mut jac = vec![0.0; dd];
    let mut next = vec![0.0; dd];
    for k in 0..n {
        let dt = path.grid().dt(k);
        b.jacobian_into(traj.at(k), &mut jac)?;
        for i in 0..d {
            for j in 0..d {
                let mut acc = m[i * d + j];
                for l in 0..d {
                    acc += jac[i * d + l] * dt * m[l * d + j];
                }
                next[i * d + j] = acc;
            }
        }
        std::mem::swap(&mut m, &mut next);
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric {
                step: k,
                context: "variational equation produced a non-finite matrix".into(),
            });
        }
        matrices.extend_from_slice(&m);
    }
    Ok(DerivativeFlow {
        method: DerivativeMethod::Variational,
        dim: d,
        matrices,
    })
}

/// Default difference-quotient step `1e-5 (1 + |x|)`.
pub fn default_lambda(x: &[f64]) -> f64 {
    1e-5 * (1.0 + x.iter().map(|v| v * v).sum::<f64>().sqrt())
}

/// Column `(φ_t(x + λ e_axis) − φ_t(x)) / λ` at every grid node.
pub fn derivative_flow_fd(
    b: &DriftField,
    x: &[f64],
    path: &LevyPath,
    lambda: Option<f64>,
    axis: usize,
) -> Result<Vec<Vec<f64>>> {
    check_dims(b, x, path)?;
    let lambda = lambda.unwrap_or_else(|| default_lambda(x));
    if lambda == 0.0 || !lambda.is_finite() {
        return Err(Error::InvalidSpec("difference-quotient step must be non-zero".into()));
    }
    if axis >= x.len() {
        return Err(Error::InvalidSpec(format!("axis {axis} out of range")));
    }
    let base = solve_forward(b, x, path)?;
    let mut shifted_x = x.to_vec();
    shifted_x[axis] += lambda;
    let shifted = solve_forward(b, &shifted_x, path)?;
    Ok(column(&base, &shifted, lambda))
}

fn column(base: &Trajectory, shifted: &Trajectory, lambda: f64) -> Vec<Vec<f64>> {
    (base.first..=base.last_node())
        .map(|k| shifted.at(k).iter().zip(base.at(k)).map(|(a, b)| (a - b) / lambda).collect())
        .collect()
}

/// All columns of the difference-quotient derivative.
pub fn derivative_flow_fd_full(
    b: &DriftField,
    x: &[f64],
    path: &LevyPath,
    lambda: Option<f64>,
) -> Result<DerivativeFlow> {
    let d = x.len();
    let lambda = lambda.unwrap_or_else(|| default_lambda(x));
    let cols = (0..d)
        .map(|a| derivative_flow_fd(b, x, path, Some(lambda), a))
        .collect::<Result<Vec<_>>>()?;
    let n = cols[0].len();
    let mut matrices = vec![0.0; n * d * d];
    for (j, col) in cols.iter().enumerate() {
        for (k, v) in col.iter().enumerate() {
            for i in 0..d {
                matrices[k * d * d + i * d + j] = v[i];
            }
        }
    }
    Ok(DerivativeFlow {
        method: DerivativeMethod::DifferenceQuotient(lambda),
        dim: d,
        matrices,
    })
}

/// `log Jφ_{0,t_k}(x) = Σ_{j<k} div b(X_j) Δt_j`.
pub fn log_jacobian(b: &DriftField, x: &[f64], path: &LevyPath) -> Result<Vec<f64>> {
    let div = b.divergence_handle()?;
    let traj = solve_forward(b, x, path)?;
    let n = path.n_cells();
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    out.push(acc);
    for k in 0..n {
        acc += div(traj.at(k)) * path.grid().dt(k);
        out.push(acc);
    }
    Ok(out)
}

/// `Dφ⁻¹_{s,t}(y) = (Dφ_{s,t}(φ⁻¹_{s,t}(y)))⁻¹`, variational, between node
/// indices.
pub fn inverse_derivative(b: &DriftField, y: &[f64], path: &LevyPath, s: usize, t: usize) -> Result<Vec<f64>> {
    let pre = super::inverse_between(b, y, path, s, t)?;
    let x = pre.at(s).to_vec();
    let traj = solve_between(b, &x, path, s, t)?;
    let d = y.len();
    let mut m = DMatrix::<f64>::identity(d, d);
    let mut jac = vec![0.0; d * d];
    for k in s..t {
        b.jacobian_into(traj.at(k), &mut jac)?;
        let step = DMatrix::<f64>::identity(d, d) + DMatrix::from_row_slice(d, d, &jac) * path.grid().dt(k);
        m = step * m;
    }
    let inv = m.try_inverse().ok_or_else(|| Error::Numeric {
        step: t,
        context: "derivative flow is singular".into(),
    })?;
    Ok(inv.transpose().as_slice().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy_noise::{sample_path, StableSpec};

    fn spec1() -> StableSpec {
        StableSpec::new(1.5, 1.0, 1).unwrap()
    }

    #[test]
    fn zero_drift_has_identity_derivative() {
        let spec = StableSpec::new(1.2, 1.0, 2).unwrap();
        let path = sample_path(&spec, 1.0, 0.05, 2).unwrap();
        let b = DriftField::zero(2);
        let m = derivative_flow_variational(&b, &[0.1, 0.2], &path).unwrap();
        for k in 0..m.len() {
            assert_eq!(m.at(k), &[1.0, 0.0, 0.0, 1.0]);
        }
        let col = derivative_flow_fd(&b, &[0.1, 0.2], &path, None, 1).unwrap();
        for c in col {
            assert!((c[0]).abs() < 1e-9 && (c[1] - 1.0).abs() < 1e-9);
        }
        assert!(log_jacobian(&b, &[0.1, 0.2], &path).unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn linear_decay_derivative() {
        let path = LevyPath::zero(spec1(), 1.0, 1e-3).unwrap();
        let b = DriftField::linear(vec![-1.0]).unwrap();
        let m = derivative_flow_variational(&b, &[0.3], &path).unwrap();
        let last = m.at(m.len() - 1)[0];
        assert!((last - (-1f64).exp()).abs() < 1e-3);
        let lj = log_jacobian(&b, &[0.3], &path).unwrap();
        assert!((lj.last().unwrap() + 1.0).abs() < 1e-12);
        let fd = derivative_flow_fd(&b, &[0.3], &path, None, 0).unwrap();
        assert!((fd.last().unwrap()[0] - last).abs() < 1e-8);
    }

    #[test]
    fn methods_agree_for_smooth_drift() {
        let path = sample_path(&spec1(), 1.0, 1e-3, 11).unwrap();
        let b = DriftField::trig(1, 1.0, 1.0);
        let v = derivative_flow_variational(&b, &[0.5], &path).unwrap();
        let f = derivative_flow_fd_full(&b, &[0.5], &path, Some(1e-5)).unwrap();
        let f_neg = derivative_flow_fd_full(&b, &[0.5], &path, Some(-1e-5)).unwrap();
        for k in 0..v.len() {
            assert!((v.at(k)[0] - f.at(k)[0]).abs() < 1e-3);
            assert!((f_neg.at(k)[0] - f.at(k)[0]).abs() < 1e-4);
        }
        let lj = log_jacobian(&b, &[0.5], &path).unwrap();
        let last = v.len() - 1;
        assert!((v.determinant(last).ln() - lj[last]).abs() < 1e-2);
    }

    #[test]
    fn missing_jacobian_is_a_capability_error() {
        let path = LevyPath::zero(spec1(), 1.0, 0.1).unwrap();
        let b = DriftField::counterexample(0.5, 1.0).unwrap();
        assert!(matches!(
            derivative_flow_variational(&b, &[0.1], &path),
            Err(Error::Capability(_))
        ));
    }

    #[test]
    fn inverse_derivative_inverts() {
        let path = sample_path(&spec1(), 1.0, 1e-2, 4).unwrap();
        let b = DriftField::trig(1, 1.0, 1.0);
        let n = path.n_cells();
        let y = [0.3];
        let x = super::super::inverse_between(&b, &y, &path, 0, n).unwrap().at(0).to_vec();
        let fwd = derivative_flow_variational(&b, &x, &path).unwrap();
        let inv = inverse_derivative(&b, &y, &path, 0, n).unwrap();
        assert!((inv[0] * fwd.at(n)[0] - 1.0).abs() < 1e-12);
    }
}
