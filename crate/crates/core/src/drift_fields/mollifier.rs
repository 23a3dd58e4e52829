use std::sync::Arc;

use super::DriftField;
use crate::error::{Error, Result};
use crate::levy_noise::surface_factor;
use crate::quad;

fn smooth_ramp(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

fn smooth_ramp_slope(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp() / (t * t)
    } else {
        0.0
    }
}

const INNER: f64 = 0.25;
const OUTER: f64 = 2.0;

/// Radial profile of the base kernel: identically 1 on `[0, 1/4]`,
/// identically 0 beyond 2, smooth and monotone in between.
pub fn base_kernel(r: f64) -> f64 {
    let a = smooth_ramp(OUTER - r);
    let b = smooth_ramp(r - INNER);
    a / (a + b)
}

/// `d/dr` of [`base_kernel`].
pub fn base_kernel_slope(r: f64) -> f64 {
    let a = smooth_ramp(OUTER - r);
    let b = smooth_ramp(r - INNER);
    if a == 0.0 || b == 0.0 {
        return 0.0;
    }
    let da = -smooth_ramp_slope(OUTER - r);
    let db = smooth_ramp_slope(r - INNER);
    (da * b - a * db) / ((a + b) * (a + b))
}

/// Mollifier `ϑ_ε(x) = ε^{-d} c_d ϑ̄(x/ε)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MollifierSpec {
    pub epsilon: f64,
    /// `c_d` with `c_d ∫ϑ̄ = 1`.
    pub normalization: f64,
    pub dim: usize,
    /// Gauss–Legendre panels per axis on `[-2ε, 2ε]` (16 nodes each);
    /// defaults to 4 in one dimension, 2 in two, 1 above.
    pub panels: usize,
}

impl MollifierSpec {
    pub fn new(epsilon: f64, dim: usize) -> Result<Self> {
        if !(epsilon > 0.0) || dim == 0 {
            return Err(Error::InvalidSpec(format!("mollifier needs ε > 0 and d ≥ 1, got ε = {epsilon}")));
        }
        let d = dim as i32;
        let mass = quad::adaptive(
            |r: f64| base_kernel(r) * r.powi(d - 1),
            0.0,
            OUTER,
            1e-13,
            1e-15,
            2000,
        );
        if !mass.converged {
            return Err(Error::Numeric {
                step: 0,
                context: "kernel normalization did not converge".into(),
            });
        }
        Ok(MollifierSpec {
            epsilon,
            normalization: 1.0 / (surface_factor(dim) * mass.value),
            dim,
            panels: match dim {
                1 => 4,
                2 => 2,
                _ => 1,
            },
        })
    }

    pub fn with_panels(mut self, panels: usize) -> Self {
        self.panels = panels.max(1);
        self
    }

    /// `ϑ_ε(y)`.
    pub fn kernel(&self, y: &[f64]) -> f64 {
        let r = norm(y) / self.epsilon;
        self.normalization * base_kernel(r) / self.epsilon.powi(self.dim as i32)
    }

    /// `∇ϑ_ε(y)` written into `out`.
    pub fn kernel_gradient(&self, y: &[f64], out: &mut [f64]) {
        let n = norm(y);
        if n == 0.0 {
            out.fill(0.0);
            return;
        }
        let slope = self.normalization * base_kernel_slope(n / self.epsilon)
            / self.epsilon.powi(self.dim as i32 + 1);
        for (o, yi) in out.iter_mut().zip(y) {
            *o = slope * yi / n;
        }
    }

    /// Tensor Gauss–Legendre nodes and weights on `[-2ε, 2ε]^d`.
    pub(crate) fn nodes(&self) -> (Vec<Vec<f64>>, Vec<f64>) {
        let (x, w) = quad::gauss_legendre(16);
        let half = 2.0 * self.epsilon;
        let width = 2.0 * half / self.panels as f64;
        let mut axis_nodes = Vec::new();
        let mut axis_weights = Vec::new();
        for p in 0..self.panels {
            let a = -half + p as f64 * width;
            for (xi, wi) in x.iter().zip(&w) {
                axis_nodes.push(a + 0.5 * width * (xi + 1.0));
                axis_weights.push(0.5 * width * wi);
            }
        }
        let m = axis_nodes.len();
        let total = m.pow(self.dim as u32);
        let mut nodes = Vec::with_capacity(total);
        let mut weights = Vec::with_capacity(total);
        for flat in 0..total {
            let mut rem = flat;
            let mut node = vec![0.0; self.dim];
            let mut wt = 1.0;
            for a in (0..self.dim).rev() {
                let i = rem % m;
                rem /= m;
                node[a] = axis_nodes[i];
                wt *= axis_weights[i];
            }
            nodes.push(node);
            weights.push(wt);
        }
        (nodes, weights)
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `b^ε = b ∗ ϑ_ε` by tensor Gauss–Legendre quadrature.
///
/// The discrete weights are non-negative and normalized to sum to one, so
/// constants are reproduced exactly, the sup norm and Hölder seminorm cannot
/// grow, and `|b^ε - b| ≤ [b]_β (2ε)^β`. The jacobian is obtained by
/// differentiating the kernel (`Db^ε(x) = ∫ b(x-y) ⊗ ∇ϑ_ε(y) dy`), rescaled
/// so that linear fields have exact jacobians.
pub fn mollify(field: &DriftField, spec: &MollifierSpec) -> Result<DriftField> {
    let d = field.dim();
    if spec.dim != d {
        return Err(Error::InvalidSpec(format!(
            "mollifier dimension {} does not match field dimension {d}",
            spec.dim
        )));
    }
    if !field.bound_sup.is_finite() {
        return Err(Error::InvalidSpec(format!("cannot mollify unbounded drift `{}`", field.name())));
    }
    let (nodes, weights) = spec.nodes();
    let mut value_w: Vec<f64> = nodes.iter().zip(&weights).map(|(y, w)| w * spec.kernel(y)).collect();
    let mass: f64 = value_w.iter().sum();
    if !(mass > 0.0) {
        return Err(Error::Numeric {
            step: 0,
            context: "mollifier weights vanish".into(),
        });
    }
    for v in value_w.iter_mut() {
        *v /= mass;
    }

    let mut grad_w = vec![0.0; nodes.len() * d];
    for (j, (y, w)) in nodes.iter().zip(&weights).enumerate() {
        spec.kernel_gradient(y, &mut grad_w[j * d..(j + 1) * d]);
        for g in &mut grad_w[j * d..(j + 1) * d] {
            *g *= w;
        }
    }
    // -Σ w y_0 ∂_0ϑ(y) equals 1 in the continuum; use it as the scale.
    let moment: f64 = nodes.iter().enumerate().map(|(j, y)| -y[0] * grad_w[j * d]).sum();
    if !(moment > 0.0) {
        return Err(Error::Numeric {
            step: 0,
            context: "mollifier gradient moment is not positive".into(),
        });
    }
    for g in grad_w.iter_mut() {
        *g /= moment;
    }

    // Drop nodes that carry no weight.
    let keep: Vec<usize> = (0..nodes.len())
        .filter(|&j| value_w[j] != 0.0 || grad_w[j * d..(j + 1) * d].iter().any(|g| *g != 0.0))
        .collect();
    let offsets: Arc<Vec<f64>> = Arc::new(keep.iter().flat_map(|&j| nodes[j].clone()).collect());
    let value_w: Arc<Vec<f64>> = Arc::new(keep.iter().map(|&j| value_w[j]).collect());
    let grad_w: Arc<Vec<f64>> = Arc::new(keep.iter().flat_map(|&j| grad_w[j * d..(j + 1) * d].to_vec()).collect());

    let inner = field.eval_handle();
    let eval = {
        let (inner, offsets, value_w) = (inner.clone(), offsets.clone(), value_w.clone());
        Arc::new(move |x: &[f64], out: &mut [f64]| {
            out.fill(0.0);
            let mut shifted = [0.0f64; 8];
            let mut bv = [0.0f64; 8];
            let (shifted, bv) = scratch(d, &mut shifted, &mut bv);
            for (j, w) in value_w.iter().enumerate() {
                for i in 0..d {
                    shifted[i] = x[i] - offsets[j * d + i];
                }
                inner(shifted, bv);
                for i in 0..d {
                    out[i] += w * bv[i];
                }
            }
        })
    };
    let jacobian = {
        let (inner, offsets, grad_w) = (inner.clone(), offsets.clone(), grad_w.clone());
        Arc::new(move |x: &[f64], out: &mut [f64]| {
            out.fill(0.0);
            let mut shifted = [0.0f64; 8];
            let mut bv = [0.0f64; 8];
            let (shifted, bv) = scratch(d, &mut shifted, &mut bv);
            for j in 0..offsets.len() / d {
                for i in 0..d {
                    shifted[i] = x[i] - offsets[j * d + i];
                }
                inner(shifted, bv);
                for i in 0..d {
                    for l in 0..d {
                        out[i * d + l] += bv[i] * grad_w[j * d + l];
                    }
                }
            }
        })
    };
    let divergence = {
        let (inner, offsets, grad_w) = (inner, offsets, grad_w);
        Arc::new(move |x: &[f64]| {
            let mut shifted = [0.0f64; 8];
            let mut bv = [0.0f64; 8];
            let (shifted, bv) = scratch(d, &mut shifted, &mut bv);
            let mut acc = 0.0;
            for j in 0..offsets.len() / d {
                for i in 0..d {
                    shifted[i] = x[i] - offsets[j * d + i];
                }
                inner(shifted, bv);
                for i in 0..d {
                    acc += bv[i] * grad_w[j * d + i];
                }
            }
            acc
        })
    };
    Ok(DriftField::new(format!("mollified[{}; eps={}]", field.name(), spec.epsilon), d, eval)
        .with_jacobian(jacobian)
        .with_divergence(divergence)
        .with_holder(field.holder_beta, field.bound_sup, field.bound_holder))
}

fn scratch<'a>(d: usize, a: &'a mut [f64; 8], b: &'a mut [f64; 8]) -> (&'a mut [f64], &'a mut [f64]) {
    assert!(d <= 8, "mollified fields support dimensions up to 8");
    (&mut a[..d], &mut b[..d])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn kernel_sandwich_and_normalization() {
        for r in grid(0.0, 3.0, 3001) {
            let v = base_kernel(r);
            let lower = if r < 0.25 { 1.0 } else { 0.0 };
            let upper = if r < 2.0 { 1.0 } else { 0.0 };
            assert!(lower <= v && v <= upper, "r = {r}: {v}");
        }
        for d in 1..=3 {
            let m = MollifierSpec::new(1.0, d).unwrap();
            // c_d ∫ϑ̄ = 1, recomputed on an independent radial rule
            let (x, w) = quad::gauss_legendre(64);
            let mut total = 0.0;
            for p in 0..64 {
                let (a, b) = (p as f64 * 2.0 / 64.0, (p + 1) as f64 * 2.0 / 64.0);
                for (xi, wi) in x.iter().zip(&w) {
                    let r = a + 0.5 * (b - a) * (xi + 1.0);
                    total += 0.5 * (b - a) * wi * base_kernel(r) * r.powi(d as i32 - 1);
                }
            }
            let got = m.normalization * surface_factor(d) * total;
            assert!((got - 1.0).abs() < 1e-8, "d = {d}: {got}");
        }
    }

    #[test]
    fn slope_matches_finite_differences() {
        for r in [0.3, 0.8, 1.2, 1.9] {
            let h = 1e-6;
            let fd = (base_kernel(r + h) - base_kernel(r - h)) / (2.0 * h);
            assert!((fd - base_kernel_slope(r)).abs() < 1e-7, "r = {r}");
        }
    }

    #[test]
    fn constants_and_linear_fields_are_reproduced() {
        let m = MollifierSpec::new(0.3, 1).unwrap();
        let c = mollify(&DriftField::constant(vec![2.5]), &m).unwrap();
        for x in grid(-2.0, 2.0, 41) {
            assert!((c.eval(&[x])[0] - 2.5).abs() < 1e-14);
            assert!(c.divergence(&[x]).unwrap().abs() < 1e-13);
        }
        let m2 = MollifierSpec::new(0.2, 2).unwrap();
        let lin = DriftField::linear(vec![1.0, 2.0, -0.5, 0.3]).unwrap();
        // linear fields are unbounded; restrict with explicit bounds for mollification
        let lin = lin.with_holder(1.0, 1e6, 3.0);
        let lm = mollify(&lin, &m2).unwrap();
        let x = [0.7, -0.4];
        let got = lm.eval(&x);
        let want = lin.eval(&x);
        for i in 0..2 {
            assert!((got[i] - want[i]).abs() < 1e-13);
        }
        let mut jac = vec![0.0; 4];
        lm.jacobian_into(&x, &mut jac).unwrap();
        for (g, w) in jac.iter().zip(&[1.0, 2.0, -0.5, 0.3]) {
            assert!((g - w).abs() < 1e-12, "{jac:?}");
        }
    }

    #[test]
    fn convergence_bound_for_the_counterexample() {
        let b = DriftField::counterexample(0.5, 1.0).unwrap();
        let eps = 0.01;
        let be = mollify(&b, &MollifierSpec::new(eps, 1).unwrap()).unwrap();
        let bound = b.bound_holder * (2.0 * eps).powf(0.5);
        let mut worst: f64 = 0.0;
        for x in grid(-2.0, 2.0, 4001) {
            worst = worst.max((be.eval(&[x])[0] - b.eval(&[x])[0]).abs());
            assert!(be.eval(&[x])[0].abs() <= b.bound_sup + 1e-12);
        }
        assert!(worst <= bound, "{worst} > {bound}");
        assert!(worst > 0.0);
    }

    #[test]
    fn jacobian_matches_finite_differences_for_smooth_fields() {
        let b = DriftField::trig(1, 1.0, 1.0);
        for panels in [1, 2, 4, 8] {
            let be = mollify(&b, &MollifierSpec::new(0.1, 1).unwrap().with_panels(panels)).unwrap();
            let mut worst: f64 = 0.0;
            for x in grid(-3.0, 3.0, 13) {
                let h = 1e-5;
                let fd = (be.eval(&[x + h])[0] - be.eval(&[x - h])[0]) / (2.0 * h);
                worst = worst.max((fd - be.divergence(&[x]).unwrap()).abs());
            }
            if panels >= 4 {
                assert!(worst < 1e-6, "panels = {panels}: {worst}");
            }
        }
    }
}
