use std::fmt;
use std::sync::Arc;

use crate::drift_fields::{ScalarFn, VectorFn};

/// `exp(1 − 1/(1 − s))` for `s < 1`, else 0; equals 1 at `s = 0`.
fn profile(s: f64) -> f64 {
    if s < 1.0 {
        (1.0 - 1.0 / (1.0 - s)).exp()
    } else {
        0.0
    }
}

fn scaled_square(x: &[f64], center: &[f64], radius: f64) -> f64 {
    x.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum::<f64>() / (radius * radius)
}

/// Initial datum `u₀` with its sup bound `M`.
#[derive(Clone)]
pub struct InitialDatum {
    pub dim: usize,
    pub bound_m: f64,
    eval: ScalarFn,
}

impl fmt::Debug for InitialDatum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("InitialDatum")
            .field("dim", &self.dim)
            .field("bound_m", &self.bound_m)
            .finish()
    }
}

impl InitialDatum {
    pub fn from_fn(dim: usize, bound_m: f64, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        InitialDatum {
            dim,
            bound_m,
            eval: Arc::new(f),
        }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        InitialDatum::from_fn(dim, c.abs(), move |_| c)
    }

    /// Smooth bump of the given height supported in `B(center, radius)`.
    pub fn bump(center: Vec<f64>, radius: f64, height: f64) -> Self {
        let dim = center.len();
        InitialDatum::from_fn(dim, height.abs(), move |x| height * profile(scaled_square(x, &center, radius)))
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.eval)(x)
    }
}

/// Compactly supported test function with derivative handles.
#[derive(Clone)]
pub struct TestFunction {
    pub center: Vec<f64>,
    pub support_radius: f64,
    eval: ScalarFn,
    gradient: VectorFn,
    /// Row-major Hessian.
    hessian: VectorFn,
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestFunction")
            .field("center", &self.center)
            .field("support_radius", &self.support_radius)
            .finish()
    }
}

impl TestFunction {
    pub fn new(center: Vec<f64>, support_radius: f64, eval: ScalarFn, gradient: VectorFn, hessian: VectorFn) -> Self {
        TestFunction {
            center,
            support_radius,
            eval,
            gradient,
            hessian,
        }
    }

    pub fn zero(dim: usize) -> Self {
        TestFunction::new(
            vec![0.0; dim],
            0.0,
            Arc::new(|_| 0.0),
            Arc::new(|_, o: &mut [f64]| o.fill(0.0)),
            Arc::new(|_, o: &mut [f64]| o.fill(0.0)),
        )
    }

    /// `θ(x) = exp(1 − 1/(1 − |x − c|²/R²))` inside the ball, 0 outside.
    pub fn bump(center: Vec<f64>, radius: f64) -> Self {
        let (c1, c2, c3) = (center.clone(), center.clone(), center.clone());
        let r2 = radius * radius;
        TestFunction::new(
            center,
            radius,
            Arc::new(move |x| profile(scaled_square(x, &c1, radius))),
            Arc::new(move |x, out: &mut [f64]| {
                let s = scaled_square(x, &c2, radius);
                if s >= 1.0 {
                    out.fill(0.0);
                    return;
                }
                let p = profile(s);
                let ds = -p / ((1.0 - s) * (1.0 - s));
                for ((o, xi), ci) in out.iter_mut().zip(x).zip(&c2) {
                    *o = ds * 2.0 * (xi - ci) / r2;
                }
            }),
            Arc::new(move |x, out: &mut [f64]| {
                let d = x.len();
                let s = scaled_square(x, &c3, radius);
                if s >= 1.0 {
                    out.fill(0.0);
                    return;
                }
                let p = profile(s);
                let q = 1.0 - s;
                let ds = -p / (q * q);
                let dss = p * (2.0 * s - 1.0) / q.powi(4);
                for i in 0..d {
                    for j in 0..d {
                        let gi = 2.0 * (x[i] - c3[i]) / r2;
                        let gj = 2.0 * (x[j] - c3[j]) / r2;
                        out[i * d + j] = dss * gi * gj + if i == j { 2.0 * ds / r2 } else { 0.0 };
                    }
                }
            }),
        )
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.eval)(x)
    }

    pub fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        (self.gradient)(x, out)
    }

    pub fn hessian_into(&self, x: &[f64], out: &mut [f64]) {
        (self.hessian)(x, out)
    }

    pub fn laplacian(&self, x: &[f64]) -> f64 {
        let d = x.len();
        let mut h = vec![0.0; d * d];
        self.hessian_into(x, &mut h);
        (0..d).map(|i| h[i * d + i]).sum()
    }

    /// Average over unit directions `σ` of `θ(x + rσ) − θ(x) − rσ·Dθ(x)`,
    /// using `2m` directions in pairs `±σ` (so the gradient term cancels).
    /// Exact in one dimension; `m` equispaced angles in two.
    pub fn sphere_average_increment(&self, x: &[f64], r: f64, m: usize) -> f64 {
        let base = self.eval(x);
        let mut y = x.to_vec();
        let mut pair = |dir: &[f64]| -> f64 {
            for i in 0..x.len() {
                y[i] = x[i] + r * dir[i];
            }
            let plus = self.eval(&y);
            for i in 0..x.len() {
                y[i] = x[i] - r * dir[i];
            }
            0.5 * (plus + self.eval(&y)) - base
        };
        match x.len() {
            1 => pair(&[1.0]),
            2 => {
                let mut acc = 0.0;
                for k in 0..m {
                    let a = std::f64::consts::PI * (k as f64 + 0.5) / m as f64;
                    acc += pair(&[a.cos(), a.sin()]);
                }
                acc / m as f64
            }
            _ => f64::NAN,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_support_and_derivatives() {
        let t = TestFunction::bump(vec![0.3, -0.2], 0.7);
        assert_eq!(t.eval(&[0.3, -0.2]), 1.0);
        assert_eq!(t.eval(&[1.1, -0.2]), 0.0);
        let x = [0.5, 0.1];
        let h = 1e-5;
        let mut g = [0.0; 2];
        t.gradient_into(&x, &mut g);
        let mut hess = [0.0; 4];
        t.hessian_into(&x, &mut hess);
        for i in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[i] += h;
            xm[i] -= h;
            let fd = (t.eval(&xp) - t.eval(&xm)) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-6 * g[i].abs().max(1.0));
            let (mut gp, mut gm) = ([0.0; 2], [0.0; 2]);
            t.gradient_into(&xp, &mut gp);
            t.gradient_into(&xm, &mut gm);
            for j in 0..2 {
                assert!(((gp[j] - gm[j]) / (2.0 * h) - hess[j * 2 + i]).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn quadratic_second_difference_is_exact() {
        // θ(x) = x·Hx/2 with H = [[2, 1], [1, 4]]: the pairwise average is r² tr H / 4
        let quad = TestFunction::new(
            vec![0.0, 0.0],
            f64::INFINITY,
            Arc::new(|x| 0.5 * (2.0 * x[0] * x[0] + 2.0 * x[0] * x[1] + 4.0 * x[1] * x[1])),
            Arc::new(|_, o: &mut [f64]| o.fill(0.0)),
            Arc::new(|_, o: &mut [f64]| o.copy_from_slice(&[2.0, 1.0, 1.0, 4.0])),
        );
        for r in [0.1, 0.5, 1.0] {
            let avg = quad.sphere_average_increment(&[0.3, -0.4], r, 16);
            assert!((avg - r * r * 6.0 / 4.0).abs() < 1e-12, "{avg}");
        }
        let q1 = TestFunction::new(
            vec![0.0],
            f64::INFINITY,
            Arc::new(|x| 1.5 * x[0] * x[0] - x[0]),
            Arc::new(|_, o: &mut [f64]| o.fill(0.0)),
            Arc::new(|_, o: &mut [f64]| o[0] = 3.0),
        );
        assert!((q1.sphere_average_increment(&[0.7], 0.3, 1) - 0.5 * 0.09 * 3.0).abs() < 1e-14);
    }

    #[test]
    fn datum_bound() {
        let u = InitialDatum::bump(vec![0.0], 0.5, -2.0);
        assert_eq!(u.bound_m, 2.0);
        assert_eq!(u.eval(&[0.0]), -2.0);
        assert_eq!(u.eval(&[0.6]), 0.0);
    }
}
