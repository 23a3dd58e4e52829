//! Drift vector fields, their mollified approximations and the
//! mollification commutator.

mod commutator;
mod mollifier;
mod registry;

pub use commutator::{commutator, commutator_pairing, FlowSamples};
pub use mollifier::{base_kernel, base_kernel_slope, mollify, MollifierSpec};
pub use registry::parse_field;
pub(crate) use registry::parse_call;

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

pub type VectorFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;
pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A drift `b: R^d → R^d` with optional derivative handles and Hölder
/// metadata (`‖b‖_0 ≤ bound_sup`, `[b]_β ≤ bound_holder`).
#[derive(Clone)]
pub struct DriftField {
    name: String,
    dim: usize,
    eval: VectorFn,
    /// Row-major `∂b_i/∂x_j`.
    jacobian: Option<VectorFn>,
    divergence: Option<ScalarFn>,
    pub holder_beta: f64,
    pub bound_sup: f64,
    pub bound_holder: f64,
}

impl fmt::Debug for DriftField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DriftField")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("jacobian", &self.jacobian.is_some())
            .field("divergence", &self.divergence.is_some())
            .field("holder_beta", &self.holder_beta)
            .field("bound_sup", &self.bound_sup)
            .field("bound_holder", &self.bound_holder)
            .finish()
    }
}

impl DriftField {
    pub fn new(name: impl Into<String>, dim: usize, eval: VectorFn) -> Self {
        DriftField {
            name: name.into(),
            dim,
            eval,
            jacobian: None,
            divergence: None,
            holder_beta: 1.0,
            bound_sup: f64::INFINITY,
            bound_holder: f64::INFINITY,
        }
    }

    pub fn with_jacobian(mut self, jacobian: VectorFn) -> Self {
        self.jacobian = Some(jacobian);
        self
    }

    pub fn with_divergence(mut self, divergence: ScalarFn) -> Self {
        self.divergence = Some(divergence);
        self
    }

    /// Divergence taken as the trace of the jacobian handle.
    pub fn with_trace_divergence(mut self) -> Self {
        if let Some(jac) = self.jacobian.clone() {
            let d = self.dim;
            self.divergence = Some(Arc::new(move |x: &[f64]| {
                let mut m = vec![0.0; d * d];
                jac(x, &mut m);
                (0..d).map(|i| m[i * d + i]).sum()
            }));
        }
        self
    }

    pub fn with_holder(mut self, beta: f64, bound_sup: f64, bound_holder: f64) -> Self {
        self.holder_beta = beta;
        self.bound_sup = bound_sup;
        self.bound_holder = bound_holder;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn has_jacobian(&self) -> bool {
        self.jacobian.is_some()
    }

    pub fn has_divergence(&self) -> bool {
        self.divergence.is_some()
    }

    #[inline]
    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        (self.eval)(x, out)
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        (self.eval)(x, &mut out);
        out
    }

    pub fn jacobian_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        let jac = self
            .jacobian
            .as_ref()
            .ok_or_else(|| Error::Capability(format!("drift `{}` has no jacobian handle", self.name)))?;
        jac(x, out);
        Ok(())
    }

    pub fn divergence(&self, x: &[f64]) -> Result<f64> {
        let div = self
            .divergence
            .as_ref()
            .ok_or_else(|| Error::Capability(format!("drift `{}` has no divergence handle", self.name)))?;
        Ok(div(x))
    }

    pub(crate) fn divergence_handle(&self) -> Result<ScalarFn> {
        self.divergence
            .clone()
            .ok_or_else(|| Error::Capability(format!("drift `{}` has no divergence handle", self.name)))
    }

    pub(crate) fn eval_handle(&self) -> VectorFn {
        self.eval.clone()
    }

    pub fn zero(dim: usize) -> Self {
        DriftField::new("zero", dim, Arc::new(|_: &[f64], out: &mut [f64]| out.fill(0.0)))
            .with_jacobian(Arc::new(|_: &[f64], out: &mut [f64]| out.fill(0.0)))
            .with_divergence(Arc::new(|_: &[f64]| 0.0))
            .with_holder(1.0, 0.0, 0.0)
    }

    /// Constant field `b ≡ c`.
    pub fn constant(c: Vec<f64>) -> Self {
        let dim = c.len();
        let sup = c.iter().map(|v| v * v).sum::<f64>().sqrt();
        DriftField::new(
            "constant",
            dim,
            Arc::new(move |_: &[f64], out: &mut [f64]| out.copy_from_slice(&c)),
        )
        .with_jacobian(Arc::new(|_: &[f64], out: &mut [f64]| out.fill(0.0)))
        .with_divergence(Arc::new(|_: &[f64]| 0.0))
        .with_holder(1.0, sup, 0.0)
    }

    /// Componentwise `b_i(x) = amplitude · sin(frequency · x_i)`.
    pub fn trig(dim: usize, amplitude: f64, frequency: f64) -> Self {
        let a = amplitude;
        let w = frequency;
        DriftField::new(
            format!("trig({a},{w})"),
            dim,
            Arc::new(move |x: &[f64], out: &mut [f64]| {
                for (o, xi) in out.iter_mut().zip(x) {
                    *o = a * (w * xi).sin();
                }
            }),
        )
        .with_jacobian(Arc::new(move |x: &[f64], out: &mut [f64]| {
            let d = x.len();
            out.fill(0.0);
            for i in 0..d {
                out[i * d + i] = a * w * (w * x[i]).cos();
            }
        }))
        .with_divergence(Arc::new(move |x: &[f64]| x.iter().map(|xi| a * w * (w * xi).cos()).sum()))
        .with_holder(1.0, a.abs() * (dim as f64).sqrt(), (a * w).abs() * (dim as f64).sqrt())
    }

    /// Linear field `b(x) = M x` with row-major `matrix`.
    pub fn linear(matrix: Vec<f64>) -> Result<Self> {
        let d = (matrix.len() as f64).sqrt().round() as usize;
        if d * d != matrix.len() || d == 0 {
            return Err(Error::InvalidSpec(format!(
                "linear drift needs a square matrix, got {} entries",
                matrix.len()
            )));
        }
        let trace: f64 = (0..d).map(|i| matrix[i * d + i]).sum();
        let m = Arc::new(matrix);
        let m_eval = m.clone();
        let m_jac = m.clone();
        let op_norm = frobenius(&m);
        Ok(DriftField::new(
            "linear",
            d,
            Arc::new(move |x: &[f64], out: &mut [f64]| {
                for i in 0..d {
                    out[i] = (0..d).map(|j| m_eval[i * d + j] * x[j]).sum();
                }
            }),
        )
        .with_jacobian(Arc::new(move |_: &[f64], out: &mut [f64]| out.copy_from_slice(&m_jac)))
        .with_divergence(Arc::new(move |_: &[f64]| trace))
        .with_holder(1.0, f64::INFINITY, op_norm))
    }

    /// The one-dimensional non-uniqueness drift
    /// `b(x) = sign(x) (|x| ∧ R)^γ / (1 - γ)`.
    ///
    /// Its divergence exists away from the origin only; the handle returns 0
    /// on the window `|x| < 1e-6` (see [`DriftField::counterexample_windowed`]).
    pub fn counterexample(gamma: f64, radius: f64) -> Result<Self> {
        DriftField::counterexample_windowed(gamma, radius, 1e-6)
    }

    pub fn counterexample_windowed(gamma: f64, radius: f64, eta: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::InvalidSpec(format!("gamma must lie in (0, 1), got {gamma}")));
        }
        if !(radius > 0.0) {
            return Err(Error::InvalidSpec(format!("R must be positive, got {radius}")));
        }
        let g = gamma;
        let r = radius;
        let scale = 1.0 / (1.0 - g);
        let sup = r.powf(g) * scale;
        let holder = 2f64.powf(1.0 - g) * scale;
        Ok(DriftField::new(
            format!("counterexample({g},{r})"),
            1,
            Arc::new(move |x: &[f64], out: &mut [f64]| {
                let v = x[0];
                out[0] = if v == 0.0 { 0.0 } else { v.signum() * v.abs().min(r).powf(g) * scale };
            }),
        )
        .with_divergence(Arc::new(move |x: &[f64]| {
            let a = x[0].abs();
            if a < eta || a >= r {
                0.0
            } else {
                g * scale * a.powf(g - 1.0)
            }
        }))
        .with_holder(g, sup, holder))
    }
}

fn frobenius(m: &[f64]) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Largest `|b(x)|` over the given points.
pub fn lattice_sup(field: &DriftField, points: &[Vec<f64>]) -> f64 {
    points
        .iter()
        .map(|p| field.eval(p).iter().map(|v| v * v).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
}

/// Largest difference quotient `|b(x) - b(y)| / |x - y|^β` over point pairs.
pub fn lattice_holder(field: &DriftField, points: &[Vec<f64>], beta: f64) -> f64 {
    let values: Vec<Vec<f64>> = points.iter().map(|p| field.eval(p)).collect();
    let mut best: f64 = 0.0;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let dx: f64 = points[i].iter().zip(&points[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            if dx == 0.0 {
                continue;
            }
            let db: f64 = values[i].iter().zip(&values[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            best = best.max(db / dx.powf(beta));
        }
    }
    best
}
