use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Uniform periodic grid `[−P/2, P/2)^d` with `n` nodes per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusGrid {
    pub period: f64,
    pub n: usize,
    pub dim: usize,
}

impl TorusGrid {
    pub fn new(period: f64, n: usize, dim: usize) -> Result<Self> {
        if !(period > 0.0) || n < 2 || n % 2 != 0 || !(1..=2).contains(&dim) {
            return Err(Error::InvalidSpec(format!(
                "torus needs a positive period, an even node count and d ∈ {{1, 2}} (got P = {period}, n = {n}, d = {dim})"
            )));
        }
        Ok(TorusGrid { period, n, dim })
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn lower(&self) -> f64 {
        -0.5 * self.period
    }

    pub fn spacing(&self) -> f64 {
        self.period / self.n as f64
    }

    /// Node with flat index `flat` (last axis fastest).
    pub fn node(&self, flat: usize, out: &mut [f64]) {
        let mut rem = flat;
        for a in (0..self.dim).rev() {
            out[a] = self.lower() + (rem % self.n) as f64 * self.spacing();
            rem /= self.n;
        }
    }

    pub fn nodes(&self) -> Vec<Vec<f64>> {
        let mut x = vec![0.0; self.dim];
        (0..self.len())
            .map(|k| {
                self.node(k, &mut x);
                x.clone()
            })
            .collect()
    }

    /// Integer mode number along one axis for FFT index `i`.
    pub fn mode(&self, i: usize) -> i64 {
        if i <= self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// Angular frequency `2π m / P` of FFT index `i`.
    pub fn frequency(&self, i: usize) -> f64 {
        2.0 * std::f64::consts::PI * self.mode(i) as f64 / self.period
    }

    /// Frequency vector of flat mode index `flat`.
    pub fn frequency_vector(&self, flat: usize, out: &mut [f64]) {
        let mut rem = flat;
        for a in (0..self.dim).rev() {
            out[a] = self.frequency(rem % self.n);
            rem /= self.n;
        }
    }

    fn is_nyquist(&self, flat: usize, axis: usize) -> bool {
        let stride = self.n.pow((self.dim - 1 - axis) as u32);
        (flat / stride) % self.n == self.n / 2
    }
}

/// Fourier coefficients on a torus grid, normalized so that
/// `f(x_j) = Σ_m c_m e^{i ξ_m·(x_j − x_0)}` at the nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    pub grid: TorusGrid,
    pub coeffs: Vec<Complex64>,
}

fn plans(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let mut planner = FftPlanner::new();
    if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    }
}

fn transform(grid: &TorusGrid, data: &mut [Complex64], inverse: bool) {
    let n = grid.n;
    let fft = plans(n, inverse);
    match grid.dim {
        1 => fft.process(data),
        _ => {
            for row in data.chunks_mut(n) {
                fft.process(row);
            }
            let mut col = vec![Complex64::new(0.0, 0.0); n];
            for j in 0..n {
                for i in 0..n {
                    col[i] = data[i * n + j];
                }
                fft.process(&mut col);
                for i in 0..n {
                    data[i * n + j] = col[i];
                }
            }
        }
    }
}

impl SpectralField {
    pub fn from_values(grid: TorusGrid, values: &[f64]) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidSpec(format!(
                "expected {} nodal values, got {}",
                grid.len(),
                values.len()
            )));
        }
        let mut data: Vec<Complex64> = values.iter().map(|v| Complex64::new(*v, 0.0)).collect();
        transform(&grid, &mut data, false);
        let scale = 1.0 / grid.len() as f64;
        for c in data.iter_mut() {
            *c *= scale;
        }
        Ok(SpectralField { grid, coeffs: data })
    }

    pub fn from_fn(grid: TorusGrid, f: impl Fn(&[f64]) -> f64) -> Self {
        let values: Vec<f64> = grid.nodes().iter().map(|x| f(x)).collect();
        SpectralField::from_values(grid, &values).expect("node count matches by construction")
    }

    pub fn zeros(grid: TorusGrid) -> Self {
        SpectralField {
            grid,
            coeffs: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    /// Nodal values (real part of the inverse transform).
    pub fn values(&self) -> Vec<f64> {
        let mut data = self.coeffs.clone();
        transform(&self.grid, &mut data, true);
        data.iter().map(|c| c.re).collect()
    }

    /// Largest `|c_m − conj(c_{−m})|`.
    pub fn conjugate_symmetry_defect(&self) -> f64 {
        let n = self.grid.n;
        let neg = |i: usize| (n - i) % n;
        let mut worst: f64 = 0.0;
        for flat in 0..self.coeffs.len() {
            let partner = match self.grid.dim {
                1 => neg(flat),
                _ => neg(flat / n) * n + neg(flat % n),
            };
            worst = worst.max((self.coeffs[flat] - self.coeffs[partner].conj()).norm());
        }
        worst
    }

    /// Multiplies every mode by `m(ξ)`.
    pub fn map_modes(&self, m: impl Fn(&[f64]) -> f64) -> SpectralField {
        let mut xi = vec![0.0; self.grid.dim];
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| {
                self.grid.frequency_vector(k, &mut xi);
                c * m(&xi)
            })
            .collect();
        SpectralField { grid: self.grid, coeffs }
    }

    /// `∂v/∂x_axis`; the Nyquist mode along that axis is dropped so the
    /// result stays real.
    pub fn derivative(&self, axis: usize) -> SpectralField {
        let mut xi = vec![0.0; self.grid.dim];
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| {
                if self.grid.is_nyquist(k, axis) {
                    return Complex64::new(0.0, 0.0);
                }
                self.grid.frequency_vector(k, &mut xi);
                c * Complex64::new(0.0, xi[axis])
            })
            .collect();
        SpectralField { grid: self.grid, coeffs }
    }

    pub fn add(&self, other: &SpectralField) -> SpectralField {
        SpectralField {
            grid: self.grid,
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> SpectralField {
        SpectralField {
            grid: self.grid,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    /// `Σ_m conj(c_m) d_m`, the mode-space inner product (node mean of `v w`).
    pub fn inner(&self, other: &SpectralField) -> f64 {
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| (a.conj() * b).re).sum()
    }

    /// Trigonometric interpolant at an arbitrary point. The Nyquist mode is
    /// evaluated as a cosine so the result is real and periodic.
    pub fn eval(&self, x: &[f64]) -> f64 {
        let g = &self.grid;
        let n = g.n;
        let axis_phases = |xa: f64| -> Vec<Complex64> {
            let step = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * (xa - g.lower()) / g.period);
            let mut out = vec![Complex64::new(0.0, 0.0); n];
            let mut cur = Complex64::new(1.0, 0.0);
            out[0] = cur;
            for m in 1..=n / 2 {
                cur *= step;
                out[m] = cur;
                if m < n / 2 {
                    out[n - m] = cur.conj();
                }
            }
            // Nyquist: cos(ξ x) instead of e^{iξx}
            out[n / 2] = Complex64::new(out[n / 2].re, 0.0);
            out
        };
        match g.dim {
            1 => {
                let ph = axis_phases(x[0]);
                self.coeffs.iter().zip(&ph).map(|(c, p)| (c * p).re).sum()
            }
            _ => {
                let p0 = axis_phases(x[0]);
                let p1 = axis_phases(x[1]);
                let mut acc = 0.0;
                for i in 0..n {
                    let row: Complex64 = (0..n).map(|j| self.coeffs[i * n + j] * p1[j]).sum();
                    acc += (row * p0[i]).re;
                }
                acc
            }
        }
    }

    pub fn sup(&self) -> f64 {
        self.values().iter().fold(0.0, |m: f64, v| m.max(v.abs()))
    }
}
