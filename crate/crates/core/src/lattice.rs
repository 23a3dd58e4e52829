//! Uniform cell-centred lattices used for midpoint quadrature and grid
//! fields.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lattice {
    lower: Vec<f64>,
    spacing: f64,
    shape: Vec<usize>,
}

impl Lattice {
    /// Cells of width `spacing` tiling the box `[lower, lower + shape·spacing]`.
    pub fn new(lower: Vec<f64>, spacing: f64, shape: Vec<usize>) -> Result<Self> {
        if !(spacing > 0.0) || lower.len() != shape.len() || lower.is_empty() {
            return Err(Error::InvalidSpec("lattice needs a positive spacing and matching extents".into()));
        }
        Ok(Lattice { lower, spacing, shape })
    }

    /// Smallest lattice of spacing close to `h` covering the cube of the
    /// given half width around `center`; the spacing is shrunk so that an
    /// integer number of cells fits exactly.
    pub fn cube(center: &[f64], half_width: f64, h: f64) -> Result<Self> {
        if !(half_width > 0.0 && h > 0.0) {
            return Err(Error::InvalidSpec("cube lattice needs positive width and spacing".into()));
        }
        let n = (2.0 * half_width / h - 1e-9).ceil().max(1.0) as usize;
        let spacing = 2.0 * half_width / n as f64;
        Lattice::new(
            center.iter().map(|c| c - half_width).collect(),
            spacing,
            vec![n; center.len()],
        )
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.shape)
            .map(|(l, &n)| l + n as f64 * self.spacing)
            .collect()
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dim() as i32)
    }

    /// Centre of the cell with flat (row-major, last axis fastest) index.
    pub fn point(&self, flat: usize, out: &mut [f64]) {
        let mut rem = flat;
        for axis in (0..self.dim()).rev() {
            let i = rem % self.shape[axis];
            rem /= self.shape[axis];
            out[axis] = self.lower[axis] + (i as f64 + 0.5) * self.spacing;
        }
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        let mut buf = vec![0.0; self.dim()];
        (0..self.len())
            .map(|k| {
                self.point(k, &mut buf);
                buf.clone()
            })
            .collect()
    }

    /// Whether the closed ball lies inside the lattice box.
    pub fn contains_ball(&self, center: &[f64], radius: f64) -> bool {
        let upper = self.upper();
        center
            .iter()
            .zip(&self.lower)
            .zip(&upper)
            .all(|((c, lo), hi)| c - radius >= *lo - 1e-12 && c + radius <= *hi + 1e-12)
    }

    /// Flat indices of cells whose centres lie within `radius` of `center`
    /// (clipped to the lattice).
    pub fn indices_near(&self, center: &[f64], radius: f64) -> Vec<usize> {
        let d = self.dim();
        let mut lo = vec![0usize; d];
        let mut hi = vec![0usize; d];
        for a in 0..d {
            let fl = ((center[a] - radius - self.lower[a]) / self.spacing - 0.5).floor();
            let fh = ((center[a] + radius - self.lower[a]) / self.spacing - 0.5).ceil();
            lo[a] = fl.max(0.0) as usize;
            hi[a] = (fh.max(-1.0) as isize).min(self.shape[a] as isize - 1).max(-1) as usize;
            if fh < 0.0 || lo[a] >= self.shape[a] {
                return Vec::new();
            }
        }
        let mut out = Vec::new();
        let mut idx = lo.clone();
        let mut p = vec![0.0; d];
        'outer: loop {
            let mut flat = 0;
            for a in 0..d {
                flat = flat * self.shape[a] + idx[a];
                p[a] = self.lower[a] + (idx[a] as f64 + 0.5) * self.spacing;
            }
            let r2: f64 = p.iter().zip(center).map(|(x, c)| (x - c) * (x - c)).sum();
            if r2 <= radius * radius {
                out.push(flat);
            }
            for a in (0..d).rev() {
                if idx[a] < hi[a] {
                    idx[a] += 1;
                    continue 'outer;
                }
                idx[a] = lo[a];
            }
            break;
        }
        out
    }

    /// Midpoint rule `∫ f` over the lattice box.
    pub fn integrate<F: FnMut(&[f64]) -> f64>(&self, mut f: F) -> f64 {
        let mut buf = vec![0.0; self.dim()];
        let mut acc = 0.0;
        for k in 0..self.len() {
            self.point(k, &mut buf);
            acc += f(&buf);
        }
        acc * self.cell_volume()
    }
}

/// Scalar values attached to the cells of a lattice.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridField {
    pub lattice: Lattice,
    pub values: Vec<f64>,
}

impl GridField {
    pub fn sample<F: Fn(&[f64]) -> f64>(lattice: Lattice, f: F) -> Self {
        let mut buf = vec![0.0; lattice.dim()];
        let values = (0..lattice.len())
            .map(|k| {
                lattice.point(k, &mut buf);
                f(&buf)
            })
            .collect();
        GridField { lattice, values }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn midpoint_rule_on_a_square() {
        let l = Lattice::cube(&[0.0, 0.0], 1.0, 0.01).unwrap();
        let v = l.integrate(|x| x[0] * x[0] + x[1]);
        assert!((v - 4.0 / 3.0).abs() < 1e-4);
        assert_eq!(l.len(), 200 * 200);
    }

    #[test]
    fn ball_queries() {
        let l = Lattice::cube(&[0.0], 1.0, 0.1).unwrap();
        let near = l.indices_near(&[0.0], 0.3);
        // centres at ±0.05, ±0.15, ±0.25
        assert_eq!(near.len(), 6);
        assert!(l.contains_ball(&[0.5], 0.5));
        assert!(!l.contains_ball(&[0.6], 0.5));
        assert!(l.indices_near(&[5.0], 0.5).is_empty());
    }
}
