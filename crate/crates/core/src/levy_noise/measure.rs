use std::f64::consts::PI;

use super::StableSpec;
use crate::error::{Error, Result};
use crate::quad;

/// Surface area of the unit sphere in `R^d` (2 for d = 1).
pub fn surface_factor(dim: usize) -> f64 {
    let d = dim as f64;
    2.0 * PI.powf(d / 2.0) / libm::tgamma(d / 2.0)
}

/// Density constant `k` with `k ∫(1 - cos z_1)|z|^{-d-α} dz = c`.
pub fn density_constant(alpha: f64, c_alpha: f64, dim: usize) -> f64 {
    let d = dim as f64;
    c_alpha * alpha * 2f64.powf(alpha - 1.0) * libm::tgamma((d + alpha) / 2.0)
        / (PI.powf(d / 2.0) * libm::tgamma(1.0 - alpha / 2.0))
}

/// `ν({|z| > δ})`, the arrival rate of jumps above `delta`.
pub fn big_jump_intensity(spec: &StableSpec, delta: f64) -> f64 {
    if delta.is_infinite() {
        return 0.0;
    }
    surface_factor(spec.dim) * spec.levy_density_constant * delta.powf(-spec.alpha) / spec.alpha
}

/// `∫_{|z|≤δ} |z|^2 ν(dz)`.
pub fn small_jump_second_moment(spec: &StableSpec, delta: f64) -> f64 {
    surface_factor(spec.dim) * spec.levy_density_constant * delta.powf(2.0 - spec.alpha)
        / (2.0 - spec.alpha)
}

/// `∫_{rmin<|z|<rmax} g(|z|) ν(dz)` to relative tolerance `1e-8`.
pub fn nu_radial_integral<G: Fn(f64) -> f64>(spec: &StableSpec, g: G, rmin: f64, rmax: f64) -> Result<f64> {
    nu_radial_integral_tol(spec, g, rmin, rmax, 1e-8)
}

/// Radial quadrature of a rotation-invariant integrand against `ν`.
///
/// Works in the variable `u = ln r`, where the density becomes
/// `k S_d e^{-α u}`. Unbounded ends are handled by marching outwards in
/// blocks until the block contributions decay geometrically below the
/// tolerance; blocks that fail to decay signal a divergent integral.
pub fn nu_radial_integral_tol<G: Fn(f64) -> f64>(
    spec: &StableSpec,
    g: G,
    rmin: f64,
    rmax: f64,
    rel_tol: f64,
) -> Result<f64> {
    if !(rmin >= 0.0 && rmax > rmin) {
        return Err(Error::InvalidSpec(format!("radial range ({rmin}, {rmax}) is empty")));
    }
    let alpha = spec.alpha;
    let scale = surface_factor(spec.dim) * spec.levy_density_constant;
    let h = |u: f64| {
        let r = u.exp();
        g(r) * (-alpha * u).exp()
    };

    let lo = if rmin > 0.0 { rmin.ln() } else { rmax.min(1.0).ln() - 1.0 };
    let hi = if rmax.is_finite() { rmax.ln() } else { lo.max(0.0) + 1.0 };
    let core = segment(&h, lo, hi, rel_tol)?;
    let mut total = core;

    const BLOCK: f64 = 2.0;
    const MAX_BLOCKS: usize = 400;
    let march = |start: f64, dir: f64, total: &mut f64| -> Result<()> {
        let mut edge = start;
        let mut prev: Option<f64> = None;
        let mut growing = 0;
        for _ in 0..MAX_BLOCKS {
            let next = edge + dir * BLOCK;
            let (a, b) = if dir < 0.0 { (next, edge) } else { (edge, next) };
            let block = segment(&h, a, b, rel_tol)?;
            *total += block;
            edge = next;
            let mag = block.abs();
            if mag == 0.0 || mag < 1e-300 {
                return Ok(());
            }
            if let Some(p) = prev {
                let ratio = mag / p;
                if ratio >= 1.0 {
                    growing += 1;
                    if growing >= 3 {
                        return Err(Error::Divergence(format!(
                            "radial integrand does not decay towards r = {}",
                            if dir < 0.0 { "0" } else { "infinity" }
                        )));
                    }
                } else {
                    growing = 0;
                    let tail = mag * ratio / (1.0 - ratio);
                    if tail <= 0.1 * rel_tol * total.abs() {
                        return Ok(());
                    }
                }
            }
            prev = Some(mag);
        }
        Err(Error::Divergence("radial tail did not settle".into()))
    };

    if rmin == 0.0 {
        march(lo, -1.0, &mut total)?;
    }
    if rmax.is_infinite() {
        march(hi, 1.0, &mut total)?;
    }
    Ok(scale * total)
}

fn segment<H: Fn(f64) -> f64>(h: &H, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    let r = quad::adaptive(h, a, b, rel_tol, 1e-300, 4000);
    if !r.value.is_finite() {
        return Err(Error::Divergence(format!("non-finite integrand on [{a}, {b}] (log radius)")));
    }
    Ok(r.value)
}

/// Characteristic exponent `∫(1 - cos ξ·z) ν(dz)` recomputed by quadrature.
///
/// Available for `d ≤ 3`, where the spherical average of `cos(ξ·z)` has a
/// closed form. The oscillatory tail beyond `r = 1e4/|ξ|` is replaced by its
/// mean, which bounds the relative error by roughly `1e-5`.
pub fn symbol_by_quadrature(spec: &StableSpec, xi_norm: f64) -> Result<f64> {
    let rho = xi_norm.abs();
    if rho == 0.0 {
        return Ok(0.0);
    }
    let avg: fn(f64) -> f64 = match spec.dim {
        1 => |x| 1.0 - x.cos(),
        2 => |x| 1.0 - libm::j0(x),
        3 => |x| if x < 1e-4 { x * x / 6.0 } else { 1.0 - x.sin() / x },
        d => {
            return Err(Error::Capability(format!(
                "symbol quadrature is implemented for dimensions 1 to 3, not {d}"
            )))
        }
    };
    let split = 1.0 / rho;
    let far = 1e4 / rho;
    let inner = nu_radial_integral_tol(spec, |r| avg(rho * r), 0.0, split, 1e-10)?;
    // Plain radial variable on the oscillatory range.
    let alpha = spec.alpha;
    let scale = surface_factor(spec.dim) * spec.levy_density_constant;
    let mid = quad::adaptive(
        |r: f64| avg(rho * r) * r.powf(-1.0 - alpha),
        split,
        far,
        1e-10,
        1e-14,
        200_000,
    );
    let tail = far.powf(-alpha) / alpha;
    Ok(inner + scale * (mid.value + tail))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_k(alpha: f64, dim: usize) -> StableSpec {
        StableSpec::new(alpha, 1.0, dim).unwrap().with_density_constant(1.0)
    }

    #[test]
    fn surface_factors() {
        assert!((surface_factor(1) - 2.0).abs() < 1e-14);
        assert!((surface_factor(2) - 2.0 * PI).abs() < 1e-14);
        assert!((surface_factor(3) - 4.0 * PI).abs() < 1e-13);
    }

    #[test]
    fn second_moment_near_origin() {
        let s = unit_k(1.0, 1);
        let v = nu_radial_integral(&s, |r| r * r, 0.0, 1.0).unwrap();
        assert!((v - 2.0).abs() < 1e-8, "{v}");
        assert!((small_jump_second_moment(&s, 1.0) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn mass_beyond_one() {
        let s = unit_k(1.0, 1);
        let v = nu_radial_integral(&s, |_| 1.0, 1.0, f64::INFINITY).unwrap();
        assert!((v - 2.0).abs() < 1e-8, "{v}");
    }

    #[test]
    fn planar_second_moment() {
        let s = unit_k(1.0, 2);
        let v = nu_radial_integral(&s, |r| r * r, 0.0, 1.0).unwrap();
        assert!((v - 2.0 * PI).abs() < 1e-7, "{v}");
    }

    #[test]
    fn divergent_mass_is_reported() {
        let s = unit_k(1.0, 1);
        let err = nu_radial_integral(&s, |_| 1.0, 0.0, 1.0).unwrap_err();
        assert!(matches!(err, Error::Divergence(_)));
        let s = unit_k(0.5, 1);
        let err = nu_radial_integral(&s, |r| r * r, 1.0, f64::INFINITY).unwrap_err();
        assert!(matches!(err, Error::Divergence(_)));
    }

    #[test]
    fn intensity_closed_form_matches_quadrature() {
        let s = unit_k(1.0, 1);
        assert!((big_jump_intensity(&s, 1.0) - 2.0).abs() < 1e-14);
        assert!((big_jump_intensity(&s, 0.5) - 4.0).abs() < 1e-14);
        assert_eq!(big_jump_intensity(&s, f64::INFINITY), 0.0);
        assert!(big_jump_intensity(&s, 1e12) < 1e-11);
        for &(alpha, dim, delta) in &[(0.7, 1, 0.3), (1.5, 2, 0.8), (1.2, 3, 1.0)] {
            let s = StableSpec::new(alpha, 1.3, dim).unwrap();
            let q = nu_radial_integral(&s, |_| 1.0, delta, f64::INFINITY).unwrap();
            let c = big_jump_intensity(&s, delta);
            assert!((q - c).abs() < 1e-8 * c, "{q} vs {c}");
        }
    }

    #[test]
    fn symbol_quadrature_recovers_c_alpha() {
        for &(alpha, dim) in &[(0.7, 1), (1.0, 1), (1.5, 1), (1.0, 2), (1.5, 2), (1.2, 3)] {
            let s = StableSpec::new(alpha, 1.0, dim).unwrap();
            for &xi in &[0.5, 1.0, 2.0] {
                let got = symbol_by_quadrature(&s, xi).unwrap();
                let want = s.symbol(xi);
                assert!((got - want).abs() < 1e-4 * want, "alpha {alpha} d {dim} xi {xi}: {got} vs {want}");
            }
        }
    }
}
