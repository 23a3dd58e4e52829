use std::f64::consts::PI;

use rand::distr::Open01;
use rand::Rng;
use rand_distr::{Distribution, Exp1, Poisson, StandardNormal};

use super::measure::{big_jump_intensity, small_jump_second_moment};
use super::path::{BigJump, LevyPath, NodeOrigin, TimeGrid};
use super::{SimulationMode, SmallJumpPolicy, StableSpec};
use crate::error::Result;
use crate::rng::rng_from_seed;

/// Positive stable variable with Laplace transform `exp(-s^a)`, `0 < a < 1`
/// (Kanter's representation of the Chambers–Mallows–Stuck construction).
fn positive_stable<R: Rng + ?Sized>(a: f64, rng: &mut R) -> f64 {
    let u: f64 = PI * rng.sample::<f64, _>(Open01);
    let w: f64 = Exp1.sample(rng);
    let left = (a * u).sin() / u.sin().powf(1.0 / a);
    let right = (((1.0 - a) * u).sin() / w).powf((1.0 - a) / a);
    left * right
}

/// Draw of `L(dt)`: Gaussian subordination by an `α/2`-stable clock, so that
/// `E exp(i ξ·L(dt)) = exp(-dt c_alpha |ξ|^α)` in every dimension.
pub fn sample_stable_increment<R: Rng + ?Sized>(spec: &StableSpec, dt: f64, rng: &mut R) -> Result<Vec<f64>> {
    spec.validate()?;
    let mut out = vec![0.0; spec.dim];
    fill_stable_increment(spec, dt, rng, &mut out);
    Ok(out)
}

fn fill_stable_increment<R: Rng + ?Sized>(spec: &StableSpec, dt: f64, rng: &mut R, out: &mut [f64]) {
    let s = positive_stable(spec.alpha / 2.0, rng);
    let scale = (spec.c_alpha * dt).powf(1.0 / spec.alpha) * (2.0 * s).sqrt();
    for o in out.iter_mut() {
        let g: f64 = StandardNormal.sample(rng);
        *o = scale * g;
    }
}

fn unit_direction<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    if dim == 1 {
        return vec![if rng.random::<bool>() { 1.0 } else { -1.0 }];
    }
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let n = super::path::norm(&v);
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Samples a path on `[0, horizon]` from a fresh stream keyed by `seed`.
pub fn sample_path(spec: &StableSpec, horizon: f64, base_dt: f64, seed: u64) -> Result<LevyPath> {
    let mut rng = rng_from_seed(seed);
    sample_path_with_rng(spec, horizon, base_dt, &mut rng, seed)
}

/// Samples a path from the given generator; `seed` is recorded on the path.
///
/// In jump-decomposition mode the jumps above `cutoff_delta` arrive as a
/// Poisson process with rate `ν(|z| > δ)`, with radii `δ U^{-1/α}` and
/// uniform directions, and each jump time becomes a grid node. The small
/// jumps are replaced per cell according to the small-jump policy.
pub fn sample_path_with_rng<R: Rng + ?Sized>(
    spec: &StableSpec,
    horizon: f64,
    base_dt: f64,
    rng: &mut R,
    seed: u64,
) -> Result<LevyPath> {
    spec.validate()?;
    let uniform = TimeGrid::uniform(horizon, base_dt)?;
    let d = spec.dim;
    match spec.mode {
        SimulationMode::ExactIncrement => {
            let cells = uniform.len() - 1;
            let mut increments = vec![0.0; cells * d];
            for k in 0..cells {
                let dt = uniform.dt(k);
                fill_stable_increment(spec, dt, rng, &mut increments[k * d..(k + 1) * d]);
            }
            LevyPath::from_parts(*spec, uniform, increments, Vec::new(), seed)
        }
        SimulationMode::JumpDecomposition => {
            let delta = spec.cutoff_delta;
            let rate = big_jump_intensity(spec, delta) * horizon;
            let count = if rate > 0.0 {
                Poisson::new(rate).map(|p| p.sample(rng) as usize).unwrap_or(0)
            } else {
                0
            };
            let mut arrivals: Vec<(f64, Vec<f64>)> = (0..count)
                .map(|_| {
                    let t = horizon * rng.sample::<f64, _>(Open01);
                    let u: f64 = rng.sample(Open01);
                    let radius = delta * u.powf(-1.0 / spec.alpha);
                    let dir = unit_direction(d, rng);
                    (t, dir.into_iter().map(|x| x * radius).collect())
                })
                .collect();
            arrivals.sort_by(|a, b| a.0.total_cmp(&b.0));
            // Coincident arrival times have probability zero; merge if seen.
            arrivals.dedup_by(|later, earlier| {
                if later.0 == earlier.0 {
                    for (e, l) in earlier.1.iter_mut().zip(&later.1) {
                        *e += l;
                    }
                    true
                } else {
                    false
                }
            });

            let mut times = Vec::with_capacity(uniform.len() + arrivals.len());
            let mut origins = Vec::with_capacity(times.capacity());
            let mut jumps = Vec::with_capacity(arrivals.len());
            let mut next = arrivals.into_iter().peekable();
            for (&t, &o) in uniform.times().iter().zip(uniform.origins()) {
                while let Some((tj, _)) = next.peek() {
                    if *tj < t {
                        let (tj, v) = next.next().expect("peeked");
                        jumps.push(BigJump {
                            time: tj,
                            node: times.len(),
                            vector: v,
                        });
                        times.push(tj);
                        origins.push(NodeOrigin::BigJump);
                    } else {
                        break;
                    }
                }
                if let Some((tj, _)) = next.peek() {
                    if *tj == t {
                        // Landing exactly on a uniform node: relabel the node.
                        let (tj, v) = next.next().expect("peeked");
                        jumps.push(BigJump {
                            time: tj,
                            node: times.len(),
                            vector: v,
                        });
                        times.push(t);
                        origins.push(NodeOrigin::BigJump);
                        continue;
                    }
                }
                times.push(t);
                origins.push(o);
            }
            let grid = TimeGrid::new(times, origins)?;
            let cells = grid.len() - 1;
            let mut increments = vec![0.0; cells * d];
            if spec.small_jump_policy == SmallJumpPolicy::Gaussian {
                let var = small_jump_second_moment(spec, delta) / d as f64;
                for k in 0..cells {
                    let sd = (var * grid.dt(k)).sqrt();
                    for i in 0..d {
                        let g: f64 = StandardNormal.sample(rng);
                        increments[k * d + i] = sd * g;
                    }
                }
            }
            for j in &jumps {
                for i in 0..d {
                    increments[(j.node - 1) * d + i] += j.vector[i];
                }
            }
            LevyPath::from_parts(*spec, grid, increments, jumps, seed)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy_noise::path::norm;
    use crate::rng::rng_from_seed;

    #[test]
    fn positive_stable_laplace_transform() {
        // E exp(-S) = exp(-1) for every index
        let mut rng = rng_from_seed(17);
        for &a in &[0.35, 0.5, 0.75] {
            let n = 200_000;
            let samples: Vec<f64> = (0..n).map(|_| (-positive_stable(a, &mut rng)).exp()).collect();
            let mean = samples.iter().sum::<f64>() / n as f64;
            let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            let se = (var / n as f64).sqrt();
            assert!((mean - (-1f64).exp()).abs() < 4.0 * se, "a = {a}: {mean}");
        }
    }

    #[test]
    fn self_similarity_on_a_shared_stream() {
        let spec = StableSpec::new(1.3, 0.8, 3).unwrap();
        let one = sample_stable_increment(&spec, 1.0, &mut rng_from_seed(9)).unwrap();
        let small = sample_stable_increment(&spec, 0.01, &mut rng_from_seed(9)).unwrap();
        let factor = 0.01f64.powf(1.0 / 1.3);
        for (a, b) in one.iter().zip(&small) {
            assert!((a * factor - b).abs() <= 1e-12 * b.abs().max(1e-300));
        }
    }

    #[test]
    fn short_cells_have_characteristic_function_near_one() {
        let spec = StableSpec::new(1.0, 1.0, 1).unwrap();
        let mut rng = rng_from_seed(2);
        let n = 20_000;
        let m: f64 = (0..n)
            .map(|_| sample_stable_increment(&spec, 1e-6, &mut rng).unwrap()[0].cos())
            .sum::<f64>()
            / n as f64;
        assert!((m - 1.0).abs() < 1e-3);
    }

    #[test]
    fn jump_grid_is_adapted() {
        let spec = StableSpec::new(1.5, 1.0, 2)
            .unwrap()
            .with_mode(SimulationMode::JumpDecomposition)
            .with_cutoff(0.3);
        let path = sample_path(&spec, 3.0, 0.05, 21).unwrap();
        assert!(!path.big_jumps().is_empty());
        assert!(path.grid().max_width() <= 0.05 + 1e-12);
        for j in path.big_jumps() {
            assert!(j.norm() > 0.3);
            let count = path.times().iter().filter(|&&t| t == j.time).count();
            assert_eq!(count, 1);
            assert_eq!(path.jump_at_node(j.node).unwrap().time, j.time);
        }
    }

    #[test]
    fn drop_policy_cells_carry_only_jumps() {
        let spec = StableSpec::new(1.0, 1.0, 1)
            .unwrap()
            .with_mode(SimulationMode::JumpDecomposition)
            .with_policy(SmallJumpPolicy::Drop);
        let path = sample_path(&spec, 5.0, 0.1, 4).unwrap();
        for k in 0..path.n_cells() {
            let inc = path.cell_increment(k);
            match path.jump_at_node(k + 1) {
                Some(j) => assert_eq!(inc, j.vector.as_slice()),
                None => assert_eq!(inc, &[0.0]),
            }
        }
    }

    #[test]
    fn mean_jump_count_matches_intensity() {
        // d = 1, k = 1, α = 1, δ = 1: two jumps per unit time on average
        let spec = StableSpec::new(1.0, 1.0, 1)
            .unwrap()
            .with_density_constant(1.0)
            .with_mode(SimulationMode::JumpDecomposition)
            .with_policy(SmallJumpPolicy::Drop);
        let n = 4000;
        let total: usize = (0..n)
            .map(|i| sample_path(&spec, 1.0, 1.0, i).unwrap().big_jumps().len())
            .sum();
        let mean = total as f64 / n as f64;
        // Poisson(2): standard error sqrt(2 / n)
        assert!((mean - 2.0).abs() < 4.0 * (2.0 / n as f64).sqrt(), "{mean}");
    }

    #[test]
    fn jump_radii_follow_the_pareto_tail() {
        let spec = StableSpec::new(1.2, 1.0, 1)
            .unwrap()
            .with_mode(SimulationMode::JumpDecomposition)
            .with_policy(SmallJumpPolicy::Drop)
            .with_cutoff(0.5);
        let radii: Vec<f64> = (0..400)
            .flat_map(|i| {
                sample_path(&spec, 4.0, 1.0, 1000 + i)
                    .unwrap()
                    .big_jumps()
                    .iter()
                    .map(|j| norm(&j.vector))
                    .collect::<Vec<_>>()
            })
            .collect();
        let n = radii.len() as f64;
        // P(|Z| > 1 | |Z| > 0.5) = 0.5^1.2
        let p = radii.iter().filter(|&&r| r > 1.0).count() as f64 / n;
        let want = 0.5f64.powf(1.2);
        assert!((p - want).abs() < 4.0 * (want * (1.0 - want) / n).sqrt(), "{p} vs {want}");
    }
}
