use serde::{Deserialize, Serialize};

use super::{SimulationMode, SmallJumpPolicy, StableSpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeOrigin {
    Uniform,
    BigJump,
}

/// Jump-adapted time grid: uniform nodes plus one node per registered jump.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    times: Vec<f64>,
    origins: Vec<NodeOrigin>,
}

impl TimeGrid {
    pub fn new(times: Vec<f64>, origins: Vec<NodeOrigin>) -> Result<Self> {
        if times.len() < 2 || times.len() != origins.len() {
            return Err(Error::InvalidSpec("a grid needs at least two nodes with one origin each".into()));
        }
        if times[0] != 0.0 {
            return Err(Error::InvalidSpec("grid must start at t = 0".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidSpec("grid times must be strictly increasing".into()));
        }
        Ok(TimeGrid { times, origins })
    }

    pub fn uniform(horizon: f64, base_dt: f64) -> Result<Self> {
        if !(horizon > 0.0 && base_dt > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "horizon and base_dt must be positive, got {horizon} and {base_dt}"
            )));
        }
        let n = (horizon / base_dt - 1e-9).ceil().max(1.0) as usize;
        let times = (0..=n).map(|k| horizon * k as f64 / n as f64).collect();
        Ok(TimeGrid {
            times,
            origins: vec![NodeOrigin::Uniform; n + 1],
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn origins(&self) -> &[NodeOrigin] {
        &self.origins
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().expect("grid is non-empty")
    }

    pub fn dt(&self, cell: usize) -> f64 {
        self.times[cell + 1] - self.times[cell]
    }

    pub fn max_width(&self) -> f64 {
        self.times.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// Index of a node; times that are not nodes are rejected.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        self.times
            .binary_search_by(|probe| probe.total_cmp(&t))
            .map_err(|_| Error::Query { time: t })
    }
}

/// A registered jump above the cutoff.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BigJump {
    pub time: f64,
    /// Grid node at which the jump lands.
    pub node: usize,
    pub vector: Vec<f64>,
}

impl BigJump {
    pub fn norm(&self) -> f64 {
        norm(&self.vector)
    }
}

/// One realized noise trajectory on a jump-adapted grid.
///
/// Increments are stored on a dyadic lattice fine enough for every partial
/// sum to be exactly representable, which makes additivity of
/// [`LevyPath::increment`] hold bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct LevyPath {
    spec: StableSpec,
    grid: TimeGrid,
    increments: Vec<f64>,
    cumulative: Vec<f64>,
    big_jumps: Vec<BigJump>,
    seed: u64,
}

impl LevyPath {
    /// Assembles a path from raw parts, snapping increments and jumps to the
    /// dyadic lattice.
    ///
    /// `increments` is row-major with one row of `spec.dim` entries per cell.
    /// The increment of a cell ending at a jump node must contain the jump.
    pub fn from_parts(
        spec: StableSpec,
        grid: TimeGrid,
        increments: Vec<f64>,
        mut big_jumps: Vec<BigJump>,
        seed: u64,
    ) -> Result<Self> {
        let d = spec.dim;
        let cells = grid.len() - 1;
        if increments.len() != cells * d {
            return Err(Error::InvalidSpec(format!(
                "expected {} increment entries, got {}",
                cells * d,
                increments.len()
            )));
        }
        for j in &big_jumps {
            if j.vector.len() != d || j.node == 0 || j.node >= grid.len() || grid.times[j.node] != j.time {
                return Err(Error::InvalidSpec(format!("jump at t = {} is not on a grid node", j.time)));
            }
            if grid.origins[j.node] != NodeOrigin::BigJump {
                return Err(Error::InvalidSpec(format!("node of jump at t = {} is not marked as a jump", j.time)));
            }
        }
        let n_jump_nodes = grid.origins.iter().filter(|o| **o == NodeOrigin::BigJump).count();
        if n_jump_nodes != big_jumps.len() {
            return Err(Error::InvalidSpec("every jump node needs exactly one registered jump".into()));
        }
        if increments.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric {
                step: 0,
                context: "non-finite noise increment".into(),
            });
        }

        // Split each cell into its small part and registered jump, snap both
        // to a common dyadic lattice, then recombine. All partial sums are
        // bounded by `bound`, so sums of lattice values never round.
        let mut small = increments;
        for j in &big_jumps {
            let row = &mut small[(j.node - 1) * d..j.node * d];
            for (s, v) in row.iter_mut().zip(&j.vector) {
                *s -= v;
            }
        }
        let bound: f64 = small.iter().map(|v| v.abs()).sum::<f64>()
            + big_jumps.iter().flat_map(|j| j.vector.iter()).map(|v| v.abs()).sum::<f64>();
        let exponent = lattice_exponent(bound);
        let snap = |v: f64| libm::ldexp((libm::ldexp(v, exponent)).round(), -exponent);
        for s in small.iter_mut() {
            *s = snap(*s);
        }
        for j in big_jumps.iter_mut() {
            for v in j.vector.iter_mut() {
                *v = snap(*v);
            }
            let row = &mut small[(j.node - 1) * d..j.node * d];
            for (s, v) in row.iter_mut().zip(&j.vector) {
                *s += v;
            }
        }
        big_jumps.sort_by(|a, b| a.node.cmp(&b.node));

        let mut cumulative = vec![0.0; grid.len() * d];
        for k in 0..cells {
            for i in 0..d {
                cumulative[(k + 1) * d + i] = cumulative[k * d + i] + small[k * d + i];
            }
        }
        Ok(LevyPath {
            spec,
            grid,
            increments: small,
            cumulative,
            big_jumps,
            seed,
        })
    }

    /// The zero path on a uniform grid, used for deterministic runs.
    pub fn zero(spec: StableSpec, horizon: f64, base_dt: f64) -> Result<Self> {
        let grid = TimeGrid::uniform(horizon, base_dt)?;
        let n = (grid.len() - 1) * spec.dim;
        LevyPath::from_parts(spec, grid, vec![0.0; n], Vec::new(), 0)
    }

    pub fn spec(&self) -> &StableSpec {
        &self.spec
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn times(&self) -> &[f64] {
        &self.grid.times
    }

    pub fn dim(&self) -> usize {
        self.spec.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn horizon(&self) -> f64 {
        self.grid.horizon()
    }

    pub fn n_cells(&self) -> usize {
        self.grid.len() - 1
    }

    pub fn big_jumps(&self) -> &[BigJump] {
        &self.big_jumps
    }

    /// `L(times[cell + 1]) - L(times[cell])`.
    pub fn cell_increment(&self, cell: usize) -> &[f64] {
        let d = self.spec.dim;
        &self.increments[cell * d..(cell + 1) * d]
    }

    /// `L` at a grid node (`L_0 = 0`).
    pub fn value_at_node(&self, node: usize) -> &[f64] {
        let d = self.spec.dim;
        &self.cumulative[node * d..(node + 1) * d]
    }

    /// Registered jump landing on `node`, if any.
    pub fn jump_at_node(&self, node: usize) -> Option<&BigJump> {
        if self.grid.origins[node] != NodeOrigin::BigJump {
            return None;
        }
        self.big_jumps
            .binary_search_by(|j| j.node.cmp(&node))
            .ok()
            .map(|i| &self.big_jumps[i])
    }

    /// `L_t - L_s` between node indices.
    pub fn increment_between(&self, s: usize, t: usize) -> Vec<f64> {
        let a = self.value_at_node(s);
        let b = self.value_at_node(t);
        b.iter().zip(a).map(|(b, a)| b - a).collect()
    }

    /// `L_t - L_s` for grid times `s ≤ t`. Off-grid times are rejected.
    pub fn increment(&self, s: f64, t: f64) -> Result<Vec<f64>> {
        let i = self.grid.index_of(s)?;
        let j = self.grid.index_of(t)?;
        if i > j {
            return Err(Error::Query { time: s });
        }
        Ok(self.increment_between(i, j))
    }

    /// Merges cells so that uniform nodes are kept only at every `factor`-th
    /// uniform index; jump nodes are always kept.
    pub fn coarsen(&self, factor: usize) -> Result<LevyPath> {
        if factor == 0 {
            return Err(Error::InvalidSpec("coarsening factor must be positive".into()));
        }
        let n_uniform_cells = self.grid.origins.iter().filter(|o| **o == NodeOrigin::Uniform).count() - 1;
        if n_uniform_cells % factor != 0 {
            return Err(Error::InvalidSpec(format!(
                "{n_uniform_cells} uniform cells cannot be coarsened by {factor}"
            )));
        }
        let mut keep = Vec::new();
        let mut uniform_index = 0usize;
        for (k, o) in self.grid.origins.iter().enumerate() {
            match o {
                NodeOrigin::Uniform => {
                    if uniform_index % factor == 0 {
                        keep.push(k);
                    }
                    uniform_index += 1;
                }
                NodeOrigin::BigJump => keep.push(k),
            }
        }
        let jumps = self.big_jumps.clone();
        self.rebuild(&keep, jumps, self.spec)
    }

    /// Removes registered jumps of norm `≤ delta` and their nodes, giving the
    /// path the truncated process with cutoff `delta` would have produced.
    /// Only meaningful when small jumps are dropped.
    pub fn drop_jumps_below(&self, delta: f64) -> Result<LevyPath> {
        if self.spec.mode != SimulationMode::JumpDecomposition || self.spec.small_jump_policy != SmallJumpPolicy::Drop {
            return Err(Error::Capability(
                "jump truncation needs a jump-decomposition path with dropped small jumps".into(),
            ));
        }
        if delta < self.spec.cutoff_delta {
            return Err(Error::InvalidSpec(format!(
                "new cutoff {delta} is below the path cutoff {}",
                self.spec.cutoff_delta
            )));
        }
        let d = self.spec.dim;
        let removed: Vec<&BigJump> = self.big_jumps.iter().filter(|j| j.norm() <= delta).collect();
        let mut stripped = self.clone();
        for j in &removed {
            for i in 0..d {
                stripped.increments[(j.node - 1) * d + i] -= j.vector[i];
            }
        }
        let keep: Vec<usize> = (0..self.grid.len())
            .filter(|&k| !removed.iter().any(|j| j.node == k))
            .collect();
        let jumps: Vec<BigJump> = self.big_jumps.iter().filter(|j| j.norm() > delta).cloned().collect();
        stripped.rebuild(&keep, jumps, self.spec.with_cutoff(delta))
    }

    fn rebuild(&self, keep: &[usize], jumps: Vec<BigJump>, spec: StableSpec) -> Result<LevyPath> {
        let d = self.spec.dim;
        let times: Vec<f64> = keep.iter().map(|&k| self.grid.times[k]).collect();
        let origins: Vec<NodeOrigin> = keep.iter().map(|&k| self.grid.origins[k]).collect();
        let mut increments = Vec::with_capacity((keep.len() - 1) * d);
        for w in keep.windows(2) {
            for i in 0..d {
                let mut acc = 0.0;
                for cell in w[0]..w[1] {
                    acc += self.increments[cell * d + i];
                }
                increments.push(acc);
            }
        }
        let jumps = jumps
            .into_iter()
            .map(|j| {
                let node = keep.binary_search(&j.node).expect("jump nodes are kept");
                BigJump { node, ..j }
            })
            .collect();
        LevyPath::from_parts(spec, TimeGrid::new(times, origins)?, increments, jumps, self.seed)
    }
}

fn lattice_exponent(bound: f64) -> i32 {
    if bound == 0.0 {
        return 60;
    }
    let e = bound.log2().ceil() as i32;
    (51 - e).clamp(-960, 960)
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
