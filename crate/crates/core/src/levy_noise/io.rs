//! Columnar text format for noise paths.
//!
//! ```text
//! # levy-path v1 alpha=… c_alpha=… dim=… mode=… cutoff_delta=… small_jump_policy=… levy_density_constant=… seed=…
//! t,dL_1,…,dL_d,is_big_jump,J_1,…,J_d
//! ```
//!
//! One row per cell, keyed by the cell's right end point. `J` repeats the
//! registered jump vector (zeros elsewhere) so that the small-jump part of a
//! cell can be recovered. Reals are written with 17 significant digits.

use std::io::{BufRead, Write};

use super::path::{BigJump, LevyPath, NodeOrigin, TimeGrid};
use super::{SimulationMode, SmallJumpPolicy, StableSpec};
use crate::error::{Error, Result};

const MAGIC: &str = "# levy-path v1";

pub(crate) fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_path<W: Write>(path: &LevyPath, mut out: W) -> Result<()> {
    let s = path.spec();
    writeln!(
        out,
        "{MAGIC} alpha={} c_alpha={} dim={} mode={:?} cutoff_delta={} small_jump_policy={:?} levy_density_constant={} seed={}",
        fmt_real(s.alpha),
        fmt_real(s.c_alpha),
        s.dim,
        s.mode,
        fmt_real(s.cutoff_delta),
        s.small_jump_policy,
        fmt_real(s.levy_density_constant),
        path.seed()
    )?;
    let d = s.dim;
    let mut cols = vec!["t".to_string()];
    cols.extend((1..=d).map(|i| format!("dL_{i}")));
    cols.push("is_big_jump".into());
    cols.extend((1..=d).map(|i| format!("J_{i}")));
    writeln!(out, "{}", cols.join(","))?;

    let zeros = vec![0.0; d];
    for k in 0..path.n_cells() {
        let node = k + 1;
        let jump = path.jump_at_node(node);
        let mut row = vec![fmt_real(path.times()[node])];
        row.extend(path.cell_increment(k).iter().map(|&v| fmt_real(v)));
        row.push(if jump.is_some() { "1" } else { "0" }.into());
        let jv = jump.map(|j| j.vector.as_slice()).unwrap_or(&zeros);
        row.extend(jv.iter().map(|&v| fmt_real(v)));
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

fn parse_f64(s: &str, what: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::Parse(format!("cannot read {what} from `{s}`")))
}

pub fn read_path<R: BufRead>(input: R) -> Result<LevyPath> {
    let mut lines = input.lines();
    // Comment lines ahead of the header (provenance blocks) are skipped.
    let header = loop {
        let line = lines
            .next()
            .ok_or_else(|| Error::Parse("empty path file".into()))??;
        if line.starts_with(MAGIC) || !line.starts_with('#') {
            break line;
        }
    };
    let fields = header
        .strip_prefix(MAGIC)
        .ok_or_else(|| Error::Parse("missing path header".into()))?;
    let mut spec = StableSpec {
        alpha: f64::NAN,
        c_alpha: f64::NAN,
        dim: 0,
        mode: SimulationMode::ExactIncrement,
        cutoff_delta: f64::NAN,
        small_jump_policy: SmallJumpPolicy::Gaussian,
        levy_density_constant: f64::NAN,
    };
    let mut seed = 0u64;
    for kv in fields.split_whitespace() {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("bad header field `{kv}`")))?;
        match k {
            "alpha" => spec.alpha = parse_f64(v, k)?,
            "c_alpha" => spec.c_alpha = parse_f64(v, k)?,
            "dim" => spec.dim = v.parse().map_err(|_| Error::Parse(format!("bad dim `{v}`")))?,
            "mode" => {
                spec.mode = match v {
                    "ExactIncrement" => SimulationMode::ExactIncrement,
                    "JumpDecomposition" => SimulationMode::JumpDecomposition,
                    _ => return Err(Error::Parse(format!("unknown mode `{v}`"))),
                }
            }
            "cutoff_delta" => spec.cutoff_delta = parse_f64(v, k)?,
            "small_jump_policy" => {
                spec.small_jump_policy = match v {
                    "Gaussian" => SmallJumpPolicy::Gaussian,
                    "Drop" => SmallJumpPolicy::Drop,
                    _ => return Err(Error::Parse(format!("unknown small-jump policy `{v}`"))),
                }
            }
            "levy_density_constant" => spec.levy_density_constant = parse_f64(v, k)?,
            "seed" => seed = v.parse().map_err(|_| Error::Parse(format!("bad seed `{v}`")))?,
            _ => return Err(Error::Parse(format!("unknown header field `{k}`"))),
        }
    }
    spec.validate()?;
    let d = spec.dim;
    lines
        .next()
        .ok_or_else(|| Error::Parse("missing column header".into()))??;

    let mut times = vec![0.0];
    let mut origins = vec![NodeOrigin::Uniform];
    let mut increments = Vec::new();
    let mut jumps = Vec::new();
    for (row, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 2 + 2 * d {
            return Err(Error::Parse(format!("row {row}: expected {} columns", 2 + 2 * d)));
        }
        let t = parse_f64(cols[0], "t")?;
        for c in &cols[1..=d] {
            increments.push(parse_f64(c, "dL")?);
        }
        let is_jump = match cols[d + 1].trim() {
            "1" => true,
            "0" => false,
            other => return Err(Error::Parse(format!("row {row}: bad jump flag `{other}`"))),
        };
        if is_jump {
            let vector = cols[d + 2..]
                .iter()
                .map(|c| parse_f64(c, "J"))
                .collect::<Result<Vec<_>>>()?;
            jumps.push(BigJump {
                time: t,
                node: times.len(),
                vector,
            });
        }
        times.push(t);
        origins.push(if is_jump { NodeOrigin::BigJump } else { NodeOrigin::Uniform });
    }
    LevyPath::from_parts(spec, TimeGrid::new(times, origins)?, increments, jumps, seed)
}
