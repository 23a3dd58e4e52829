use std::fmt;
use std::io::Write;

use super::TransportSolution;
use crate::error::Result;
use crate::levy_noise::fmt_real;

/// Rows `t,x_1..x_d,u`, one per snapshot time and lattice cell.
pub fn write_snapshots<W: Write>(solution: &TransportSolution, mut out: W) -> Result<()> {
    let lat = &solution.xgrid;
    let d = lat.dim();
    let mut cols = vec!["t".to_string()];
    cols.extend((1..=d).map(|i| format!("x_{i}")));
    cols.push("u".into());
    writeln!(out, "{}", cols.join(","))?;
    let mut x = vec![0.0; d];
    for (t, snap) in solution.times.iter().zip(&solution.snapshots) {
        for (j, u) in snap.iter().enumerate() {
            lat.point(j, &mut x);
            let mut row = vec![fmt_real(*t)];
            row.extend(x.iter().map(|v| fmt_real(*v)));
            row.push(fmt_real(*u));
            writeln!(out, "{}", row.join(","))?;
        }
    }
    Ok(())
}

/// Key-value block describing one residual evaluation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResidualReport {
    pub entries: Vec<(String, String)>,
}

impl ResidualReport {
    pub fn push(&mut self, key: &str, value: impl fmt::Display) -> &mut Self {
        self.entries.push((key.to_string(), value.to_string()));
        self
    }
}

impl fmt::Display for ResidualReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.entries {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}
