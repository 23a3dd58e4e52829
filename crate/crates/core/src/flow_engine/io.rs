use std::io::Write;

use super::{DerivativeFlow, FlowResult};
use crate::error::Result;
use crate::levy_noise::fmt_real;

/// Rows `path_seed,point_index,t,X_1..X_d`.
pub fn write_trajectories<W: Write>(result: &FlowResult, mut out: W) -> Result<()> {
    let d = result.initial_points.first().map_or(0, |p| p.len());
    let mut cols = vec!["path_seed".to_string(), "point_index".into(), "t".into()];
    cols.extend((1..=d).map(|i| format!("X_{i}")));
    writeln!(out, "{}", cols.join(","))?;
    for (i, traj) in result.trajectories.iter().enumerate() {
        for k in traj.first..=traj.last_node() {
            let mut row = vec![result.path_seed.to_string(), i.to_string(), fmt_real(result.times[k])];
            row.extend(traj.at(k).iter().map(|v| fmt_real(*v)));
            writeln!(out, "{}", row.join(","))?;
        }
    }
    Ok(())
}

/// Trajectory rows with the `d²` derivative entries appended row-major.
pub fn write_derivatives<W: Write>(result: &FlowResult, derivatives: &[DerivativeFlow], mut out: W) -> Result<()> {
    let d = result.initial_points.first().map_or(0, |p| p.len());
    let mut cols = vec!["path_seed".to_string(), "point_index".into(), "t".into()];
    cols.extend((1..=d).map(|i| format!("X_{i}")));
    for i in 1..=d {
        for j in 1..=d {
            cols.push(format!("D_{i}{j}"));
        }
    }
    writeln!(out, "{}", cols.join(","))?;
    for (i, (traj, der)) in result.trajectories.iter().zip(derivatives).enumerate() {
        for k in traj.first..=traj.last_node() {
            let mut row = vec![result.path_seed.to_string(), i.to_string(), fmt_real(result.times[k])];
            row.extend(traj.at(k).iter().map(|v| fmt_real(*v)));
            row.extend(der.at(k).iter().map(|v| fmt_real(*v)));
            writeln!(out, "{}", row.join(","))?;
        }
    }
    Ok(())
}
