//! Configuration-driven experiment runs with CSV/JSON artifacts.
//!
//! A run is fully described by an [`ExperimentConfig`]; the same config
//! and master seed reproduce every number bit for bit, whatever the thread
//! count. Each artifact starts with a provenance block carrying the config
//! hash and the canonical config text.

mod config;
mod convergence;
mod output;

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

pub use config::{
    ConvergenceTarget, DriftConfig, Discretization, EnsembleSection, Experiment, ExperimentConfig, NoiseConfig,
    OutputConfig, OutputFormat, Params, SCHEMA_VERSION,
};
pub use convergence::{convergence_table, fit_order, weak_cutoff, ConvergenceTable, FittedOrder};
pub use output::{Provenance, Table};

use crate::drift_fields::{commutator_pairing, mollify, parse_call, DriftField, FlowSamples, MollifierSpec};
use crate::error::{Error, Result};
use crate::flow_engine::{
    discrete_sobolev_seminorm, ensemble_discrepancy, flow_ensemble, inverse_flow, inverse_map, log_jacobian,
    moment_estimate, solve_forward, Estimate,
};
use crate::kolmogorov_resolvent::{ito_tanaka_lambda_search, psi_transform, verify_conjugation, TorusGrid};
use crate::lattice::{GridField, Lattice};
use crate::levy_noise::{write_path, SimulationMode};
use crate::transport_solver::{marcus_weak_terms, nonuniqueness_demo, perturbative_residual, solve};
use convergence::{median, test_pair};

/// Files written by [`run`] together with the tables they hold.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub experiment: Experiment,
    pub artifacts: Vec<PathBuf>,
    pub tables: Vec<Table>,
}

/// Validates `config`, runs its experiment and writes the artifacts.
pub fn run(config: &ExperimentConfig) -> Result<RunSummary> {
    config.validate()?;
    let experiment = config
        .experiment
        .ok_or_else(|| Error::validation("experiment", "no experiment selected"))?;
    if experiment == Experiment::SamplePath {
        return sample_paths(config);
    }
    let tables = tables(config)?;
    let artifacts = output::write_tables(config, experiment.name(), &tables)?;
    Ok(RunSummary {
        experiment,
        artifacts,
        tables,
    })
}

/// Computes the result tables of `config` without writing anything.
pub fn tables(config: &ExperimentConfig) -> Result<Vec<Table>> {
    config.validate()?;
    let experiment = config
        .experiment
        .ok_or_else(|| Error::validation("experiment", "no experiment selected"))?;
    let context = |e: Error| match e {
        Error::Numeric { step, context } => Error::Numeric {
            step,
            context: format!("{}: {context}", experiment.name()),
        },
        other => other,
    };
    match experiment {
        Experiment::SamplePath => path_table(config),
        Experiment::Flow => flow(config),
        Experiment::InverseFlow => inverse(config),
        Experiment::Transport => transport(config),
        Experiment::WeakCheck => weak_check(config),
        Experiment::PerturbativeCheck => perturbative_check(config),
        Experiment::Resolvent => resolvent(config),
        Experiment::NonUniqueness => nonuniqueness(config),
        Experiment::Stability => stability(config),
        Experiment::Moments => moments(config),
        Experiment::Commutator => commutators(config),
        Experiment::SobolevDiag => sobolev(config),
        Experiment::Convergence => {
            let levels = config.params.levels.unwrap_or(3);
            Ok(vec![convergence_table(config, levels)?.to_table("convergence")])
        }
    }
    .map_err(context)
}

fn coords(prefix: &str, d: usize) -> Vec<String> {
    (1..=d).map(|i| format!("{prefix}_{i}")).collect()
}

fn columns(head: &[&str], tail: Vec<String>) -> Vec<String> {
    head.iter().map(|s| s.to_string()).chain(tail).collect()
}

fn estimate_row(lead: f64, e: &Estimate) -> Vec<f64> {
    vec![lead, e.mean, e.std_error]
}

fn sample_paths(config: &ExperimentConfig) -> Result<RunSummary> {
    let ens = config.ensemble()?;
    let dir = Path::new(&config.output.directory);
    fs::create_dir_all(dir)?;
    let prov = Provenance::new(config);
    let mut artifacts = Vec::new();
    for i in 0..ens.n_paths {
        let path = ens.path(i)?;
        let name = if ens.n_paths == 1 {
            "sample-path.csv".to_string()
        } else {
            format!("sample-path_{i:04}.csv")
        };
        let file = dir.join(name);
        let mut w = BufWriter::new(fs::File::create(&file)?);
        w.write_all(prov.comment_block().as_bytes())?;
        write_path(&path, &mut w)?;
        w.flush()?;
        artifacts.push(file);
    }
    Ok(RunSummary {
        experiment: Experiment::SamplePath,
        artifacts,
        tables: path_table(config)?,
    })
}

fn path_table(config: &ExperimentConfig) -> Result<Vec<Table>> {
    let ens = config.ensemble()?;
    let d = config.noise.dim;
    let mut t = Table::with_columns("paths", columns(&["path", "t"], coords("L", d)));
    for i in 0..ens.n_paths {
        let p = ens.path(i)?;
        for (k, time) in p.times().iter().enumerate() {
            let mut row = vec![i as f64, *time];
            row.extend_from_slice(p.value_at_node(k));
            t.push(row);
        }
    }
    Ok(vec![t])
}

/// `params.points` (or lattice centres) pushed forward on every path.
fn flow(config: &ExperimentConfig) -> Result<Vec<Table>> {
    let b = config.drift_field()?;
    let ens = config.ensemble()?;
    let points = config.points()?;
    let d = config.noise.dim;
    let results = ens.map_paths(|path| flow_ensemble(&b, &points, path))?;
    let mut t = Table::with_columns("flow", columns(&["path", "point", "t"], coords("x", d)));
    for (i, r) in results.iter().enumerate() {
        for (j, traj) in r.trajectories.iter().enumerate() {
            for k in traj.first..=traj.last_node() {
                let mut row = vec![i as f64, j as f64, r.times[k]];
                row.extend_from_slice(traj.at(k));
                t.push(row);
            }
        }
    }
    Ok(vec![t])
}

/// Backward trajectories `φ⁻¹_{t,T}(y)` and the round-trip defect.
fn inverse(config: &ExperimentConfig) -> Result<Vec<Table>> {
    let b = config.drift_field()?;
    let ens = config.ensemble()?;
    let points = config.points()?;
    let d = config.noise.dim;
    let horizon = config.discretization.horizon;
    let results = ens.map_paths(|path| {
        let n = path.n_cells();
        let mut worst: f64 = 0.0;
        let mut trajs = Vec::new();
        for y in &points {
            let tr = inverse_flow(&b, y, path, horizon)?;
            let x = inverse_map(&b, y, path, 0, n)?;
            let back = solve_forward(&b, &x, path)?;
            worst = worst.max(crate::flow_engine::distance(back.last(), y));
            trajs.push(tr);
        }
        Ok((path.times().to_vec(), trajs, worst))
    })?;
    let mut t = Table::with_columns("inverse", columns(&["path", "point", "t"], coords("y", d)));
    let mut rt = Table::new("round_trip", &["path", "sup_defect"]);
    for (i, (times, trajs, worst)) in results.iter().enumerate() {
        for (j, tr) in trajs.iter().enumerate() {
            for k in tr.first..=tr.last_node() {
                let mut row = vec![i as f64, j as f64, times[k]];
                row.extend_from_slice(tr.at(k));
                t.push(row);
            }
        }
        rt.push(vec![i as f64, *worst]);
    }
    Ok(vec![t, rt])
}

fn transport(config: &ExperimentConfig) -> Result<Vec<Table>> {
    let b = config.drift_field()?;
    let ens = config.ensemble()?;
    let (_, u0) = test_pair(config);
    let lattice = config.lattice()?;
    let d = config.noise.dim;
    let sols = ens.map_paths(|path| {
        let times = match &config.params.times {
            Some(t) => t.clone(),
            None => {
                let ts = path.times();
                let n = path.n_cells();
                vec![0.0, ts[n / 2], ts[n]]
            }
        };
        solve(&b, &u0, path, &times, lattice.clone())
    })?;
    let mut t = Table::with_columns("transport", columns(&["path", "t"], [coords("x", d), vec!["u".into()]].concat()));
    let mut x = vec![0.0; d];
    for (i, s) in sols.iter().enumerate() {
        for (time, snap) in s.times.iter().zip(&s.snapshots) {
            for (j, u) in snap.iter().enumerate() {
                lattice.point(j, &mut x);
                let mut row = vec![i as f64, *time];
                row.extend_from_slice(&x);
                row.push(*u);
                t.push(row);
            }
        }
    }
    Ok(vec![t])
}

fn weak_check(config: &ExperimentConfig) -> Result<Vec<Table>> {
    let b = config.drift_field()?;
    let ens = config.ensemble()?;
    let (theta, u0) = test_pair(config);
    let lattice = config.lattice()?;
    let horizon = config.discretization.horizon;
    let terms = ens.map_paths(|path| {
        let sol = solve(&b, &u0, path, &[0.0], lattice.clone())?;
        marcus_weak_terms(&sol, &theta, horizon)
    })?;
    let mut t = Table::new(
        "weak",
        &["path", "initial", "drift", "small_jumps", "large_jumps", "compensator", "pairing", "residual"],
    );
    for (i, w) in terms.iter().enumerate() {
        t.push(vec![
            i as f64,
            w.initial,
            w.drift,
            w.small_jumps,
            w.large_jumps,
            w.compensator,
            w.pairing,
            w.residual(),
        ]);
    }
    t.note("median_residual", median(&t.column("residual").unwrap_or_default()));
    Ok(vec![t])
}

fn perturbative_check(config: &ExperimentConfig) -> Result<Vec<Table>> {
    let b = config.drift_field()?;
    let ens = config.ensemble()?;
    let (theta, u0) = test_pair(config);
    let lattice = config.lattice()?;
    let horizon = config.discretization.horizon;
    let res = ens.map_paths(|path| {
        let sol = solve(&b, &u0, path, &[0.0], lattice.clone())?;
        perturbative_residual(&sol, &theta, horizon)
    })?;
    let mut t = Table::new("perturbative", &["path", "residual"]);
    for (i, r) in res.iter().enumerate() {
        t.push(vec![i as f64, *r]);
    }
    t.note("median_residual", median(&res));
    Ok(vec![t])
}

/// λ search on the torus, `u_λ` on the nodes, and the conjugation defect
/// on every path when the noise has a jump ledger.
fn resolvent(config: &ExperimentConfig) -> Result<Vec<Table>> {
    let b = config.drift_field()?;
    let spec = config.stable_spec()?;
    let d = config.noise.dim;
    let grid = TorusGrid::new(
        config.params.torus_period.unwrap_or(std::f64::consts::TAU),
        config.params.torus_n.unwrap_or(64),
        d,
    )?;
    let it = ito_tanaka_lambda_search(&b, &spec, &grid, config.params.tol.unwrap_or(1e-10))?;
    let mut ut = Table::with_columns("u", [coords("x", d), coords("u", d)].concat());
    let vals: Vec<Vec<f64>> = it.u.iter().map(|c| c.values()).collect();
    for (j, x) in grid.nodes().iter().enumerate() {
        let mut row = x.clone();
        row.extend(vals.iter().map(|v| v[j]));
        ut.push(row);
    }
    ut.note("lambda", it.lambda);
    ut.note("du_norm", it.du_norm);
    ut.note("residual", it.residual);
    ut.note("iterations", it.iterations);
    let mut history = Table::new("history", &["lambda", "du_norm"]);
    for (l, n) in &it.history {
        history.push(vec![*l, n.unwrap_or(f64::NAN)]);
    }
    let lambda = it.lambda;
    let psi = psi_transform(it.u, lambda)?;
    let (lo, hi) = psi.jacobian_bounds();
    ut.note("dpsi_min", lo);
    ut.note("dpsi_max", hi);
    let mut out = vec![ut, history];
    if spec.mode == SimulationMode::JumpDecomposition {
        let ens = config.ensemble()?;
        let x = config.center();
        let defects = ens.map_paths(|path| verify_conjugation(&b, &spec, path, &x, &psi))?;
        let mut t = Table::new("conjugation", &["path", "defect"]);
        for (i, v) in defects.iter().enumerate() {
            t.push(vec![i as f64, *v]);
        }
        t.note("median_defect", median(&defects));
        out.push(t);
    }
    Ok(out)
}

fn nonuniqueness(config: &ExperimentConfig) -> Result<Vec<Table>> {
    let (name, args) = parse_call(&config.drift.field)?;
    if name != "counterexample" || args.len() != 2 {
        return Err(Error::validation("drift.field", "the demo needs `counterexample(gamma, R)`"));
    }
    let spec = config.stable_spec()?;
    let perturbations = config.params.perturbations.clone().unwrap_or_else(|| vec![1e-2, 1e-4, 1e-6]);
    let disc = &config.discretization;
    let r = nonuniqueness_demo(
        args[0],
        args[1],
        Some(&spec),
        &perturbations,
        config.ensemble.n_paths,
        disc.horizon,
        disc.base_dt,
        config.ensemble.master_seed,
    )?;
    let mut det = Table::with_columns(
        "deterministic",
        columns(&["t"], (0..perturbations.len()).map(|j| format!("sep_{j}")).collect()),
    );
    for (k, t) in r.times.iter().enumerate() {
        let mut row = vec![*t];
        row.extend(r.deterministic.iter().map(|s| s[k]));
        det.push(row);
    }
    let mut noisy = Table::new("noisy", &["perturbation", "median_final", "deterministic_final"]);
    for (s, d) in r.noisy.iter().zip(&r.deterministic) {
        noisy.push(vec![s.perturbation, s.median_final, *d.last().unwrap_or(&f64::NAN)]);
    }
    let medians: Vec<f64> = r.noisy.iter().map(|s| s.median_final).collect();
    noisy.note("monotone", medians.windows(2).all(|w| w[1] < w[0]));
    Ok(vec![det, noisy])
}

fn epsilons(config: &ExperimentConfig, default: &[f64]) -> Vec<f64> {
    config.params.epsilons.clone().unwrap_or_else(|| default.to_vec())
}

/// `E mean_x sup_t |φ^ε − φ^{ε/4}|^p` for each ε.
fn stability(config: &ExperimentConfig) -> Result<Vec<Table>> {
    let raw = config.raw_drift()?;
    let ens = config.ensemble()?;
    let d = config.noise.dim;
    let points = config.points()?;
    let eps = epsilons(config, &[0.2, 0.1, 0.05]);
    let pairs = eps
        .iter()
        .map(|&e| {
            Ok((
                mollify(&raw, &MollifierSpec::new(e, d)?)?,
                mollify(&raw, &MollifierSpec::new(e / 4.0, d)?)?,
            ))
        })
        .collect::<Result<Vec<(DriftField, DriftField)>>>()?;
    let est = ensemble_discrepancy(&pairs, &ens, &points, config.params.p.unwrap_or(2.0))?;
    let mut t = Table::new("stability", &["epsilon", "mean", "std_error"]);
    for (e, s) in eps.iter().zip(&est) {
        t.push(estimate_row(*e, s));
    }
    Ok(vec![t])
}

/// `E sup_t |X^x − X^y|^p` against `|x − y|` with the fitted slope.
fn moments(config: &ExperimentConfig) -> Result<Vec<Table>> {
    let b = config.drift_field()?;
    let ens = config.ensemble()?;
    let x = config.center();
    let p = config.params.p.unwrap_or(2.0);
    let seps = config.params.separations.clone().unwrap_or_else(|| vec![1e-1, 1e-2, 1e-3]);
    let mut t = Table::new("moments", &["separation", "mean", "std_error"]);
    for &s in &seps {
        let mut y = x.clone();
        y[0] += s;
        t.push(estimate_row(s, &moment_estimate(&b, &ens, &x, &y, p)?));
    }
    let means = t.column("mean").unwrap_or_default();
    if let Ok(fit) = fit_order(&seps, &means) {
        t.note("slope", fit.order);
    }
    Ok(vec![t])
}

/// Smallest lattice of spacing `h` holding every `2ε`-ball around `images`.
fn covering_lattice(images: &[Vec<f64>], reach: f64, h: f64) -> Result<Lattice> {
    let d = images[0].len();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for y in images {
        for i in 0..d {
            lo[i] = lo[i].min(y[i] - reach);
            hi[i] = hi[i].max(y[i] + reach);
        }
    }
    let shape: Vec<usize> = (0..d).map(|i| ((hi[i] - lo[i]) / h).ceil() as usize + 2).collect();
    let lower: Vec<f64> = lo.iter().map(|v| v - h).collect();
    Lattice::new(lower, h, shape)
}

/// Mean over paths of `|∫ R_ε[b,u](φ_{0,T}(x)) ρ(x) dx|` for each ε.
///
/// `u` is the configured bump datum sampled at spacing `h`, `ρ` the test
/// bump; the quadrature nodes for `x` have spacing `4h`.
pub fn commutator_sweep(config: &ExperimentConfig, eps: &[f64]) -> Result<Vec<Estimate>> {
    let b = config.drift_field()?;
    let ens = config.ensemble()?;
    let d = config.noise.dim;
    let h = config.discretization.h;
    let (theta, u0) = test_pair(config);
    let nodes = Lattice::cube(&theta.center, theta.support_radius, 4.0 * h)?;
    let mollifiers = eps
        .iter()
        .map(|&e| MollifierSpec::new(e, d))
        .collect::<Result<Vec<_>>>()?;
    let reach = 2.0 * eps.iter().cloned().fold(0.0, f64::max) + 2.0 * h;
    let per_path = ens.map_paths(|path| {
        let points = nodes.points();
        let images = points
            .iter()
            .map(|x| Ok(solve_forward(&b, x, path)?.last().to_vec()))
            .collect::<Result<Vec<_>>>()?;
        let lattice = covering_lattice(&images, reach, h)?;
        let u = GridField::sample(lattice, |x| u0.eval(x));
        let samples = FlowSamples {
            weights: vec![nodes.cell_volume(); points.len()],
            points,
            images,
        };
        mollifiers
            .iter()
            .map(|m| Ok(commutator_pairing(&b, &u, &samples, |x| theta.eval(x), m)?.abs()))
            .collect::<Result<Vec<f64>>>()
    })?;
    Ok((0..eps.len())
        .map(|j| Estimate::from_samples(&per_path.iter().map(|r| r[j]).collect::<Vec<_>>()))
        .collect())
}

fn commutators(config: &ExperimentConfig) -> Result<Vec<Table>> {
    let eps = epsilons(config, &[0.2, 0.1, 0.05, 0.025]);
    let est = commutator_sweep(config, &eps)?;
    let mut t = Table::new("commutator", &["epsilon", "mean_abs_pairing", "std_error"]);
    for (e, s) in eps.iter().zip(&est) {
        t.push(estimate_row(*e, s));
    }
    Ok(vec![t])
}

/// Path mean of the time-averaged seminorm `[log Jφ^ε_t]` on the box for
/// each ε, the average taken over ten equispaced grid nodes.
pub fn sobolev_sweep(config: &ExperimentConfig, eps: &[f64]) -> Result<Vec<Estimate>> {
    let raw = config.raw_drift()?;
    let ens = config.ensemble()?;
    let d = config.noise.dim;
    let lattice = config.lattice()?;
    let center = config.center();
    let radius = config.discretization.half_width;
    let delta = config.params.sobolev_delta.unwrap_or(0.3);
    let p = config.params.p.unwrap_or(2.0);
    let fields = eps
        .iter()
        .map(|&e| mollify(&raw, &MollifierSpec::new(e, d)?))
        .collect::<Result<Vec<_>>>()?;
    let points = lattice.points();
    let per_path = ens.map_paths(|path| {
        let n = path.n_cells();
        let nodes: Vec<usize> = (1..=10).map(|j| j * n / 10).collect();
        fields
            .iter()
            .map(|b| {
                let logs = points
                    .par_iter()
                    .map(|x| log_jacobian(b, x, path))
                    .collect::<Result<Vec<_>>>()?;
                let total: f64 = nodes
                    .iter()
                    .map(|&k| {
                        let g = GridField {
                            lattice: lattice.clone(),
                            values: logs.iter().map(|l| l[k]).collect(),
                        };
                        discrete_sobolev_seminorm(&g, &center, radius, delta, p)
                    })
                    .sum();
                Ok(total / nodes.len() as f64)
            })
            .collect::<Result<Vec<f64>>>()
    })?;
    Ok((0..eps.len())
        .map(|j| Estimate::from_samples(&per_path.iter().map(|r| r[j]).collect::<Vec<_>>()))
        .collect())
}

fn sobolev(config: &ExperimentConfig) -> Result<Vec<Table>> {
    let eps = epsilons(config, &[0.2, 0.1, 0.05]);
    let est = sobolev_sweep(config, &eps)?;
    let mut t = Table::new("sobolev", &["epsilon", "mean", "std_error"]);
    for (e, s) in eps.iter().zip(&est) {
        t.push(estimate_row(*e, s));
    }
    Ok(vec![t])
}
