use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use levy_transport::experiments::{run, Experiment, ExperimentConfig};
use levy_transport::{Error, Result};

#[derive(Parser)]
#[command(name = "levy-transport", version, about = "Stochastic flow and transport experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML experiment configuration; built-in defaults when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed, overriding the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, overriding the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run even when alpha/2 + beta <= 1.
    #[arg(long)]
    override_gate: bool,
}

#[derive(Subcommand)]
enum Command {
    SamplePath(Common),
    Flow(Common),
    InverseFlow(Common),
    Transport(Common),
    WeakCheck(Common),
    PerturbativeCheck(Common),
    Resolvent(Common),
    NonuniquenessDemo(Common),
    Stability(Common),
    Moments(Common),
    Commutator(Common),
    SobolevDiag(Common),
    Convergence {
        #[command(flatten)]
        common: Common,
        /// Number of refinement levels.
        #[arg(long)]
        levels: Option<usize>,
    },
}

impl Command {
    fn split(self) -> (Experiment, Common, Option<usize>) {
        use Command::*;
        match self {
            SamplePath(c) => (Experiment::SamplePath, c, None),
            Flow(c) => (Experiment::Flow, c, None),
            InverseFlow(c) => (Experiment::InverseFlow, c, None),
            Transport(c) => (Experiment::Transport, c, None),
            WeakCheck(c) => (Experiment::WeakCheck, c, None),
            PerturbativeCheck(c) => (Experiment::PerturbativeCheck, c, None),
            Resolvent(c) => (Experiment::Resolvent, c, None),
            NonuniquenessDemo(c) => (Experiment::NonUniqueness, c, None),
            Stability(c) => (Experiment::Stability, c, None),
            Moments(c) => (Experiment::Moments, c, None),
            Commutator(c) => (Experiment::Commutator, c, None),
            SobolevDiag(c) => (Experiment::SobolevDiag, c, None),
            Convergence { common, levels } => (Experiment::Convergence, common, levels),
        }
    }
}

fn load(experiment: Experiment, common: &Common, levels: Option<usize>) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            let cfg: ExperimentConfig = toml::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
            if let Some(e) = cfg.experiment {
                if e != experiment {
                    return Err(Error::Validation {
                        field: "experiment".into(),
                        message: format!("config selects `{}`, command is `{}`", e.name(), experiment.name()),
                    });
                }
            }
            cfg
        }
        None => ExperimentConfig::default_for(experiment),
    };
    cfg.experiment = Some(experiment);
    if let Some(s) = common.seed {
        cfg.ensemble.master_seed = s;
    }
    if let Some(o) = &common.out {
        cfg.output.directory = o.to_string_lossy().into_owned();
    }
    if common.override_gate {
        cfg.override_gate = true;
    }
    if levels.is_some() {
        cfg.params.levels = levels;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, common, levels) = cli.command.split();
    let outcome = load(experiment, &common, levels).and_then(|cfg| run(&cfg));
    match outcome {
        Ok(summary) => {
            for t in &summary.tables {
                for (k, v) in &t.notes {
                    println!("{}: {k} = {v}", if t.name.is_empty() { experiment.name() } else { &t.name });
                }
            }
            for a in &summary.artifacts {
                println!("wrote {}", a.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
