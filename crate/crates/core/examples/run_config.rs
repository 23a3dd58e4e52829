//! Drives an experiment from a TOML document, as the command-line tool
//! does, and prints the resulting tables.

use levy_transport::experiments::{run, ExperimentConfig};

const CONFIG: &str = r#"
schema_version = 1
experiment = "convergence"

[noise]
alpha = 1.5

[drift]
field = "counterexample(0.6,1)"
mollify_epsilon = 0.1

[discretization]
base_dt = 0.02
h = 0.04

[ensemble]
n_paths = 8
master_seed = 4

[params]
target = "perturbative"
levels = 3
"#;

fn main() -> levy_transport::Result<()> {
    let mut cfg = ExperimentConfig::from_toml(CONFIG)?;
    cfg.output.directory = std::env::temp_dir().join("levy-transport-example").to_string_lossy().into_owned();
    let summary = run(&cfg)?;
    for t in &summary.tables {
        println!("{}", t.columns.join("\t"));
        for r in &t.rows {
            let cells: Vec<String> = r.iter().map(|v| format!("{v:.4e}")).collect();
            println!("{}", cells.join("\t"));
        }
        for (k, v) in &t.notes {
            println!("{k}: {v}");
        }
    }
    for a in &summary.artifacts {
        println!("wrote {}", a.display());
    }
    Ok(())
}
