use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::{ExperimentConfig, OutputFormat};
use crate::error::Result;
use crate::levy_noise::fmt_real;

const MODULES: [&str; 6] = [
    "levy_noise",
    "drift_fields",
    "flow_engine",
    "transport_solver",
    "kolmogorov_resolvent",
    "experiments",
];

/// Header written at the top of every artifact.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub package: String,
    pub version: String,
    pub modules: Vec<(String, String)>,
    pub config_sha256: String,
    pub master_seed: u64,
    pub config: String,
}

impl Provenance {
    pub fn new(config: &ExperimentConfig) -> Self {
        let version = env!("CARGO_PKG_VERSION").to_string();
        Provenance {
            package: env!("CARGO_PKG_NAME").into(),
            modules: MODULES.iter().map(|m| (m.to_string(), version.clone())).collect(),
            version,
            config_sha256: config.sha256(),
            master_seed: config.ensemble.master_seed,
            config: config.to_toml(),
        }
    }

    /// `# `-prefixed lines, config included.
    pub fn comment_block(&self) -> String {
        let mut s = format!("# {} {}\n", self.package, self.version);
        let mods: Vec<String> = self.modules.iter().map(|(m, v)| format!("{m}={v}")).collect();
        s += &format!("# modules {}\n", mods.join(" "));
        s += &format!("# config_sha256 {}\n", self.config_sha256);
        s += &format!("# master_seed {}\n", self.master_seed);
        for line in self.config.lines() {
            s += &format!("# | {line}\n");
        }
        s
    }
}

/// A named numeric table plus free-form key/value notes.
#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub notes: Vec<(String, String)>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            ..Default::default()
        }
    }

    pub fn with_columns(name: &str, columns: Vec<String>) -> Self {
        Table {
            name: name.into(),
            columns,
            ..Default::default()
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn note(&mut self, key: &str, value: impl ToString) {
        self.notes.push((key.into(), value.to_string()));
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn note_value(&self, key: &str) -> Option<&str> {
        self.notes.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn write_csv<W: Write>(&self, prov: &Provenance, mut out: W) -> Result<()> {
        out.write_all(prov.comment_block().as_bytes())?;
        for (k, v) in &self.notes {
            writeln!(out, "# {k} = {v}")?;
        }
        writeln!(out, "{}", self.columns.join(","))?;
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|v| fmt_real(*v)).collect();
            writeln!(out, "{}", cells.join(","))?;
        }
        Ok(())
    }

    pub fn write_json<W: Write>(&self, prov: &Provenance, out: W) -> Result<()> {
        #[derive(Serialize)]
        struct Doc<'a> {
            provenance: &'a Provenance,
            table: &'a Table,
        }
        serde_json::to_writer_pretty(out, &Doc { provenance: prov, table: self })
            .map_err(|e| std::io::Error::other(e.to_string()))?;
        Ok(())
    }
}

/// Writes each table to `<dir>/<stem>[_<name>].<ext>` and returns the paths.
pub(crate) fn write_tables(config: &ExperimentConfig, stem: &str, tables: &[Table]) -> Result<Vec<PathBuf>> {
    let dir = Path::new(&config.output.directory);
    fs::create_dir_all(dir)?;
    let prov = Provenance::new(config);
    let mut written = Vec::new();
    for t in tables {
        let base = if tables.len() == 1 || t.name.is_empty() {
            stem.to_string()
        } else {
            format!("{stem}_{}", t.name)
        };
        let (ext, json) = match config.output.format {
            OutputFormat::Csv => ("csv", false),
            OutputFormat::Json => ("json", true),
        };
        let path = dir.join(format!("{base}.{ext}"));
        let mut w = BufWriter::new(fs::File::create(&path)?);
        if json {
            t.write_json(&prov, &mut w)?;
        } else {
            t.write_csv(&prov, &mut w)?;
        }
        w.flush()?;
        written.push(path);
    }
    Ok(written)
}
