//! Artifact collection and writing. Commands assemble everything in memory
//! first so that a failed run leaves no partial directory behind.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;
use spectropt::grid::io::{potential_to_json, write_field_csv, write_potential_csv};
use spectropt::{GeneralizedPotential, ScalarField};

use crate::config::{Format, RunConfig};
use crate::error::CliError;
use crate::svg;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Everything a command writes.
#[derive(Debug, Default)]
pub struct Artifacts {
    pub report: Value,
    /// Headline numbers for sweep leaderboards.
    pub summary: Vec<(String, f64)>,
    files: Vec<(String, Vec<u8>, Option<Format>)>,
}

impl Artifacts {
    pub fn new(report: impl Serialize) -> Result<Self, CliError> {
        Ok(Self {
            report: serde_json::to_value(report)?,
            ..Self::default()
        })
    }

    pub fn summary(&mut self, key: &str, value: f64) {
        self.summary.push((key.to_string(), value));
    }

    pub fn json(&mut self, name: &str, value: &impl Serialize) -> Result<(), CliError> {
        self.files.push((name.to_string(), pretty(value)?, None));
        Ok(())
    }

    pub fn field(&mut self, stem: &str, f: &ScalarField) -> Result<(), CliError> {
        let mut buf = Vec::new();
        write_field_csv(&mut buf, f)?;
        self.files.push((format!("{stem}.csv"), buf, Some(Format::Csv)));
        self.files.push((format!("{stem}.svg"), svg::field(f, None).into_bytes(), Some(Format::Svg)));
        Ok(())
    }

    pub fn potential(&mut self, stem: &str, p: &GeneralizedPotential) -> Result<(), CliError> {
        self.files.push((format!("{stem}.json"), potential_to_json(p)?.into_bytes(), None));
        let mut buf = Vec::new();
        write_potential_csv(&mut buf, p)?;
        self.files.push((format!("{stem}.csv"), buf, Some(Format::Csv)));
        self.files.push((
            format!("{stem}.svg"),
            svg::field(&p.vfin_field(), Some(p.mask())).into_bytes(),
            Some(Format::Svg),
        ));
        Ok(())
    }

    pub fn table(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        let buf = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
        self.files.push((name.to_string(), buf, Some(Format::Csv)));
        Ok(())
    }

    /// Writes the report, the resolved config, the metadata file and every
    /// artifact allowed by the configured formats.
    pub fn write(&self, dir: &Path, command: &str, cfg: &RunConfig) -> Result<(), CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        let put = |name: &str, bytes: &[u8]| -> Result<(), CliError> {
            let path = dir.join(name);
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(&path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
        };
        put("report.json", &pretty(&self.report)?)?;
        put("config.resolved.json", &pretty(cfg)?)?;
        put("metadata.json", &pretty(&metadata(command))?)?;
        for (name, bytes, format) in &self.files {
            if format.is_none_or(|f| cfg.output.formats.contains(&f)) {
                put(name, bytes)?;
            }
        }
        Ok(())
    }
}

pub fn pretty(value: &impl Serialize) -> Result<Vec<u8>, CliError> {
    let mut v = serde_json::to_vec_pretty(value)?;
    v.push(b'\n');
    Ok(v)
}

/// Timestamp and version, kept apart from the deterministic report.
pub fn metadata(command: &str) -> Value {
    let now = SystemTime::now().duration_since(UNIX_EPOCH).unwrap_or_default();
    serde_json::json!({
        "command": command,
        "version": VERSION,
        "timestamp_unix": now.as_secs(),
    })
}
