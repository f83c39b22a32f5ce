//! Run configuration: JSON with every unknown key rejected.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use spectropt::grid::io::read_potential;
use spectropt::grid::shapes::Shape;
use spectropt::optimize::{PenaltyConfig, ProblemKind};
use spectropt::verify::VerifyConfig;
use spectropt::{build_grid, GeneralizedPotential, GridSpec};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub d: usize,
    #[serde(rename = "L")]
    pub half_width: f64,
    pub n: usize,
}

impl GridConfig {
    pub fn build(&self) -> Result<GridSpec, CliError> {
        Ok(build_grid(self.d, self.half_width, self.n)?)
    }
}

/// A built-in shape or a potential file in the flat JSON format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Source {
    File {
        file: PathBuf,
    },
    Builtin(Shape),
}

impl Source {
    pub fn label(&self) -> String {
        match self {
            Source::File { file } => file.display().to_string(),
            Source::Builtin(shape) => shape.name().to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemConfig {
    pub kind: ProblemKind,
    pub k: usize,
    pub p: f64,
    pub m: f64,
    pub damping: f64,
    pub max_iters: usize,
    pub tol_obj: f64,
    pub v_cap: Option<f64>,
    pub cluster_tol: f64,
    pub kkt_tol: f64,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        let c = PenaltyConfig::new(1, 0.5, 1.0);
        Self {
            kind: ProblemKind::PotentialMass,
            k: c.k,
            p: c.p,
            m: c.m,
            damping: c.damping,
            max_iters: c.max_iters,
            tol_obj: c.tol_obj,
            v_cap: c.v_cap,
            cluster_tol: c.cluster_tol,
            kkt_tol: c.kkt_tol,
        }
    }
}

impl ProblemConfig {
    pub fn penalty(&self, seed: u64) -> PenaltyConfig {
        PenaltyConfig {
            k: self.k,
            p: self.p,
            m: self.m,
            damping: self.damping,
            max_iters: self.max_iters,
            tol_obj: self.tol_obj,
            v_cap: self.v_cap,
            cluster_tol: self.cluster_tol,
            kkt_tol: self.kkt_tol,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Relative residual for eigenpairs and linear solves.
    pub tol: f64,
    /// Eigensolver iteration cap.
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iters: 5000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Svg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    /// Artifacts written next to the JSON report.
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: None,
            formats: vec![Format::Csv, Format::Svg],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepCommand {
    Torsion,
    Eigs,
    Gamma,
    Optimize,
}

impl SweepCommand {
    pub fn name(self) -> &'static str {
        match self {
            SweepCommand::Torsion => "torsion",
            SweepCommand::Eigs => "eigs",
            SweepCommand::Gamma => "gamma",
            SweepCommand::Optimize => "optimize",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub command: SweepCommand,
    /// Dotted config paths (`problem.m`, `potential`) and their values; the
    /// sweep runs the Cartesian product.
    pub axes: BTreeMap<String, Vec<Value>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<Source>,
    /// Second measure for `gamma`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub other: Option<Source>,
    #[serde(default)]
    pub problem: ProblemConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifyConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

impl RunConfig {
    /// Reads a config file; relative potential paths resolve against its
    /// directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for src in [&mut cfg.potential, &mut cfg.other].into_iter().flatten() {
            if let Source::File { file } = src {
                if file.is_relative() {
                    *file = base.join(&*file);
                }
            }
        }
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))
    }

    pub fn grid(&self) -> Result<GridSpec, CliError> {
        self.grid
            .as_ref()
            .ok_or_else(|| CliError::Config("config: missing `grid`".into()))?
            .build()
    }

    /// The measure named by `source`; a file must agree with `grid` when
    /// both are given.
    pub fn load_source(&self, source: &Source) -> Result<GeneralizedPotential, CliError> {
        match source {
            Source::Builtin(shape) => Ok(shape.to_potential(&self.grid()?)?),
            Source::File { file } => {
                let pot = read_potential(file).map_err(|e| match e {
                    spectropt::Error::Io(io) => CliError::Io(format!("{}: {io}", file.display())),
                    other => CliError::Config(format!("{}: {other}", file.display())),
                })?;
                if let Some(g) = &self.grid {
                    if g.build()? != *pot.grid() {
                        return Err(CliError::Config(format!(
                            "{}: grid differs from the configured grid",
                            file.display()
                        )));
                    }
                }
                Ok(pot)
            }
        }
    }

    pub fn require(&self, which: &str) -> Result<GeneralizedPotential, CliError> {
        let src = match which {
            "other" => self.other.as_ref(),
            _ => self.potential.as_ref(),
        };
        let src = src.ok_or_else(|| CliError::Config(format!("config: missing `{which}`")))?;
        self.load_source(src)
    }
}

/// Sets `path` (dot separated) inside a JSON object, creating objects on
/// the way.
pub fn set_path(root: &mut Value, path: &str, value: Value) -> Result<(), CliError> {
    let mut cur = root;
    let keys: Vec<&str> = path.split('.').collect();
    for (i, key) in keys.iter().enumerate() {
        let obj = cur
            .as_object_mut()
            .ok_or_else(|| CliError::Config(format!("sweep axis `{path}`: `{key}` is not inside an object")))?;
        if i + 1 == keys.len() {
            obj.insert(key.to_string(), value);
            return Ok(());
        }
        cur = obj.entry(key.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    Ok(())
}
