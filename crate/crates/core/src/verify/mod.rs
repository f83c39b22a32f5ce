//! Named numerical checks: analytic oracles, scaling identities, explicit
//! inequalities, classifier labels and optimizer diagnostics. Each check
//! yields a [`CheckReport`] with its raw numbers.

mod checks;
pub mod families;

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::optimize::OptReport;

/// Reference constants the checks compare against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct Oracles {
    /// `π²/4`, first Dirichlet eigenvalue of `(-1, 1)`.
    pub interval_lambda1: f64,
    /// `π²`.
    pub interval_lambda2: f64,
    /// `1/3`, torsion of `(-1, 1)`.
    pub interval_torsion: f64,
    /// `j_{0,1}²`, first Dirichlet eigenvalue of the unit disk.
    pub disk_lambda1: f64,
    /// `π/16`, torsion of the unit disk.
    pub disk_torsion: f64,
    /// `1/4`, the torsion function at the centre of the unit disk.
    pub disk_center_torsion: f64,
    /// `2j - 1` for the harmonic oscillator `-u'' + x² u`.
    pub oscillator_levels: Vec<f64>,
    /// `e^{1/(8π)}`.
    pub linf_constant: f64,
    /// `j_{0,1}² (π/16)^{1/2}`, the merit figure of the disk.
    pub disk_merit: f64,
    /// Optimal `λ_1` for `p = 1/2, d = 1` on `L = 6, n = 2047`.
    pub faber_krahn_lambda1: f64,
}

pub const J01: f64 = 2.404_825_557_695_773;

/// `λ_1` of the optimal potential for `p = 1/2` in one dimension, computed
/// once on the fine grid `L = 6, n = 2047`.
pub const FABER_KRAHN_FINE: f64 = 5.195_996_645_934;

impl Default for Oracles {
    fn default() -> Self {
        Self {
            interval_lambda1: PI * PI / 4.0,
            interval_lambda2: PI * PI,
            interval_torsion: 1.0 / 3.0,
            disk_lambda1: J01 * J01,
            disk_torsion: PI / 16.0,
            disk_center_torsion: 0.25,
            oscillator_levels: vec![1.0, 3.0, 5.0, 7.0],
            linf_constant: (1.0 / (8.0 * PI)).exp(),
            disk_merit: J01 * J01 * (PI / 16.0).sqrt(),
            faber_krahn_lambda1: FABER_KRAHN_FINE,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    /// Check names or tags; empty runs everything.
    #[serde(default)]
    pub filter: Vec<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub oracles: Oracles,
}

/// Outcome of one check, with every number it compared.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub tags: Vec<String>,
    pub passed: bool,
    pub failures: Vec<String>,
    pub metrics: BTreeMap<String, Value>,
}

/// Accumulates metrics and failed requirements for one check.
#[derive(Debug, Default)]
pub struct Recorder {
    metrics: BTreeMap<String, Value>,
    failures: Vec<String>,
}

impl Recorder {
    pub fn metric(&mut self, key: impl Into<String>, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.metrics.insert(key.into(), v);
    }

    pub fn require(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.failures.push(what.into());
        }
    }

    /// `|got - want| ≤ rel |want|`.
    pub fn close(&mut self, key: &str, got: f64, want: f64, rel: f64) {
        let err = (got - want).abs() / want.abs();
        self.metric(key, serde_json::json!({ "value": got, "reference": want, "relative_error": err, "tolerance": rel }));
        self.require(err <= rel, format!("{key}: {got} differs from {want} by {err:.3e} (> {rel:.1e})"));
    }

    /// `value ≤ bound`.
    pub fn at_most(&mut self, key: &str, value: f64, bound: f64) {
        self.metric(key, serde_json::json!({ "value": value, "bound": bound }));
        self.require(value <= bound, format!("{key}: {value:.6e} exceeds {bound:.6e}"));
    }
}

type CheckFn = fn(&Suite, &mut Recorder) -> Result<()>;

/// A registered check.
pub struct Check {
    pub name: &'static str,
    pub tags: &'static [&'static str],
    pub summary: &'static str,
    run: CheckFn,
}

/// All checks in suite order.
pub fn registry() -> &'static [Check] {
    checks::REGISTRY
}

/// Checks whose name or tag appears in `filter`; everything when empty.
/// Unknown names are an error.
pub fn select(filter: &[String]) -> Result<Vec<&'static Check>> {
    let all = registry();
    for f in filter {
        if !all.iter().any(|c| c.name == f || c.tags.contains(&f.as_str())) {
            return Err(Error::Precondition(format!("unknown check or tag {f:?}")));
        }
    }
    Ok(all
        .iter()
        .filter(|c| filter.is_empty() || filter.iter().any(|f| c.name == f || c.tags.contains(&f.as_str())))
        .collect())
}

/// Shared state of one suite run: the configuration and optimizer outputs
/// reused by several checks.
pub struct Suite {
    pub config: VerifyConfig,
    k1_runs: OnceLock<std::result::Result<Vec<OptReport>, String>>,
    k2_run: OnceLock<std::result::Result<OptReport, String>>,
    torsion_run: OnceLock<std::result::Result<OptReport, String>>,
}

impl Suite {
    pub fn new(config: VerifyConfig) -> Self {
        Self {
            config,
            k1_runs: OnceLock::new(),
            k2_run: OnceLock::new(),
            torsion_run: OnceLock::new(),
        }
    }

    pub fn oracles(&self) -> &Oracles {
        &self.config.oracles
    }

    pub fn run(&self, check: &Check) -> CheckReport {
        let mut rec = Recorder::default();
        if let Err(e) = (check.run)(self, &mut rec) {
            rec.failures.push(format!("error: {e}"));
        }
        CheckReport {
            name: check.name.to_string(),
            tags: check.tags.iter().map(|t| t.to_string()).collect(),
            passed: rec.failures.is_empty(),
            failures: rec.failures,
            metrics: rec.metrics,
        }
    }

    /// Runs the selected checks in order.
    pub fn run_all(&self) -> Result<Vec<CheckReport>> {
        Ok(select(&self.config.filter)?.into_iter().map(|c| self.run(c)).collect())
    }

    fn cached<T: Clone>(
        cell: &OnceLock<std::result::Result<T, String>>,
        f: impl FnOnce() -> Result<T>,
    ) -> Result<T> {
        cell.get_or_init(|| f().map_err(|e| e.to_string()))
            .clone()
            .map_err(Error::Precondition)
    }
}
