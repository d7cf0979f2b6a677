//! Synthetic-count experiment harness.
//!
//! Generates ground-truth factors with gamma-distributed entries, samples
//! generalized Poisson counts under constant or heterogeneous row
//! dispersion, fits every configured (model, initializer) combination on
//! the same data, and aggregates alignment-corrected reconstruction errors
//! across replications into a report.

mod generate;
mod report;
mod run;
mod seed;

pub use generate::{gen_counts, gen_truth, regime_thetas, HET_LEVELS};
pub use report::{
    render_summary, write_report_json, write_table1_csv, AggregateCell, AggregateReport,
    MetricSummary, RegimeBlock,
};
pub use run::{run_experiment, run_replication, run_sweep, CellMetrics, CellOutcome,
    ReplicationResult};
pub use seed::{stream_rng, stream_seed};

use crate::factor_core::ConvergenceSpec;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Row-dispersion regime of the synthetic truth: one constant θ₀ for every
/// row, or the five levels `{0, 0.5, 1, 1.5, 2}` assigned to equal blocks
/// of consecutive rows.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DispersionRegime {
    Constant(f64),
    Heterogeneous,
}

impl fmt::Display for DispersionRegime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(v) => write!(f, "constant:{v}"),
            Self::Heterogeneous => write!(f, "heterogeneous"),
        }
    }
}

impl FromStr for DispersionRegime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "heterogeneous" {
            return Ok(Self::Heterogeneous);
        }
        if let Some(v) = s.strip_prefix("constant:") {
            let value: f64 = v
                .parse()
                .map_err(|_| Error::Config(format!("invalid dispersion value {v:?}")))?;
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::Config(format!(
                    "dispersion must be finite and >= 0, got {value}"
                )));
            }
            return Ok(Self::Constant(value));
        }
        Err(Error::Config(format!(
            "unknown regime {s:?}; expected \"heterogeneous\" or \"constant:<value>\""
        )))
    }
}

/// A likelihood model to benchmark.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelSpec {
    Pmf,
    Nbmf { alpha: f64 },
    Gpmf,
}

impl ModelSpec {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Pmf => "pmf",
            Self::Nbmf { .. } => "nbmf",
            Self::Gpmf => "gpmf",
        }
    }
}

/// An initialization strategy to benchmark.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitSpec {
    Nndsvd,
    Random { n_starts: usize },
}

impl InitSpec {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Nndsvd => "nndsvd",
            Self::Random { .. } => "random",
        }
    }
}

/// Shape/rate parameters of the gamma law generating truth factor entries.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaParams {
    pub shape: f64,
    pub rate: f64,
}

/// Serializable mirror of [`ConvergenceSpec`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceSettings {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl ConvergenceSettings {
    pub fn to_spec(self) -> Result<ConvergenceSpec<f64>> {
        ConvergenceSpec::new(self.tolerance, self.max_iterations)
    }
}

impl Default for ConvergenceSettings {
    fn default() -> Self {
        let spec = ConvergenceSpec::<f64>::default();
        Self {
            tolerance: spec.tolerance,
            max_iterations: spec.max_iterations,
        }
    }
}

fn default_i() -> usize {
    50
}
fn default_j() -> usize {
    100
}
fn default_k() -> usize {
    5
}
fn default_regime() -> DispersionRegime {
    DispersionRegime::Constant(0.0)
}
fn default_truth_gamma() -> GammaParams {
    GammaParams { shape: 1.5, rate: 1.5 }
}
fn default_replications() -> usize {
    100
}
fn default_models() -> Vec<ModelSpec> {
    vec![ModelSpec::Pmf, ModelSpec::Nbmf { alpha: 5.0 }, ModelSpec::Gpmf]
}
fn default_initializers() -> Vec<InitSpec> {
    vec![InitSpec::Nndsvd, InitSpec::Random { n_starts: 5 }]
}

/// Full description of one synthetic experiment. Every field has a default
/// matching the reference protocol, so `{}` is a valid JSON config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_i")]
    pub i: usize,
    #[serde(default = "default_j")]
    pub j: usize,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_regime")]
    pub dispersion_regime: DispersionRegime,
    #[serde(default = "default_truth_gamma")]
    pub truth_gamma: GammaParams,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default = "default_models")]
    pub models: Vec<ModelSpec>,
    #[serde(default = "default_initializers")]
    pub initializers: Vec<InitSpec>,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub convergence: ConvergenceSettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            i: default_i(),
            j: default_j(),
            k: default_k(),
            dispersion_regime: default_regime(),
            truth_gamma: default_truth_gamma(),
            replications: default_replications(),
            models: default_models(),
            initializers: default_initializers(),
            master_seed: 0,
            convergence: ConvergenceSettings::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.i == 0 || self.j == 0 {
            return Err(Error::Config("dimensions must be >= 1".into()));
        }
        if self.k == 0 || self.k > self.i.min(self.j) {
            return Err(Error::Config(format!(
                "rank must lie in 1..=min(I, J) = {}, got {}",
                self.i.min(self.j),
                self.k
            )));
        }
        if self.dispersion_regime == DispersionRegime::Heterogeneous
            && self.i % HET_LEVELS.len() != 0
        {
            return Err(Error::Config(format!(
                "heterogeneous regime requires I divisible by {}, got {}",
                HET_LEVELS.len(),
                self.i
            )));
        }
        if let DispersionRegime::Constant(v) = self.dispersion_regime {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!(
                    "constant dispersion must be finite and >= 0, got {v}"
                )));
            }
        }
        if !(self.truth_gamma.shape.is_finite() && self.truth_gamma.shape > 0.0) {
            return Err(Error::Config("gamma shape must be > 0".into()));
        }
        if !(self.truth_gamma.rate.is_finite() && self.truth_gamma.rate > 0.0) {
            return Err(Error::Config("gamma rate must be > 0".into()));
        }
        if self.replications == 0 {
            return Err(Error::Config("replications must be >= 1".into()));
        }
        if self.models.is_empty() {
            return Err(Error::Config("at least one model is required".into()));
        }
        for m in &self.models {
            if let ModelSpec::Nbmf { alpha } = m {
                if !(alpha.is_finite() && *alpha > 0.0) {
                    return Err(Error::Config(format!(
                        "nbmf alpha must be finite and > 0, got {alpha}"
                    )));
                }
            }
        }
        if self.initializers.is_empty() {
            return Err(Error::Config("at least one initializer is required".into()));
        }
        for init in &self.initializers {
            if let InitSpec::Random { n_starts } = init {
                if *n_starts == 0 {
                    return Err(Error::Config("random initializer needs n_starts >= 1".into()));
                }
            }
        }
        self.convergence.to_spec().map(|_| ())
    }

    /// The benchmarked (model, initializer) combinations in report order.
    pub fn cells(&self) -> Vec<(ModelSpec, InitSpec)> {
        let mut out = Vec::with_capacity(self.models.len() * self.initializers.len());
        for &m in &self.models {
            for &init in &self.initializers {
                out.push((m, init));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_json_yields_reference_protocol() {
        let cfg: ExperimentConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!(cfg.i, 50);
        assert_eq!(cfg.j, 100);
        assert_eq!(cfg.k, 5);
        assert_eq!(cfg.replications, 100);
        assert_eq!(cfg.truth_gamma, GammaParams { shape: 1.5, rate: 1.5 });
        assert_eq!(cfg.models.len(), 3);
        assert_eq!(cfg.initializers.len(), 2);
        cfg.validate().unwrap();
    }

    #[test]
    fn config_round_trips_through_json() {
        let cfg = ExperimentConfig {
            dispersion_regime: DispersionRegime::Heterogeneous,
            replications: 7,
            master_seed: 99,
            ..ExperimentConfig::default()
        };
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let err = serde_json::from_str::<ExperimentConfig>("{\"rows\": 10}");
        assert!(err.is_err());
    }

    #[test]
    fn regime_strings_round_trip() {
        for s in ["constant:0", "constant:0.5", "constant:2", "heterogeneous"] {
            let regime: DispersionRegime = s.parse().unwrap();
            assert_eq!(regime.to_string(), s);
        }
        assert!("constant:-1".parse::<DispersionRegime>().is_err());
        assert!("constant:abc".parse::<DispersionRegime>().is_err());
        assert!("uniform".parse::<DispersionRegime>().is_err());
    }

    #[test]
    fn validation_rejects_bad_configs() {
        let mut cfg = ExperimentConfig { i: 52, ..ExperimentConfig::default() };
        cfg.dispersion_regime = DispersionRegime::Heterogeneous;
        assert!(cfg.validate().is_err());

        let cfg = ExperimentConfig { k: 0, ..ExperimentConfig::default() };
        assert!(cfg.validate().is_err());

        let cfg = ExperimentConfig { k: 60, ..ExperimentConfig::default() };
        assert!(cfg.validate().is_err());

        let cfg = ExperimentConfig {
            models: vec![ModelSpec::Nbmf { alpha: 0.0 }],
            ..ExperimentConfig::default()
        };
        assert!(cfg.validate().is_err());

        let cfg = ExperimentConfig {
            initializers: vec![InitSpec::Random { n_starts: 0 }],
            ..ExperimentConfig::default()
        };
        assert!(cfg.validate().is_err());

        let cfg = ExperimentConfig { replications: 0, ..ExperimentConfig::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn cells_enumerate_in_config_order() {
        let cfg = ExperimentConfig::default();
        let labels: Vec<String> = cfg
            .cells()
            .iter()
            .map(|(m, i)| format!("{}:{}", m.label(), i.label()))
            .collect();
        assert_eq!(
            labels,
            [
                "pmf:nndsvd",
                "pmf:random",
                "nbmf:nndsvd",
                "nbmf:random",
                "gpmf:nndsvd",
                "gpmf:random"
            ]
        );
    }
}
