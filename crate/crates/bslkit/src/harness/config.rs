//! Experiment configuration: paper-scale and desk-scale presets, optional
//! TOML overrides, and per-field validation.
//!
//! Resolution order: preset defaults -> section of the config file (if any).
//! Unknown keys in a section are rejected.

use crate::error::{Error, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Scale preset for an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// Settings matching the published studies.
    Paper,
    /// Reduced settings that run in minutes on a desktop.
    Desk,
}

/// Run-level settings shared by every experiment.
#[derive(Debug, Clone)]
pub struct RunSettings {
    pub seed: u64,
    pub out_dir: PathBuf,
}

/// Model selector for the ad-hoc subcommands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelChoice {
    Toy,
    Ma2,
    Toad,
}

fn config_err(key: &str, message: impl Into<String>) -> Error {
    Error::Config {
        key: key.to_string(),
        message: message.into(),
    }
}

/// Parse a TOML config file into its top-level table.
pub fn load_config_table(path: &Path) -> Result<toml::Table> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        config_err(
            &path.display().to_string(),
            format!("cannot read config file: {e}"),
        )
    })?;
    text.parse::<toml::Table>()
        .map_err(|e| config_err(&path.display().to_string(), e.to_string()))
}

/// Overlay `section` of the config table (when present) onto the preset
/// defaults, then re-validate.
pub fn resolve_section<T>(preset: T, table: Option<&toml::Table>, section: &str) -> Result<T>
where
    T: Serialize + DeserializeOwned,
{
    let mut value =
        toml::Value::try_from(&preset).map_err(|e| config_err(section, e.to_string()))?;
    if let Some(table) = table {
        if let Some(over) = table.get(section) {
            merge_value(&mut value, over);
        }
    }
    value
        .try_into()
        .map_err(|e: toml::de::Error| config_err(section, e.to_string()))
}

fn merge_value(base: &mut toml::Value, over: &toml::Value) {
    match (base, over) {
        (toml::Value::Table(b), toml::Value::Table(o)) => {
            for (k, v) in o {
                match b.get_mut(k) {
                    Some(slot) => merge_value(slot, v),
                    None => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (slot, v) => *slot = v.clone(),
    }
}

/// Settings for the toy-model posterior comparison (exact vs misspecified
/// BSL vs the two adjustments).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToyFigure1Config {
    /// Observed sample size.
    pub n: usize,
    /// Simulations per likelihood estimate.
    pub m: usize,
    /// MCMC iterations.
    pub q: usize,
    /// Working-covariance scale; 0.5 is the deliberately misspecified value.
    pub cov_scale: f64,
    /// GP training-design size.
    pub b: usize,
    /// Gradient draws for the Omega estimate.
    pub j: usize,
    /// Fraction of the chain discarded as burn-in.
    pub burn_in: f64,
    /// Half-width of the training box in posterior-sd units.
    pub delta_mult: f64,
}

impl ToyFigure1Config {
    pub fn preset(p: Preset) -> Self {
        match p {
            Preset::Paper => ToyFigure1Config {
                n: 20,
                m: 50,
                q: 50_000,
                cov_scale: 0.5,
                b: 200,
                j: 200,
                burn_in: 0.2,
                delta_mult: 4.0,
            },
            Preset::Desk => ToyFigure1Config {
                q: 20_000,
                b: 100,
                j: 100,
                ..Self::preset(Preset::Paper)
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        validate_common("toy_figure1", self.m, self.burn_in)?;
        if self.n == 0 {
            return Err(config_err("toy_figure1.n", "n must be >= 1"));
        }
        if self.q < 100 {
            return Err(config_err("toy_figure1.q", "q must be >= 100"));
        }
        if self.cov_scale <= 0.0 {
            return Err(config_err("toy_figure1.cov_scale", "cov_scale must be > 0"));
        }
        if self.b < 10 {
            return Err(config_err("toy_figure1.b", "b must be >= 10 d_theta"));
        }
        if self.j < 2 {
            return Err(config_err("toy_figure1.j", "j must be >= d_theta + 1"));
        }
        if self.delta_mult <= 0.0 {
            return Err(config_err("toy_figure1.delta_mult", "delta_mult must be > 0"));
        }
        Ok(())
    }
}

/// Settings for the MA(2) interval-coverage study.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ma2CoverageConfig {
    /// Series length.
    pub n: usize,
    /// Simulations per likelihood estimate.
    pub m: usize,
    /// Number of replicate datasets.
    pub r: usize,
    /// Importance-sampling draws per dataset.
    pub n_importance: usize,
    /// Pilot chain length (50% discarded).
    pub pilot_q: usize,
    /// Prior draws scored to pick the pilot chain start.
    pub init_tries: usize,
    /// Shrinkage gamma; absent means the full sample covariance.
    pub gamma: Option<f64>,
    /// Minimum acceptable effective sample size per dataset.
    pub min_ess: f64,
    /// True parameters used to generate each dataset.
    pub theta_true: Vec<f64>,
    /// Nominal credibility levels.
    pub levels: Vec<f64>,
}

impl Ma2CoverageConfig {
    pub fn preset(p: Preset) -> Self {
        match p {
            Preset::Paper => Ma2CoverageConfig {
                n: 1000,
                m: 200,
                r: 100,
                n_importance: 10_000,
                pilot_q: 2000,
                init_tries: 50,
                gamma: None,
                min_ess: 100.0,
                theta_true: vec![0.6, 0.2],
                levels: vec![0.95, 0.90, 0.80],
            },
            Preset::Desk => Ma2CoverageConfig {
                r: 30,
                n_importance: 4000,
                pilot_q: 1500,
                ..Self::preset(Preset::Paper)
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        validate_common("ma2_coverage", self.m, 0.0)?;
        if self.n < 30 {
            return Err(config_err("ma2_coverage.n", "n must be >= 30"));
        }
        if self.r < 30 {
            return Err(config_err("ma2_coverage.r", "r must be >= 30"));
        }
        if self.n_importance < 100 {
            return Err(config_err(
                "ma2_coverage.n_importance",
                "n_importance must be >= 100",
            ));
        }
        if self.pilot_q < 100 {
            return Err(config_err("ma2_coverage.pilot_q", "pilot_q must be >= 100"));
        }
        if let Some(g) = self.gamma {
            if !(0.0..=1.0).contains(&g) {
                return Err(config_err(
                    "ma2_coverage.gamma",
                    format!("shrinkage gamma must lie in [0,1], got {g}"),
                ));
            }
        }
        if self.theta_true.len() != 2 {
            return Err(config_err(
                "ma2_coverage.theta_true",
                "theta_true must have 2 entries",
            ));
        }
        for l in &self.levels {
            if !(0.0 < *l && *l < 1.0) {
                return Err(config_err(
                    "ma2_coverage.levels",
                    "levels must lie in (0,1)",
                ));
            }
        }
        Ok(())
    }
}

/// Settings for the large-sample normality diagnostic on the toy model.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BvmConfig {
    /// Sample-size ladder.
    pub n_ladder: Vec<usize>,
    /// Posterior draws per rung (inverse-CDF from the quadrature grid).
    pub q: usize,
    /// Working-covariance scale for the idealized likelihood.
    pub cov_scale: f64,
    /// Base n for the sd-scaling ratio sd(4n)/sd(n).
    pub ratio_base: usize,
    /// Quadrature grid points.
    pub quad_points: usize,
}

impl BvmConfig {
    pub fn preset(_p: Preset) -> Self {
        BvmConfig {
            n_ladder: vec![1000, 4000, 5000],
            q: 50_000,
            cov_scale: 1.0,
            ratio_base: 1000,
            quad_points: 4001,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_ladder.is_empty() {
            return Err(config_err("bvm_check.n_ladder", "ladder must be non-empty"));
        }
        if self.q < 1000 {
            return Err(config_err("bvm_check.q", "q must be >= 1000"));
        }
        if self.cov_scale <= 0.0 {
            return Err(config_err("bvm_check.cov_scale", "cov_scale must be > 0"));
        }
        if self.quad_points < 100 {
            return Err(config_err(
                "bvm_check.quad_points",
                "quad_points must be >= 100",
            ));
        }
        Ok(())
    }
}

/// Settings for the rejection-sampler acceptance-rate stability experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcceptanceRateConfig {
    /// Sample-size ladder.
    pub n_ladder: Vec<usize>,
    /// m(n) = ceil(c0 * n^(gamma_exp/2)).
    pub c0: f64,
    pub gamma_exp: f64,
    /// Proposals per rung.
    pub n_prop: usize,
    /// Proposal draws scored to set the rejection bound.
    pub pilot_draws: usize,
    /// Log-slack added to the pilot maximum to form the bound.
    pub slack_nats: f64,
    /// Proposal sd multiplier on sqrt(s_obs/n).
    pub prop_scale: f64,
    /// Constant m used in the fixed-m contrast run.
    pub fixed_m: usize,
}

impl AcceptanceRateConfig {
    pub fn preset(p: Preset) -> Self {
        match p {
            Preset::Paper => AcceptanceRateConfig {
                n_ladder: vec![100, 400, 1600],
                c0: 2.0,
                gamma_exp: 1.0,
                n_prop: 4000,
                pilot_draws: 1000,
                slack_nats: 2.0,
                prop_scale: 2.0,
                fixed_m: 5,
            },
            Preset::Desk => AcceptanceRateConfig {
                n_prop: 2000,
                pilot_draws: 500,
                ..Self::preset(Preset::Paper)
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_ladder.len() < 2 {
            return Err(config_err(
                "acceptance_rate.n_ladder",
                "ladder needs >= 2 rungs",
            ));
        }
        if self.c0 <= 0.0 {
            return Err(config_err("acceptance_rate.c0", "c0 must be > 0"));
        }
        if self.n_prop < 100 {
            return Err(config_err("acceptance_rate.n_prop", "n_prop must be >= 100"));
        }
        if self.pilot_draws < 50 {
            return Err(config_err(
                "acceptance_rate.pilot_draws",
                "pilot_draws must be >= 50",
            ));
        }
        if self.slack_nats < 0.0 {
            return Err(config_err(
                "acceptance_rate.slack_nats",
                "slack_nats must be >= 0",
            ));
        }
        if self.fixed_m < 2 {
            return Err(config_err("acceptance_rate.fixed_m", "fixed_m must be >= 2"));
        }
        Ok(())
    }
}

/// Settings for the m-ladder convergence experiment on the toy model.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MConvergenceConfig {
    /// Observed sample size.
    pub n: usize,
    /// Ladder of simulation counts per likelihood estimate.
    pub m_ladder: Vec<usize>,
    /// Replicate datasets (one per seed).
    pub seeds: usize,
    /// Estimator replicates per grid node when averaging the estimated
    /// likelihood into the target density.
    pub k_replicates: usize,
    /// Grid nodes for the estimated-target quadrature.
    pub grid_points: usize,
    /// Half-width of that grid in reference posterior sds.
    pub grid_span_sds: f64,
    /// Quadrature grid points for the idealized reference.
    pub quad_points: usize,
}

impl MConvergenceConfig {
    pub fn preset(p: Preset) -> Self {
        match p {
            Preset::Paper => MConvergenceConfig {
                n: 20,
                m_ladder: vec![20, 40, 80, 160],
                seeds: 20,
                k_replicates: 4000,
                grid_points: 151,
                grid_span_sds: 6.0,
                quad_points: 4001,
            },
            Preset::Desk => MConvergenceConfig {
                k_replicates: 1500,
                ..Self::preset(Preset::Paper)
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m_ladder.len() < 2 || self.m_ladder.iter().any(|&m| m < 2) {
            return Err(config_err(
                "m_convergence.m_ladder",
                "ladder needs >= 2 rungs with m >= 2",
            ));
        }
        if self.m_ladder.windows(2).any(|w| w[1] <= w[0]) {
            return Err(config_err(
                "m_convergence.m_ladder",
                "ladder must be strictly increasing",
            ));
        }
        if self.seeds < 2 {
            return Err(config_err("m_convergence.seeds", "seeds must be >= 2"));
        }
        if self.k_replicates < 100 {
            return Err(config_err(
                "m_convergence.k_replicates",
                "k_replicates must be >= 100",
            ));
        }
        if self.grid_points < 21 {
            return Err(config_err(
                "m_convergence.grid_points",
                "grid_points must be >= 21",
            ));
        }
        if self.grid_span_sds < 3.0 {
            return Err(config_err(
                "m_convergence.grid_span_sds",
                "grid_span_sds must be >= 3",
            ));
        }
        Ok(())
    }
}

/// Settings for the toad movement-model study.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToadConfig {
    /// Data-generating parameters (alpha, delta, p0).
    pub theta_true: Vec<f64>,
    pub n_toads: usize,
    pub n_days: usize,
    /// Iterations for the reported chains.
    pub iters: usize,
    /// Simulations per iteration, standard chain (full covariance).
    pub m_standard: usize,
    /// Simulations per iteration, shrinkage chain.
    pub m_shrinkage: usize,
    /// Warton shrinkage parameter.
    pub gamma: f64,
    /// GP training-design size.
    pub b: usize,
    /// Gradient draws for the Omega estimate.
    pub j: usize,
    pub pilot_iters: usize,
    pub burn_in: f64,
    /// Bivariate density-grid resolution per axis.
    pub grid: usize,
    /// Half-width of the GP training box in posterior-sd units.
    pub delta_mult: f64,
}

impl ToadConfig {
    pub fn preset(p: Preset) -> Self {
        match p {
            Preset::Paper => ToadConfig {
                theta_true: vec![1.7, 35.0, 0.6],
                n_toads: 66,
                n_days: 63,
                iters: 20_000,
                m_standard: 500,
                m_shrinkage: 50,
                gamma: 0.1,
                b: 200,
                j: 200,
                pilot_iters: 1000,
                burn_in: 0.2,
                grid: 64,
                delta_mult: 3.0,
            },
            Preset::Desk => ToadConfig {
                iters: 5000,
                ..Self::preset(Preset::Paper)
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.theta_true.len() != 3 {
            return Err(config_err(
                "toad.theta_true",
                "theta_true must have 3 entries (alpha, delta, p0)",
            ));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(config_err(
                "toad.gamma",
                format!("shrinkage gamma must lie in [0,1], got {}", self.gamma),
            ));
        }
        validate_common("toad", self.m_standard, self.burn_in)?;
        validate_common("toad", self.m_shrinkage, self.burn_in)?;
        if self.iters < 100 {
            return Err(config_err("toad.iters", "iters must be >= 100"));
        }
        if self.b < 30 {
            return Err(config_err("toad.b", "b must be >= 10 d_theta = 30"));
        }
        if self.j < 4 {
            return Err(config_err("toad.j", "j must be >= d_theta + 1 = 4"));
        }
        if self.grid < 8 {
            return Err(config_err("toad.grid", "grid must be >= 8"));
        }
        Ok(())
    }
}

/// Settings for the ad-hoc `sample` subcommand.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleConfig {
    pub model: ModelChoice,
    /// Observed sample size / series length (ignored for toad).
    pub n: usize,
    pub m: usize,
    pub q: usize,
    /// Parameters used to generate the synthetic observed data.
    pub theta_true: Vec<f64>,
    pub gamma: Option<f64>,
    /// Random-walk sd per coordinate.
    pub rw_scale: Vec<f64>,
    pub burn_in: f64,
}

impl SampleConfig {
    pub fn preset(_p: Preset) -> Self {
        SampleConfig {
            model: ModelChoice::Toy,
            n: 20,
            m: 50,
            q: 10_000,
            theta_true: vec![5.0],
            gamma: None,
            rw_scale: vec![0.5],
            burn_in: 0.2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        validate_common("sample", self.m, self.burn_in)?;
        let d = match self.model {
            ModelChoice::Toy => 1,
            ModelChoice::Ma2 => 2,
            ModelChoice::Toad => 3,
        };
        if self.theta_true.len() != d {
            return Err(config_err(
                "sample.theta_true",
                format!("theta_true must have {d} entries for this model"),
            ));
        }
        if self.rw_scale.len() != d || self.rw_scale.iter().any(|s| *s <= 0.0) {
            return Err(config_err(
                "sample.rw_scale",
                format!("rw_scale must have {d} positive entries"),
            ));
        }
        if let Some(g) = self.gamma {
            if !(0.0..=1.0).contains(&g) {
                return Err(config_err(
                    "sample.gamma",
                    format!("shrinkage gamma must lie in [0,1], got {g}"),
                ));
            }
        }
        if self.q < 10 {
            return Err(config_err("sample.q", "q must be >= 10"));
        }
        Ok(())
    }
}

/// Settings for the log-likelihood variance diagnostic.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnoseSigma2Config {
    pub model: ModelChoice,
    pub n: usize,
    /// Parameter at which the variance is measured (also generates the data).
    pub theta: Vec<f64>,
    pub m: usize,
    /// Independent likelihood replicates.
    pub reps: usize,
    pub gamma: Option<f64>,
}

impl DiagnoseSigma2Config {
    pub fn preset(_p: Preset) -> Self {
        DiagnoseSigma2Config {
            model: ModelChoice::Ma2,
            n: 1000,
            theta: vec![0.6, 0.2],
            m: 200,
            reps: 50,
            gamma: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        validate_common("diagnose_sigma2", self.m, 0.0)?;
        if self.reps < 20 {
            return Err(config_err("diagnose_sigma2.reps", "reps must be >= 20"));
        }
        let d = match self.model {
            ModelChoice::Toy => 1,
            ModelChoice::Ma2 => 2,
            ModelChoice::Toad => 3,
        };
        if self.theta.len() != d {
            return Err(config_err(
                "diagnose_sigma2.theta",
                format!("theta must have {d} entries for this model"),
            ));
        }
        if let Some(g) = self.gamma {
            if !(0.0..=1.0).contains(&g) {
                return Err(config_err(
                    "diagnose_sigma2.gamma",
                    format!("shrinkage gamma must lie in [0,1], got {g}"),
                ));
            }
        }
        Ok(())
    }
}

fn validate_common(section: &str, m: usize, burn_in: f64) -> Result<()> {
    if m < 2 {
        return Err(config_err(&format!("{section}.m"), "m must be >= 2"));
    }
    if !(0.0..1.0).contains(&burn_in) {
        return Err(config_err(
            &format!("{section}.burn_in"),
            "burn_in must lie in [0,1)",
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for p in [Preset::Paper, Preset::Desk] {
            ToyFigure1Config::preset(p).validate().unwrap();
            Ma2CoverageConfig::preset(p).validate().unwrap();
            BvmConfig::preset(p).validate().unwrap();
            AcceptanceRateConfig::preset(p).validate().unwrap();
            MConvergenceConfig::preset(p).validate().unwrap();
            ToadConfig::preset(p).validate().unwrap();
            SampleConfig::preset(p).validate().unwrap();
            DiagnoseSigma2Config::preset(p).validate().unwrap();
        }
    }

    #[test]
    fn overlay_overrides_single_key() {
        let table: toml::Table = "[toy_figure1]\nq = 123456\n".parse().unwrap();
        let cfg = resolve_section(
            ToyFigure1Config::preset(Preset::Paper),
            Some(&table),
            "toy_figure1",
        )
        .unwrap();
        assert_eq!(cfg.q, 123_456);
        assert_eq!(cfg.n, 20);
    }

    #[test]
    fn unknown_key_rejected() {
        let table: toml::Table = "[toy_figure1]\nbogus = 1\n".parse().unwrap();
        let err = resolve_section(
            ToyFigure1Config::preset(Preset::Paper),
            Some(&table),
            "toy_figure1",
        )
        .unwrap_err();
        assert!(err.to_string().contains("toy_figure1"), "{err}");
    }

    #[test]
    fn invalid_m_names_the_key() {
        let mut cfg = Ma2CoverageConfig::preset(Preset::Desk);
        cfg.m = 0;
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("ma2_coverage.m"), "{err}");
        assert!(err.to_string().contains("m must be >= 2"), "{err}");
    }

    #[test]
    fn invalid_gamma_names_the_bound() {
        let mut cfg = Ma2CoverageConfig::preset(Preset::Desk);
        cfg.gamma = Some(1.5);
        let err = cfg.validate().unwrap_err();
        assert!(
            err.to_string().contains("shrinkage gamma must lie in [0,1]"),
            "{err}"
        );
    }
}
