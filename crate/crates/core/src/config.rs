//! Run configuration, loaded from a TOML file with one table per module.
//!
//! Every field has a default; unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{YearRange, F_MAX};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub manifest: ManifestSection,
    pub run: RunSection,
    pub dynamics: DynamicsSection,
    pub ensemble: EnsembleSection,
    pub emulator: EmulatorSection,
    pub design: DesignSection,
    pub nash: NashSection,
    pub econ: EconSection,
}

/// Input/output locations. Relative paths are resolved against the config file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ManifestSection {
    pub catalog: Option<String>,
    pub yield_observations: Option<String>,
    pub ssb_observations: Option<String>,
    pub prices: Option<String>,
    pub history: Option<String>,
    pub output: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub seed: u64,
    pub first_year: i32,
    pub last_observed_year: i32,
    pub horizon: i32,
    pub p_risk: f64,
    pub acceptance_probability: f64,
    pub round_sizes: Vec<usize>,
    pub init_pool: usize,
    pub response_pool: usize,
    pub posterior_draws: usize,
    pub mcmc_iterations: usize,
    pub mcmc_burn_in: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            seed: 2017,
            first_year: 1984,
            last_observed_year: 2017,
            horizon: 2050,
            p_risk: 0.25,
            acceptance_probability: 0.75,
            round_sizes: vec![196, 100, 100, 100],
            init_pool: 10_000,
            response_pool: 500,
            posterior_draws: 100,
            mcmc_iterations: 2000,
            mcmc_burn_in: 1000,
        }
    }
}

impl RunSection {
    pub fn historical_years(&self) -> YearRange {
        YearRange {
            first: self.first_year,
            last: self.last_observed_year,
        }
    }

    pub fn all_years(&self) -> YearRange {
        YearRange {
            first: self.first_year,
            last: self.horizon,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DynamicsSection {
    /// Floor applied to log tonnes of collapsed stocks.
    pub log_floor: f64,
    pub model_seed: u64,
}

impl Default for DynamicsSection {
    fn default() -> Self {
        Self {
            log_floor: -20.0,
            model_seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleSection {
    pub chains: usize,
    /// Prior variance of the truth in the first year (log tonnes squared).
    pub initial_variance: f64,
    /// Prior standard deviation of the long-term shared discrepancy.
    pub shared_discrepancy_sd: f64,
    /// Scale of the half-normal prior on every standard deviation.
    pub sd_prior_scale: f64,
    /// Iteration at which proposal covariance adaptation starts.
    pub adapt_start: usize,
}

impl Default for EnsembleSection {
    fn default() -> Self {
        Self {
            chains: 4,
            initial_variance: 100.0,
            shared_discrepancy_sd: 5.0,
            sd_prior_scale: 1.0,
            adapt_start: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HyperSharing {
    /// Kernel hyperparameters estimated independently for every posterior draw.
    PerDraw,
    /// Length-scales and nugget ratio shared by all draws of a (kind, species),
    /// maximising the summed per-draw likelihood; mean coefficients and signal
    /// variance stay per draw.
    PerOutput,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EmulatorSection {
    pub knots: Vec<f64>,
    pub starts: usize,
    pub max_evaluations: usize,
    pub nugget_floor: f64,
    pub min_length_scale: f64,
    pub max_length_scale: f64,
    pub hyper_sharing: HyperSharing,
}

impl Default for EmulatorSection {
    fn default() -> Self {
        Self {
            knots: vec![0.5, 1.0, 1.5],
            starts: 3,
            max_evaluations: 600,
            nugget_floor: 1e-8,
            min_length_scale: 0.02,
            max_length_scale: 50.0,
            hyper_sharing: HyperSharing::PerOutput,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
#[derive(Default)]
pub struct DesignSection {
    pub sobol_skip: u64,
    pub scramble: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NashSection {
    pub min_iterations: usize,
    pub max_iterations: usize,
    /// Yield gain (log tonnes) below which a deviation is not profitable.
    pub fixed_point_tolerance: f64,
    pub require_fixed_point: bool,
}

impl Default for NashSection {
    fn default() -> Self {
        Self {
            min_iterations: 26,
            max_iterations: 100,
            fixed_point_tolerance: 1e-3,
            require_fixed_point: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EconSection {
    pub max_order: usize,
    pub forecast_to: i32,
}

impl Default for EconSection {
    fn default() -> Self {
        Self {
            max_order: 4,
            forecast_to: 2050,
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text).map_err(|e| e.context(path.display().to_string()))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let r = &self.run;
        let bad = |m: String| Err(Error::Config(m));
        if !(r.p_risk > 0.0 && r.p_risk < 1.0) {
            return bad(format!("run.p_risk must be in (0,1), got {}", r.p_risk));
        }
        if !(r.acceptance_probability > 0.0 && r.acceptance_probability < 1.0) {
            return bad(format!(
                "run.acceptance_probability must be in (0,1), got {}",
                r.acceptance_probability
            ));
        }
        if r.round_sizes.is_empty() || r.round_sizes.contains(&0) {
            return bad("run.round_sizes must be non-empty and positive".into());
        }
        for (name, v) in [
            ("init_pool", r.init_pool),
            ("response_pool", r.response_pool),
            ("posterior_draws", r.posterior_draws),
            ("mcmc_iterations", r.mcmc_iterations),
        ] {
            if v == 0 {
                return bad(format!("run.{name} must be positive"));
            }
        }
        if r.mcmc_burn_in >= r.mcmc_iterations {
            return bad(format!(
                "run.mcmc_burn_in ({}) must be below run.mcmc_iterations ({})",
                r.mcmc_burn_in, r.mcmc_iterations
            ));
        }
        if !(r.first_year <= r.last_observed_year && r.last_observed_year < r.horizon) {
            return bad("years must satisfy first_year <= last_observed_year < horizon".into());
        }
        if self.ensemble.chains < 2 {
            return bad("ensemble.chains must be at least 2 for split-R-hat".into());
        }
        if !(self.ensemble.initial_variance > 0.0
            && self.ensemble.shared_discrepancy_sd > 0.0
            && self.ensemble.sd_prior_scale > 0.0)
        {
            return bad("ensemble prior scales must be positive".into());
        }
        let k = &self.emulator.knots;
        if k.is_empty()
            || k.windows(2).any(|w| w[0] >= w[1])
            || k.iter().any(|x| !(0.0..=F_MAX).contains(x))
        {
            return bad("emulator.knots must be strictly increasing within [0, 2]".into());
        }
        if self.emulator.starts == 0 || self.emulator.max_evaluations == 0 {
            return bad("emulator.starts and emulator.max_evaluations must be positive".into());
        }
        if !(self.emulator.nugget_floor >= 0.0) {
            return bad("emulator.nugget_floor must be non-negative".into());
        }
        if !(self.emulator.min_length_scale > 0.0
            && self.emulator.min_length_scale < self.emulator.max_length_scale)
        {
            return bad("emulator length-scale bounds must satisfy 0 < min < max".into());
        }
        let n = &self.nash;
        if n.min_iterations == 0 || n.min_iterations > n.max_iterations {
            return bad("nash iteration range must satisfy 0 < min <= max".into());
        }
        if self.econ.max_order == 0 {
            return bad("econ.max_order must be positive".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_reference_run() {
        let c = RunConfig::default();
        assert_eq!(c.run.round_sizes, vec![196, 100, 100, 100]);
        assert_eq!(c.run.round_sizes.iter().sum::<usize>(), 496);
        assert_eq!(c.run.posterior_draws, 100);
        assert_eq!((c.run.mcmc_iterations, c.run.mcmc_burn_in), (2000, 1000));
        assert_eq!((c.run.init_pool, c.run.response_pool), (10_000, 500));
        assert_eq!(c.run.p_risk, 0.25);
        assert_eq!(c.run.acceptance_probability, 0.75);
        assert_eq!(
            c.run.historical_years(),
            YearRange {
                first: 1984,
                last: 2017
            }
        );
        assert_eq!(c.run.horizon, 2050);
        c.validate().unwrap();
    }

    #[test]
    fn overrides_and_unknown_keys() {
        let c = RunConfig::from_toml_str(
            "[run]\nposterior_draws = 20\nround_sizes = [64, 20, 20, 20]\n[emulator]\nstarts = 1\n",
        )
        .unwrap();
        assert_eq!(c.run.posterior_draws, 20);
        assert_eq!(c.emulator.starts, 1);
        assert_eq!(c.run.mcmc_iterations, 2000);

        let err = RunConfig::from_toml_str("[run]\nposterior_draw = 20\n").unwrap_err();
        assert!(err.to_string().contains("unknown field"), "{err}");
        assert!(RunConfig::from_toml_str("[bogus]\nx = 1\n").is_err());
    }

    #[test]
    fn invariants_rejected() {
        assert!(RunConfig::from_toml_str("[run]\np_risk = 1.0\n").is_err());
        assert!(RunConfig::from_toml_str("[run]\nmcmc_burn_in = 2000\n").is_err());
        assert!(RunConfig::from_toml_str("[run]\nposterior_draws = 0\n").is_err());
        assert!(RunConfig::from_toml_str("[emulator]\nknots = [1.0, 0.5]\n").is_err());
    }

    #[test]
    fn toml_round_trip() {
        let c = RunConfig::default();
        let back = RunConfig::from_toml_str(&c.to_toml_string()).unwrap();
        assert_eq!(c, back);
    }
}
