//! Configuration, input files and the output directory of a run.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use log::{info, warn};
use nashmsy::config::RunConfig;
use nashmsy::dynamics::builtin_ensemble;
use nashmsy::dynamics::synthetic::{
    bundled_catalog, bundled_history, bundled_observations, bundled_prices,
};
use nashmsy::io::{self, PriceTable};
use nashmsy::nash::PipelineInputs;
use nashmsy::types::OutputKind;

use crate::GlobalArgs;

const DEFAULT_OUTPUT: &str = "nashmsy-out";

/// Bad command-line input, reported with exit code 2.
#[derive(Debug)]
pub struct ValidationError(pub String);

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ValidationError {}

pub fn invalid(msg: impl Into<String>) -> anyhow::Error {
    ValidationError(msg.into()).into()
}

#[derive(Debug)]
pub struct PipelineManifest {
    pub cfg: RunConfig,
    pub base_dir: PathBuf,
    pub out_dir: PathBuf,
    pub rounds: usize,
}

impl PipelineManifest {
    pub fn load(args: &GlobalArgs) -> Result<Self> {
        let (mut cfg, base_dir) = match &args.config {
            Some(path) => {
                let cfg = RunConfig::from_file(path)
                    .with_context(|| format!("loading {}", path.display()))?;
                let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
                (cfg, base)
            }
            None => (RunConfig::default(), PathBuf::new()),
        };
        if let Some(seed) = args.seed {
            cfg.run.seed = seed;
        }
        if let Some(draws) = args.draws {
            if draws == 0 {
                return Err(invalid("--draws must be positive"));
            }
            cfg.run.posterior_draws = draws;
            for size in cfg.run.round_sizes.iter_mut().skip(1) {
                if *size > draws {
                    warn!("search round of {size} capped at {draws} posterior draws");
                    *size = draws;
                }
            }
        }
        cfg.validate()?;
        let rounds = args.rounds.unwrap_or(cfg.run.round_sizes.len());
        if rounds == 0 || rounds > cfg.run.round_sizes.len() {
            return Err(invalid(format!(
                "--rounds must be in 1..={}, got {rounds}",
                cfg.run.round_sizes.len()
            )));
        }
        let out_dir = match (&args.out, &cfg.manifest.output) {
            (Some(p), _) => p.clone(),
            (None, Some(p)) => base_dir.join(p),
            (None, None) => PathBuf::from(DEFAULT_OUTPUT),
        };
        let m = Self {
            cfg,
            base_dir,
            out_dir,
            rounds,
        };
        m.check_inputs()?;
        Ok(m)
    }

    fn resolve(&self, p: &Option<String>) -> Option<PathBuf> {
        p.as_ref().map(|p| self.base_dir.join(p))
    }

    fn check_inputs(&self) -> Result<()> {
        let m = &self.cfg.manifest;
        for (name, p) in [
            ("catalog", &m.catalog),
            ("yield_observations", &m.yield_observations),
            ("ssb_observations", &m.ssb_observations),
            ("prices", &m.prices),
            ("history", &m.history),
        ] {
            if let Some(path) = self.resolve(p) {
                if !path.is_file() {
                    return Err(invalid(format!(
                        "manifest.{name}: {} does not exist",
                        path.display()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn create_out_dir(&self) -> Result<()> {
        std::fs::create_dir_all(&self.out_dir)
            .with_context(|| format!("creating {}", self.out_dir.display()))
    }

    pub fn out(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    /// Simulators, history, observations and catalog; missing manifest
    /// entries fall back to the bundled synthetic dataset.
    pub fn inputs(&self) -> Result<PipelineInputs> {
        let m = &self.cfg.manifest;
        let seed = self.cfg.dynamics.model_seed;
        let hist = self.cfg.run.historical_years();
        let history = match self.resolve(&m.history) {
            Some(p) => io::load_history(&p, hist)?,
            None => bundled_history(),
        };
        let catalog = match self.resolve(&m.catalog) {
            Some(p) => io::load_catalog(&p)?,
            None => bundled_catalog(),
        };
        let (yield_observations, ssb_observations) = match (
            self.resolve(&m.yield_observations),
            self.resolve(&m.ssb_observations),
        ) {
            (Some(y), Some(s)) => (
                io::load_observations(&y, OutputKind::Yield, hist)?,
                io::load_observations(&s, OutputKind::Ssb, hist)?,
            ),
            (None, None) => {
                info!("no observation files configured; using the bundled synthetic dataset");
                bundled_observations(seed)?
            }
            _ => {
                return Err(invalid(
                    "manifest needs both yield_observations and ssb_observations, or neither",
                ))
            }
        };
        Ok(PipelineInputs {
            simulators: builtin_ensemble(seed)?,
            history,
            yield_observations,
            ssb_observations,
            catalog,
        })
    }

    pub fn prices(&self) -> Result<PriceTable> {
        Ok(match self.resolve(&self.cfg.manifest.prices) {
            Some(p) => io::load_prices(&p)?,
            None => bundled_prices(self.cfg.dynamics.model_seed),
        })
    }
}
