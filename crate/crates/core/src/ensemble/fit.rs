//! MCMC over ensemble hyperparameters.
//!
//! The posterior factorises over species (diagonal covariances, independent
//! priors), so each species is sampled separately. Standard deviations are
//! sampled on the log scale with half-normal priors; AR coefficients through
//! `arctanh` with uniform(-1, 1) priors.

use std::io::Write;
use std::path::Path;

use rand::Rng as _;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;

use super::mcmc::{adaptive_metropolis, split_rhat, thin, AmSettings, SwapMoves};
use super::{EnsembleData, EnsembleSpec, SimHyper, SpeciesHyper, SpeciesProblem, StatePrior};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::seeds::{self, Rng};
use crate::types::{OutputKind, SPECIES};

#[derive(Debug, Clone, PartialEq)]
pub struct FitSettings {
    pub am: AmSettings,
    pub chains: usize,
    pub draws: usize,
    /// Half-normal scale of every standard deviation.
    pub sd_prior_scale: f64,
    pub delta_sd: f64,
    pub initial_variance: f64,
}

impl FitSettings {
    pub fn from_config(cfg: &RunConfig) -> Self {
        Self {
            am: AmSettings {
                iterations: cfg.run.mcmc_iterations,
                burn_in: cfg.run.mcmc_burn_in,
                adapt_start: cfg.ensemble.adapt_start,
                initial_sd: 0.1,
            },
            chains: cfg.ensemble.chains,
            draws: cfg.run.posterior_draws,
            sd_prior_scale: cfg.ensemble.sd_prior_scale,
            delta_sd: cfg.ensemble.shared_discrepancy_sd,
            initial_variance: cfg.ensemble.initial_variance,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.am.validate()?;
        if self.chains == 0 {
            return Err(Error::Parameter("at least one chain is required".into()));
        }
        let kept = self.chains * (self.am.iterations - self.am.burn_in);
        if self.draws == 0 || self.draws > kept {
            return Err(Error::Parameter(format!(
                "{} posterior draws requested from {kept} kept states",
                self.draws
            )));
        }
        if !(self.sd_prior_scale > 0.0 && self.delta_sd > 0.0 && self.initial_variance > 0.0) {
            return Err(Error::Parameter("prior scales must be positive".into()));
        }
        Ok(())
    }
}

/// Bounds on transformed coordinates; beyond them the prior mass is negligible
/// and variances would under- or overflow.
const LOG_SD_BOUND: f64 = 30.0;
const ATANH_BOUND: f64 = 20.0;

/// Transformed parameter vector of one species:
/// `[ln sd(lambda_y), ln sd(sigma_y), atanh r_eta, ln sd(lambda_eta)]` followed,
/// per included simulator, by `[ln sd(c_gamma), atanh r_k, ln sd(lambda_k), ln sd(sigma_k)]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpeciesParams {
    pub n_sims: usize,
    pub local: Vec<usize>,
}

impl SpeciesParams {
    pub fn new(n_sims: usize, local: Vec<usize>) -> Self {
        Self { n_sims, local }
    }

    pub fn dim(&self) -> usize {
        4 + 4 * self.local.len()
    }

    fn is_ar(&self, index: usize) -> bool {
        index == 2 || (index >= 4 && (index - 4) % 4 == 1)
    }

    /// Parameter names; simulators are numbered from 1.
    pub fn names(&self) -> Vec<String> {
        let mut out: Vec<String> = ["lambda_y", "sigma_y", "r_eta", "lambda_eta"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        for &k in &self.local {
            for p in ["c_gamma", "r", "lambda", "sigma"] {
                out.push(format!("{p}.{}", k + 1));
            }
        }
        out
    }

    pub fn to_hyper(&self, theta: &[f64]) -> SpeciesHyper {
        let var = |u: f64| (2.0 * u).exp();
        let mut sims = vec![None; self.n_sims];
        for (local, &k) in self.local.iter().enumerate() {
            let b = 4 + 4 * local;
            sims[k] = Some(SimHyper {
                c_gamma: var(theta[b]),
                r: theta[b + 1].tanh(),
                lambda: var(theta[b + 2]),
                sigma: var(theta[b + 3]),
            });
        }
        SpeciesHyper {
            lambda_y: var(theta[0]),
            sigma_y: var(theta[1]),
            r_eta: theta[2].tanh(),
            lambda_eta: var(theta[3]),
            sims,
        }
    }

    pub fn from_hyper(&self, h: &SpeciesHyper) -> Vec<f64> {
        let u = |v: f64| 0.5 * v.ln();
        let mut theta = vec![
            u(h.lambda_y),
            u(h.sigma_y),
            h.r_eta.atanh(),
            u(h.lambda_eta),
        ];
        for &k in &self.local {
            let s = h.sims[k].expect("simulator in layout");
            theta.extend([u(s.c_gamma), s.r.atanh(), u(s.lambda), u(s.sigma)]);
        }
        theta
    }

    /// Log prior density of the transformed vector (Jacobians included).
    pub fn log_prior(&self, theta: &[f64], sd_scale: f64) -> f64 {
        let ln2 = std::f64::consts::LN_2;
        let hn_norm = 0.5 * (2.0 / std::f64::consts::PI).ln() - sd_scale.ln();
        theta
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                if self.is_ar(i) {
                    if x.abs() > ATANH_BOUND {
                        return f64::NEG_INFINITY;
                    }
                    // uniform(-1, 1) on tanh(x): ln(1/2) + ln(1 - tanh^2 x)
                    let a = x.abs();
                    -ln2 - 2.0 * (a + (-2.0 * a).exp().ln_1p() - ln2)
                } else {
                    if x.abs() > LOG_SD_BOUND {
                        return f64::NEG_INFINITY;
                    }
                    let s = x.exp();
                    hn_norm - s * s / (2.0 * sd_scale * sd_scale) + x
                }
            })
            .sum()
    }

    /// A draw from the prior, in transformed coordinates.
    pub fn sample_prior(&self, sd_scale: f64, rng: &mut Rng) -> Vec<f64> {
        (0..self.dim())
            .map(|i| {
                if self.is_ar(i) {
                    let r: f64 = rng.gen_range(-1.0..1.0);
                    r.atanh().clamp(-ATANH_BOUND, ATANH_BOUND)
                } else {
                    let z: f64 = rng.sample(StandardNormal);
                    (sd_scale * z.abs()).ln().clamp(-LOG_SD_BOUND, LOG_SD_BOUND)
                }
            })
            .collect()
    }

    /// With a single simulator, the shared AR(1) discrepancy and the
    /// simulator's own AR(1) discrepancy enter the likelihood symmetrically
    /// and share a prior, so their parameter pairs are exchangeable.
    pub fn swap_moves(&self) -> SwapMoves {
        if self.local.len() == 1 {
            SwapMoves {
                pairs: vec![(2, 5), (3, 6)],
                rate: 0.1,
            }
        } else {
            SwapMoves::default()
        }
    }

    /// Moderate, overdispersed chain starting point.
    fn sample_start(&self, rng: &mut Rng) -> Vec<f64> {
        let n = Normal::new(0.0, 0.5).expect("valid sd");
        (0..self.dim())
            .map(|i| {
                if self.is_ar(i) {
                    n.sample(rng)
                } else {
                    0.3f64.ln() + n.sample(rng)
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeciesDiagnostics {
    pub species: usize,
    pub n_params: usize,
    pub acceptance_rate: f64,
    /// Largest split-R-hat over parameters (NaN with a single short chain).
    pub max_rhat: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitDiagnostics {
    pub kind: OutputKind,
    pub chains: usize,
    pub species: Vec<SpeciesDiagnostics>,
}

impl FitDiagnostics {
    pub fn max_rhat(&self) -> f64 {
        self.species
            .iter()
            .map(|s| s.max_rhat)
            .fold(f64::NAN, f64::max)
    }
}

/// Posterior hyperparameter draws for one output kind.
#[derive(Debug, Clone, PartialEq)]
pub struct KindPosterior {
    pub kind: OutputKind,
    pub draws: Vec<EnsembleSpec>,
    pub diagnostics: FitDiagnostics,
}

/// Posterior draws for both output kinds.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsemblePosterior {
    pub yield_: KindPosterior,
    pub ssb: KindPosterior,
}

impl EnsemblePosterior {
    pub fn get(&self, kind: OutputKind) -> &KindPosterior {
        match kind {
            OutputKind::Yield => &self.yield_,
            OutputKind::Ssb => &self.ssb,
        }
    }

    pub fn n_draws(&self) -> usize {
        self.yield_.draws.len()
    }

    /// Writes `draw,param,value` rows with `param = kind.species.name`.
    pub fn write_draws(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "draw,param,value")?;
        for kp in [&self.yield_, &self.ssb] {
            for (d, spec) in kp.draws.iter().enumerate() {
                for (i, h) in spec.species.iter().enumerate() {
                    let name = SPECIES.get(i).copied().unwrap_or("species");
                    for (p, v) in hyper_entries(h) {
                        writeln!(out, "{d},{}.{name}.{p},{v}", kp.kind)?;
                    }
                }
            }
        }
        out.flush()?;
        Ok(())
    }
}

fn hyper_entries(h: &SpeciesHyper) -> Vec<(String, f64)> {
    let mut v = vec![
        ("lambda_y".to_string(), h.lambda_y),
        ("sigma_y".to_string(), h.sigma_y),
        ("r_eta".to_string(), h.r_eta),
        ("lambda_eta".to_string(), h.lambda_eta),
    ];
    for (k, s) in h.sims.iter().enumerate() {
        if let Some(s) = s {
            v.push((format!("c_gamma.{}", k + 1), s.c_gamma));
            v.push((format!("r.{}", k + 1), s.r));
            v.push((format!("lambda.{}", k + 1), s.lambda));
            v.push((format!("sigma.{}", k + 1), s.sigma));
        }
    }
    v
}

/// Kept draws of one species across chains, in transformed coordinates.
#[derive(Debug, Clone)]
pub struct SpeciesChains {
    pub params: SpeciesParams,
    pub chains: Vec<Vec<Vec<f64>>>,
    pub diagnostics: SpeciesDiagnostics,
}

impl SpeciesChains {
    /// Chains concatenated in order.
    pub fn pooled(&self) -> Vec<Vec<f64>> {
        self.chains.iter().flatten().cloned().collect()
    }
}

/// Samples one species' hyperparameters.
pub fn fit_species(
    problem: &SpeciesProblem,
    n_sims: usize,
    prior: StatePrior,
    settings: &FitSettings,
    seed: u64,
    kind: OutputKind,
) -> Result<SpeciesChains> {
    let params = SpeciesParams::new(n_sims, problem.layout.sims.clone());
    let scale = settings.sd_prior_scale;
    let swaps = params.swap_moves();
    let log_post = |theta: &[f64]| -> Result<f64> {
        let lp = params.log_prior(theta, scale);
        if !lp.is_finite() {
            return Ok(f64::NEG_INFINITY);
        }
        // Proposals far in the prior tails can overflow the filter; they are
        // rejected rather than aborting the chain.
        match problem.log_likelihood_with(&params.to_hyper(theta), prior) {
            Ok(ll) => Ok(lp + ll),
            Err(Error::Numerical(_)) => Ok(f64::NEG_INFINITY),
            Err(e) => Err(e),
        }
    };
    let coords = |c: usize| [kind.index() as u64, problem.species as u64, c as u64];
    let chains: Vec<_> = (0..settings.chains)
        .into_par_iter()
        .map(|c| {
            let mut rng = seeds::rng(seed, "mcmc", &coords(c));
            let mut start = params.sample_start(&mut rng);
            for _ in 0..20 {
                if log_post(&start).is_ok_and(f64::is_finite) {
                    break;
                }
                start = params.sample_start(&mut rng);
            }
            adaptive_metropolis(log_post, &start, &settings.am, &swaps, &mut rng)
        })
        .collect::<Result<_>>()
        .map_err(|e| e.context(format!("{kind} species {}", problem.species)))?;
    let acceptance_rate =
        chains.iter().map(|c| c.acceptance_rate).sum::<f64>() / chains.len() as f64;
    let max_rhat = (0..params.dim())
        .map(|j| {
            let per_chain: Vec<Vec<f64>> = chains
                .iter()
                .map(|c| c.kept.iter().map(|x| x[j]).collect())
                .collect();
            split_rhat(&per_chain)
        })
        .fold(f64::NAN, f64::max);
    let diagnostics = SpeciesDiagnostics {
        species: problem.species,
        n_params: params.dim(),
        acceptance_rate,
        max_rhat,
    };
    Ok(SpeciesChains {
        params,
        chains: chains.into_iter().map(|c| c.kept).collect(),
        diagnostics,
    })
}

/// Fits the ensemble model for one output kind and thins the pooled chains
/// to `settings.draws` hyperparameter sets.
pub fn fit(data: &EnsembleData, settings: &FitSettings, seed: u64) -> Result<KindPosterior> {
    settings.validate()?;
    let kind = data.kind();
    let n = data.n_species();
    let initial_mean = data.initial_means();
    let delta_var = settings.delta_sd * settings.delta_sd;
    let prior = |i: usize| StatePrior {
        delta_mean: 0.0,
        delta_var,
        initial_mean: initial_mean[i],
        initial_var: settings.initial_variance,
    };
    let fitted: Vec<SpeciesChains> = (0..n)
        .into_par_iter()
        .map(|i| {
            let problem = SpeciesProblem::new(data, i);
            fit_species(
                &problem,
                data.simulators.len(),
                prior(i),
                settings,
                seed,
                kind,
            )
        })
        .collect::<Result<_>>()?;
    let thinned: Vec<Vec<Vec<f64>>> = fitted
        .iter()
        .map(|f| thin(&f.pooled(), settings.draws))
        .collect::<Result<_>>()?;
    let draws = (0..settings.draws)
        .map(|d| EnsembleSpec {
            kind,
            species: fitted
                .iter()
                .zip(&thinned)
                .map(|(f, t)| f.params.to_hyper(&t[d]))
                .collect(),
            delta_mean: vec![0.0; n],
            delta_var,
            initial_mean: initial_mean.clone(),
            initial_var: settings.initial_variance,
        })
        .collect();
    let diagnostics = FitDiagnostics {
        kind,
        chains: settings.chains,
        species: fitted.into_iter().map(|f| f.diagnostics).collect(),
    };
    for s in &diagnostics.species {
        log::info!(
            "{kind} {}: acceptance {:.3}, max split-R-hat {:.3}",
            SPECIES.get(s.species).copied().unwrap_or("?"),
            s.acceptance_rate,
            s.max_rhat
        );
    }
    Ok(KindPosterior {
        kind,
        draws,
        diagnostics,
    })
}
