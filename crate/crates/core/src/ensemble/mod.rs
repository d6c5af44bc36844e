//! Exchangeable-simulator ensemble model.
//!
//! For one output kind and species `i`, the latent truth `y` is a random walk;
//! simulator `k` reports `y + delta + eta + gamma_k + z_k` plus noise, where
//! `delta` and `gamma_k` are static discrepancies and `eta`, `z_k` are AR(1).
//! Observations report `y` plus noise. All covariances are diagonal, so
//! species are independent and each is filtered on its own small state.

pub mod fit;
pub mod mcmc;
pub mod simulate;
pub mod statespace;
pub mod summary;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::types::{OutputKind, SpeciesSeries, YearRange};
use statespace::{DiagonalStateSpace, Gaussian, ScalarObs};

pub use fit::{fit, EnsemblePosterior, FitDiagnostics, FitSettings, KindPosterior};
pub use summary::{
    draw_targets, long_term_summaries, mixture_cdf, mixture_quantile, risk_probabilities,
    write_predictions, LongTermSummary, ScenarioPrediction,
};

/// Hyperparameters of simulator `k` for one species (variances, AR coefficient).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimHyper {
    pub c_gamma: f64,
    pub r: f64,
    pub lambda: f64,
    pub sigma: f64,
}

/// Hyperparameters for one species.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeciesHyper {
    pub lambda_y: f64,
    pub sigma_y: f64,
    pub r_eta: f64,
    pub lambda_eta: f64,
    /// `None` where the simulator does not model the species.
    pub sims: Vec<Option<SimHyper>>,
}

/// Ensemble hyperparameters for one output kind.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSpec {
    pub kind: OutputKind,
    pub species: Vec<SpeciesHyper>,
    /// Prior mean and variance of the long-term shared discrepancy.
    pub delta_mean: Vec<f64>,
    pub delta_var: f64,
    /// Prior mean and variance of the truth in the first year.
    pub initial_mean: Vec<f64>,
    pub initial_var: f64,
}

/// Prior on the static shared discrepancy and the first-year truth of one species.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatePrior {
    pub delta_mean: f64,
    pub delta_var: f64,
    pub initial_mean: f64,
    pub initial_var: f64,
}

fn check_var(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter(format!(
            "{name} must be a positive variance, got {v}"
        )))
    }
}

fn check_ar(name: &str, r: f64) -> Result<()> {
    if r > -1.0 && r < 1.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!(
            "{name} must lie in (-1, 1), got {r}"
        )))
    }
}

impl SpeciesHyper {
    pub fn validate(&self) -> Result<()> {
        check_var("lambda_y", self.lambda_y)?;
        check_var("sigma_y", self.sigma_y)?;
        check_var("lambda_eta", self.lambda_eta)?;
        check_ar("r_eta", self.r_eta)?;
        for h in self.sims.iter().flatten() {
            check_var("c_gamma", h.c_gamma)?;
            check_var("lambda_k", h.lambda)?;
            check_var("sigma_k", h.sigma)?;
            check_ar("r_k", h.r)?;
        }
        Ok(())
    }
}

impl EnsembleSpec {
    pub fn n_species(&self) -> usize {
        self.species.len()
    }

    pub fn n_sims(&self) -> usize {
        self.species.first().map_or(0, |s| s.sims.len())
    }

    pub fn state_prior(&self, species: usize) -> StatePrior {
        StatePrior {
            delta_mean: self.delta_mean[species],
            delta_var: self.delta_var,
            initial_mean: self.initial_mean[species],
            initial_var: self.initial_var,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_species();
        if self.delta_mean.len() != n || self.initial_mean.len() != n {
            return Err(Error::Dimension(format!(
                "prior means have {}/{} entries for {n} species",
                self.delta_mean.len(),
                self.initial_mean.len()
            )));
        }
        check_var("delta prior variance", self.delta_var)?;
        check_var("initial variance", self.initial_var)?;
        let k = self.n_sims();
        for (i, s) in self.species.iter().enumerate() {
            if s.sims.len() != k {
                return Err(Error::Dimension(format!(
                    "species {i} has {} simulator entries, expected {k}",
                    s.sims.len()
                )));
            }
            s.validate()
                .map_err(|e| e.context(format!("species {i}")))?;
        }
        Ok(())
    }
}

/// Observations and simulator outputs of one kind on a common year grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleData {
    pub years: YearRange,
    pub observations: SpeciesSeries,
    pub simulators: Vec<SpeciesSeries>,
}

impl EnsembleData {
    pub fn new(
        years: YearRange,
        observations: SpeciesSeries,
        simulators: Vec<SpeciesSeries>,
    ) -> Result<Self> {
        let n = observations.n_species();
        let kind = observations.kind();
        let inside = |r: YearRange| r.first >= years.first && r.last <= years.last;
        if !inside(observations.years()) {
            return Err(Error::Dimension(format!(
                "observation years {:?} outside grid {:?}",
                observations.years(),
                years
            )));
        }
        for (k, s) in simulators.iter().enumerate() {
            if s.kind() != kind || s.n_species() != n {
                return Err(Error::Dimension(format!(
                    "simulator {k} series is {} with {} species, expected {kind} with {n}",
                    s.kind(),
                    s.n_species()
                )));
            }
            if !inside(s.years()) {
                return Err(Error::Dimension(format!(
                    "simulator {k} years {:?} outside grid {:?}",
                    s.years(),
                    years
                )));
            }
        }
        Ok(Self {
            years,
            observations,
            simulators,
        })
    }

    pub fn kind(&self) -> OutputKind {
        self.observations.kind()
    }

    pub fn n_species(&self) -> usize {
        self.observations.n_species()
    }

    /// Simulators that model `species`.
    pub fn sims_for(&self, species: usize) -> Vec<usize> {
        (0..self.simulators.len())
            .filter(|&k| self.simulators[k].is_present(species))
            .collect()
    }

    /// First observed value of each species, else the mean of the simulators'
    /// first values, else zero. Used to centre the diffuse initial prior.
    pub fn initial_means(&self) -> Vec<f64> {
        (0..self.n_species())
            .map(|i| {
                let first = |s: &SpeciesSeries| s.years().years().find_map(|y| s.get(i, y));
                if let Some(v) = first(&self.observations) {
                    return v;
                }
                let vals: Vec<f64> = self.simulators.iter().filter_map(first).collect();
                if vals.is_empty() {
                    0.0
                } else {
                    vals.iter().sum::<f64>() / vals.len() as f64
                }
            })
            .collect()
    }
}

/// State layout for one species: `[y, eta, delta, gamma_1.., z_1..]` over the
/// simulators that model it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpeciesLayout {
    /// Global indices of the included simulators.
    pub sims: Vec<usize>,
}

impl SpeciesLayout {
    pub const Y: usize = 0;
    pub const ETA: usize = 1;
    pub const DELTA: usize = 2;

    pub fn dim(&self) -> usize {
        3 + 2 * self.sims.len()
    }

    pub fn gamma(&self, local: usize) -> usize {
        3 + local
    }

    pub fn z(&self, local: usize) -> usize {
        3 + self.sims.len() + local
    }

    /// Components summed by simulator `local`'s report.
    pub fn sim_components(&self, local: usize) -> Vec<usize> {
        vec![
            Self::Y,
            Self::ETA,
            Self::DELTA,
            self.gamma(local),
            self.z(local),
        ]
    }
}

/// One species' filtering problem: layout and observation structure on a grid.
#[derive(Debug, Clone)]
pub struct SpeciesProblem {
    pub species: usize,
    pub years: YearRange,
    pub layout: SpeciesLayout,
    pub steps: Vec<Vec<ScalarObs<f64>>>,
}

impl SpeciesProblem {
    pub fn new(data: &EnsembleData, species: usize) -> Self {
        let layout = SpeciesLayout {
            sims: data.sims_for(species),
        };
        let steps = Self::steps_for(data, &layout, species, data.years);
        Self {
            species,
            years: data.years,
            layout,
            steps,
        }
    }

    /// Observation rows for each year of `years`; noise index 0 is the
    /// observation noise and `1 + local` simulator `local`'s noise.
    fn steps_for(
        data: &EnsembleData,
        layout: &SpeciesLayout,
        species: usize,
        years: YearRange,
    ) -> Vec<Vec<ScalarObs<f64>>> {
        years
            .years()
            .map(|y| {
                let mut step = Vec::new();
                if let Some(v) = data.observations.get(species, y) {
                    step.push(ScalarObs {
                        components: vec![SpeciesLayout::Y],
                        value: v,
                        noise: 0,
                    });
                }
                for (local, &k) in layout.sims.iter().enumerate() {
                    if let Some(v) = data.simulators[k].get(species, y) {
                        step.push(ScalarObs {
                            components: layout.sim_components(local),
                            value: v,
                            noise: 1 + local,
                        });
                    }
                }
                step
            })
            .collect()
    }

    fn check(&self, h: &SpeciesHyper) -> Result<()> {
        for (k, entry) in h.sims.iter().enumerate() {
            if entry.is_some() != self.layout.sims.contains(&k) {
                return Err(Error::Dimension(format!(
                    "species {}: simulator {k} mask disagrees with hyperparameters",
                    self.species
                )));
            }
        }
        if self.layout.sims.iter().any(|&k| k >= h.sims.len()) {
            return Err(Error::Dimension(format!(
                "species {}: hyperparameters cover {} simulators",
                self.species,
                h.sims.len()
            )));
        }
        Ok(())
    }

    /// State-space model and noise variances for hyperparameters `h`.
    pub fn model_with(
        &self,
        h: &SpeciesHyper,
        prior: StatePrior,
    ) -> Result<(DiagonalStateSpace<f64>, Vec<f64>)> {
        self.check(h)?;
        let n = self.layout.dim();
        let mut phi = DVector::from_element(n, 1.0);
        let mut q = DVector::zeros(n);
        let mut m0 = DVector::zeros(n);
        let mut v0 = DVector::zeros(n);
        q[SpeciesLayout::Y] = h.lambda_y;
        m0[SpeciesLayout::Y] = prior.initial_mean;
        v0[SpeciesLayout::Y] = prior.initial_var;
        phi[SpeciesLayout::ETA] = h.r_eta;
        q[SpeciesLayout::ETA] = h.lambda_eta;
        v0[SpeciesLayout::ETA] = h.lambda_eta / (1.0 - h.r_eta * h.r_eta);
        m0[SpeciesLayout::DELTA] = prior.delta_mean;
        v0[SpeciesLayout::DELTA] = prior.delta_var;
        let mut noise = Vec::with_capacity(1 + self.layout.sims.len());
        noise.push(h.sigma_y);
        for (local, &k) in self.layout.sims.iter().enumerate() {
            let s = h.sims[k].expect("checked against layout");
            v0[self.layout.gamma(local)] = s.c_gamma;
            let z = self.layout.z(local);
            phi[z] = s.r;
            q[z] = s.lambda;
            v0[z] = s.lambda / (1.0 - s.r * s.r);
            noise.push(s.sigma);
        }
        let space = DiagonalStateSpace {
            transition: phi,
            process_var: q,
            init_mean: m0,
            init_var: v0,
        };
        Ok((space, noise))
    }

    pub fn model(&self, spec: &EnsembleSpec) -> Result<(DiagonalStateSpace<f64>, Vec<f64>)> {
        self.model_with(&spec.species[self.species], spec.state_prior(self.species))
    }

    pub fn log_likelihood_with(&self, h: &SpeciesHyper, prior: StatePrior) -> Result<f64> {
        let (space, noise) = self.model_with(h, prior)?;
        Ok(space.filter_last(&self.steps, &noise)?.0)
    }

    pub fn log_likelihood(&self, spec: &EnsembleSpec) -> Result<f64> {
        self.log_likelihood_with(&spec.species[self.species], spec.state_prior(self.species))
    }

    /// Smoothed state distribution for every year of the grid.
    pub fn smooth(&self, spec: &EnsembleSpec) -> Result<Vec<Gaussian<f64>>> {
        let (space, noise) = self.model(spec)?;
        let pass = space.filter(&self.steps, &noise)?;
        space.smooth(&pass)
    }
}

fn problems(spec: &EnsembleSpec, data: &EnsembleData) -> Result<Vec<SpeciesProblem>> {
    spec.validate()?;
    if spec.kind != data.kind() {
        return Err(Error::Dimension(format!(
            "spec is for {}, data for {}",
            spec.kind,
            data.kind()
        )));
    }
    if spec.n_species() != data.n_species() || spec.n_sims() != data.simulators.len() {
        return Err(Error::Dimension(format!(
            "spec covers {} species x {} simulators, data {} x {}",
            spec.n_species(),
            spec.n_sims(),
            data.n_species(),
            data.simulators.len()
        )));
    }
    Ok((0..data.n_species())
        .map(|i| SpeciesProblem::new(data, i))
        .collect())
}

/// Exact log marginal likelihood of all observed cells.
pub fn log_likelihood(spec: &EnsembleSpec, data: &EnsembleData) -> Result<f64> {
    let mut ll = 0.0;
    for p in problems(spec, data)? {
        ll += p.log_likelihood(spec)?;
    }
    Ok(ll)
}

/// Smoothed marginals of the truth for every species and year.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthPosterior {
    pub years: YearRange,
    /// `[species][year offset]`
    pub mean: Vec<Vec<f64>>,
    pub var: Vec<Vec<f64>>,
}

impl TruthPosterior {
    pub fn at(&self, species: usize, year: i32) -> Option<(f64, f64)> {
        let t = self.years.offset(year)?;
        Some((self.mean[species][t], self.var[species][t]))
    }
}

pub fn predict_truth(spec: &EnsembleSpec, data: &EnsembleData) -> Result<TruthPosterior> {
    let mut mean = Vec::new();
    let mut var = Vec::new();
    for p in problems(spec, data)? {
        let states = p.smooth(spec)?;
        mean.push(states.iter().map(|g| g.mean[SpeciesLayout::Y]).collect());
        var.push(states.iter().map(|g| g.cov[(0, 0)]).collect());
    }
    Ok(TruthPosterior {
        years: data.years,
        mean,
        var,
    })
}

/// Per-species smoothed states, for access to the discrepancy components.
pub fn smoothed_states(
    spec: &EnsembleSpec,
    data: &EnsembleData,
) -> Result<Vec<(SpeciesLayout, Vec<Gaussian<f64>>)>> {
    problems(spec, data)?
        .into_iter()
        .map(|p| Ok((p.layout.clone(), p.smooth(spec)?)))
        .collect()
}

/// Filtered state at the end of the historical grid, from which scenario
/// futures continue. Because the historical data are shared by every scenario,
/// the filter up to the last historical year is computed once.
#[derive(Debug, Clone)]
pub struct HistoricalState {
    pub years: YearRange,
    species: Vec<(
        SpeciesLayout,
        DiagonalStateSpace<f64>,
        Vec<f64>,
        Gaussian<f64>,
    )>,
}

impl HistoricalState {
    pub fn new(spec: &EnsembleSpec, data: &EnsembleData) -> Result<Self> {
        let species = problems(spec, data)?
            .into_iter()
            .map(|p| {
                let (space, noise) = p.model(spec)?;
                let (_, last) = space.filter_last(&p.steps, &noise)?;
                Ok((p.layout, space, noise, last))
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            years: data.years,
            species,
        })
    }

    /// Truth (mean, variance) per species at `horizon`, given the scenario's
    /// simulator outputs for the years after the historical grid.
    pub fn extend(&self, sims: &[SpeciesSeries], horizon: i32) -> Result<Vec<(f64, f64)>> {
        if horizon < self.years.last {
            return Err(Error::Parameter(format!(
                "horizon {horizon} precedes {}",
                self.years.last
            )));
        }
        let n_sims = self
            .species
            .iter()
            .flat_map(|s| s.0.sims.iter().map(|k| k + 1))
            .max()
            .unwrap_or(0);
        if sims.len() < n_sims {
            return Err(Error::Dimension(format!(
                "{} simulator series supplied, {n_sims} required",
                sims.len()
            )));
        }
        let future = (self.years.last + 1)..=horizon;
        self.species
            .iter()
            .enumerate()
            .map(|(i, (layout, space, noise, state))| {
                let steps: Vec<Vec<ScalarObs<f64>>> = future
                    .clone()
                    .map(|y| {
                        layout
                            .sims
                            .iter()
                            .enumerate()
                            .filter_map(|(local, &k)| {
                                sims[k].get(i, y).map(|v| ScalarObs {
                                    components: layout.sim_components(local),
                                    value: v,
                                    noise: 1 + local,
                                })
                            })
                            .collect()
                    })
                    .collect();
                let g = space.advance(state.clone(), &steps, noise)?;
                Ok((g.mean[SpeciesLayout::Y], g.cov[(0, 0)]))
            })
            .collect()
    }
}
