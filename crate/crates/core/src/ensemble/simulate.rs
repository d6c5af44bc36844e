//! Draws latent paths and data from the ensemble model itself.

use rand_distr::{Distribution, Normal};

use super::{EnsembleData, EnsembleSpec};
use crate::error::{Error, Result};
use crate::seeds::Rng;
use crate::types::{SpeciesSeries, YearRange};

/// Where each simulator reports: its years and the species it models.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatorCoverage {
    pub years: YearRange,
    pub species: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedDataset {
    pub data: EnsembleData,
    /// Latent truth `[species][year offset]`.
    pub truth: Vec<Vec<f64>>,
}

fn gauss(rng: &mut Rng, mean: f64, var: f64) -> f64 {
    Normal::new(mean, var.sqrt())
        .expect("finite variance")
        .sample(rng)
}

/// Samples the latent states and the observed series: observations over
/// `obs_years`, simulator outputs over each coverage.
pub fn simulate(
    spec: &EnsembleSpec,
    years: YearRange,
    obs_years: YearRange,
    coverage: &[SimulatorCoverage],
    rng: &mut Rng,
) -> Result<SimulatedDataset> {
    spec.validate()?;
    let n = spec.n_species();
    if coverage.len() != spec.n_sims() {
        return Err(Error::Dimension(format!(
            "{} coverages for {} simulators",
            coverage.len(),
            spec.n_sims()
        )));
    }
    let mut obs = SpeciesSeries::empty(spec.kind, obs_years, n);
    let mut sims: Vec<SpeciesSeries> = coverage
        .iter()
        .map(|c| {
            let mut s = SpeciesSeries::empty(spec.kind, c.years, n);
            for (i, &p) in c.species.iter().enumerate() {
                if !p {
                    s.set_absent(i);
                }
            }
            s
        })
        .collect();
    let mut truth = Vec::with_capacity(n);
    for (i, h) in spec.species.iter().enumerate() {
        let mut y = gauss(rng, spec.initial_mean[i], spec.initial_var);
        let delta = gauss(rng, spec.delta_mean[i], spec.delta_var);
        let mut eta = gauss(rng, 0.0, h.lambda_eta / (1.0 - h.r_eta * h.r_eta));
        let mut gamma = vec![0.0; coverage.len()];
        let mut z = vec![0.0; coverage.len()];
        for (k, s) in h.sims.iter().enumerate() {
            if let Some(s) = s {
                gamma[k] = gauss(rng, 0.0, s.c_gamma);
                z[k] = gauss(rng, 0.0, s.lambda / (1.0 - s.r * s.r));
            }
        }
        let mut path = Vec::with_capacity(years.len());
        for (t, year) in years.years().enumerate() {
            if t > 0 {
                y = gauss(rng, y, h.lambda_y);
                eta = gauss(rng, h.r_eta * eta, h.lambda_eta);
                for (k, s) in h.sims.iter().enumerate() {
                    if let Some(s) = s {
                        z[k] = gauss(rng, s.r * z[k], s.lambda);
                    }
                }
            }
            path.push(y);
            if obs_years.contains(year) {
                obs.set(i, year, gauss(rng, y, h.sigma_y))?;
            }
            for (k, s) in h.sims.iter().enumerate() {
                if let Some(s) = s {
                    if coverage[k].years.contains(year) && coverage[k].species[i] {
                        let mu = y + delta + eta + gamma[k] + z[k];
                        sims[k].set(i, year, gauss(rng, mu, s.sigma))?;
                    }
                }
            }
        }
        truth.push(path);
    }
    Ok(SimulatedDataset {
        data: EnsembleData::new(years, obs, sims)?,
        truth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{SimHyper, SpeciesHyper};
    use crate::types::OutputKind;
    use rand::SeedableRng;

    #[test]
    fn shapes_and_masks() {
        let sim = SimHyper {
            c_gamma: 0.1,
            r: 0.5,
            lambda: 0.01,
            sigma: 0.01,
        };
        let spec = EnsembleSpec {
            kind: OutputKind::Ssb,
            species: vec![
                SpeciesHyper {
                    lambda_y: 0.01,
                    sigma_y: 0.01,
                    r_eta: 0.2,
                    lambda_eta: 0.01,
                    sims: vec![Some(sim), Some(sim)],
                },
                SpeciesHyper {
                    lambda_y: 0.01,
                    sigma_y: 0.01,
                    r_eta: 0.2,
                    lambda_eta: 0.01,
                    sims: vec![Some(sim), None],
                },
            ],
            delta_mean: vec![0.0; 2],
            delta_var: 1.0,
            initial_mean: vec![10.0, 5.0],
            initial_var: 1.0,
        };
        let years = YearRange::new(2000, 2010).unwrap();
        let cov = vec![
            SimulatorCoverage {
                years,
                species: vec![true, true],
            },
            SimulatorCoverage {
                years: YearRange::new(2004, 2010).unwrap(),
                species: vec![true, false],
            },
        ];
        let mut rng = Rng::seed_from_u64(2);
        let out = simulate(
            &spec,
            years,
            YearRange::new(2000, 2006).unwrap(),
            &cov,
            &mut rng,
        )
        .unwrap();
        assert_eq!(out.data.observations.count(), 14);
        assert_eq!(out.data.simulators[0].count(), 22);
        assert_eq!(out.data.simulators[1].count(), 7);
        assert!(!out.data.simulators[1].is_present(1));
        assert_eq!(out.truth[0].len(), 11);
    }
}
