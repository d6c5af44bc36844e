//! Closed-form long-term responses of an operating model with linear
//! interactions, used as an exact game for checking the search.

use nalgebra::{DMatrix, DVector};

use super::ResponseSurfaces;
use crate::dynamics::{log_tonnes, OperatingModel, Variant};
use crate::error::{Error, Result};

/// Long-term log yield `ln(F_i B_i)` and log SSB at the stable equilibrium
/// `B = -A^{-1} (r - F)` of a Ricker-type model, with extinct species removed
/// until the remaining equilibrium is positive.
#[derive(Debug, Clone)]
pub struct EquilibriumGame {
    model: OperatingModel,
    log_floor: f64,
}

impl EquilibriumGame {
    pub fn new(model: OperatingModel, log_floor: f64) -> Result<Self> {
        if matches!(model.variant, Variant::BevertonHolt) {
            return Err(Error::Parameter(
                "closed-form equilibria need Ricker-type dynamics".into(),
            ));
        }
        Ok(Self { model, log_floor })
    }

    /// Equilibrium biomass under constant fishing `f`.
    pub fn biomass(&self, f: &[f64]) -> DVector<f64> {
        let n = self.model.n_species();
        let mut alive: Vec<usize> = (0..n).collect();
        let mut b = DVector::zeros(n);
        while !alive.is_empty() {
            let m = alive.len();
            let a = DMatrix::from_fn(m, m, |i, j| self.model.interaction[(alive[i], alive[j])]);
            let rhs = DVector::from_fn(m, |i, _| f[alive[i]] - self.model.growth[alive[i]]);
            let Some(sol) = a.lu().solve(&rhs) else {
                break;
            };
            let (worst, min) = sol
                .iter()
                .enumerate()
                .fold(
                    (0, f64::INFINITY),
                    |acc, (k, v)| if *v < acc.1 { (k, *v) } else { acc },
                );
            if min > 0.0 {
                b = DVector::zeros(n);
                for (k, &s) in alive.iter().enumerate() {
                    b[s] = sol[k];
                }
                break;
            }
            alive.remove(worst);
        }
        b
    }
}

impl ResponseSurfaces for EquilibriumGame {
    fn n_species(&self) -> usize {
        self.model.n_species()
    }

    fn log_yield(&self, species: usize, f: &[f64]) -> f64 {
        log_tonnes(f[species] * self.biomass(f)[species], self.log_floor)
    }

    fn ssb_quantile(&self, species: usize, f: &[f64]) -> f64 {
        log_tonnes(
            self.model.ssb_fraction[species] * self.biomass(f)[species],
            self.log_floor,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::two_species_competition;
    use approx::assert_relative_eq;

    #[test]
    fn matches_simulated_equilibrium() {
        let m = two_species_competition().unwrap();
        let g = EquilibriumGame::new(m.clone(), -20.0).unwrap();
        for f in [[0.3, 0.2], [0.8, 0.5], [1.2, 0.1]] {
            let sim = m.equilibrium(&f, 3000).unwrap();
            let b = g.biomass(&f);
            for i in 0..2 {
                assert_relative_eq!(b[i], sim[i], max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn extinction_drops_species() {
        let g = EquilibriumGame::new(two_species_competition().unwrap(), -20.0).unwrap();
        let b = g.biomass(&[1.7, 0.1]);
        assert_eq!(b[0], 0.0);
        assert_relative_eq!(b[1], 800.0 * (1.0 - 0.1 / 1.2), max_relative = 1e-12);
        assert_eq!(g.log_yield(0, &[1.7, 0.1]), -20.0);
    }
}
