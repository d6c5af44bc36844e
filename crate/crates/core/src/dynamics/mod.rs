//! Annual-step multispecies operating models behind a common simulator port.
//!
//! The models are desk-scale biomass dynamics with species interactions. A
//! [`SimulatorPort`] selects which species a simulator reports (the rows of
//! its mask matrix) and over which years.

mod community;
pub mod synthetic;

pub use community::{builtin_ensemble, community_base, truth_model, two_species_competition};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::FishingHistory;
use crate::types::{FishingScenario, OutputKind, SpeciesSeries, YearRange};

/// Step scheme of an operating model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Variant {
    /// `B' = B exp(r + A B - F)`.
    Ricker,
    /// Ricker step whose between-species terms use biomass `lag` years back.
    LaggedInteractions { lag: usize },
    /// Compensatory step `B' = B e^{r-F} / (1 + (e^r - 1) g)`, with crowding
    /// `g = max(0, -(A B)_i / r_i)`.
    BevertonHolt,
}

impl Variant {
    pub fn tag(&self) -> String {
        match self {
            Variant::Ricker => "ricker".into(),
            Variant::LaggedInteractions { lag } => format!("lagged-{lag}"),
            Variant::BevertonHolt => "beverton-holt".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatingModel {
    pub name: String,
    /// Intrinsic growth rates, 1/year.
    pub growth: DVector<f64>,
    /// Carrying capacities, tonnes.
    pub capacity: DVector<f64>,
    /// Interaction matrix, 1/(tonnes year). Diagonal is `-r_i / K_i`.
    pub interaction: DMatrix<f64>,
    /// Fraction of biomass that is spawning stock.
    pub ssb_fraction: DVector<f64>,
    pub variant: Variant,
    /// Years of constant first-year fishing run before the first reported year.
    pub spin_up: usize,
}

impl OperatingModel {
    /// Builds a model from dimensionless interaction coefficients `alpha`
    /// (effect of `j` on `i` relative to `K_j`); `A_ij = r_i alpha_ij / K_j`.
    pub fn from_alpha(
        name: impl Into<String>,
        growth: Vec<f64>,
        capacity: Vec<f64>,
        alpha: &DMatrix<f64>,
        ssb_fraction: Vec<f64>,
        variant: Variant,
    ) -> Result<Self> {
        let n = growth.len();
        if capacity.len() != n || ssb_fraction.len() != n || alpha.shape() != (n, n) {
            return Err(Error::Dimension(
                "operating model parameter sizes differ".into(),
            ));
        }
        let interaction = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                -growth[i] / capacity[i]
            } else {
                growth[i] * alpha[(i, j)] / capacity[j]
            }
        });
        let m = Self {
            name: name.into(),
            growth: DVector::from_vec(growth),
            capacity: DVector::from_vec(capacity),
            interaction,
            ssb_fraction: DVector::from_vec(ssb_fraction),
            variant,
            spin_up: 60,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn n_species(&self) -> usize {
        self.growth.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_species();
        for i in 0..n {
            if !(self.capacity[i] > 0.0) {
                return Err(Error::Parameter(format!(
                    "{}: K_{} must be positive",
                    self.name,
                    i + 1
                )));
            }
            if !(self.interaction[(i, i)] < 0.0) {
                return Err(Error::Parameter(format!(
                    "{0}: A_{1}{1} must be negative (self-limitation)",
                    self.name,
                    i + 1
                )));
            }
            if !(0.0..=1.0).contains(&self.ssb_fraction[i]) {
                return Err(Error::Parameter(format!(
                    "{}: SSB fraction outside [0,1]",
                    self.name
                )));
            }
        }
        Ok(())
    }

    /// One annual step from `b` (with `lagged` the biomass `lag` years back).
    fn step(&self, b: &DVector<f64>, lagged: &DVector<f64>, f: &[f64]) -> DVector<f64> {
        let n = self.n_species();
        match self.variant {
            Variant::Ricker => {
                let ab = &self.interaction * b;
                DVector::from_fn(n, |i, _| b[i] * (self.growth[i] + ab[i] - f[i]).exp())
            }
            Variant::LaggedInteractions { .. } => DVector::from_fn(n, |i, _| {
                let mut x = self.growth[i] + self.interaction[(i, i)] * b[i] - f[i];
                for j in (0..n).filter(|&j| j != i) {
                    x += self.interaction[(i, j)] * lagged[j];
                }
                b[i] * x.exp()
            }),
            Variant::BevertonHolt => {
                let ab = &self.interaction * b;
                DVector::from_fn(n, |i, _| {
                    let r = self.growth[i];
                    let crowding = (-ab[i] / r).max(0.0);
                    b[i] * (r - f[i]).exp() / (1.0 + r.exp_m1() * crowding)
                })
            }
        }
    }

    fn lag(&self) -> usize {
        match self.variant {
            Variant::LaggedInteractions { lag } => lag,
            _ => 0,
        }
    }

    /// Biomass trajectory for the given per-year fishing mortalities, starting
    /// from `K` after `spin_up` years at the first year's mortality.
    ///
    /// Returns biomass at the start of each year in `fishing`.
    pub fn trajectory(&self, first_year: i32, fishing: &[Vec<f64>]) -> Result<Vec<DVector<f64>>> {
        let lag = self.lag();
        let mut hist: Vec<DVector<f64>> = vec![self.capacity.clone(); lag + 1];
        let mut b = self.capacity.clone();
        let first_f = fishing
            .first()
            .cloned()
            .unwrap_or_else(|| vec![0.0; self.n_species()]);
        for _ in 0..self.spin_up {
            let next = self.step(&b, &hist[0], &first_f);
            hist.remove(0);
            hist.push(next.clone());
            b = next;
        }
        let mut out = Vec::with_capacity(fishing.len());
        for (t, f) in fishing.iter().enumerate() {
            if b.iter().any(|x| !x.is_finite()) {
                return Err(Error::Diverged {
                    year: first_year + t as i32,
                    message: format!("{}: non-finite biomass", self.name),
                });
            }
            out.push(b.clone());
            let next = self.step(&b, &hist[0], f);
            hist.remove(0);
            hist.push(next.clone());
            b = next;
        }
        Ok(out)
    }

    /// Long-run biomass under constant fishing `f`, by iterating the step.
    pub fn equilibrium(&self, f: &[f64], years: usize) -> Result<DVector<f64>> {
        let path = self.trajectory(0, &vec![f.to_vec(); years])?;
        Ok(path
            .last()
            .cloned()
            .unwrap_or_else(|| self.capacity.clone()))
    }
}

/// A simulator's view: identity, reported species (mask rows) and years.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatorPort {
    /// 1-based simulator identity `k`.
    pub id: usize,
    pub name: String,
    /// Column index of the single 1 in each mask row.
    pub species: Vec<usize>,
    pub years: YearRange,
    pub n_total: usize,
}

impl SimulatorPort {
    pub fn new(
        id: usize,
        name: impl Into<String>,
        species: Vec<usize>,
        years: YearRange,
        n_total: usize,
    ) -> Result<Self> {
        let mut seen = vec![false; n_total];
        for &s in &species {
            if s >= n_total || std::mem::replace(&mut seen[s], true) {
                return Err(Error::Parameter(format!(
                    "mask rows must select distinct species below {n_total}"
                )));
            }
        }
        Ok(Self {
            id,
            name: name.into(),
            species,
            years,
            n_total,
        })
    }

    /// Reports every species.
    pub fn full(id: usize, name: impl Into<String>, years: YearRange, n_total: usize) -> Self {
        Self::new(id, name, (0..n_total).collect(), years, n_total).expect("identity mask")
    }

    /// The `n_k x n` selection matrix `M_k`.
    pub fn mask_matrix(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.species.len(), self.n_total);
        for (row, &col) in self.species.iter().enumerate() {
            m[(row, col)] = 1.0;
        }
        m
    }

    pub fn reports(&self, species: usize) -> bool {
        self.species.contains(&species)
    }
}

/// Log of tonnes, floored for collapsed stocks.
pub fn log_tonnes(x: f64, floor: f64) -> f64 {
    if x > 0.0 {
        x.ln().max(floor)
    } else {
        floor
    }
}

/// Yield and SSB of one simulator run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatorOutput {
    pub yield_: SpeciesSeries,
    pub ssb: SpeciesSeries,
}

impl SimulatorOutput {
    pub fn get(&self, kind: OutputKind) -> &SpeciesSeries {
        match kind {
            OutputKind::Yield => &self.yield_,
            OutputKind::Ssb => &self.ssb,
        }
    }
}

/// Runs `model` with historical fishing followed by the scenario held fixed
/// from the year after the history to `horizon`.
///
/// Yield in year `t` is `F_i(t) * B_i(t)`; SSB is the mature fraction of
/// `B_i(t)`. Species outside the port's mask are absent.
pub fn run_scenario(
    model: &OperatingModel,
    port: &SimulatorPort,
    history: &FishingHistory,
    scenario: &[f64],
    horizon: i32,
    log_floor: f64,
) -> Result<SimulatorOutput> {
    let n = model.n_species();
    if scenario.len() != n || port.n_total != n {
        return Err(Error::Dimension(format!(
            "scenario/port sizes {}/{} differ from model size {n}",
            scenario.len(),
            port.n_total
        )));
    }
    if history.f.iter().any(|row| row.len() != n) {
        return Err(Error::Dimension(
            "history rows must cover every species".into(),
        ));
    }
    if port.years.first < history.years.first || port.years.last > horizon {
        return Err(Error::Dimension(format!(
            "port years {:?} not covered by history start {} and horizon {horizon}",
            port.years, history.years.first
        )));
    }
    let years = YearRange::new(history.years.first, horizon)?;
    let fishing: Vec<Vec<f64>> = years
        .years()
        .map(|y| match history.at(y) {
            Some(f) => f.to_vec(),
            None => scenario.to_vec(),
        })
        .collect();
    let path = model.trajectory(years.first, &fishing)?;

    let mut yield_ = SpeciesSeries::empty(OutputKind::Yield, port.years, n);
    let mut ssb = SpeciesSeries::empty(OutputKind::Ssb, port.years, n);
    for s in (0..n).filter(|s| !port.reports(*s)) {
        yield_.set_absent(s);
        ssb.set_absent(s);
    }
    for year in port.years.years() {
        let t = years.offset(year).unwrap();
        let b = &path[t];
        for &s in &port.species {
            yield_.set(s, year, log_tonnes(fishing[t][s] * b[s], log_floor))?;
            ssb.set(s, year, log_tonnes(model.ssb_fraction[s] * b[s], log_floor))?;
        }
    }
    Ok(SimulatorOutput { yield_, ssb })
}

/// A simulator: operating model plus its port.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulator {
    pub model: OperatingModel,
    pub port: SimulatorPort,
}

impl Simulator {
    pub fn run(
        &self,
        history: &FishingHistory,
        scenario: &FishingScenario,
        horizon: i32,
        log_floor: f64,
    ) -> Result<SimulatorOutput> {
        run_scenario(
            &self.model,
            &self.port,
            history,
            scenario.as_slice(),
            horizon,
            log_floor,
        )
    }
}

/// Runs every simulator on every scenario, in parallel over scenarios.
///
/// Result is indexed `[scenario][simulator]`.
pub fn run_batch(
    sims: &[Simulator],
    history: &FishingHistory,
    scenarios: &[(usize, FishingScenario)],
    horizon: i32,
    log_floor: f64,
) -> Result<Vec<Vec<SimulatorOutput>>> {
    scenarios
        .par_iter()
        .map(|(id, sc)| {
            sims.iter()
                .map(|sim| {
                    sim.run(history, sc, horizon, log_floor).map_err(|e| {
                        e.context(format!("scenario {id}, simulator {}", sim.port.name))
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn single(r: f64, k: f64) -> OperatingModel {
        OperatingModel::from_alpha(
            "one",
            vec![r],
            vec![k],
            &DMatrix::zeros(1, 1),
            vec![1.0],
            Variant::Ricker,
        )
        .unwrap()
    }

    fn hist(n: usize, f: f64) -> FishingHistory {
        FishingHistory::constant(YearRange::new(1984, 2017).unwrap(), &vec![f; n])
    }

    #[test]
    fn schaefer_equilibrium() {
        let m = single(1.0, 1000.0);
        let b = m.equilibrium(&[0.4], 400).unwrap();
        assert_relative_eq!(b[0], 600.0, max_relative = 1e-9);
        assert_relative_eq!(0.4 * b[0], 240.0, max_relative = 1e-9);
    }

    #[test]
    fn unfished_yield_is_floor_and_ssb_recovers_monotonically() {
        let mut m = single(0.8, 1000.0);
        m.spin_up = 0;
        let h = FishingHistory::constant(YearRange::new(1984, 2017).unwrap(), &[1.0]);
        let port = SimulatorPort::full(1, "one", YearRange::new(1984, 2050).unwrap(), 1);
        let out = run_scenario(&m, &port, &h, &[0.0], 2050, -20.0).unwrap();
        for y in 2018..=2050 {
            assert_eq!(out.yield_.get(0, y), Some(-20.0));
        }
        let ssb: Vec<f64> = (2018..=2050).map(|y| out.ssb.get(0, y).unwrap()).collect();
        assert!(ssb.windows(2).all(|w| w[1] >= w[0]));
        assert!(ssb.iter().all(|v| *v <= 1000f64.ln() + 1e-12));
        assert!((ssb.last().unwrap() - 1000f64.ln()).abs() < 0.05);
    }

    #[test]
    fn schaefer_shape() {
        let m = single(0.8, 1000.0);
        let y = |f: f64| f * m.equilibrium(&[f], 500).unwrap()[0];
        assert!(y(0.1) < y(0.4));
        assert!(y(0.8) < y(0.4));
    }

    #[test]
    fn two_species_matches_linear_solve() {
        let alpha = DMatrix::from_row_slice(2, 2, &[0.0, -0.3, -0.2, 0.0]);
        let m = OperatingModel::from_alpha(
            "pair",
            vec![0.8, 0.6],
            vec![1000.0, 500.0],
            &alpha,
            vec![1.0, 1.0],
            Variant::Ricker,
        )
        .unwrap();
        let f = [0.3, 0.2];
        let b = m.equilibrium(&f, 2000).unwrap();
        // A B = -(r - F), solved by Cramer's rule.
        let a = &m.interaction;
        let rhs = [-(0.8 - f[0]), -(0.6 - f[1])];
        let det = a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)];
        let b0 = (rhs[0] * a[(1, 1)] - a[(0, 1)] * rhs[1]) / det;
        let b1 = (a[(0, 0)] * rhs[1] - rhs[0] * a[(1, 0)]) / det;
        assert_relative_eq!(b[0], b0, max_relative = 1e-8);
        assert_relative_eq!(b[1], b1, max_relative = 1e-8);
    }

    #[test]
    fn mask_algebra() {
        let sims = builtin_ensemble(3).unwrap();
        let h = synthetic::bundled_history();
        let sc = vec![0.4; 9];
        let four = &sims[3];
        let full_port = SimulatorPort::full(4, "full", four.port.years, 9);
        let full = run_scenario(&four.model, &full_port, &h, &sc, 2050, -20.0).unwrap();
        let masked = run_scenario(&four.model, &four.port, &h, &sc, 2050, -20.0).unwrap();
        let m = four.port.mask_matrix();
        for y in [1984, 2000, 2050] {
            let x = DVector::from_fn(9, |s, _| full.ssb.get(s, y).unwrap());
            let sel = &m * x;
            for (row, &s) in four.port.species.iter().enumerate() {
                assert_eq!(masked.ssb.get(s, y), Some(sel[row]));
            }
            assert_eq!(masked.ssb.get(crate::types::SOLE, y), None);
        }
    }

    #[test]
    fn deterministic_runs() {
        let sims = builtin_ensemble(11).unwrap();
        let h = hist(9, 0.3);
        let sc = FishingScenario::uniform(0.7).unwrap();
        for s in &sims {
            assert_eq!(
                s.run(&h, &sc, 2050, -20.0).unwrap(),
                s.run(&h, &sc, 2050, -20.0).unwrap()
            );
        }
    }

    #[test]
    fn invalid_port_and_model() {
        let y = YearRange::new(1984, 2050).unwrap();
        assert!(SimulatorPort::new(1, "dup", vec![0, 0], y, 2).is_err());
        assert!(SimulatorPort::new(1, "oob", vec![2], y, 2).is_err());
        let mut m = single(1.0, 10.0);
        m.interaction[(0, 0)] = 0.1;
        assert!(m.validate().is_err());
    }

    #[test]
    fn blow_up_reports_year() {
        let mut m = single(1.0, 10.0);
        m.interaction[(0, 0)] = 1e300;
        m.spin_up = 0;
        let h = hist(1, 0.0);
        let port = SimulatorPort::full(1, "one", YearRange::new(1984, 2050).unwrap(), 1);
        let err = run_scenario(&m, &port, &h, &[0.0], 2050, -20.0).unwrap_err();
        assert!(matches!(err, Error::Diverged { year: 1985, .. }), "{err:?}");
    }
}
