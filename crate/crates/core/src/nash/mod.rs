//! Risk-constrained Nash search by sequential best responses over emulated
//! response surfaces, and the multi-round orchestration around it.

mod analytic;
pub mod rounds;

pub use analytic::EquilibriumGame;
pub use rounds::{
    run_rounds, AcceptanceRecord, Checkpoint, PipelineInputs, RoundLedger, RoundsOutcome,
    ScenarioEvaluation,
};

use rand::Rng as _;
use rayon::prelude::*;

use crate::design::{lhc, lhc_1d};
use crate::emulator::GpSurface;
use crate::seeds::{self, Rng};
use crate::types::{FishingScenario, F_MAX};

/// Per-species predictions on the log-tonne scale as functions of the
/// fishing-mortality vector, for one posterior draw.
pub trait ResponseSurfaces: Sync {
    fn n_species(&self) -> usize;

    /// Long-term log yield of `species`.
    fn log_yield(&self, species: usize, f: &[f64]) -> f64;

    /// Long-term SSB risk quantile (log tonnes) of `species`.
    fn ssb_quantile(&self, species: usize, f: &[f64]) -> f64;

    /// Yield of `species` and every species' SSB quantile as `F_species`
    /// takes each of `values`, the other coordinates fixed at `f`.
    /// Returns `(yield[v], ssb[j][v])`.
    fn sweep(&self, f: &[f64], species: usize, values: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
        let n = self.n_species();
        let mut x = f.to_vec();
        let mut y = Vec::with_capacity(values.len());
        let mut s = vec![Vec::with_capacity(values.len()); n];
        for &v in values {
            x[species] = v;
            y.push(self.log_yield(species, &x));
            for (j, col) in s.iter_mut().enumerate() {
                col.push(self.ssb_quantile(j, &x));
            }
        }
        (y, s)
    }
}

/// Emulator surfaces of a single posterior draw, one per species and kind.
#[derive(Debug, Clone)]
pub struct EmulatedGame {
    pub yield_: Vec<GpSurface<f64>>,
    pub ssb: Vec<GpSurface<f64>>,
}

impl ResponseSurfaces for EmulatedGame {
    fn n_species(&self) -> usize {
        self.yield_.len()
    }

    fn log_yield(&self, species: usize, f: &[f64]) -> f64 {
        self.yield_[species].predict_mean(f)
    }

    fn ssb_quantile(&self, species: usize, f: &[f64]) -> f64 {
        self.ssb[species].predict_mean(f)
    }

    fn sweep(&self, f: &[f64], species: usize, values: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
        let mut ys = self.yield_[species].slice(f, species);
        let y = values.iter().map(|&v| ys.mean(v)).collect();
        let s = self
            .ssb
            .iter()
            .map(|surface| {
                let mut sl = surface.slice(f, species);
                values.iter().map(|&v| sl.mean(v)).collect()
            })
            .collect();
        (y, s)
    }
}

/// Search settings shared by every draw.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchSettings {
    /// `ln B_lim` per species; feasibility needs every SSB quantile above it.
    pub log_b_lim: Vec<f64>,
    pub init_pool: usize,
    pub response_pool: usize,
    pub min_iterations: usize,
    pub max_iterations: usize,
    /// Largest yield gain (log tonnes) a unilateral deviation may offer at a
    /// fixed point.
    pub fixed_point_tolerance: f64,
}

impl SearchSettings {
    pub fn from_config(cfg: &crate::config::RunConfig, log_b_lim: Vec<f64>) -> Self {
        Self {
            log_b_lim,
            init_pool: cfg.run.init_pool,
            response_pool: cfg.run.response_pool,
            min_iterations: cfg.nash.min_iterations,
            max_iterations: cfg.nash.max_iterations,
            fixed_point_tolerance: cfg.nash.fixed_point_tolerance,
        }
    }

    /// Spacing of the fixed-point check grid: the mean spacing of a response pool.
    pub fn grid_step(&self) -> f64 {
        F_MAX / self.response_pool as f64
    }

    /// Fixed-point test of a candidate, allowing best deviations within two
    /// grid steps (the resolution of a random response pool).
    pub fn is_fixed_point(&self, c: &NashCandidate) -> bool {
        c.is_fixed_point(self.fixed_point_tolerance, 2.0 * self.grid_step())
    }

    fn feasible(&self, ssb: &[Vec<f64>], v: usize) -> bool {
        ssb.iter().zip(&self.log_b_lim).all(|(s, b)| s[v] > *b)
    }
}

/// Starting point of a search; `fallback[i]` marks species whose own SSB
/// constraint failed at every initialisation point.
#[derive(Debug, Clone, PartialEq)]
pub struct Initialization {
    pub f: Vec<f64>,
    pub fallback: Vec<bool>,
}

/// For each species, the `F_i` of the LHC point with the largest yield of
/// that species among points satisfying its own SSB constraint.
pub fn initialize<S: ResponseSurfaces + ?Sized>(
    surfaces: &S,
    settings: &SearchSettings,
    rng: &mut Rng,
) -> Initialization {
    let n = surfaces.n_species();
    let pool = lhc::<f64>(settings.init_pool, n, 0.0, F_MAX, rng).points;
    let mut f = vec![0.0; n];
    let mut fallback = vec![false; n];
    for i in 0..n {
        let mut best: Option<(f64, usize)> = None;
        let mut best_any: Option<(f64, usize)> = None;
        for (k, p) in pool.iter().enumerate() {
            let y = surfaces.log_yield(i, p);
            if best_any.is_none_or(|b| y > b.0) {
                best_any = Some((y, k));
            }
            if surfaces.ssb_quantile(i, p) > settings.log_b_lim[i] && best.is_none_or(|b| y > b.0) {
                best = Some((y, k));
            }
        }
        let k = match best {
            Some((_, k)) => k,
            None => {
                fallback[i] = true;
                best_any.map_or(0, |b| b.1)
            }
        };
        f[i] = pool[k][i];
    }
    Initialization { f, fallback }
}

/// Result of one sweep over all species.
#[derive(Debug, Clone, PartialEq)]
pub struct BestResponse {
    pub f: Vec<f64>,
    /// Species whose pool had no feasible value; their `F_i` was kept.
    pub infeasible: Vec<bool>,
}

/// One best-response sweep in species order; each update feeds the next.
pub fn best_response_iteration<S: ResponseSurfaces + ?Sized>(
    surfaces: &S,
    current: &[f64],
    settings: &SearchSettings,
    rng: &mut Rng,
) -> BestResponse {
    let n = surfaces.n_species();
    let mut f = current.to_vec();
    let mut infeasible = vec![false; n];
    for i in 0..n {
        let pool = lhc_1d(settings.response_pool, 0.0, F_MAX, rng);
        match best_feasible(surfaces, &f, i, &pool, settings) {
            Some((v, _)) => f[i] = v,
            None => infeasible[i] = true,
        }
    }
    BestResponse { f, infeasible }
}

/// Feasible value of `F_i` with the largest yield, and that yield.
fn best_feasible<S: ResponseSurfaces + ?Sized>(
    surfaces: &S,
    f: &[f64],
    i: usize,
    values: &[f64],
    settings: &SearchSettings,
) -> Option<(f64, f64)> {
    let (y, ssb) = surfaces.sweep(f, i, values);
    let mut best: Option<(f64, f64)> = None;
    for (k, &v) in values.iter().enumerate() {
        if settings.feasible(&ssb, k) && best.is_none_or(|b| y[k] > b.1) {
            best = Some((v, y[k]));
        }
    }
    best
}

/// Largest gain in own yield available to each species by a unilateral,
/// feasible deviation on the grid `{0, h, 2h, ..., 2}` (zero when none
/// helps), and the deviation achieving it (the current `F_i` when none does).
pub fn fixed_point_gaps<S: ResponseSurfaces + ?Sized>(
    surfaces: &S,
    f: &[f64],
    settings: &SearchSettings,
) -> Vec<(f64, f64)> {
    let steps = (F_MAX / settings.grid_step()).round() as usize;
    let grid: Vec<f64> = (0..=steps)
        .map(|k| F_MAX * k as f64 / steps as f64)
        .collect();
    (0..surfaces.n_species())
        .map(|i| {
            let here = surfaces.log_yield(i, f);
            match best_feasible(surfaces, f, i, &grid, settings) {
                Some((v, y)) if y > here => (y - here, v),
                _ => (0.0, f[i]),
            }
        })
        .collect()
}

/// Unconstrained maximiser of own yield in `F_i` at fixed `F_{-i}`, on a grid
/// of `points` values over `[0, 2]`.
pub fn ss_msy_diagnostic<S: ResponseSurfaces + ?Sized>(
    surfaces: &S,
    species: usize,
    f: &[f64],
    points: usize,
) -> f64 {
    let grid: Vec<f64> = (0..points)
        .map(|k| F_MAX * k as f64 / (points - 1).max(1) as f64)
        .collect();
    let (y, _) = surfaces.sweep(f, species, &grid);
    let mut best = 0;
    for k in 1..grid.len() {
        if y[k] > y[best] {
            best = k;
        }
    }
    grid[best]
}

/// Output of the search for one posterior draw.
#[derive(Debug, Clone, PartialEq)]
pub struct NashCandidate {
    pub scenario: FishingScenario,
    /// Emulated long-term log yield per species at the candidate.
    pub log_yield: Vec<f64>,
    /// Emulated SSB risk quantile per species.
    pub ssb_quantile: Vec<f64>,
    /// `ssb_quantile > ln B_lim` per species.
    pub risk_ok: Vec<bool>,
    pub round: usize,
    pub draw: usize,
    pub iterations: usize,
    /// Infeasible pools in the final sweep.
    pub infeasible: Vec<bool>,
    pub init_fallback: Vec<bool>,
    /// See [`fixed_point_gaps`].
    pub fixed_point_gap: Vec<f64>,
    pub best_deviation: Vec<f64>,
}

impl NashCandidate {
    /// Every species either gains at most `tolerance` by deviating, or its
    /// best deviation lies within `resolution` of its current `F_i`.
    pub fn is_fixed_point(&self, tolerance: f64, resolution: f64) -> bool {
        let f = self.scenario.as_slice();
        self.fixed_point_gap
            .iter()
            .zip(&self.best_deviation)
            .zip(f)
            .all(|((g, d), v)| *g <= tolerance || (d - v).abs() <= resolution + 1e-12)
    }
}

/// Initialisation followed by a random number of best-response sweeps,
/// uniform on `[min_iterations, max_iterations]`.
pub fn search<S: ResponseSurfaces + ?Sized>(
    surfaces: &S,
    settings: &SearchSettings,
    rng: &mut Rng,
    round: usize,
    draw: usize,
) -> NashCandidate {
    let iterations = rng.gen_range(settings.min_iterations..=settings.max_iterations);
    let init = initialize(surfaces, settings, rng);
    let mut f = init.f;
    let mut infeasible = vec![false; f.len()];
    for _ in 0..iterations {
        let br = best_response_iteration(surfaces, &f, settings, rng);
        f = br.f;
        infeasible = br.infeasible;
    }
    let n = surfaces.n_species();
    let log_yield: Vec<f64> = (0..n).map(|i| surfaces.log_yield(i, &f)).collect();
    let ssb_quantile: Vec<f64> = (0..n).map(|i| surfaces.ssb_quantile(i, &f)).collect();
    let risk_ok = ssb_quantile
        .iter()
        .zip(&settings.log_b_lim)
        .map(|(s, b)| s > b)
        .collect();
    let (fixed_point_gap, best_deviation) =
        fixed_point_gaps(surfaces, &f, settings).into_iter().unzip();
    NashCandidate {
        scenario: FishingScenario::with_len(f).expect("search stays inside the box"),
        log_yield,
        ssb_quantile,
        risk_ok,
        round,
        draw,
        iterations,
        infeasible,
        init_fallback: init.fallback,
        fixed_point_gap,
        best_deviation,
    }
}

/// One candidate per entry of `draws` (each a draw's surfaces), in parallel.
/// Draw `d` uses the sub-stream `("nash", [round, d])` of `seed`.
pub fn find_candidates<S: ResponseSurfaces>(
    draws: &[S],
    settings: &SearchSettings,
    seed: u64,
    round: usize,
) -> Vec<NashCandidate> {
    draws
        .par_iter()
        .enumerate()
        .map(|(d, s)| {
            let mut rng = seeds::rng(seed, "nash", &[round as u64, d as u64]);
            search(s, settings, &mut rng, round, d)
        })
        .collect()
}
