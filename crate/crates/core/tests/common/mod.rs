//! Shared test oracles.

#![allow(dead_code, clippy::needless_range_loop)]

use nalgebra::{DMatrix, DVector};
use nashmsy::ensemble::simulate::SimulatorCoverage;
use nashmsy::ensemble::{EnsembleData, EnsembleSpec, SimHyper, SpeciesHyper};
use nashmsy::seeds::Rng;
use nashmsy::types::{OutputKind, SpeciesSeries, YearRange};
use rand::Rng as _;

/// Posterior quantities computed by conditioning the full joint Gaussian.
pub struct BruteForce {
    pub log_likelihood: f64,
    /// `[species][t]`
    pub mean: Vec<Vec<f64>>,
    pub var: Vec<Vec<f64>>,
    /// Posterior mean of `y + delta + eta`.
    pub consensus: Vec<Vec<f64>>,
}

/// Every latent quantity is written as a linear map of independent Gaussian
/// variables (initial states, static terms and all innovations); observations
/// add independent noise. The resulting joint Gaussian is conditioned directly.
pub fn brute_force(spec: &EnsembleSpec, data: &EnsembleData) -> BruteForce {
    let years = data.years;
    let n_t = years.len();
    let mut out = BruteForce {
        log_likelihood: 0.0,
        mean: vec![],
        var: vec![],
        consensus: vec![],
    };
    for (i, h) in spec.species.iter().enumerate() {
        let sims: Vec<(usize, SimHyper)> = h
            .sims
            .iter()
            .enumerate()
            .filter_map(|(k, s)| s.map(|s| (k, s)))
            .collect();
        // Latent layout: y0, delta, eta0, gamma_k, z_k0, then per t>=1:
        // y innovation, eta innovation, z_k innovations.
        let per_step = 2 + sims.len();
        let n_lat = 3 + 2 * sims.len() + (n_t - 1) * per_step;
        let mut mu = DVector::zeros(n_lat);
        let mut var = DVector::zeros(n_lat);
        mu[0] = spec.initial_mean[i];
        var[0] = spec.initial_var;
        mu[1] = spec.delta_mean[i];
        var[1] = spec.delta_var;
        var[2] = h.lambda_eta / (1.0 - h.r_eta * h.r_eta);
        for (j, (_, s)) in sims.iter().enumerate() {
            var[3 + j] = s.c_gamma;
            var[3 + sims.len() + j] = s.lambda / (1.0 - s.r * s.r);
        }
        let base = 3 + 2 * sims.len();
        for t in 1..n_t {
            let o = base + (t - 1) * per_step;
            var[o] = h.lambda_y;
            var[o + 1] = h.lambda_eta;
            for (j, (_, s)) in sims.iter().enumerate() {
                var[o + 2 + j] = s.lambda;
            }
        }
        // Coefficient rows of y_t, eta_t, z_{k,t}.
        let mut y_rows = Vec::with_capacity(n_t);
        let mut eta_rows = Vec::with_capacity(n_t);
        let mut z_rows: Vec<Vec<DVector<f64>>> = vec![Vec::with_capacity(n_t); sims.len()];
        let unit = |j: usize| {
            let mut v = DVector::zeros(n_lat);
            v[j] = 1.0;
            v
        };
        for t in 0..n_t {
            if t == 0 {
                y_rows.push(unit(0));
                eta_rows.push(unit(2));
                for j in 0..sims.len() {
                    z_rows[j].push(unit(3 + sims.len() + j));
                }
            } else {
                let o = base + (t - 1) * per_step;
                y_rows.push(&y_rows[t - 1] + unit(o));
                eta_rows.push(&eta_rows[t - 1] * h.r_eta + unit(o + 1));
                for (j, (_, s)) in sims.iter().enumerate() {
                    let next = &z_rows[j][t - 1] * s.r + unit(o + 2 + j);
                    z_rows[j].push(next);
                }
            }
        }
        let mut a_rows: Vec<DVector<f64>> = Vec::new();
        let mut noise = Vec::new();
        let mut values = Vec::new();
        for (t, year) in years.years().enumerate() {
            if let Some(v) = data.observations.get(i, year) {
                a_rows.push(y_rows[t].clone());
                noise.push(h.sigma_y);
                values.push(v);
            }
            for (j, (k, s)) in sims.iter().enumerate() {
                if let Some(v) = data.simulators[*k].get(i, year) {
                    let row = &y_rows[t] + unit(1) + &eta_rows[t] + unit(3 + j) + &z_rows[j][t];
                    a_rows.push(row);
                    noise.push(s.sigma);
                    values.push(v);
                }
            }
        }
        let m = a_rows.len();
        let d = DMatrix::from_diagonal(&var);
        let a = DMatrix::from_fn(m, n_lat, |r, c| a_rows[r][c]);
        let cov = &a * &d * a.transpose() + DMatrix::from_diagonal(&DVector::from_vec(noise));
        let resid = DVector::from_vec(values) - &a * &mu;
        let chol = cov.cholesky().expect("joint covariance positive definite");
        let alpha = chol.solve(&resid);
        let logdet: f64 = chol.l().diagonal().iter().map(|x| 2.0 * x.ln()).sum();
        out.log_likelihood +=
            -0.5 * (resid.dot(&alpha) + logdet + m as f64 * (2.0 * std::f64::consts::PI).ln());
        let posterior = |b: &DVector<f64>| -> (f64, f64) {
            let db = &d * b;
            let adb = &a * &db;
            let x = chol.solve(&adb);
            (b.dot(&mu) + x.dot(&resid), b.dot(&db) - adb.dot(&x))
        };
        let mut mean = Vec::new();
        let mut vv = Vec::new();
        let mut cons = Vec::new();
        for t in 0..n_t {
            let (pm, pv) = posterior(&y_rows[t]);
            mean.push(pm);
            vv.push(pv);
            cons.push(posterior(&(&y_rows[t] + unit(1) + &eta_rows[t])).0);
        }
        out.mean.push(mean);
        out.var.push(vv);
        out.consensus.push(cons);
    }
    out
}

fn sd(rng: &mut Rng) -> f64 {
    let s: f64 = rng.gen_range(0.3..1.5);
    s * s
}

/// A random small instance: up to 4 years, 2 species, 2 simulators, random
/// masks, coverage and missing cells.
pub fn random_instance(rng: &mut Rng) -> (EnsembleSpec, EnsembleData) {
    let n_t = rng.gen_range(1..=4);
    let n_s = rng.gen_range(1..=2);
    let n_k = rng.gen_range(0..=2);
    let years = YearRange::new(2000, 2000 + n_t - 1).unwrap();
    let coverage: Vec<SimulatorCoverage> = (0..n_k)
        .map(|_| {
            let first = 2000 + rng.gen_range(0..n_t);
            let mut species: Vec<bool> = (0..n_s).map(|_| rng.gen_bool(0.8)).collect();
            species[0] = true;
            SimulatorCoverage {
                years: YearRange::new(first, years.last).unwrap(),
                species,
            }
        })
        .collect();
    let species = (0..n_s)
        .map(|i| SpeciesHyper {
            lambda_y: sd(rng),
            sigma_y: sd(rng),
            r_eta: rng.gen_range(-0.9..0.9),
            lambda_eta: sd(rng),
            sims: coverage
                .iter()
                .map(|c| {
                    c.species[i].then(|| SimHyper {
                        c_gamma: sd(rng),
                        r: rng.gen_range(-0.9..0.9),
                        lambda: sd(rng),
                        sigma: sd(rng),
                    })
                })
                .collect(),
        })
        .collect();
    let spec = EnsembleSpec {
        kind: OutputKind::Yield,
        species,
        delta_mean: (0..n_s).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        delta_var: sd(rng),
        initial_mean: (0..n_s).map(|_| rng.gen_range(5.0..10.0)).collect(),
        initial_var: rng.gen_range(1.0..100.0),
    };
    let mut obs = SpeciesSeries::empty(OutputKind::Yield, years, n_s);
    let mut sims: Vec<SpeciesSeries> = coverage
        .iter()
        .map(|c| {
            let mut s = SpeciesSeries::empty(OutputKind::Yield, c.years, n_s);
            for (i, &p) in c.species.iter().enumerate() {
                if !p {
                    s.set_absent(i);
                }
            }
            s
        })
        .collect();
    for i in 0..n_s {
        for y in years.years() {
            if rng.gen_bool(0.7) {
                obs.set(i, y, rng.gen_range(5.0..10.0)).unwrap();
            }
            for (k, c) in coverage.iter().enumerate() {
                if c.species[i] && c.years.contains(y) && rng.gen_bool(0.7) {
                    sims[k].set(i, y, rng.gen_range(5.0..10.0)).unwrap();
                }
            }
        }
    }
    (spec, EnsembleData::new(years, obs, sims).unwrap())
}

/// `|a - b| <= tol * max(1, |b|)`
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

/// Pure-strategy Nash points of a two-player game on an `n x n` grid over
/// `[0, 2]^2`: cells where each coordinate is a feasible best response (within
/// 1e-12) to the other. Feasibility needs both SSB values above `log_b_lim`.
pub fn grid_nash<S: nashmsy::nash::ResponseSurfaces>(
    game: &S,
    log_b_lim: &[f64],
    n: usize,
) -> Vec<(usize, usize)> {
    let g: Vec<f64> = (0..n).map(|k| 2.0 * k as f64 / (n - 1) as f64).collect();
    let feasible = |f: &[f64]| (0..2).all(|j| game.ssb_quantile(j, f) > log_b_lim[j]);
    // best[i][other] = set of grid indices maximising player i's yield.
    let best = |i: usize| -> Vec<Vec<usize>> {
        (0..n)
            .map(|o| {
                let vals: Vec<Option<f64>> = (0..n)
                    .map(|k| {
                        let mut f = [0.0; 2];
                        f[i] = g[k];
                        f[1 - i] = g[o];
                        feasible(&f).then(|| game.log_yield(i, &f))
                    })
                    .collect();
                let top = vals
                    .iter()
                    .flatten()
                    .fold(f64::NEG_INFINITY, |a, b| a.max(*b));
                (0..n)
                    .filter(|&k| vals[k].is_some_and(|v| v >= top - 1e-12))
                    .collect()
            })
            .collect()
    };
    let b0 = best(0);
    let b1 = best(1);
    let mut out = Vec::new();
    for a in 0..n {
        for b in 0..n {
            if b0[b].contains(&a) && b1[a].contains(&b) {
                out.push((a, b));
            }
        }
    }
    out
}
