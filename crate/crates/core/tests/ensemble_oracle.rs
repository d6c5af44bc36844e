#![allow(clippy::needless_range_loop)]

mod common;

use common::{brute_force, close, random_instance};
use nashmsy::ensemble::{log_likelihood, predict_truth, smoothed_states, SpeciesLayout};
use rand::SeedableRng;

#[test]
fn filter_and_smoother_match_joint_gaussian() {
    let mut rng = nashmsy::seeds::Rng::seed_from_u64(20);
    for case in 0..200 {
        let (spec, data) = random_instance(&mut rng);
        let bf = brute_force(&spec, &data);
        let ll = log_likelihood(&spec, &data).unwrap();
        assert!(
            close(ll, bf.log_likelihood, 1e-8),
            "case {case}: {ll} vs {}",
            bf.log_likelihood
        );
        let post = predict_truth(&spec, &data).unwrap();
        let states = smoothed_states(&spec, &data).unwrap();
        for i in 0..spec.n_species() {
            for t in 0..data.years.len() {
                assert!(
                    close(post.mean[i][t], bf.mean[i][t], 1e-8),
                    "case {case} mean"
                );
                assert!(close(post.var[i][t], bf.var[i][t], 1e-8), "case {case} var");
                let g = &states[i].1[t];
                let mu = g.mean[SpeciesLayout::Y]
                    + g.mean[SpeciesLayout::DELTA]
                    + g.mean[SpeciesLayout::ETA];
                assert!(close(mu, bf.consensus[i][t], 1e-8), "case {case} consensus");
            }
        }
    }
}

#[test]
fn unit_variance_toy_matches_closed_form() {
    // T = 3, one species, one simulator, unit variances, zero AR terms.
    use nashmsy::ensemble::{EnsembleData, EnsembleSpec, SimHyper, SpeciesHyper};
    use nashmsy::types::{OutputKind, SpeciesSeries, YearRange};
    let years = YearRange::new(1, 3).unwrap();
    let mut obs = SpeciesSeries::empty(OutputKind::Yield, years, 1);
    let mut sim = SpeciesSeries::empty(OutputKind::Yield, years, 1);
    for (t, v) in [(1, 0.3), (2, -0.2), (3, 0.5)] {
        obs.set(0, t, v).unwrap();
        sim.set(0, t, v + 1.0).unwrap();
    }
    let data = EnsembleData::new(years, obs, vec![sim]).unwrap();
    let one = SimHyper {
        c_gamma: 1.0,
        r: 0.0,
        lambda: 1.0,
        sigma: 1.0,
    };
    let spec = EnsembleSpec {
        kind: OutputKind::Yield,
        species: vec![SpeciesHyper {
            lambda_y: 1.0,
            sigma_y: 1.0,
            r_eta: 0.0,
            lambda_eta: 1.0,
            sims: vec![Some(one)],
        }],
        delta_mean: vec![0.0],
        delta_var: 1.0,
        initial_mean: vec![0.0],
        initial_var: 1.0,
    };
    // Cov(yhat_s, yhat_t) = min(s,t) + [s=t]
    // Cov(yhat_s, xhat_t) = min(s,t)
    // Cov(xhat_s, xhat_t) = min(s,t) + 1 (delta) + 1 (gamma) + [s=t] (eta + z + noise = 3)
    let mut c = nalgebra::DMatrix::<f64>::zeros(6, 6);
    for s in 0..3 {
        for t in 0..3 {
            let m = (s.min(t) + 1) as f64;
            let eq = if s == t { 1.0 } else { 0.0 };
            c[(s, t)] = m + eq;
            c[(s, 3 + t)] = m;
            c[(3 + s, t)] = m;
            c[(3 + s, 3 + t)] = m + 2.0 + 3.0 * eq;
        }
    }
    let x = nalgebra::DVector::from_vec(vec![0.3, -0.2, 0.5, 1.3, 0.8, 1.5]);
    let chol = c.cholesky().unwrap();
    let logdet: f64 = chol.l().diagonal().iter().map(|v| 2.0 * v.ln()).sum();
    let expect = -0.5 * (x.dot(&chol.solve(&x)) + logdet + 6.0 * (2.0 * std::f64::consts::PI).ln());
    let ll = log_likelihood(&spec, &data).unwrap();
    assert!(close(ll, expect, 1e-12), "{ll} vs {expect}");
}
