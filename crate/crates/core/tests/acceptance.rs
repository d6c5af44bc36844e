//! Acceptance criteria, one PASS/FAIL line each. Run with
//! `cargo test -p nashmsy --test acceptance`.

mod common;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use nashmsy::config::RunConfig;
use nashmsy::design::{lhc, sobol, stratum_of};
use nashmsy::dynamics::synthetic::{bundled_catalog, bundled_history, bundled_observations};
use nashmsy::dynamics::{builtin_ensemble, two_species_competition};
use nashmsy::econ::read_equilibria;
use nashmsy::emulator::{matern52, FitOptions, GpSurface, Kernel, MeanSpec};
use nashmsy::ensemble::fit::{fit, FitSettings, SpeciesParams};
use nashmsy::ensemble::mcmc::AmSettings;
use nashmsy::ensemble::simulate::{simulate, SimulatorCoverage};
use nashmsy::ensemble::{log_likelihood, predict_truth, EnsembleSpec};
use nashmsy::io::{read_catalog, write_catalog};
use nashmsy::nash::rounds::{evaluate_scenarios, PosteriorStates, RoundLedger};
use nashmsy::nash::{run_rounds, search, EquilibriumGame, PipelineInputs, SearchSettings};
use nashmsy::seeds;
use nashmsy::types::{CatalogEntry, OutputKind, SpeciesCatalog, YearRange};
use rand::SeedableRng;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within_budget(elapsed: Duration, budget_secs: u64) -> Result<(), String> {
    if elapsed.as_secs_f64() < budget_secs as f64 {
        Ok(())
    } else {
        Err(format!(
            "took {:.1} s, budget {budget_secs} s",
            elapsed.as_secs_f64()
        ))
    }
}

fn smoother_exactness() -> Outcome {
    let t0 = Instant::now();
    let mut rng = seeds::Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    let cases = 50;
    for case in 0..cases {
        let (spec, data) = common::random_instance(&mut rng);
        let bf = common::brute_force(&spec, &data);
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1.0);
        let ll = log_likelihood(&spec, &data).map_err(|e| format!("case {case}: {e}"))?;
        worst = worst.max(rel(ll, bf.log_likelihood));
        let post = predict_truth(&spec, &data).map_err(|e| format!("case {case}: {e}"))?;
        for i in 0..spec.n_species() {
            for t in 0..data.years.len() {
                worst = worst.max(rel(post.mean[i][t], bf.mean[i][t]));
                worst = worst.max(rel(post.var[i][t], bf.var[i][t]));
            }
        }
    }
    within_budget(t0.elapsed(), 10)?;
    check(
        worst < 1e-8,
        format!("{cases} instances, worst relative error {worst:.2e}"),
    )
}

fn gp_correctness() -> Outcome {
    let t0 = Instant::now();
    let mut rng = seeds::rng(5, "acceptance-gp", &[]);
    let x = lhc::<f64>(30, 3, 0.0, 2.0, &mut rng).points;
    let y: Vec<f64> = x
        .iter()
        .map(|p| (2.0 * p[0]).sin() + p[1] * p[2] - 0.3 * p[2])
        .collect();
    let fitted = GpSurface::fit(
        &x,
        &y,
        &MeanSpec::intercept_only(),
        &FitOptions::default(),
        None,
    )
    .map_err(|e| e.to_string())?;
    let exact = GpSurface::condition(
        &x,
        &y,
        &MeanSpec::intercept_only(),
        fitted.kernel().clone(),
        0.0,
    )
    .map_err(|e| e.to_string())?;
    let interp = x
        .iter()
        .zip(&y)
        .map(|(p, t)| (exact.predict_mean(p) - t).abs())
        .fold(0.0, f64::max);

    // Three points in 1-D, constant GLS mean, against a dense LU solve.
    let xs = [0.3, 1.0, 1.7];
    let ys = [0.5, -1.0, 0.25];
    let (sigma2, rho) = (1.3, 0.6);
    let design: Vec<Vec<f64>> = xs.iter().map(|v| vec![*v]).collect();
    let k = Kernel::new(sigma2, vec![rho]).map_err(|e| e.to_string())?;
    let s = GpSurface::condition(&design, &ys, &MeanSpec::intercept_only(), k, 0.0)
        .map_err(|e| e.to_string())?;
    let kmat = nalgebra::DMatrix::from_fn(3, 3, |i, j| sigma2 * matern52((xs[i] - xs[j]) / rho));
    let lu = kmat.clone().lu();
    let ones = nalgebra::DVector::from_element(3, 1.0);
    let yv = nalgebra::DVector::from_column_slice(&ys);
    let ki1 = lu.solve(&ones).unwrap();
    let beta = ki1.dot(&yv) / ki1.dot(&ones);
    let alpha = lu.solve(&(&yv - &ones * beta)).unwrap();
    let mut dense = 0.0f64;
    for q in [0.0, 0.65, 1.2, 2.0] {
        let kq = nalgebra::DVector::from_fn(3, |i, _| sigma2 * matern52((xs[i] - q) / rho));
        let kiq = lu.solve(&kq).unwrap();
        let mean = beta + kq.dot(&alpha);
        let var = sigma2 - kq.dot(&kiq);
        let (m, v) = s.predict(&[q]);
        dense = dense.max((m - mean).abs()).max((v - var).abs());
    }
    within_budget(t0.elapsed(), 1)?;
    check(
        interp < 1e-6 && dense < 1e-10,
        format!("interpolation error {interp:.1e}, dense-solve error {dense:.1e}"),
    )
}

fn kernel_value() -> Outcome {
    // (1 + sqrt 5 + 5/3) exp(-sqrt 5), evaluated to 40 digits offline.
    const EXPECT: f64 = 0.523_994_108_831_820_310_592_713_250_760_495_7;
    let got = matern52(1.0f64);
    let err = (got - EXPECT).abs();
    check(err < 1e-12, format!("m52(1) = {got:.17}, error {err:.1e}"))
}

fn nash_oracle() -> Outcome {
    let t0 = Instant::now();
    let game = EquilibriumGame::new(two_species_competition().map_err(|e| e.to_string())?, -20.0)
        .map_err(|e| e.to_string())?;
    let lim = vec![0.0, 0.0];
    let grid = common::grid_nash(&game, &lim, 201);
    if grid.is_empty() {
        return Err("grid oracle found no Nash point".into());
    }
    let h = 2.0 / 200.0;
    let settings = SearchSettings {
        log_b_lim: lim,
        init_pool: 10_000,
        response_pool: 500,
        min_iterations: 26,
        max_iterations: 100,
        fixed_point_tolerance: 1e-3,
    };
    let mut worst = 0.0f64;
    for seed in 0..10 {
        let mut rng = seeds::rng(seed, "acceptance-nash", &[]);
        let c = search(&game, &settings, &mut rng, 1, 0);
        let f = c.scenario.as_slice();
        let cells = grid
            .iter()
            .map(|&(a, b)| ((f[0] - a as f64 * h).abs().max((f[1] - b as f64 * h).abs())) / h)
            .fold(f64::INFINITY, f64::min);
        worst = worst.max(cells);
    }
    within_budget(t0.elapsed(), 60)?;
    check(
        worst <= 2.0 + 1e-9,
        format!("10 seeds, farthest {worst:.2} grid cells from the grid Nash point"),
    )
}

fn workspace_file(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .join(name)
}

fn risk_soundness(ledger_shape: &mut Option<(usize, usize)>) -> Outcome {
    let t0 = Instant::now();
    let cfg = RunConfig::from_file(&workspace_file("pipeline-reduced.toml"))
        .map_err(|e| e.to_string())?;
    let seed = cfg.dynamics.model_seed;
    let (yield_observations, ssb_observations) =
        bundled_observations(seed).map_err(|e| e.to_string())?;
    let inputs = PipelineInputs {
        simulators: builtin_ensemble(seed).map_err(|e| e.to_string())?,
        history: bundled_history(),
        yield_observations,
        ssb_observations,
        catalog: bundled_catalog(),
    };
    let rounds = cfg.run.round_sizes.len();
    let outcome = run_rounds(&inputs, &cfg, rounds, &[], |_| Ok(())).map_err(|e| e.to_string())?;
    let mut ledger_csv = Vec::new();
    outcome
        .ledger
        .write_csv(&mut ledger_csv)
        .map_err(|e| e.to_string())?;
    let text = String::from_utf8(ledger_csv).unwrap();
    *ledger_shape = Some((
        text.lines().count() - 1,
        text.lines().next().unwrap().split(',').count() - 1,
    ));

    let accepted: Vec<_> = outcome
        .acceptance
        .iter()
        .filter(|r| r.accepted)
        .map(|r| (r.scenario_id, r.candidate.scenario.clone()))
        .collect();
    if accepted.is_empty() {
        return Err(format!(
            "no candidate accepted out of {} ({:.0} s)",
            outcome.acceptance.len(),
            t0.elapsed().as_secs_f64()
        ));
    }
    // Re-run the simulators and the ensemble on the accepted candidates and
    // recompute the SSB mixture probabilities directly.
    let states =
        PosteriorStates::new(&inputs, &outcome.posterior, &cfg).map_err(|e| e.to_string())?;
    let evals = evaluate_scenarios(&inputs, &states, &accepted, rounds + 1, &cfg)
        .map_err(|e| e.to_string())?;
    let lims = inputs.catalog.log_b_lims();
    let std_normal = Normal::new(0.0, 1.0).unwrap();
    let mut worst = 0.0f64;
    let mut failing = Vec::new();
    for e in &evals {
        let draws = &e.prediction.ssb;
        for (i, lim) in lims.iter().enumerate() {
            let p = draws
                .iter()
                .map(|d| std_normal.cdf((lim - d[i].0) / d[i].1.sqrt()))
                .sum::<f64>()
                / draws.len() as f64;
            worst = worst.max(p);
            if p >= cfg.run.p_risk {
                failing.push((e.scenario_id, i, p));
            }
        }
    }
    within_budget(t0.elapsed(), 30 * 60)?;
    check(
        failing.is_empty(),
        format!(
            "{}/{} accepted, re-verified max Pr(SSB < B_lim) = {worst:.3}{}; {:.0} s",
            accepted.len(),
            outcome.acceptance.len(),
            if failing.is_empty() {
                String::new()
            } else {
                format!(", violations {failing:?}")
            },
            t0.elapsed().as_secs_f64()
        ),
    )
}

const PUBLISHED_EQUILIBRIUM: &str = "F1,F2,F3,F4,F5,F6,F7,F8,F9,revenue
1.05,1.49,0.46,0.82,0.31,0.48,0.94,0.62,1.10,2.16
";

const PUBLISHED_LEDGER: [[usize; 4]; 10] = [
    [0, 0, 0, 0],
    [14, 0, 0, 0],
    [45, 0, 0, 0],
    [42, 0, 0, 0],
    [37, 1, 0, 0],
    [31, 12, 1, 0],
    [19, 33, 2, 0],
    [8, 43, 28, 13],
    [0, 11, 46, 48],
    [0, 0, 23, 39],
];

const PUBLISHED_SPECIES: [(&str, Option<f64>, f64); 9] = [
    ("sandeel", None, 1314.59),
    ("norway_pout", None, 151.96),
    ("herring", Some(0.33), 528.34),
    ("whiting", Some(0.15), 785.30),
    ("sole", Some(0.20), 8387.12),
    ("plaice", Some(0.21), 1718.21),
    ("haddock", Some(0.19), 1346.99),
    ("cod", Some(0.31), 1745.22),
    ("saithe", Some(0.36), 855.33),
];

fn published_fixtures(ledger_shape: Option<(usize, usize)>) -> Outcome {
    let path = std::path::Path::new("equilibria.csv");
    let rows =
        read_equilibria(path, PUBLISHED_EQUILIBRIUM.as_bytes()).map_err(|e| e.to_string())?;
    let row_ok = rows.len() == 1
        && rows[0].scenario.as_slice() == [1.05, 1.49, 0.46, 0.82, 0.31, 0.48, 0.94, 0.62, 1.10]
        && rows[0].revenue == 2.16;

    let mut csv = String::from("acceptable_species_count,round1,round2,round3,round4\n");
    for (k, row) in PUBLISHED_LEDGER.iter().enumerate() {
        let cells: Vec<String> = row.iter().map(usize::to_string).collect();
        csv.push_str(&format!("{k},{}\n", cells.join(",")));
    }
    let ledger = RoundLedger::read_csv(std::path::Path::new("ledger.csv"), csv.as_bytes())
        .map_err(|e| e.to_string())?;
    let mut back = Vec::new();
    ledger.write_csv(&mut back).map_err(|e| e.to_string())?;
    let ledger_ok = ledger.counts.len() == 4
        && ledger.counts.iter().all(|c| c.len() == 10)
        && back == csv.as_bytes()
        && ledger_shape == Some((10, 4));

    let entries = PUBLISHED_SPECIES
        .iter()
        .enumerate()
        .map(|(k, (name, ss, price))| CatalogEntry {
            index: k + 1,
            name: name.to_string(),
            b_lim_tonnes: 1000.0,
            price_per_tonne: *price,
            ss_fmsy: *ss,
        })
        .collect();
    let catalog = SpeciesCatalog::new(entries).map_err(|e| e.to_string())?;
    let mut buf = Vec::new();
    write_catalog(&mut buf, &catalog).map_err(|e| e.to_string())?;
    let read = read_catalog(std::path::Path::new("catalog.csv"), buf.as_slice())
        .map_err(|e| e.to_string())?;
    let prices: Vec<f64> = read.entries().iter().map(|e| e.price_per_tonne).collect();
    let prices_ok = read == catalog
        && prices
            .iter()
            .zip(&PUBLISHED_SPECIES)
            .all(|(p, t)| *p == t.2);

    check(
        row_ok && ledger_ok && prices_ok,
        format!(
            "equilibrium row {}, ledger shape {ledger_shape:?} and counts round trip {}, species prices {}",
            ok_word(row_ok),
            ok_word(ledger_ok),
            ok_word(prices_ok)
        ),
    )
}

fn ok_word(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "MISMATCH"
    }
}

fn design_properties() -> Outcome {
    let mut detail = Vec::new();
    for n in [1usize, 7, 500] {
        let mut rng = seeds::rng(n as u64, "acceptance-lhc", &[]);
        let d = 9;
        let batch = lhc::<f64>(n, d, 0.0, 2.0, &mut rng);
        let width = 2.0 / n as f64;
        for j in 0..d {
            let mut strata: Vec<usize> = batch
                .points
                .iter()
                .map(|p| stratum_of(p[j], 0.0, width))
                .collect();
            strata.sort_unstable();
            if strata != (0..n).collect::<Vec<_>>() {
                return Err(format!("LHC n = {n}, dimension {j}: strata {strata:?}"));
            }
        }
        detail.push(n.to_string());
    }
    let a = sobol::<f64>(196, 9, 0, None).map_err(|e| e.to_string())?;
    let b = sobol::<f64>(196, 9, 0, None).map_err(|e| e.to_string())?;
    let in_box = a.points.iter().flatten().all(|v| (0.0..=2.0).contains(v));
    let distinct = {
        let mut p = a.points.clone();
        p.sort_by(|x, y| x.partial_cmp(y).unwrap());
        p.dedup();
        p.len() == 196
    };
    check(
        a.points == b.points && in_box && distinct && a.len() == 196,
        format!(
            "LHC stratified for n in {{{}}}; Sobol 196 deterministic {}, in [0,2]^9 {}",
            detail.join(", "),
            a.points == b.points,
            in_box
        ),
    )
}

fn calibration() -> Outcome {
    let t0 = Instant::now();
    let reps = 200;
    let bins = 20;
    let draws = 99;
    let years = YearRange::new(1984, 2017).unwrap();
    let params = SpeciesParams::new(1, vec![0]);
    let cfg = RunConfig::default();
    let settings = FitSettings {
        am: AmSettings {
            iterations: cfg.run.mcmc_iterations,
            burn_in: cfg.run.mcmc_burn_in,
            adapt_start: cfg.ensemble.adapt_start,
            initial_sd: 0.1,
        },
        chains: cfg.ensemble.chains,
        draws,
        sd_prior_scale: cfg.ensemble.sd_prior_scale,
        delta_sd: cfg.ensemble.shared_discrepancy_sd,
        initial_variance: cfg.ensemble.initial_variance,
    };
    let mut ranks = vec![Vec::with_capacity(reps); params.dim()];
    for r in 0..reps {
        let mut rng = seeds::rng(1, "sbc", &[r as u64]);
        let theta = params.sample_prior(settings.sd_prior_scale, &mut rng);
        let spec = EnsembleSpec {
            kind: OutputKind::Ssb,
            species: vec![params.to_hyper(&theta)],
            delta_mean: vec![0.0],
            delta_var: settings.delta_sd * settings.delta_sd,
            initial_mean: vec![10.0],
            initial_var: settings.initial_variance,
        };
        let coverage = vec![SimulatorCoverage {
            years,
            species: vec![true],
        }];
        let ds = simulate(&spec, years, years, &coverage, &mut rng).map_err(|e| e.to_string())?;
        let post =
            fit(&ds.data, &settings, 1000 + r as u64).map_err(|e| format!("replicate {r}: {e}"))?;
        for (j, rank) in ranks.iter_mut().enumerate() {
            rank.push(
                post.draws
                    .iter()
                    .filter(|d| params.from_hyper(&d.species[0])[j] < theta[j])
                    .count(),
            );
        }
    }
    let chi = ChiSquared::new((bins - 1) as f64).unwrap();
    let expected = reps as f64 / bins as f64;
    let names = params.names();
    let mut lowest = (f64::INFINITY, String::new());
    for (j, rank) in ranks.iter().enumerate() {
        let mut counts = vec![0usize; bins];
        for &r in rank {
            counts[r * bins / (draws + 1)] += 1;
        }
        let stat: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        let p = chi.sf(stat);
        if p < lowest.0 {
            lowest = (p, names[j].clone());
        }
    }
    within_budget(t0.elapsed(), 20 * 60)?;
    check(
        lowest.0 > 0.01,
        format!(
            "{reps} replicates, {} parameters, smallest chi-square p = {:.3} ({}); {:.0} s",
            params.dim(),
            lowest.0,
            lowest.1,
            t0.elapsed().as_secs_f64()
        ),
    )
}

fn main() -> ExitCode {
    let mut ledger_shape = None;
    let mut results: Vec<(&str, Outcome)> = vec![
        ("smoother exactness", smoother_exactness()),
        ("GP correctness", gp_correctness()),
        ("kernel value", kernel_value()),
        ("Nash oracle", nash_oracle()),
        ("design properties", design_properties()),
        ("calibration (SBC)", calibration()),
    ];
    results.push(("risk soundness", risk_soundness(&mut ledger_shape)));
    results.push((
        "published-format fixtures",
        published_fixtures(ledger_shape),
    ));
    let mut failed = 0;
    for (name, r) in &results {
        match r {
            Ok(d) => println!("PASS  {name}: {d}"),
            Err(d) => {
                failed += 1;
                println!("FAIL  {name}: {d}");
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        results.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
