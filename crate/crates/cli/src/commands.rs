use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use log::{info, warn};
use nashmsy::dynamics::run_batch;
use nashmsy::econ::{
    annual_revenue, expected_revenue, fit_prices, rank_by_revenue, read_equilibria,
    write_equilibria, Equilibrium, PriceModel,
};
use nashmsy::emulator::{write_archive, ArchiveEntry};
use nashmsy::io::{self, write_log_series, write_prices, LOG_SERIES_HEADER};
use nashmsy::nash::rounds::{
    evaluate_scenarios, fit_posterior, fit_surfaces, initial_scenarios, read_candidates,
    write_candidates, PosteriorStates,
};
use nashmsy::nash::{
    run_rounds, ss_msy_diagnostic, AcceptanceRecord, Checkpoint, EmulatedGame, NashCandidate,
    RoundsOutcome, ScenarioEvaluation,
};
use nashmsy::types::{FishingScenario, OutputKind, SPECIES};

use crate::manifest::{invalid, PipelineManifest};
use crate::tables;
use crate::GlobalArgs;

const CHECKPOINT_DIR: &str = "checkpoint";

pub fn simulate(g: &GlobalArgs, scenarios: Option<&Path>) -> Result<()> {
    let m = PipelineManifest::load(g)?;
    let batch = match scenarios {
        Some(p) => io::load_scenarios(p)?,
        None => initial_scenarios(&m.cfg)?,
    };
    if batch.is_empty() {
        warn!("empty scenario batch; nothing to simulate");
        return Ok(());
    }
    let inputs = m.inputs()?;
    let outputs = run_batch(
        &inputs.simulators,
        &inputs.history,
        &batch,
        m.cfg.run.horizon,
        m.cfg.dynamics.log_floor,
    )?;
    m.create_out_dir()?;
    for (k, sim) in inputs.simulators.iter().enumerate() {
        for kind in OutputKind::ALL {
            let path = m.out(&format!("sim{}_{}_{kind}.csv", sim.port.id, sim.port.name));
            let mut w = csv::Writer::from_writer(tables::create(&path)?);
            w.write_record(LOG_SERIES_HEADER)?;
            for ((id, _), outs) in batch.iter().zip(&outputs) {
                write_log_series(&mut w, *id, outs[k].get(kind))?;
            }
            w.flush()?;
        }
    }
    info!(
        "simulated {} scenarios with {} simulators into {}",
        batch.len(),
        inputs.simulators.len(),
        m.out_dir.display()
    );
    Ok(())
}

pub fn fit_ensemble(g: &GlobalArgs) -> Result<()> {
    let m = PipelineManifest::load(g)?;
    let inputs = m.inputs()?;
    let posterior = fit_posterior(&inputs, &m.cfg)?;
    m.create_out_dir()?;
    posterior.write_draws(&m.out("posterior_draws.csv"))?;
    tables::write_diagnostics(&m.out("ensemble_diagnostics.csv"), &posterior)?;
    tables::write_historical_fit(&m.out("historical_fit.csv"), &inputs, &posterior, &m.cfg)?;
    for kind in OutputKind::ALL {
        info!(
            "{kind}: {} draws, max split-R-hat {:.3}",
            posterior.get(kind).draws.len(),
            posterior.get(kind).diagnostics.max_rhat()
        );
    }
    Ok(())
}

fn archive_entries(games: &[EmulatedGame]) -> Vec<ArchiveEntry<'_>> {
    let mut entries = Vec::new();
    for (draw, game) in games.iter().enumerate() {
        for (kind, surfaces) in [
            (OutputKind::Yield, &game.yield_),
            (OutputKind::Ssb, &game.ssb),
        ] {
            for (species, surface) in surfaces.iter().enumerate() {
                entries.push(ArchiveEntry {
                    kind,
                    species,
                    draw,
                    surface,
                });
            }
        }
    }
    entries
}

pub fn fit_emulator(g: &GlobalArgs) -> Result<()> {
    let m = PipelineManifest::load(g)?;
    let inputs = m.inputs()?;
    let posterior = fit_posterior(&inputs, &m.cfg)?;
    let states = PosteriorStates::new(&inputs, &posterior, &m.cfg)?;
    let scenarios = initial_scenarios(&m.cfg)?;
    let evals = evaluate_scenarios(&inputs, &states, &scenarios, 1, &m.cfg)?;
    let warm = vec![None; 2 * SPECIES.len()];
    let (games, _) = fit_surfaces(&evals, &m.cfg, &warm)?;
    m.create_out_dir()?;
    tables::write_evaluated_scenarios(&m.out("scenarios.csv"), &evals)?;
    tables::write_long_term(&m.out("long_term.csv"), &evals)?;
    write_archive(&m.out("emulator.csv"), &archive_entries(&games))?;
    info!(
        "fitted {} emulators per draw over {} draws",
        2 * SPECIES.len(),
        games.len()
    );
    Ok(())
}

pub fn nash_search(g: &GlobalArgs) -> Result<()> {
    let m = PipelineManifest::load(g)?;
    if m.rounds < 2 {
        return Err(invalid("nash-search needs --rounds of at least 2"));
    }
    let inputs = m.inputs()?;
    let outcome = run_rounds(&inputs, &m.cfg, m.rounds, &[], |_| Ok(()))?;
    m.create_out_dir()?;
    let all: Vec<NashCandidate> = outcome.candidates.concat();
    write_candidates(tables::create(&m.out("candidates.csv"))?, &all)?;
    outcome
        .ledger
        .write_csv(tables::create(&m.out("ledger.csv"))?)?;
    info!("{} candidates over {} rounds", all.len(), m.rounds);
    Ok(())
}

fn price_model(m: &PipelineManifest) -> Result<PriceModel> {
    let table = m.prices()?;
    fit_prices(&table, m.cfg.econ.max_order).context("fitting price models")
}

pub fn revenue(g: &GlobalArgs, scenarios: Option<&Path>) -> Result<()> {
    let m = PipelineManifest::load(g)?;
    let default = m.out("accepted_scenarios.csv");
    let path = scenarios.unwrap_or(&default);
    if !path.is_file() {
        return Err(invalid(format!(
            "{} does not exist; pass --scenarios or run the pipeline first",
            path.display()
        )));
    }
    let batch = io::load_scenarios(path)?;
    let prices = price_model(&m)?;
    let forecast = prices.forecast(m.cfg.econ.forecast_to);
    m.create_out_dir()?;
    write_prices(tables::create(&m.out("price_forecast.csv"))?, &forecast)?;
    if batch.is_empty() {
        warn!("no scenarios to score");
        write_equilibria(tables::create(&m.out("revenue.csv"))?, &[])?;
        return Ok(());
    }
    let inputs = m.inputs()?;
    let posterior = fit_posterior(&inputs, &m.cfg)?;
    let states = PosteriorStates::new(&inputs, &posterior, &m.cfg)?;
    let evals = evaluate_scenarios(&inputs, &states, &batch, 0, &m.cfg)?;
    let at = prices.prices_in(m.cfg.econ.forecast_to);
    let scored: Vec<_> = evals
        .iter()
        .map(|e| (e.scenario.clone(), e.prediction.yield_.clone()))
        .collect();
    write_equilibria(
        tables::create(&m.out("revenue.csv"))?,
        &rank_by_revenue(&scored, &at),
    )?;
    let annual: Vec<_> = evals
        .iter()
        .map(|e| {
            (
                e.scenario_id,
                annual_revenue(&forecast, &e.prediction.yield_),
            )
        })
        .collect();
    tables::write_annual_revenue(&m.out("annual_revenue.csv"), &annual)?;
    Ok(())
}

/// Search results saved by an earlier run with the same configuration.
fn load_checkpoint(m: &PipelineManifest, config_text: &str) -> Result<Vec<Vec<NashCandidate>>> {
    let dir = m.out(CHECKPOINT_DIR);
    let saved = std::fs::read_to_string(dir.join("config.toml")).unwrap_or_default();
    if saved != config_text {
        if !saved.is_empty() {
            warn!(
                "checkpoint in {} was made with another configuration; ignoring it",
                dir.display()
            );
        }
        return Ok(Vec::new());
    }
    let mut resume = vec![Vec::new()];
    for round in 2..=m.cfg.run.round_sizes.len() {
        let path = dir.join(format!("candidates_round{round}.csv"));
        if !path.is_file() {
            break;
        }
        let found = read_candidates(&path, std::fs::File::open(&path)?)?;
        info!("resuming round {round} search from {}", path.display());
        resume.push(found);
    }
    Ok(resume)
}

fn save_checkpoint(m: &PipelineManifest, config_text: &str, cp: &Checkpoint<'_>) -> Result<()> {
    let dir = m.out(CHECKPOINT_DIR);
    std::fs::create_dir_all(&dir)?;
    std::fs::write(dir.join("config.toml"), config_text)?;
    for (r, found) in cp.candidates.iter().enumerate().skip(1) {
        let path = dir.join(format!("candidates_round{}.csv", r + 1));
        if !path.is_file() {
            write_candidates(tables::create(&path)?, found)?;
        }
    }
    cp.ledger
        .write_csv(tables::create(&dir.join("ledger.csv"))?)?;
    Ok(())
}

/// Emulated single-species F_MSY of each species at the best candidate's `F_{-i}`.
fn ss_msy_rows(
    outcome: &RoundsOutcome,
    best: &NashCandidate,
    m: &PipelineManifest,
    inputs: &nashmsy::nash::PipelineInputs,
) -> Result<()> {
    let Some(game) = outcome.surfaces.get(best.draw) else {
        return Ok(());
    };
    let mut w = tables::create(&m.out("ss_msy.csv"))?;
    writeln!(w, "species,f_nash,ss_msy,catalog_ss_fmsy")?;
    let f = best.scenario.as_slice();
    for (s, name) in SPECIES.iter().enumerate() {
        let ss = ss_msy_diagnostic(game, s, f, 501);
        let cat = inputs
            .catalog
            .get(s)
            .ss_fmsy
            .map_or(String::new(), |v| v.to_string());
        writeln!(w, "{name},{},{ss},{cat}", f[s])?;
    }
    w.flush()?;
    Ok(())
}

fn run_report(
    m: &PipelineManifest,
    outcome: &RoundsOutcome,
    equilibria: &[Equilibrium],
    config_text: &str,
) -> Result<()> {
    let mut w = tables::create(&m.out("run_report.txt"))?;
    writeln!(w, "nashmsy {}", env!("CARGO_PKG_VERSION"))?;
    writeln!(w, "master seed: {}", m.cfg.run.seed)?;
    writeln!(w, "model seed: {}", m.cfg.dynamics.model_seed)?;
    writeln!(w, "rounds: {}", m.rounds)?;
    for r in &outcome.reports {
        writeln!(
            w,
            "round {}: {} scenarios, median acceptable species {}",
            r.round, r.scenarios, r.median_acceptable
        )?;
    }
    for kind in OutputKind::ALL {
        writeln!(
            w,
            "{kind} ensemble: {} draws, max split-R-hat {}",
            outcome.posterior.get(kind).draws.len(),
            outcome.posterior.get(kind).diagnostics.max_rhat()
        )?;
    }
    let a = &outcome.acceptance;
    writeln!(
        w,
        "final candidates: {}, risk ok: {}, fixed point: {}, accepted: {}",
        a.len(),
        a.iter().filter(|r| r.risk_ok).count(),
        a.iter().filter(|r| r.fixed_point).count(),
        equilibria.len()
    )?;
    writeln!(w, "\n[config]\n{config_text}")?;
    w.flush()?;
    Ok(())
}

pub fn pipeline(g: &GlobalArgs, fresh: bool) -> Result<()> {
    let m = PipelineManifest::load(g)?;
    let inputs = m.inputs()?;
    let prices = price_model(&m)?;
    m.create_out_dir()?;
    let config_text = m.cfg.to_toml_string();
    let resume = if fresh {
        Vec::new()
    } else {
        load_checkpoint(&m, &config_text)?
    };
    if fresh {
        let dir = m.out(CHECKPOINT_DIR);
        if dir.is_dir() {
            std::fs::remove_dir_all(&dir)?;
        }
    }
    let outcome = run_rounds(&inputs, &m.cfg, m.rounds, &resume, |cp| {
        save_checkpoint(&m, &config_text, cp)
            .map_err(|e| nashmsy::Error::Io(std::io::Error::other(format!("{e:#}"))))
    })?;

    let forecast = prices.forecast(m.cfg.econ.forecast_to);
    let at = prices.prices_in(m.cfg.econ.forecast_to);
    let by_id: BTreeMap<usize, &ScenarioEvaluation> = outcome
        .evaluations
        .iter()
        .map(|e| (e.scenario_id, e))
        .collect();
    let revenue: Vec<Option<f64>> = outcome
        .acceptance
        .iter()
        .map(|r| {
            by_id
                .get(&r.scenario_id)
                .map(|e| expected_revenue(&at, &e.prediction.yield_))
        })
        .collect();
    let accepted: Vec<(&AcceptanceRecord, &ScenarioEvaluation)> = outcome
        .acceptance
        .iter()
        .filter(|r| r.accepted)
        .filter_map(|r| by_id.get(&r.scenario_id).map(|e| (r, *e)))
        .collect();
    let scored: Vec<(FishingScenario, Vec<Vec<(f64, f64)>>)> = accepted
        .iter()
        .map(|(_, e)| (e.scenario.clone(), e.prediction.yield_.clone()))
        .collect();
    let equilibria = rank_by_revenue(&scored, &at);

    write_equilibria(tables::create(&m.out("equilibria.csv"))?, &equilibria)?;
    outcome
        .ledger
        .write_csv(tables::create(&m.out("ledger.csv"))?)?;
    write_candidates(
        tables::create(&m.out("candidates.csv"))?,
        &outcome.candidates.concat(),
    )?;
    tables::write_acceptance(&m.out("acceptance.csv"), &outcome.acceptance, &revenue)?;
    let accepted_scenarios: Vec<(usize, FishingScenario)> = accepted
        .iter()
        .map(|(r, e)| (r.scenario_id, e.scenario.clone()))
        .collect();
    io::write_scenarios(
        tables::create(&m.out("accepted_scenarios.csv"))?,
        &accepted_scenarios,
    )?;
    tables::write_evaluated_scenarios(&m.out("scenarios.csv"), &outcome.evaluations)?;
    tables::write_long_term(&m.out("long_term.csv"), &outcome.evaluations)?;
    let predictions: Vec<_> = outcome
        .evaluations
        .iter()
        .map(|e| e.prediction.clone())
        .collect();
    nashmsy::ensemble::write_predictions(&m.out_dir, &predictions)?;
    tables::write_historical_fit(
        &m.out("historical_fit.csv"),
        &inputs,
        &outcome.posterior,
        &m.cfg,
    )?;
    tables::write_diagnostics(&m.out("ensemble_diagnostics.csv"), &outcome.posterior)?;
    outcome
        .posterior
        .write_draws(&m.out("posterior_draws.csv"))?;
    write_prices(tables::create(&m.out("price_forecast.csv"))?, &forecast)?;
    let annual: Vec<_> = accepted
        .iter()
        .map(|(r, e)| {
            (
                r.scenario_id,
                annual_revenue(&forecast, &e.prediction.yield_),
            )
        })
        .collect();
    tables::write_annual_revenue(&m.out("annual_revenue.csv"), &annual)?;
    if !outcome.surfaces.is_empty() {
        write_archive(&m.out("emulator.csv"), &archive_entries(&outcome.surfaces))?;
    }
    let best = equilibria
        .first()
        .and_then(|e| accepted.iter().find(|(_, ev)| ev.scenario == e.scenario))
        .map(|(r, _)| &r.candidate);
    if let Some(best) = best {
        ss_msy_rows(&outcome, best, &m, &inputs)?;
    }
    run_report(&m, &outcome, &equilibria, &config_text)?;
    tables::write_timings(&m.out("timings.csv"), &outcome.timings)?;
    info!(
        "{} of {} final candidates accepted; outputs in {}",
        equilibria.len(),
        outcome.acceptance.len(),
        m.out_dir.display()
    );
    Ok(())
}

pub fn report(g: &GlobalArgs) -> Result<()> {
    let m = PipelineManifest::load(g)?;
    let eq_path = m.out("equilibria.csv");
    let acc_path = m.out("acceptance.csv");
    for p in [&eq_path, &acc_path] {
        if !p.is_file() {
            return Err(invalid(format!(
                "{} not found; run the pipeline first",
                p.display()
            )));
        }
    }
    let equilibria = read_equilibria(&eq_path, std::fs::File::open(&eq_path)?)?;
    let acceptance = tables::read_acceptance(&acc_path)?;
    let accepted: Vec<_> = acceptance.iter().filter(|r| r.accepted).collect();
    println!("final-round candidates: {}", acceptance.len());
    if equilibria.is_empty() {
        println!("no equilibria satisfied the acceptance test");
    } else {
        println!("{} accepted", equilibria.len());
        let best = equilibria
            .iter()
            .max_by(|a, b| a.revenue.total_cmp(&b.revenue))
            .expect("non-empty");
        let f: Vec<String> = best
            .scenario
            .as_slice()
            .iter()
            .map(|v| format!("{v:.2}"))
            .collect();
        println!(
            "best candidate: F = ({}), revenue {:.2} bn",
            f.join(", "),
            best.revenue
        );
        let revs: Vec<f64> = equilibria.iter().map(|e| e.revenue).collect();
        let lo = revs.iter().copied().fold(f64::INFINITY, f64::min);
        println!("revenue range: {lo:.2} to {:.2} bn", best.revenue);
    }
    let pool = if accepted.is_empty() {
        acceptance.iter().collect::<Vec<_>>()
    } else {
        accepted
    };
    if let Some(worst) = pool.iter().max_by(|a, b| a.max_risk.total_cmp(&b.max_risk)) {
        println!(
            "largest Pr(SSB < B_lim) among {}: {:.3} (scenario {})",
            if equilibria.is_empty() {
                "candidates"
            } else {
                "accepted candidates"
            },
            worst.max_risk,
            worst.scenario_id
        );
    }
    Ok(())
}
