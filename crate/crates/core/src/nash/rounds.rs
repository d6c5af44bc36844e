//! Rounds of simulate, ensemble, emulate and search, and final acceptance.

use std::io::{Read, Write};
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use super::{find_candidates, EmulatedGame, NashCandidate, SearchSettings};
use crate::config::RunConfig;
use crate::design::sobol;
use crate::dynamics::{run_batch, Simulator, SimulatorOutput};
use crate::emulator::{fit_outputs, term_list, FitOptions, GpSurface, Hyperparameters, MeanSpec};
use crate::ensemble::{
    draw_targets, fit, long_term_summaries, risk_probabilities, EnsembleData, EnsemblePosterior,
    FitSettings, HistoricalState, LongTermSummary, ScenarioPrediction,
};
use crate::error::{Error, Result};
use crate::io::FishingHistory;
use crate::seeds;
use crate::types::{
    FishingScenario, OutputKind, SpeciesCatalog, SpeciesSeries, YearRange, N_SPECIES,
};

/// Everything the rounds consume besides configuration.
#[derive(Debug, Clone)]
pub struct PipelineInputs {
    pub simulators: Vec<Simulator>,
    pub history: FishingHistory,
    pub yield_observations: SpeciesSeries,
    pub ssb_observations: SpeciesSeries,
    pub catalog: SpeciesCatalog,
}

/// Stage wall-clock times in seconds, in execution order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Timings(pub Vec<(String, f64)>);

impl Timings {
    fn time<R>(&mut self, label: impl Into<String>, f: impl FnOnce() -> R) -> R {
        let start = Instant::now();
        let out = f();
        self.0.push((label.into(), start.elapsed().as_secs_f64()));
        out
    }
}

/// Ensemble results for one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioEvaluation {
    pub scenario_id: usize,
    /// 1-based round that introduced the scenario.
    pub round: usize,
    pub scenario: FishingScenario,
    pub prediction: ScenarioPrediction,
    pub summary: LongTermSummary,
    /// Mixture probability that SSB at the horizon is below `B_lim`.
    pub risk: Vec<f64>,
}

impl ScenarioEvaluation {
    /// Species whose SSB is above `B_lim` with at least `probability`.
    pub fn acceptable_species(&self, probability: f64) -> usize {
        self.risk
            .iter()
            .filter(|r| 1.0 - **r >= probability)
            .count()
    }
}

/// Per round, the number of scenarios with each count (0..=9) of species at
/// acceptable risk.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundLedger {
    /// `counts[round][k]`
    pub counts: Vec<[usize; N_SPECIES + 1]>,
}

impl RoundLedger {
    pub fn new(evaluations: &[ScenarioEvaluation], rounds: usize, probability: f64) -> Self {
        let mut counts = vec![[0usize; N_SPECIES + 1]; rounds];
        for e in evaluations {
            counts[e.round - 1][e.acceptable_species(probability)] += 1;
        }
        Self { counts }
    }

    /// Median acceptable-species count of each round.
    pub fn medians(&self) -> Vec<f64> {
        self.counts
            .iter()
            .map(|c| {
                let mut v: Vec<usize> = c
                    .iter()
                    .enumerate()
                    .flat_map(|(k, n)| std::iter::repeat_n(k, *n))
                    .collect();
                v.sort_unstable();
                match v.len() {
                    0 => f64::NAN,
                    n if n % 2 == 1 => v[n / 2] as f64,
                    n => 0.5 * (v[n / 2 - 1] + v[n / 2]) as f64,
                }
            })
            .collect()
    }

    /// `acceptable_species_count,round1,...` with one row per count 0..=9.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let header: Vec<String> = (1..=self.counts.len())
            .map(|r| format!("round{r}"))
            .collect();
        writeln!(out, "acceptable_species_count,{}", header.join(","))?;
        for k in 0..=N_SPECIES {
            let row: Vec<String> = self.counts.iter().map(|c| c[k].to_string()).collect();
            writeln!(out, "{k},{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv<R: Read>(path: &Path, input: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(input);
        let headers = rdr.headers()?.clone();
        let parse_err = |line: u64, message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        if headers.get(0) != Some("acceptable_species_count") || headers.len() < 2 {
            return Err(parse_err(
                1,
                "expected `acceptable_species_count,round1,...`".into(),
            ));
        }
        let rounds = headers.len() - 1;
        let mut counts = vec![[0usize; N_SPECIES + 1]; rounds];
        let mut seen = 0;
        for rec in rdr.records() {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line());
            let k: usize = rec[0]
                .parse()
                .ok()
                .filter(|k| *k <= N_SPECIES)
                .ok_or_else(|| parse_err(line, format!("bad count `{}`", &rec[0])))?;
            for r in 0..rounds {
                counts[r][k] = rec
                    .get(r + 1)
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(|| parse_err(line, "bad scenario count".into()))?;
            }
            seen += 1;
        }
        if seen != N_SPECIES + 1 {
            return Err(parse_err(
                0,
                format!("expected {} rows, got {seen}", N_SPECIES + 1),
            ));
        }
        Ok(Self { counts })
    }
}

/// Acceptable-species counts of every evaluation.
pub fn acceptable_counts(evaluations: &[ScenarioEvaluation], probability: f64) -> Vec<usize> {
    evaluations
        .iter()
        .map(|e| e.acceptable_species(probability))
        .collect()
}

/// Final verdict on a last-round candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct AcceptanceRecord {
    pub scenario_id: usize,
    pub candidate: NashCandidate,
    /// Ensemble mixture `Pr(SSB < B_lim)` per species.
    pub risk: Vec<f64>,
    pub risk_ok: bool,
    pub fixed_point: bool,
    pub accepted: bool,
}

/// State after a round, passed to the checkpoint callback.
pub struct Checkpoint<'a> {
    pub round: usize,
    pub evaluations: &'a [ScenarioEvaluation],
    /// Candidates found so far, per round (empty for round 1).
    pub candidates: &'a [Vec<NashCandidate>],
    pub ledger: &'a RoundLedger,
}

/// Summary logged after each round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundReport {
    pub round: usize,
    pub scenarios: usize,
    pub median_acceptable: f64,
}

#[derive(Debug, Clone)]
pub struct RoundsOutcome {
    pub posterior: EnsemblePosterior,
    pub evaluations: Vec<ScenarioEvaluation>,
    /// `candidates[r]` are the search results that became round `r + 1`'s
    /// scenarios; `candidates[0]` is empty.
    pub candidates: Vec<Vec<NashCandidate>>,
    pub ledger: RoundLedger,
    pub acceptance: Vec<AcceptanceRecord>,
    /// Surfaces of the last search, `[draw]`.
    pub surfaces: Vec<EmulatedGame>,
    pub reports: Vec<RoundReport>,
    pub timings: Timings,
}

/// Simulator outputs up to the last observed year, which every scenario shares.
pub fn historical_outputs(
    inputs: &PipelineInputs,
    cfg: &RunConfig,
) -> Result<Vec<SimulatorOutput>> {
    let last = inputs
        .history
        .at(inputs.history.years.last)
        .ok_or_else(|| Error::Dimension("empty fishing history".into()))?;
    let scenario = FishingScenario::with_len(last.to_vec())?;
    let hist = cfg.run.historical_years();
    inputs
        .simulators
        .iter()
        .map(|sim| {
            let out = sim.run(
                &inputs.history,
                &scenario,
                cfg.run.horizon,
                cfg.dynamics.log_floor,
            )?;
            let years = YearRange::new(sim.port.years.first.max(hist.first), hist.last)?;
            Ok(SimulatorOutput {
                yield_: out.yield_.restrict(years),
                ssb: out.ssb.restrict(years),
            })
        })
        .collect()
}

/// Ensemble data of one kind on the historical grid.
pub fn ensemble_data(
    inputs: &PipelineInputs,
    historical: &[SimulatorOutput],
    cfg: &RunConfig,
    kind: OutputKind,
) -> Result<EnsembleData> {
    let hist = cfg.run.historical_years();
    let obs = match kind {
        OutputKind::Yield => &inputs.yield_observations,
        OutputKind::Ssb => &inputs.ssb_observations,
    };
    EnsembleData::new(
        hist,
        obs.restrict(hist),
        historical.iter().map(|o| o.get(kind).clone()).collect(),
    )
}

/// MCMC fit of both output kinds on historical data.
pub fn fit_posterior(inputs: &PipelineInputs, cfg: &RunConfig) -> Result<EnsemblePosterior> {
    let historical = historical_outputs(inputs, cfg)?;
    let settings = FitSettings::from_config(cfg);
    let fit_kind = |kind| -> Result<_> {
        let data = ensemble_data(inputs, &historical, cfg, kind)?;
        fit(&data, &settings, cfg.run.seed).map_err(|e| e.context(format!("{kind} ensemble fit")))
    };
    Ok(EnsemblePosterior {
        yield_: fit_kind(OutputKind::Yield)?,
        ssb: fit_kind(OutputKind::Ssb)?,
    })
}

/// Cached filtered states at the last observed year, `[kind][draw]`.
pub struct PosteriorStates {
    states: [Vec<HistoricalState>; 2],
}

impl PosteriorStates {
    pub fn new(
        inputs: &PipelineInputs,
        posterior: &EnsemblePosterior,
        cfg: &RunConfig,
    ) -> Result<Self> {
        let historical = historical_outputs(inputs, cfg)?;
        let states = |kind| -> Result<Vec<HistoricalState>> {
            let data = ensemble_data(inputs, &historical, cfg, kind)?;
            posterior
                .get(kind)
                .draws
                .par_iter()
                .map(|spec| HistoricalState::new(spec, &data))
                .collect()
        };
        Ok(Self {
            states: [states(OutputKind::Yield)?, states(OutputKind::Ssb)?],
        })
    }

    pub fn n_draws(&self) -> usize {
        self.states[0].len()
    }
}

/// Runs the simulators on `scenarios` and the ensemble on their outputs.
pub fn evaluate_scenarios(
    inputs: &PipelineInputs,
    states: &PosteriorStates,
    scenarios: &[(usize, FishingScenario)],
    round: usize,
    cfg: &RunConfig,
) -> Result<Vec<ScenarioEvaluation>> {
    let outputs = run_batch(
        &inputs.simulators,
        &inputs.history,
        scenarios,
        cfg.run.horizon,
        cfg.dynamics.log_floor,
    )?;
    let log_b_lim = inputs.catalog.log_b_lims();
    scenarios
        .par_iter()
        .zip(outputs.par_iter())
        .map(|((id, scenario), outs)| {
            let per_kind = |kind: OutputKind| -> Result<Vec<Vec<(f64, f64)>>> {
                let sims: Vec<SpeciesSeries> = outs.iter().map(|o| o.get(kind).clone()).collect();
                states.states[kind.index()]
                    .iter()
                    .map(|s| s.extend(&sims, cfg.run.horizon))
                    .collect()
            };
            let ctx = |e: Error| e.context(format!("round {round}, scenario {id}"));
            let yield_ = per_kind(OutputKind::Yield).map_err(ctx)?;
            let ssb = per_kind(OutputKind::Ssb).map_err(ctx)?;
            let summary = long_term_summaries(&yield_, &ssb, cfg.run.p_risk).map_err(ctx)?;
            let risk = risk_probabilities(&ssb, &log_b_lim);
            Ok(ScenarioEvaluation {
                scenario_id: *id,
                round,
                scenario: scenario.clone(),
                prediction: ScenarioPrediction {
                    scenario_id: *id,
                    yield_,
                    ssb,
                },
                summary,
                risk,
            })
        })
        .collect()
}

/// Fits every (kind, species) emulator on all evaluations; returns the
/// surfaces regrouped per draw and the hyperparameters used as next warm starts.
pub fn fit_surfaces(
    evaluations: &[ScenarioEvaluation],
    cfg: &RunConfig,
    warm: &[Option<Hyperparameters<f64>>],
) -> Result<(Vec<EmulatedGame>, Vec<Option<Hyperparameters<f64>>>)> {
    let design: Vec<Vec<f64>> = evaluations
        .iter()
        .map(|e| e.scenario.as_slice().to_vec())
        .collect();
    let n_draws = evaluations.first().map_or(0, |e| e.prediction.yield_.len());
    let options = FitOptions::from_config(&cfg.emulator);
    let outputs: Vec<(OutputKind, usize)> = OutputKind::ALL
        .iter()
        .flat_map(|&k| (0..N_SPECIES).map(move |s| (k, s)))
        .collect();
    let fitted: Vec<Vec<GpSurface<f64>>> = outputs
        .par_iter()
        .enumerate()
        .map(|(o, &(kind, species))| {
            let per_draw: Vec<Vec<f64>> = (0..n_draws)
                .map(|d| {
                    evaluations
                        .iter()
                        .map(|e| {
                            let p = &e.prediction;
                            match kind {
                                OutputKind::Yield => p.yield_[d][species].0,
                                OutputKind::Ssb => {
                                    draw_targets(&p.ssb[d..=d], true, cfg.run.p_risk)[0][species]
                                }
                            }
                        })
                        .collect()
                })
                .collect();
            let spec = MeanSpec::from_term_list(term_list(kind, species), &cfg.emulator.knots)?;
            fit_outputs(
                &design,
                &per_draw,
                &spec,
                &options,
                cfg.emulator.hyper_sharing,
                warm.get(o).and_then(Option::as_ref),
            )
            .map_err(|e| e.context(format!("{kind} emulator for species {}", species + 1)))
        })
        .collect::<Result<_>>()?;
    let next_warm = fitted
        .iter()
        .map(|s| s.first().map(|g| g.hyperparameters().clone()))
        .collect();
    let games = (0..n_draws)
        .map(|d| EmulatedGame {
            yield_: (0..N_SPECIES).map(|s| fitted[s][d].clone()).collect(),
            ssb: (0..N_SPECIES)
                .map(|s| fitted[N_SPECIES + s][d].clone())
                .collect(),
        })
        .collect();
    Ok((games, next_warm))
}

/// Round-1 design: Sobol' points over the box.
pub fn initial_scenarios(cfg: &RunConfig) -> Result<Vec<(usize, FishingScenario)>> {
    let scramble = cfg
        .design
        .scramble
        .then(|| seeds::derive(cfg.run.seed, "sobol", &[]));
    let batch = sobol::<f64>(
        cfg.run.round_sizes[0],
        N_SPECIES,
        cfg.design.sobol_skip,
        scramble,
    )?;
    batch
        .points
        .into_iter()
        .enumerate()
        .map(|(k, p)| Ok((k + 1, FishingScenario::new(p)?)))
        .collect()
}

/// Runs `rounds` rounds (at most `run.round_sizes.len()`), then applies the
/// acceptance test to the last round's candidates.
///
/// `resume[r]`, when present and non-empty, supplies the search results for
/// round `r + 1` from a checkpoint so the search is not repeated.
pub fn run_rounds(
    inputs: &PipelineInputs,
    cfg: &RunConfig,
    rounds: usize,
    resume: &[Vec<NashCandidate>],
    mut checkpoint: impl FnMut(&Checkpoint<'_>) -> Result<()>,
) -> Result<RoundsOutcome> {
    cfg.validate()?;
    let sizes = &cfg.run.round_sizes;
    if rounds == 0 || rounds > sizes.len() {
        return Err(Error::Parameter(format!(
            "rounds must be in 1..={}, got {rounds}",
            sizes.len()
        )));
    }
    if let Some(s) = sizes[1..].iter().find(|s| **s > cfg.run.posterior_draws) {
        return Err(Error::Parameter(format!(
            "a search round of {s} candidates needs at least {s} posterior draws"
        )));
    }
    if inputs.catalog.len() != N_SPECIES {
        return Err(Error::Dimension(format!(
            "catalog lists {} species, expected {N_SPECIES}",
            inputs.catalog.len()
        )));
    }
    let mut timings = Timings::default();
    let posterior = timings.time("ensemble_fit", || fit_posterior(inputs, cfg))?;
    let states = timings.time("ensemble_states", || {
        PosteriorStates::new(inputs, &posterior, cfg)
    })?;
    let settings = SearchSettings::from_config(cfg, inputs.catalog.log_b_lims());

    let mut evaluations: Vec<ScenarioEvaluation> = Vec::new();
    let mut candidates: Vec<Vec<NashCandidate>> = vec![Vec::new()];
    let mut reports = Vec::new();
    let mut warm: Vec<Option<Hyperparameters<f64>>> = vec![None; 2 * N_SPECIES];
    let mut games: Vec<EmulatedGame> = Vec::new();
    let mut scenarios = initial_scenarios(cfg)?;

    for round in 1..=rounds {
        let new = timings.time(format!("round{round}_evaluate"), || {
            evaluate_scenarios(inputs, &states, &scenarios, round, cfg)
        })?;
        evaluations.extend(new);
        let ledger = RoundLedger::new(&evaluations, round, cfg.run.acceptance_probability);
        let report = RoundReport {
            round,
            scenarios: scenarios.len(),
            median_acceptable: ledger.medians()[round - 1],
        };
        log::info!(
            "round {round}: {} scenarios, median acceptable species {}",
            report.scenarios,
            report.median_acceptable
        );
        reports.push(report);

        if round < rounds {
            let (g, w) = timings.time(format!("round{round}_emulator"), || {
                fit_surfaces(&evaluations, cfg, &warm)
            })?;
            games = g;
            warm = w;
            let size = sizes[round];
            let found = match resume.get(round) {
                Some(c) if c.len() == size => c.clone(),
                _ => timings.time(format!("round{round}_search"), || {
                    find_candidates(&games[..size], &settings, cfg.run.seed, round + 1)
                }),
            };
            let next_id = evaluations.len() + 1;
            scenarios = found
                .iter()
                .enumerate()
                .map(|(k, c)| (next_id + k, c.scenario.clone()))
                .collect();
            candidates.push(found);
        }
        checkpoint(&Checkpoint {
            round,
            evaluations: &evaluations,
            candidates: &candidates,
            ledger: &ledger,
        })?;
    }

    let ledger = RoundLedger::new(&evaluations, rounds, cfg.run.acceptance_probability);
    let last = &candidates[rounds - 1];
    let last_evals: Vec<&ScenarioEvaluation> =
        evaluations.iter().filter(|e| e.round == rounds).collect();
    let acceptance = last
        .iter()
        .zip(&last_evals)
        .map(|(c, e)| {
            let risk_ok = e.risk.iter().all(|r| *r < cfg.run.p_risk);
            let fixed_point = settings.is_fixed_point(c);
            AcceptanceRecord {
                scenario_id: e.scenario_id,
                candidate: c.clone(),
                risk: e.risk.clone(),
                risk_ok,
                fixed_point,
                accepted: risk_ok && (fixed_point || !cfg.nash.require_fixed_point),
            }
        })
        .collect();
    Ok(RoundsOutcome {
        posterior,
        evaluations,
        candidates,
        ledger,
        acceptance,
        surfaces: games,
        reports,
        timings,
    })
}

fn bits(v: &[bool]) -> String {
    v.iter().map(|b| if *b { '1' } else { '0' }).collect()
}

/// Search results as CSV: `round,draw,iterations,F1..,log_yield1..,ssb_quantile1..,
/// gap1..,deviation1..,risk_ok,infeasible,init_fallback` (flags as 0/1 strings per species).
pub fn write_candidates<W: Write>(mut out: W, candidates: &[NashCandidate]) -> Result<()> {
    let n = N_SPECIES;
    let mut header = vec!["round".to_string(), "draw".into(), "iterations".into()];
    for prefix in ["F", "log_yield", "ssb_quantile", "gap", "deviation"] {
        header.extend((1..=n).map(|i| format!("{prefix}{i}")));
    }
    header.extend([
        "risk_ok".into(),
        "infeasible".into(),
        "init_fallback".into(),
    ]);
    writeln!(out, "{}", header.join(","))?;
    for c in candidates {
        let mut row = vec![
            c.round.to_string(),
            c.draw.to_string(),
            c.iterations.to_string(),
        ];
        for v in [
            c.scenario.as_slice(),
            &c.log_yield,
            &c.ssb_quantile,
            &c.fixed_point_gap,
            &c.best_deviation,
        ] {
            row.extend(v.iter().map(f64::to_string));
        }
        row.extend([
            bits(&c.risk_ok),
            bits(&c.infeasible),
            bits(&c.init_fallback),
        ]);
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn read_candidates<R: Read>(path: &Path, input: R) -> Result<Vec<NashCandidate>> {
    let n = N_SPECIES;
    let mut rdr = csv::Reader::from_reader(input);
    let width = 3 + 5 * n + 3;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let err = |m: &str| Error::Parse {
            path: path.to_path_buf(),
            line,
            message: m.to_string(),
        };
        if rec.len() != width {
            return Err(err(&format!("expected {width} fields, got {}", rec.len())));
        }
        let int = |i: usize| rec[i].parse::<usize>().map_err(|_| err("bad integer"));
        let floats = |block: usize| -> Result<Vec<f64>> {
            (0..n)
                .map(|i| {
                    rec[3 + block * n + i]
                        .parse::<f64>()
                        .map_err(|_| err("bad number"))
                })
                .collect()
        };
        let flags = |i: usize| -> Result<Vec<bool>> {
            let s = &rec[3 + 5 * n + i];
            if s.len() != n || !s.chars().all(|c| c == '0' || c == '1') {
                return Err(err("bad flag string"));
            }
            Ok(s.chars().map(|c| c == '1').collect())
        };
        out.push(NashCandidate {
            round: int(0)?,
            draw: int(1)?,
            iterations: int(2)?,
            scenario: FishingScenario::new(floats(0)?).map_err(|e| err(&e.to_string()))?,
            log_yield: floats(1)?,
            ssb_quantile: floats(2)?,
            fixed_point_gap: floats(3)?,
            best_deviation: floats(4)?,
            risk_ok: flags(0)?,
            infeasible: flags(1)?,
            init_fallback: flags(2)?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn candidate(round: usize, draw: usize) -> NashCandidate {
        NashCandidate {
            scenario: FishingScenario::new((0..9).map(|i| 0.1 * i as f64 + 0.013).collect())
                .unwrap(),
            log_yield: (0..9).map(|i| 10.0 + i as f64 / 3.0).collect(),
            ssb_quantile: (0..9).map(|i| 11.0 - i as f64 / 7.0).collect(),
            risk_ok: (0..9).map(|i| i % 2 == 0).collect(),
            round,
            draw,
            iterations: 57,
            infeasible: vec![false; 9],
            init_fallback: (0..9).map(|i| i == 4).collect(),
            fixed_point_gap: vec![0.0, 1e-5, 0.0, 0.0, 0.0, 0.0, 2.5e-4, 0.0, 0.0],
            best_deviation: (0..9).map(|i| 0.1 * i as f64 + 0.02).collect(),
        }
    }

    #[test]
    fn candidates_round_trip_exactly() {
        let cs = vec![candidate(2, 0), candidate(2, 1)];
        let mut buf = Vec::new();
        write_candidates(&mut buf, &cs).unwrap();
        let back = read_candidates(Path::new("c.csv"), buf.as_slice()).unwrap();
        assert_eq!(back, cs);
    }

    #[test]
    fn ledger_shape_and_round_trip() {
        let ledger = RoundLedger {
            counts: vec![
                [1, 2, 3, 4, 5, 6, 7, 8, 9, 10],
                [0; 10],
                [0; 10],
                [3, 0, 0, 0, 0, 0, 0, 0, 0, 39],
            ],
        };
        let mut buf = Vec::new();
        ledger.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), 11);
        assert!(text.starts_with("acceptable_species_count,round1,round2,round3,round4\n"));
        assert!(text.ends_with("9,10,0,0,39\n"));
        assert_eq!(
            RoundLedger::read_csv(Path::new("l.csv"), buf.as_slice()).unwrap(),
            ledger
        );
        assert_eq!(ledger.medians()[3], 9.0);
    }
}
