//! Plot-ready CSV tables and the run report.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use nashmsy::config::RunConfig;
use nashmsy::ensemble::{mixture_quantile, predict_truth, EnsemblePosterior};
use nashmsy::nash::rounds::{ensemble_data, historical_outputs, Timings};
use nashmsy::nash::{AcceptanceRecord, PipelineInputs, ScenarioEvaluation};
use nashmsy::types::{OutputKind, SPECIES};

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

/// `scenario_id,round,species,yield_mean,ssb_quantile,risk` per evaluated scenario.
pub fn write_long_term(path: &Path, evals: &[ScenarioEvaluation]) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "scenario_id,round,species,yield_mean,ssb_quantile,risk")?;
    for e in evals {
        for (s, name) in SPECIES.iter().enumerate() {
            writeln!(
                w,
                "{},{},{name},{},{},{}",
                e.scenario_id,
                e.round,
                e.summary.yield_mean[s],
                e.summary.ssb_quantile[s],
                e.risk[s]
            )?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `scenario_id,round,F1..F9`.
pub fn write_evaluated_scenarios(path: &Path, evals: &[ScenarioEvaluation]) -> Result<()> {
    let mut w = create(path)?;
    let header: Vec<String> = (1..=SPECIES.len()).map(|i| format!("F{i}")).collect();
    writeln!(w, "scenario_id,round,{}", header.join(","))?;
    for e in evals {
        let f: Vec<String> = e.scenario.as_slice().iter().map(f64::to_string).collect();
        writeln!(w, "{},{},{}", e.scenario_id, e.round, f.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// `scenario_id,draw,risk_ok,fixed_point,accepted,max_risk,revenue`; revenue
/// is empty for candidates that were not scored.
pub fn write_acceptance(
    path: &Path,
    records: &[AcceptanceRecord],
    revenue: &[Option<f64>],
) -> Result<()> {
    let mut w = create(path)?;
    writeln!(
        w,
        "scenario_id,draw,risk_ok,fixed_point,accepted,max_risk,revenue"
    )?;
    for (r, rev) in records.iter().zip(revenue) {
        let max_risk = r.risk.iter().copied().fold(0.0, f64::max);
        writeln!(
            w,
            "{},{},{},{},{},{max_risk},{}",
            r.scenario_id,
            r.candidate.draw,
            u8::from(r.risk_ok),
            u8::from(r.fixed_point),
            u8::from(r.accepted),
            rev.map_or(String::new(), |v| v.to_string())
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Acceptance rows read back for reporting.
#[derive(Debug, Clone, PartialEq)]
pub struct AcceptanceRow {
    pub scenario_id: usize,
    pub accepted: bool,
    pub max_risk: f64,
}

pub fn read_acceptance(path: &Path) -> Result<Vec<AcceptanceRow>> {
    let mut rdr =
        csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let bad =
            || crate::manifest::invalid(format!("{}: malformed row {:?}", path.display(), rec));
        out.push(AcceptanceRow {
            scenario_id: rec.get(0).and_then(|v| v.parse().ok()).ok_or_else(bad)?,
            accepted: rec.get(4).ok_or_else(bad)? == "1",
            max_risk: rec.get(5).and_then(|v| v.parse().ok()).ok_or_else(bad)?,
        });
    }
    Ok(out)
}

/// Smoothed truth over the historical years, pooled over posterior draws:
/// `kind,year,species,observed,mean,lower,upper` with a central 95% band.
pub fn write_historical_fit(
    path: &Path,
    inputs: &PipelineInputs,
    posterior: &EnsemblePosterior,
    cfg: &RunConfig,
) -> Result<()> {
    let historical = historical_outputs(inputs, cfg)?;
    let mut w = create(path)?;
    writeln!(w, "kind,year,species,observed,mean,lower,upper")?;
    for kind in OutputKind::ALL {
        let data = ensemble_data(inputs, &historical, cfg, kind)?;
        let truths = posterior
            .get(kind)
            .draws
            .iter()
            .map(|spec| predict_truth(spec, &data))
            .collect::<nashmsy::Result<Vec<_>>>()?;
        let obs = match kind {
            OutputKind::Yield => &inputs.yield_observations,
            OutputKind::Ssb => &inputs.ssb_observations,
        };
        for year in cfg.run.historical_years().years() {
            for (s, name) in SPECIES.iter().enumerate() {
                let comps: Vec<(f64, f64)> = truths.iter().filter_map(|t| t.at(s, year)).collect();
                if comps.is_empty() {
                    continue;
                }
                let mean = comps.iter().map(|c| c.0).sum::<f64>() / comps.len() as f64;
                let lower = mixture_quantile(&comps, 0.025)?;
                let upper = mixture_quantile(&comps, 0.975)?;
                let observed = obs.get(s, year).map_or(String::new(), |v| v.to_string());
                writeln!(w, "{kind},{year},{name},{observed},{mean},{lower},{upper}")?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// `kind,species,n_params,acceptance_rate,max_rhat` per MCMC fit.
pub fn write_diagnostics(path: &Path, posterior: &EnsemblePosterior) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "kind,species,n_params,acceptance_rate,max_rhat")?;
    for kind in OutputKind::ALL {
        for d in &posterior.get(kind).diagnostics.species {
            writeln!(
                w,
                "{kind},{},{},{},{}",
                SPECIES[d.species], d.n_params, d.acceptance_rate, d.max_rhat
            )?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `scenario_id,year,revenue` (billions).
pub fn write_annual_revenue(path: &Path, rows: &[(usize, Vec<(i32, f64)>)]) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "scenario_id,year,revenue")?;
    for (id, path) in rows {
        for (year, r) in path {
            writeln!(w, "{id},{year},{r}")?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_timings(path: &Path, timings: &Timings) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "stage,seconds")?;
    for (stage, secs) in &timings.0 {
        writeln!(w, "{stage},{secs:.3}")?;
    }
    w.flush()?;
    Ok(())
}
