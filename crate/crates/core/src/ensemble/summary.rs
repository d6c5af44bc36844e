//! Long-term summaries of the truth at the horizon, mixed over posterior draws.

use std::io::Write;
use std::path::Path;

use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::types::SPECIES;

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> f64 {
    Normal::new(0.0, 1.0).expect("unit normal").inverse_cdf(p)
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// CDF at `x` of the equal-weight mixture of `N(mean, var)` components.
pub fn mixture_cdf(components: &[(f64, f64)], x: f64) -> f64 {
    let total: f64 = components
        .iter()
        .map(|&(m, v)| {
            if v > 0.0 {
                normal_cdf((x - m) / v.sqrt())
            } else if x >= m {
                1.0
            } else {
                0.0
            }
        })
        .sum();
    total / components.len() as f64
}

/// The `p`-quantile of the equal-weight Gaussian mixture, by bisection.
pub fn mixture_quantile(components: &[(f64, f64)], p: f64) -> Result<f64> {
    if components.is_empty() {
        return Err(Error::Parameter("empty mixture".into()));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Parameter(format!(
            "quantile level {p} outside (0, 1)"
        )));
    }
    if components
        .iter()
        .any(|(m, v)| !m.is_finite() || !(*v >= 0.0) || !v.is_finite())
    {
        return Err(Error::Numerical("non-finite mixture component".into()));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &(m, v) in components {
        let s = v.sqrt();
        lo = lo.min(m - 40.0 * s);
        hi = hi.max(m + 40.0 * s);
    }
    // Widen degenerate brackets so the bisection invariant holds.
    lo -= 1.0;
    hi += 1.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if mixture_cdf(components, mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Per-species summaries at the horizon for one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct LongTermSummary {
    /// Mixture mean of log yield.
    pub yield_mean: Vec<f64>,
    /// Mixture `p_risk`-quantile of log SSB.
    pub ssb_quantile: Vec<f64>,
}

/// `yield_draws[d][i]` and `ssb_draws[d][i]` are the horizon (mean, variance)
/// of species `i` under posterior draw `d`.
pub fn long_term_summaries(
    yield_draws: &[Vec<(f64, f64)>],
    ssb_draws: &[Vec<(f64, f64)>],
    p_risk: f64,
) -> Result<LongTermSummary> {
    if yield_draws.is_empty() || yield_draws.len() != ssb_draws.len() {
        return Err(Error::Dimension(format!(
            "{} yield draws and {} SSB draws",
            yield_draws.len(),
            ssb_draws.len()
        )));
    }
    let n = yield_draws[0].len();
    let column = |draws: &[Vec<(f64, f64)>], i: usize| -> Vec<(f64, f64)> {
        draws.iter().map(|d| d[i]).collect()
    };
    let yield_mean = (0..n)
        .map(|i| yield_draws.iter().map(|d| d[i].0).sum::<f64>() / yield_draws.len() as f64)
        .collect();
    let ssb_quantile = (0..n)
        .map(|i| mixture_quantile(&column(ssb_draws, i), p_risk))
        .collect::<Result<_>>()?;
    Ok(LongTermSummary {
        yield_mean,
        ssb_quantile,
    })
}

/// Mixture probability that each species' SSB falls below its limit.
pub fn risk_probabilities(ssb_draws: &[Vec<(f64, f64)>], log_b_lim: &[f64]) -> Vec<f64> {
    (0..log_b_lim.len())
        .map(|i| {
            let comps: Vec<(f64, f64)> = ssb_draws.iter().map(|d| d[i]).collect();
            mixture_cdf(&comps, log_b_lim[i])
        })
        .collect()
}

/// Per-draw emulator targets: the log-yield mean and the SSB `p`-quantile
/// `m + s * z_p` of each draw's Gaussian.
pub fn draw_targets(draws: &[Vec<(f64, f64)>], ssb: bool, p: f64) -> Vec<Vec<f64>> {
    let z = normal_quantile(p);
    draws
        .iter()
        .map(|d| {
            d.iter()
                .map(|&(m, v)| if ssb { m + z * v.sqrt() } else { m })
                .collect()
        })
        .collect()
}

/// Horizon predictions of one scenario for every draw: `[draw][species]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioPrediction {
    pub scenario_id: usize,
    pub yield_: Vec<Vec<(f64, f64)>>,
    pub ssb: Vec<Vec<(f64, f64)>>,
}

/// Writes one CSV per output kind with
/// `scenario_id,draw,species,mean_2050,var_2050` rows.
pub fn write_predictions(dir: &Path, predictions: &[ScenarioPrediction]) -> Result<()> {
    for (file, pick) in [
        ("predictions_yield.csv", 0usize),
        ("predictions_ssb.csv", 1usize),
    ] {
        let mut out = std::io::BufWriter::new(std::fs::File::create(dir.join(file))?);
        writeln!(out, "scenario_id,draw,species,mean_2050,var_2050")?;
        for p in predictions {
            let draws = if pick == 0 { &p.yield_ } else { &p.ssb };
            for (d, row) in draws.iter().enumerate() {
                for (i, (m, v)) in row.iter().enumerate() {
                    let name = SPECIES.get(i).copied().unwrap_or("species");
                    writeln!(out, "{},{d},{name},{m},{v}", p.scenario_id)?;
                }
            }
        }
        out.flush()?;
    }
    Ok(())
}
