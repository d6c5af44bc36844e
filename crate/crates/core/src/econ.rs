//! Per-species autoregressive price forecasts and expected revenue of
//! long-term yields.

use std::io::{Read, Write};
use std::path::Path;

use log::warn;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::PriceTable;
use crate::types::{FishingScenario, N_SPECIES};

/// Shortest series accepted by [`fit_ar`].
pub const MIN_OBSERVATIONS: usize = 20;

/// Revenue unit: currency per billion.
const BILLION: f64 = 1e9;

/// `x_t = c + φ_1 x_{t-1} + ... + φ_p x_{t-p} + e_t`, fitted by least squares.
#[derive(Debug, Clone, PartialEq)]
pub struct ArModel {
    pub order: usize,
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub innovation_variance: f64,
    /// Akaike criterion of each candidate order `1..=max_order`.
    pub aic: Vec<f64>,
    /// All roots of `1 - φ_1 z - ... - φ_p z^p` lie outside the unit circle.
    pub stationary: bool,
    /// Constant input series; forecasts repeat it.
    pub degenerate: bool,
    /// Last `order` observations, oldest first (one value when degenerate).
    recent: Vec<f64>,
}

/// Lag matrix `[1, x_{t-1}, ..., x_{t-p}]` and response `x_t` for
/// `t = start..n`.
fn lagged(x: &[f64], p: usize, start: usize) -> (DMatrix<f64>, DVector<f64>) {
    let rows = x.len() - start;
    let design = DMatrix::from_fn(
        rows,
        p + 1,
        |r, c| if c == 0 { 1.0 } else { x[start + r - c] },
    );
    let y = DVector::from_fn(rows, |r, _| x[start + r]);
    (design, y)
}

fn least_squares(design: DMatrix<f64>, y: &DVector<f64>) -> Result<(DVector<f64>, f64)> {
    let svd = design.clone().svd(true, true);
    let beta = svd
        .solve(y, 1e-12)
        .map_err(|e| Error::Numerical(format!("AR least squares: {e}")))?;
    let resid = y - design * &beta;
    Ok((beta, resid.norm_squared()))
}

/// Spectral radius of the companion matrix of `phi`.
fn companion_radius(phi: &[f64]) -> f64 {
    let p = phi.len();
    let m = DMatrix::from_fn(p, p, |r, c| {
        if r == 0 {
            phi[c]
        } else if r == c + 1 {
            1.0
        } else {
            0.0
        }
    });
    m.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Fits AR(p) for every `p` in `1..=max_order` on the common sample
/// `t > max_order` and keeps the order with the smallest AIC; the chosen
/// order is then refitted on all usable observations.
pub fn fit_ar(x: &[f64], max_order: usize) -> Result<ArModel> {
    if max_order == 0 {
        return Err(Error::Parameter("AR order must be at least 1".into()));
    }
    if x.len() < MIN_OBSERVATIONS.max(max_order + 2) {
        return Err(Error::Domain(format!(
            "{} observations; AR fitting needs at least {}",
            x.len(),
            MIN_OBSERVATIONS.max(max_order + 2)
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite value in series".into()));
    }
    let last = *x.last().unwrap();
    let spread = x.iter().fold(0.0f64, |m, v| m.max((v - x[0]).abs()));
    if spread <= 1e-12 * x[0].abs().max(1.0) {
        warn!("constant series ({last}); forecasts are flat");
        return Ok(ArModel {
            order: 0,
            intercept: last,
            coefficients: Vec::new(),
            innovation_variance: 0.0,
            aic: Vec::new(),
            stationary: true,
            degenerate: true,
            recent: vec![last],
        });
    }

    let n_common = (x.len() - max_order) as f64;
    let mut aic = Vec::with_capacity(max_order);
    for p in 1..=max_order {
        let (design, y) = lagged(x, p, max_order);
        let (_, rss) = least_squares(design, &y)?;
        let sigma2 = (rss / n_common).max(f64::MIN_POSITIVE);
        aic.push(n_common * sigma2.ln() + 2.0 * (p + 1) as f64);
    }
    let order = 1 + aic
        .iter()
        .enumerate()
        .fold(0, |best, (k, v)| if *v < aic[best] { k } else { best });

    let (design, y) = lagged(x, order, order);
    let rows = y.len();
    let (beta, rss) = least_squares(design, &y)?;
    let coefficients: Vec<f64> = beta.iter().skip(1).copied().collect();
    let stationary = companion_radius(&coefficients) < 1.0;
    if !stationary {
        warn!("AR({order}) fit is not stationary; forecasts hold the last value");
    }
    Ok(ArModel {
        order,
        intercept: beta[0],
        coefficients,
        innovation_variance: rss / (rows - order - 1).max(1) as f64,
        aic,
        stationary,
        degenerate: false,
        recent: x[x.len() - order..].to_vec(),
    })
}

impl ArModel {
    /// Unconditional mean `c / (1 - Σφ)` of a stationary fit.
    pub fn process_mean(&self) -> Option<f64> {
        if self.degenerate {
            return Some(self.intercept);
        }
        self.stationary
            .then(|| self.intercept / (1.0 - self.coefficients.iter().sum::<f64>()))
    }

    pub fn last_observation(&self) -> f64 {
        *self.recent.last().unwrap()
    }

    /// Iterated point forecasts for `1..=steps` steps ahead. Degenerate and
    /// non-stationary fits repeat the last observation.
    pub fn forecast(&self, steps: usize) -> Vec<f64> {
        if self.degenerate || !self.stationary {
            return vec![self.last_observation(); steps];
        }
        let mut window = self.recent.clone();
        let mut out = Vec::with_capacity(steps);
        for _ in 0..steps {
            let p = self.order;
            let next = self.intercept
                + (0..p)
                    .map(|k| self.coefficients[k] * window[window.len() - 1 - k])
                    .sum::<f64>();
            window.push(next);
            out.push(next);
        }
        out
    }

    /// Point forecast `steps` ahead; zero steps gives the last observation.
    pub fn predict(&self, steps: usize) -> f64 {
        if steps == 0 {
            self.last_observation()
        } else {
            *self.forecast(steps).last().unwrap()
        }
    }
}

/// One [`ArModel`] per species, fitted to a [`PriceTable`].
#[derive(Debug, Clone, PartialEq)]
pub struct PriceModel {
    pub last_year: i32,
    pub species: Vec<ArModel>,
}

pub fn fit_prices(table: &PriceTable, max_order: usize) -> Result<PriceModel> {
    let len = table.series.first().map_or(0, Vec::len);
    if table.series.iter().any(|s| s.len() != len) {
        return Err(Error::Domain(
            "price series must end in the same year".into(),
        ));
    }
    let species = table
        .series
        .iter()
        .enumerate()
        .map(|(s, xs)| {
            fit_ar(xs, max_order).map_err(|e| e.context(format!("prices of species {}", s + 1)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PriceModel {
        last_year: table.first_year + len as i32 - 1,
        species,
    })
}

impl PriceModel {
    /// Forecast prices for `last_year + 1 ..= to_year`, floored at zero.
    pub fn forecast(&self, to_year: i32) -> PriceTable {
        let steps = (to_year - self.last_year).max(0) as usize;
        let series = self
            .species
            .iter()
            .map(|m| m.forecast(steps).into_iter().map(|p| p.max(0.0)).collect())
            .collect();
        PriceTable {
            first_year: self.last_year + 1,
            series,
        }
    }

    /// Per-species price in `year`; the last observation for years not after
    /// the fitted sample.
    pub fn prices_in(&self, year: i32) -> Vec<f64> {
        let steps = (year - self.last_year).max(0) as usize;
        self.species
            .iter()
            .map(|m| m.predict(steps).max(0.0))
            .collect()
    }
}

/// Mean of `exp(Y)` for `Y` an equal-weight mixture of Gaussians given as
/// (mean, variance).
pub fn lognormal_mixture_mean(components: &[(f64, f64)]) -> f64 {
    if components.is_empty() {
        return 0.0;
    }
    components
        .iter()
        .map(|(m, v)| (m + 0.5 * v).exp())
        .sum::<f64>()
        / components.len() as f64
}

/// `Σ_i price_i · exp(m_i + s_i²/2)`, in billions.
pub fn revenue(prices: &[f64], log_yield: &[(f64, f64)]) -> f64 {
    prices
        .iter()
        .zip(log_yield)
        .map(|(p, (m, v))| p * (m + 0.5 * v).exp())
        .sum::<f64>()
        / BILLION
}

/// Expected revenue in billions when the long-term log yield of each
/// species is a posterior mixture; `draws[d][i]` is (mean, variance).
pub fn expected_revenue(prices: &[f64], draws: &[Vec<(f64, f64)>]) -> f64 {
    (0..prices.len())
        .map(|i| {
            let comps: Vec<(f64, f64)> = draws.iter().map(|d| d[i]).collect();
            prices[i] * lognormal_mixture_mean(&comps)
        })
        .sum::<f64>()
        / BILLION
}

/// Revenue in billions for each year of a price forecast, at fixed
/// long-term yields.
pub fn annual_revenue(forecast: &PriceTable, draws: &[Vec<(f64, f64)>]) -> Vec<(i32, f64)> {
    let len = forecast.series.iter().map(Vec::len).min().unwrap_or(0);
    (0..len)
        .map(|t| {
            let prices: Vec<f64> = forecast.series.iter().map(|s| s[t]).collect();
            (
                forecast.first_year + t as i32,
                expected_revenue(&prices, draws),
            )
        })
        .collect()
}

/// A fishing scenario and its expected revenue in billions.
#[derive(Debug, Clone, PartialEq)]
pub struct Equilibrium {
    pub scenario: FishingScenario,
    pub revenue: f64,
}

/// Expected revenue of each candidate, in parallel, sorted by revenue
/// descending (ties keep input order).
pub fn rank_by_revenue(
    candidates: &[(FishingScenario, Vec<Vec<(f64, f64)>>)],
    prices: &[f64],
) -> Vec<Equilibrium> {
    let mut rows: Vec<Equilibrium> = candidates
        .par_iter()
        .map(|(f, draws)| Equilibrium {
            scenario: f.clone(),
            revenue: expected_revenue(prices, draws),
        })
        .collect();
    rows.sort_by(|a, b| b.revenue.total_cmp(&a.revenue));
    rows
}

fn equilibria_header() -> Vec<String> {
    let mut h: Vec<String> = (1..=N_SPECIES).map(|i| format!("F{i}")).collect();
    h.push("revenue".into());
    h
}

/// `F1..F9,revenue`, rows in the given order.
pub fn write_equilibria<W: Write>(out: W, rows: &[Equilibrium]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(equilibria_header())?;
    for r in rows {
        let mut rec: Vec<String> = r.scenario.as_slice().iter().map(f64::to_string).collect();
        rec.push(r.revenue.to_string());
        w.write_record(rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_equilibria<R: Read>(path: &Path, input: R) -> Result<Vec<Equilibrium>> {
    let mut rdr = csv::Reader::from_reader(input);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != equilibria_header() {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: format!("expected header {}", equilibria_header().join(",")),
        });
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let err = |m: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message: m,
        };
        let vals = rec
            .iter()
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| err(format!("bad number {s:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        let revenue = vals[N_SPECIES];
        let scenario =
            FishingScenario::new(vals[..N_SPECIES].to_vec()).map_err(|e| err(e.to_string()))?;
        out.push(Equilibrium { scenario, revenue });
    }
    Ok(out)
}
