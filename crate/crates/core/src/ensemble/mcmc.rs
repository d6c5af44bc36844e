//! Adaptive random-walk Metropolis and chain diagnostics.

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::seeds::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct AmSettings {
    pub iterations: usize,
    pub burn_in: usize,
    /// Iteration at which the empirical covariance starts driving proposals.
    pub adapt_start: usize,
    /// Initial per-coordinate proposal standard deviation.
    pub initial_sd: f64,
}

/// Coordinate swaps proposed with probability `rate` in place of a random-walk
/// step. Swaps are involutions, hence symmetric proposals; they let the chain
/// move between modes related by exchangeable components.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SwapMoves {
    pub pairs: Vec<(usize, usize)>,
    pub rate: f64,
}

impl AmSettings {
    pub fn validate(&self) -> Result<()> {
        if self.burn_in >= self.iterations {
            return Err(Error::Parameter(format!(
                "burn-in {} must be below the iteration count {}",
                self.burn_in, self.iterations
            )));
        }
        if !(self.initial_sd > 0.0) {
            return Err(Error::Parameter(
                "initial proposal sd must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    /// Post-burn-in states.
    pub kept: Vec<Vec<f64>>,
    /// Acceptance rate after burn-in.
    pub acceptance_rate: f64,
}

const TARGET_ACCEPTANCE: f64 = 0.234;
const REFRESH: usize = 20;

/// Runs one chain. The proposal covariance adapts (Haario et al.) from
/// `adapt_start` until the end of burn-in, with a Robbins-Monro global scale
/// targeting 0.234 acceptance; it is frozen afterwards so the kept draws come
/// from a fixed Markov kernel.
///
/// `log_post` returns `-inf` outside the support; NaN or an error stops the
/// chain with the iteration index.
pub fn adaptive_metropolis<F>(
    log_post: F,
    init: &[f64],
    settings: &AmSettings,
    swaps: &SwapMoves,
    rng: &mut Rng,
) -> Result<Chain>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    settings.validate()?;
    let d = init.len();
    let eval = |x: &[f64], it: usize| -> Result<f64> {
        let lp = log_post(x).map_err(|e| Error::Fit {
            iteration: it,
            message: e.to_string(),
        })?;
        if lp.is_nan() || lp == f64::INFINITY {
            return Err(Error::Fit {
                iteration: it,
                message: format!("log posterior is {lp}"),
            });
        }
        Ok(lp)
    };
    let mut x = DVector::from_column_slice(init);
    let mut lp = eval(init, 0)?;
    if !lp.is_finite() {
        return Err(Error::Fit {
            iteration: 0,
            message: "initial state has zero posterior density".into(),
        });
    }
    let base = 2.38 * 2.38 / d.max(1) as f64;
    let mut log_scale = 0.0f64;
    let mut chol = DMatrix::from_diagonal_element(d, d, settings.initial_sd);
    let mut mean = x.clone();
    let mut scatter = DMatrix::<f64>::zeros(d, d);
    let mut n_seen = 1usize;
    let mut kept = Vec::with_capacity(settings.iterations - settings.burn_in);
    let mut accepted_kept = 0usize;

    for it in 1..=settings.iterations {
        let swap = !swaps.pairs.is_empty() && rng.gen::<f64>() < swaps.rate;
        let prop = if swap {
            let mut p = x.clone();
            for &(a, b) in &swaps.pairs {
                p.swap_rows(a, b);
            }
            p
        } else {
            let z = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
            &x + &chol * z * log_scale.exp()
        };
        let lp_prop = eval(prop.as_slice(), it)?;
        let log_alpha = (lp_prop - lp).min(0.0);
        let u: f64 = rng.gen();
        let accept = lp_prop.is_finite() && u.ln() < log_alpha;
        if accept {
            x = prop;
            lp = lp_prop;
        }
        if it <= settings.burn_in {
            n_seen += 1;
            let delta = &x - &mean;
            mean += &delta / n_seen as f64;
            scatter += &delta * (&x - &mean).transpose();
            if !swap {
                let alpha = if lp_prop.is_finite() {
                    log_alpha.exp()
                } else {
                    0.0
                };
                log_scale += (alpha - TARGET_ACCEPTANCE) / (it as f64).powf(0.6);
            }
            if it >= settings.adapt_start && it % REFRESH == 0 {
                let mut cov = &scatter / (n_seen - 1) as f64 * base;
                for i in 0..d {
                    cov[(i, i)] += 1e-8;
                }
                if let Some(c) = cov.cholesky() {
                    chol = c.unpack();
                }
            }
        } else {
            if accept {
                accepted_kept += 1;
            }
            kept.push(x.as_slice().to_vec());
        }
    }
    let n_kept = kept.len().max(1);
    Ok(Chain {
        kept,
        acceptance_rate: accepted_kept as f64 / n_kept as f64,
    })
}

/// Split-R-hat of one coordinate across chains of equal length.
pub fn split_rhat(chains: &[Vec<f64>]) -> f64 {
    let half = chains.iter().map(Vec::len).min().unwrap_or(0) / 2;
    if half < 2 {
        return f64::NAN;
    }
    let seqs: Vec<&[f64]> = chains
        .iter()
        .flat_map(|c| [&c[..half], &c[half..2 * half]])
        .collect();
    let m = seqs.len() as f64;
    let n = half as f64;
    let means: Vec<f64> = seqs.iter().map(|s| s.iter().sum::<f64>() / n).collect();
    let grand = means.iter().sum::<f64>() / m;
    let b = n / (m - 1.0) * means.iter().map(|x| (x - grand).powi(2)).sum::<f64>();
    let w = seqs
        .iter()
        .zip(&means)
        .map(|(s, mu)| s.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (n - 1.0))
        .sum::<f64>()
        / m;
    if w == 0.0 {
        return if b == 0.0 { 1.0 } else { f64::INFINITY };
    }
    let var_plus = (n - 1.0) / n * w + b / n;
    (var_plus / w).sqrt()
}

/// Keeps `count` evenly spaced draws: with stride `s = len / count`, draws
/// `s - 1, 2s - 1, ...` (every `s`-th draw).
pub fn thin<T: Clone>(draws: &[T], count: usize) -> Result<Vec<T>> {
    if count == 0 || count > draws.len() {
        return Err(Error::Parameter(format!(
            "cannot thin {} draws to {count}",
            draws.len()
        )));
    }
    let stride = draws.len() / count;
    Ok((1..=count).map(|j| draws[j * stride - 1].clone()).collect())
}
