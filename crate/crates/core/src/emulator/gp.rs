//! Universal-kriging Gaussian-process surfaces.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::kernel::Kernel;
use super::mean::{BasisTerm, MeanModel, MeanSpec};
use super::optim::nelder_mead;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Smallest profiled signal variance; keeps constant targets well-defined.
const SIGMA2_FLOOR: f64 = 1e-12;

/// Relative residual norm below which a basis column counts as dependent.
const RANK_TOL: f64 = 1e-8;

/// Kernel hyperparameters on the correlation scale.
///
/// The training covariance is `sigma2 * (R + nugget_ratio * I)`, so the
/// nugget variance is `sigma2 * nugget_ratio`.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparameters<T: Scalar> {
    pub rho: Vec<T>,
    pub nugget_ratio: T,
}

impl<T: Scalar> Hyperparameters<T> {
    fn to_log(&self) -> Vec<T> {
        let mut x: Vec<T> = self.rho.iter().map(|r| r.ln()).collect();
        x.push(self.nugget_ratio.ln());
        x
    }

    fn from_log(x: &[T]) -> Self {
        let d = x.len() - 1;
        Self {
            rho: x[..d].iter().map(|v| v.exp()).collect(),
            nugget_ratio: x[d].exp(),
        }
    }
}

/// Settings for maximum-likelihood fitting.
#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub starts: usize,
    pub max_evaluations: usize,
    /// Lower bound of the nugget ratio.
    pub nugget_floor: f64,
    /// Upper bound of the nugget ratio.
    pub nugget_ceiling: f64,
    pub min_length_scale: f64,
    pub max_length_scale: f64,
    pub min_points: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            starts: 3,
            max_evaluations: 600,
            nugget_floor: 1e-8,
            nugget_ceiling: 10.0,
            min_length_scale: 0.02,
            max_length_scale: 50.0,
            min_points: 20,
        }
    }
}

impl FitOptions {
    pub fn from_config(e: &crate::config::EmulatorSection) -> Self {
        Self {
            starts: e.starts,
            max_evaluations: e.max_evaluations,
            nugget_floor: e.nugget_floor,
            min_length_scale: e.min_length_scale,
            max_length_scale: e.max_length_scale,
            ..Self::default()
        }
    }

    fn bounds<T: Scalar>(&self, dim: usize) -> (Vec<T>, Vec<T>) {
        // A zero floor still needs a finite bound in log space.
        let floor = self.nugget_floor.max(1e-12);
        let mut lo = vec![T::lit(self.min_length_scale.ln()); dim];
        let mut hi = vec![T::lit(self.max_length_scale.ln()); dim];
        lo.push(T::lit(floor.ln()));
        hi.push(T::lit(self.nugget_ceiling.max(floor).ln()));
        (lo, hi)
    }

    /// Deterministic starting points; the first may be replaced by a warm start.
    fn start<T: Scalar>(&self, k: usize, dim: usize) -> Hyperparameters<T> {
        const RHO: [f64; 4] = [0.5, 2.0, 0.15, 5.0];
        const NUGGET: [f64; 4] = [1e-4, 1e-2, 1e-6, 1e-3];
        Hyperparameters {
            rho: vec![T::lit(RHO[k % 4]); dim],
            nugget_ratio: T::lit(NUGGET[k % 4].max(self.nugget_floor)),
        }
    }
}

/// Training inputs with precomputed pairwise distances.
#[derive(Debug)]
struct Design<T: Scalar> {
    points: Vec<Vec<T>>,
    /// `|x_i[k] - x_j[k]|` for `i < j`, pair-major.
    gaps: Vec<T>,
}

impl<T: Scalar> Design<T> {
    fn new(points: &[Vec<T>]) -> Result<Self> {
        let n = points.len();
        if n == 0 {
            return Err(Error::Dimension("empty training design".into()));
        }
        let d = points[0].len();
        if points.iter().any(|p| p.len() != d) {
            return Err(Error::Dimension(
                "training points differ in dimension".into(),
            ));
        }
        let mut gaps = Vec::with_capacity(n * (n - 1) / 2 * d);
        for i in 0..n {
            for j in i + 1..n {
                gaps.extend(
                    points[i]
                        .iter()
                        .zip(&points[j])
                        .map(|(a, b)| (*a - *b).abs()),
                );
            }
        }
        Ok(Self {
            points: points.to_vec(),
            gaps,
        })
    }

    fn n(&self) -> usize {
        self.points.len()
    }

    fn dim(&self) -> usize {
        self.points[0].len()
    }

    /// `R + nugget_ratio * I`.
    fn covariance(&self, rho: &[T], nugget_ratio: T) -> DMatrix<T> {
        let n = self.n();
        let d = self.dim();
        let s5 = T::lit(5.0).sqrt();
        let third = T::one() / T::lit(3.0);
        let inv: Vec<T> = rho.iter().map(|r| s5 / *r).collect();
        let mut c = DMatrix::from_element(n, n, T::zero());
        let mut p = 0;
        for i in 0..n {
            c[(i, i)] = T::one() + nugget_ratio;
            for j in i + 1..n {
                let g = &self.gaps[p * d..(p + 1) * d];
                let mut sum = T::zero();
                let mut poly = T::one();
                for (gk, ik) in g.iter().zip(&inv) {
                    let u = *gk * *ik;
                    sum += u;
                    poly *= T::one() + u + u * u * third;
                }
                let v = poly * (-sum).exp();
                c[(i, j)] = v;
                c[(j, i)] = v;
                p += 1;
            }
        }
        c
    }
}

/// Cholesky factor and GLS solution for one set of hyperparameters.
struct Solved<T: Scalar> {
    l: DMatrix<T>,
    log_det: T,
    /// Columns: one coefficient vector per target set.
    beta: DMatrix<T>,
    /// Columns: `C^{-1} (y - H beta)`.
    alpha: DMatrix<T>,
    sigma2: Vec<T>,
    log_likelihood: Vec<T>,
}

fn basis_matrix<T: Scalar>(terms: &[BasisTerm], points: &[Vec<T>]) -> DMatrix<T> {
    DMatrix::from_fn(points.len(), terms.len(), |i, j| terms[j].eval(&points[i]))
}

/// Greedy Gram-Schmidt over the basis columns; returns kept and dropped terms.
fn independent_terms<T: Scalar>(
    terms: &[BasisTerm],
    points: &[Vec<T>],
) -> (Vec<BasisTerm>, Vec<BasisTerm>) {
    let h = basis_matrix(terms, points);
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    let mut ortho: Vec<DVector<T>> = Vec::new();
    for (j, term) in terms.iter().enumerate() {
        let col = h.column(j).into_owned();
        let norm = col.norm();
        let mut r = col;
        for q in &ortho {
            let c = q.dot(&r);
            r.axpy(-c, q, T::one());
        }
        // Second pass for numerical orthogonality.
        for q in &ortho {
            let c = q.dot(&r);
            r.axpy(-c, q, T::one());
        }
        let rn = r.norm();
        if norm > T::zero() && rn > T::lit(RANK_TOL) * norm {
            ortho.push(r / rn);
            kept.push(*term);
        } else {
            dropped.push(*term);
        }
    }
    (kept, dropped)
}

fn solve<T: Scalar>(c: DMatrix<T>, h: &DMatrix<T>, y: &DMatrix<T>) -> Result<Solved<T>> {
    let n = c.nrows();
    let chol = c
        .cholesky()
        .ok_or_else(|| Error::Numerical("training covariance is not positive definite".into()))?;
    let l = chol.unpack();
    let log_det = l
        .diagonal()
        .iter()
        .map(|v| v.ln())
        .fold(T::zero(), |a, b| a + b)
        * T::lit(2.0);
    let hw = l
        .solve_lower_triangular(h)
        .ok_or_else(|| Error::Numerical("singular Cholesky factor".into()))?;
    let yw = l
        .solve_lower_triangular(y)
        .ok_or_else(|| Error::Numerical("singular Cholesky factor".into()))?;
    let qr = hw.clone().qr();
    let qty = qr.q().transpose() * &yw;
    let beta = qr
        .r()
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::Numerical("mean basis is rank deficient".into()))?;
    let ew = &yw - &hw * &beta;
    let alpha = l
        .tr_solve_lower_triangular(&ew)
        .ok_or_else(|| Error::Numerical("singular Cholesky factor".into()))?;
    let nt = T::lit(n as f64);
    let k = T::lit(0.5) * nt * (T::one() + T::two_pi().ln());
    let mut sigma2 = Vec::with_capacity(y.ncols());
    let mut ll = Vec::with_capacity(y.ncols());
    for col in ew.column_iter() {
        let s2 = (col.norm_squared() / nt).max(T::lit(SIGMA2_FLOOR));
        sigma2.push(s2);
        ll.push(-T::lit(0.5) * (nt * s2.ln() + log_det) - k);
    }
    Ok(Solved {
        l,
        log_det,
        beta,
        alpha,
        sigma2,
        log_likelihood: ll,
    })
}

/// State shared by surfaces conditioned with the same design and hyperparameters.
#[derive(Debug)]
struct Shared<T: Scalar> {
    design: Design<T>,
    hyper: Hyperparameters<T>,
    l: DMatrix<T>,
    dropped: Vec<BasisTerm>,
    converged: bool,
    log_det: T,
}

/// A fitted emulator for one output kind, species and posterior draw.
#[derive(Debug, Clone)]
pub struct GpSurface<T: Scalar> {
    shared: Arc<Shared<T>>,
    mean: MeanModel<T>,
    kernel: Kernel<T>,
    targets: Vec<T>,
    alpha: Vec<T>,
    log_likelihood: T,
}

impl<T: Scalar> GpSurface<T> {
    /// Conditions on data with fixed kernel parameters; mean coefficients by GLS.
    /// `nugget` is the noise variance and may be zero.
    pub fn condition(
        design: &[Vec<T>],
        targets: &[T],
        spec: &MeanSpec,
        kernel: Kernel<T>,
        nugget: T,
    ) -> Result<Self> {
        if !(nugget >= T::zero()) {
            return Err(Error::Parameter(format!(
                "nugget variance {nugget} must be non-negative"
            )));
        }
        let hyper = Hyperparameters {
            nugget_ratio: nugget / kernel.sigma2,
            rho: kernel.rho.clone(),
        };
        let mut s = Self::condition_many(design, &[targets.to_vec()], spec, hyper, true)?;
        let mut surface = s.pop().unwrap();
        surface.kernel.sigma2 = kernel.sigma2;
        Ok(surface)
    }

    /// Maximum-likelihood fit with hyperparameters specific to these targets.
    pub fn fit(
        design: &[Vec<T>],
        targets: &[T],
        spec: &MeanSpec,
        options: &FitOptions,
        warm: Option<&Hyperparameters<T>>,
    ) -> Result<Self> {
        let mut s = Self::fit_shared(design, &[targets.to_vec()], spec, options, warm)?;
        Ok(s.pop().unwrap())
    }

    /// Fits one surface per target set with common length-scales and nugget
    /// ratio, chosen to maximise the summed profile likelihood. Mean
    /// coefficients and signal variances are estimated per target set.
    pub fn fit_shared(
        design: &[Vec<T>],
        targets: &[Vec<T>],
        spec: &MeanSpec,
        options: &FitOptions,
        warm: Option<&Hyperparameters<T>>,
    ) -> Result<Vec<Self>> {
        if design.len() < options.min_points {
            return Err(Error::Parameter(format!(
                "fitting needs at least {} design points, got {}",
                options.min_points,
                design.len()
            )));
        }
        let d = Design::new(design)?;
        let (terms, _) = check_inputs(&d, targets, spec)?;
        let h = basis_matrix(&terms, &d.points);
        let y = target_matrix(targets);
        let dim = d.dim();
        let (lo, hi) = options.bounds::<T>(dim);
        let clamp = |x: &[T]| -> Vec<T> {
            x.iter()
                .zip(lo.iter().zip(&hi))
                .map(|(v, (l, u))| v.max(*l).min(*u))
                .collect()
        };
        let objective = |x: &[T]| -> T {
            let p = Hyperparameters::from_log(&clamp(x));
            match solve(d.covariance(&p.rho, p.nugget_ratio), &h, &y) {
                Ok(s) => -s.log_likelihood.iter().fold(T::zero(), |a, b| a + *b),
                Err(_) => T::max_value().unwrap(),
            }
        };

        let mut best: Option<(Vec<T>, T, bool)> = None;
        for k in 0..options.starts.max(1) {
            let x0 = match (k, warm) {
                (0, Some(w)) if w.rho.len() == dim => w.to_log(),
                _ => options.start::<T>(k, dim).to_log(),
            };
            let m = nelder_mead(
                &objective,
                &clamp(&x0),
                T::one(),
                options.max_evaluations,
                T::lit(1e-7),
            );
            log::debug!(
                "start {k}: -loglik {} after {} evaluations",
                m.value,
                m.evaluations
            );
            if best.as_ref().is_none_or(|b| m.value < b.1) {
                best = Some((clamp(&m.x), m.value, m.converged));
            }
        }
        let (x, value, converged) = best.unwrap();
        if value == T::max_value().unwrap() {
            return Err(Error::Numerical(
                "no hyperparameters gave a positive definite covariance".into(),
            ));
        }
        if !converged {
            log::warn!("emulator hyperparameter search stopped at the evaluation budget");
        }
        let mut out = Self::condition_many(
            design,
            targets,
            spec,
            Hyperparameters::from_log(&x),
            converged,
        )?;
        for s in &mut out {
            s.kernel.sigma2 = s.kernel.sigma2.max(T::lit(SIGMA2_FLOOR));
        }
        Ok(out)
    }

    /// Conditions every target set on shared hyperparameters; signal variances
    /// are the profile estimates.
    pub fn condition_many(
        design: &[Vec<T>],
        targets: &[Vec<T>],
        spec: &MeanSpec,
        hyper: Hyperparameters<T>,
        converged: bool,
    ) -> Result<Vec<Self>> {
        let d = Design::new(design)?;
        if hyper.rho.len() != d.dim() {
            return Err(Error::Dimension(format!(
                "{} length-scales for {}-dimensional inputs",
                hyper.rho.len(),
                d.dim()
            )));
        }
        Kernel::new(T::one(), hyper.rho.clone())?;
        let (terms, dropped) = check_inputs(&d, targets, spec)?;
        let h = basis_matrix(&terms, &d.points);
        let y = target_matrix(targets);
        let s = solve(d.covariance(&hyper.rho, hyper.nugget_ratio), &h, &y)?;
        let shared = Arc::new(Shared {
            design: d,
            hyper: hyper.clone(),
            l: s.l,
            dropped: dropped.clone(),
            converged,
            log_det: s.log_det,
        });
        Ok((0..targets.len())
            .map(|j| GpSurface {
                shared: shared.clone(),
                mean: MeanModel {
                    terms: terms.clone(),
                    beta: s.beta.column(j).iter().copied().collect(),
                    dropped: dropped.clone(),
                },
                kernel: Kernel {
                    sigma2: s.sigma2[j],
                    rho: hyper.rho.clone(),
                },
                targets: targets[j].clone(),
                alpha: s.alpha.column(j).iter().copied().collect(),
                log_likelihood: s.log_likelihood[j],
            })
            .collect())
    }

    pub fn mean_model(&self) -> &MeanModel<T> {
        &self.mean
    }

    pub fn kernel(&self) -> &Kernel<T> {
        &self.kernel
    }

    pub fn hyperparameters(&self) -> &Hyperparameters<T> {
        &self.shared.hyper
    }

    /// Noise variance `sigma2 * nugget_ratio`.
    pub fn nugget(&self) -> T {
        self.kernel.sigma2 * self.shared.hyper.nugget_ratio
    }

    pub fn design(&self) -> &[Vec<T>] {
        &self.shared.design.points
    }

    pub fn targets(&self) -> &[T] {
        &self.targets
    }

    /// Profile log-likelihood of these targets at the fitted hyperparameters.
    pub fn log_likelihood(&self) -> T {
        self.log_likelihood
    }

    /// `log det (R + nugget_ratio I)`.
    pub fn log_det(&self) -> T {
        self.shared.log_det
    }

    /// False when the optimiser stopped at its evaluation budget.
    pub fn converged(&self) -> bool {
        self.shared.converged
    }

    pub fn dropped_terms(&self) -> &[BasisTerm] {
        &self.shared.dropped
    }

    fn correlations(&self, x: &[T]) -> DVector<T> {
        let pts = &self.shared.design.points;
        DVector::from_iterator(pts.len(), pts.iter().map(|p| self.kernel.correlation(p, x)))
    }

    /// Predictive mean and variance of the latent surface at `x`.
    pub fn predict(&self, x: &[T]) -> (T, T) {
        let r = self.correlations(x);
        let mean = self.mean.eval(x) + dot(r.as_slice(), &self.alpha);
        let v = self
            .shared
            .l
            .solve_lower_triangular(&r)
            .expect("factor has a positive diagonal");
        let var = self.kernel.sigma2 * (T::one() - v.norm_squared());
        (mean, var.max(T::zero()))
    }

    pub fn predict_mean(&self, x: &[T]) -> T {
        let pts = &self.shared.design.points;
        let s: T = pts
            .iter()
            .zip(&self.alpha)
            .map(|(p, a)| *a * self.kernel.correlation(p, x))
            .fold(T::zero(), |a, b| a + b);
        self.mean.eval(x) + s
    }

    /// Mean predictor along coordinate `dim` with the other coordinates fixed
    /// at `base`.
    pub fn slice(&self, base: &[T], dim: usize) -> Slice<'_, T> {
        let s5 = T::lit(5.0).sqrt();
        let third = T::one() / T::lit(3.0);
        let weights = self
            .shared
            .design
            .points
            .iter()
            .zip(&self.alpha)
            .map(|(p, a)| {
                let mut sum = T::zero();
                let mut poly = T::one();
                for (k, ((x, y), r)) in p.iter().zip(base).zip(&self.kernel.rho).enumerate() {
                    if k == dim {
                        continue;
                    }
                    let u = s5 * (*x - *y).abs() / *r;
                    sum += u;
                    poly *= T::one() + u + u * u * third;
                }
                *a * poly * (-sum).exp()
            })
            .collect();
        Slice {
            surface: self,
            base: base.to_vec(),
            dim,
            weights,
        }
    }
}

/// Cached partial products for predicting along one coordinate.
pub struct Slice<'a, T: Scalar> {
    surface: &'a GpSurface<T>,
    base: Vec<T>,
    dim: usize,
    weights: Vec<T>,
}

impl<T: Scalar> Slice<'_, T> {
    pub fn mean(&mut self, t: T) -> T {
        self.base[self.dim] = t;
        let s = &self.surface;
        let rho = s.kernel.rho[self.dim];
        let gp = s
            .shared
            .design
            .points
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| *w * super::kernel::matern52((p[self.dim] - t) / rho))
            .fold(T::zero(), |a, b| a + b);
        s.mean.eval(&self.base) + gp
    }
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .map(|(x, y)| *x * *y)
        .fold(T::zero(), |a, b| a + b)
}

fn target_matrix<T: Scalar>(targets: &[Vec<T>]) -> DMatrix<T> {
    let n = targets[0].len();
    DMatrix::from_fn(n, targets.len(), |i, j| targets[j][i])
}

fn check_inputs<T: Scalar>(
    d: &Design<T>,
    targets: &[Vec<T>],
    spec: &MeanSpec,
) -> Result<(Vec<BasisTerm>, Vec<BasisTerm>)> {
    spec.validate()?;
    if targets.is_empty() {
        return Err(Error::Dimension("no target sets".into()));
    }
    for t in targets {
        if t.len() != d.n() {
            return Err(Error::Dimension(format!(
                "{} targets for {} design points",
                t.len(),
                d.n()
            )));
        }
        if t.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("emulator targets must be finite".into()));
        }
    }
    if let Some(a) = spec.active.iter().find(|a| **a >= d.dim()) {
        return Err(Error::Dimension(format!(
            "active dimension {} outside {}-dimensional inputs",
            a + 1,
            d.dim()
        )));
    }
    let (kept, dropped) = independent_terms(&spec.terms(), &d.points);
    if !dropped.is_empty() {
        let names: Vec<String> = dropped.iter().map(|t| t.label()).collect();
        log::warn!(
            "dropping linearly dependent mean terms: {}",
            names.join(", ")
        );
    }
    Ok((kept, dropped))
}
