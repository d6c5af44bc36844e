//! Linear-Gaussian state space with diagonal dynamics and scalar observations.
//!
//! Each state component evolves as `x' = phi x + w`, `w ~ N(0, q)`, independent
//! across components. Every observation is a sum of selected components plus
//! independent Gaussian noise, so updates are processed one scalar at a time.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Gaussian<T: Scalar> {
    pub mean: DVector<T>,
    pub cov: DMatrix<T>,
}

impl<T: Scalar> Gaussian<T> {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalStateSpace<T: Scalar> {
    pub transition: DVector<T>,
    pub process_var: DVector<T>,
    pub init_mean: DVector<T>,
    /// Diagonal of the initial covariance.
    pub init_var: DVector<T>,
}

/// One scalar observation: the sum of `components` plus noise whose variance
/// is `noise_var[noise]` at evaluation time.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarObs<T: Scalar> {
    pub components: Vec<usize>,
    pub value: T,
    pub noise: usize,
}

/// Filter output for every step.
#[derive(Debug, Clone)]
pub struct FilterPass<T: Scalar> {
    pub log_likelihood: T,
    pub predicted: Vec<Gaussian<T>>,
    pub filtered: Vec<Gaussian<T>>,
}

impl<T: Scalar> DiagonalStateSpace<T> {
    pub fn dim(&self) -> usize {
        self.transition.len()
    }

    pub fn prior(&self) -> Gaussian<T> {
        Gaussian {
            mean: self.init_mean.clone(),
            cov: DMatrix::from_diagonal(&self.init_var),
        }
    }

    pub fn predict(&self, g: &Gaussian<T>) -> Gaussian<T> {
        let n = self.dim();
        let phi = &self.transition;
        let mean = g.mean.component_mul(phi);
        let mut cov = g.cov.clone();
        for j in 0..n {
            for i in 0..n {
                cov[(i, j)] *= phi[i] * phi[j];
            }
            cov[(j, j)] += self.process_var[j];
        }
        Gaussian { mean, cov }
    }

    /// Conditions on `value = sum(x[components]) + e`, `e ~ N(0, noise_var)`,
    /// returning the log predictive density of `value`.
    pub fn update(
        &self,
        g: &mut Gaussian<T>,
        components: &[usize],
        value: T,
        noise_var: T,
    ) -> Result<T> {
        let n = g.dim();
        let mut ph = DVector::<T>::zeros(n);
        for &c in components {
            ph += g.cov.column(c);
        }
        let mut s = noise_var;
        let mut pred = T::zero();
        for &c in components {
            s += ph[c];
            pred += g.mean[c];
        }
        if !(s > T::zero()) || !s.is_finite() {
            return Err(Error::Numerical(format!(
                "non-positive innovation variance {s}"
            )));
        }
        let e = value - pred;
        g.mean.axpy(e / s, &ph, T::one());
        g.cov.ger(-T::one() / s, &ph, &ph, T::one());
        let two_pi = T::two_pi();
        Ok(-(T::lit(0.5)) * ((two_pi * s).ln() + e * e / s))
    }

    fn update_step(
        &self,
        state: &mut Gaussian<T>,
        step: &[ScalarObs<T>],
        noise_var: &[T],
    ) -> Result<T> {
        let mut ll = T::zero();
        for o in step {
            ll += self.update(state, &o.components, o.value, noise_var[o.noise])?;
        }
        symmetrize(&mut state.cov);
        Ok(ll)
    }

    /// Filters every step, starting from the prior at step 0.
    pub fn filter(&self, obs: &[Vec<ScalarObs<T>>], noise_var: &[T]) -> Result<FilterPass<T>> {
        let mut predicted = Vec::with_capacity(obs.len());
        let mut filtered = Vec::with_capacity(obs.len());
        let mut ll = T::zero();
        let mut state = self.prior();
        for (t, step) in obs.iter().enumerate() {
            if t > 0 {
                state = self.predict(&state);
            }
            predicted.push(state.clone());
            ll += self.update_step(&mut state, step, noise_var)?;
            filtered.push(state.clone());
        }
        Ok(FilterPass {
            log_likelihood: ll,
            predicted,
            filtered,
        })
    }

    /// Log marginal likelihood and final filtered state, without storing the pass.
    pub fn filter_last(
        &self,
        obs: &[Vec<ScalarObs<T>>],
        noise_var: &[T],
    ) -> Result<(T, Gaussian<T>)> {
        let mut ll = T::zero();
        let mut state = self.prior();
        for (t, step) in obs.iter().enumerate() {
            if t > 0 {
                state = self.predict(&state);
            }
            ll += self.update_step(&mut state, step, noise_var)?;
        }
        Ok((ll, state))
    }

    /// Continues filtering from a filtered state: each step predicts, then updates.
    pub fn advance(
        &self,
        mut state: Gaussian<T>,
        obs: &[Vec<ScalarObs<T>>],
        noise_var: &[T],
    ) -> Result<Gaussian<T>> {
        for step in obs {
            state = self.predict(&state);
            self.update_step(&mut state, step, noise_var)?;
        }
        Ok(state)
    }

    /// Rauch-Tung-Striebel smoothing of a filter pass.
    pub fn smooth(&self, pass: &FilterPass<T>) -> Result<Vec<Gaussian<T>>> {
        let n_steps = pass.filtered.len();
        let mut out: Vec<Gaussian<T>> = Vec::with_capacity(n_steps);
        if n_steps == 0 {
            return Ok(out);
        }
        out.push(pass.filtered[n_steps - 1].clone());
        for t in (0..n_steps - 1).rev() {
            let f = &pass.filtered[t];
            let p = &pass.predicted[t + 1];
            let next = out.last().unwrap();
            // G = P_f Phi P_pred^{-1}; solve P_pred G' = Phi P_f.
            let mut rhs = f.cov.clone();
            for i in 0..rhs.nrows() {
                let phi = self.transition[i];
                for j in 0..rhs.ncols() {
                    rhs[(i, j)] *= phi;
                }
            }
            let chol = p.cov.clone().cholesky().ok_or_else(|| {
                Error::Numerical(format!(
                    "predicted covariance at step {} not positive definite",
                    t + 1
                ))
            })?;
            let gain = chol.solve(&rhs).transpose();
            let mean = &f.mean + &gain * (&next.mean - &p.mean);
            let mut cov = &f.cov + &gain * (&next.cov - &p.cov) * gain.transpose();
            symmetrize(&mut cov);
            out.push(Gaussian { mean, cov });
        }
        out.reverse();
        Ok(out)
    }
}

pub(crate) fn symmetrize<T: Scalar>(m: &mut DMatrix<T>) {
    let n = m.nrows();
    let half = T::lit(0.5);
    for i in 0..n {
        for j in 0..i {
            let v = (m[(i, j)] + m[(j, i)]) * half;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}
