//! Mean functions: an intercept plus truncated-power cubic splines
//! `s(x) = sum_h 1{x >= k_h} b_h (x - k_h)^3` in each active dimension.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::types::{OutputKind, F_MAX, N_SPECIES};

/// Active dimensions (1-based) of each species' yield mean function.
const YIELD_TERMS: [&[usize]; N_SPECIES] = [
    &[1, 3, 5],
    &[2, 3, 5],
    &[3, 5, 8, 9],
    &[3, 4],
    &[3, 4, 5],
    &[1, 3, 6, 7],
    &[3, 4, 7, 8],
    &[3, 5, 8],
    &[3, 5, 8, 9],
];

/// Active dimensions (1-based) of each species' SSB mean function.
const SSB_TERMS: [&[usize]; N_SPECIES] = [
    &[1, 2, 3, 4, 5, 8, 9],
    &[1, 2, 3, 8, 9],
    &[1, 2, 3, 4, 5, 6, 8, 9],
    &[1, 2, 3, 4, 5, 7, 8, 9],
    &[1, 2, 3, 4, 5, 6, 7, 8, 9],
    &[1, 2, 3, 4],
    &[1, 2, 3, 4, 5, 6, 7, 8],
    &[2, 3, 4, 5, 8],
    &[1, 2, 3, 4, 8, 9],
];

/// Active dimensions (1-based) for an output kind and species (0-based).
pub fn term_list(kind: OutputKind, species: usize) -> &'static [usize] {
    match kind {
        OutputKind::Yield => YIELD_TERMS[species],
        OutputKind::Ssb => SSB_TERMS[species],
    }
}

/// All 18 term lists keyed by (kind, species index).
pub fn default_term_lists() -> BTreeMap<(OutputKind, usize), Vec<usize>> {
    let mut m = BTreeMap::new();
    for kind in OutputKind::ALL {
        for s in 0..N_SPECIES {
            m.insert((kind, s), term_list(kind, s).to_vec());
        }
    }
    m
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BasisTerm {
    Intercept,
    /// `(x[dim] - knot)^3` for `x[dim] >= knot`; `dim` is 0-based.
    Spline {
        dim: usize,
        knot: f64,
    },
}

impl BasisTerm {
    pub fn eval<T: Scalar>(&self, x: &[T]) -> T {
        match *self {
            BasisTerm::Intercept => T::one(),
            BasisTerm::Spline { dim, knot } => {
                let d = x[dim] - T::lit(knot);
                if d >= T::zero() {
                    d * d * d
                } else {
                    T::zero()
                }
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            BasisTerm::Intercept => "intercept".into(),
            BasisTerm::Spline { dim, knot } => format!("s{}@{knot}", dim + 1),
        }
    }
}

/// Structure of a mean function before coefficients are estimated.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanSpec {
    /// Active dimensions, 0-based.
    pub active: Vec<usize>,
    pub knots: Vec<f64>,
}

impl MeanSpec {
    /// From a 1-based term list.
    pub fn from_term_list(dims: &[usize], knots: &[f64]) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::Parameter("term lists are 1-based".into()));
        }
        let spec = Self {
            active: dims.iter().map(|d| d - 1).collect(),
            knots: knots.to_vec(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn intercept_only() -> Self {
        Self {
            active: vec![],
            knots: vec![],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.knots.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Parameter(format!(
                "knots {:?} must be strictly increasing",
                self.knots
            )));
        }
        if self.knots.iter().any(|k| !(0.0..=F_MAX).contains(k)) {
            return Err(Error::Parameter(format!(
                "knots {:?} must lie in [0, 2]",
                self.knots
            )));
        }
        Ok(())
    }

    pub fn terms(&self) -> Vec<BasisTerm> {
        let mut t = vec![BasisTerm::Intercept];
        for &dim in &self.active {
            for &knot in &self.knots {
                t.push(BasisTerm::Spline { dim, knot });
            }
        }
        t
    }
}

/// A fitted mean function.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanModel<T: Scalar> {
    pub terms: Vec<BasisTerm>,
    pub beta: Vec<T>,
    /// Terms removed because their design columns were linearly dependent.
    pub dropped: Vec<BasisTerm>,
}

impl<T: Scalar> MeanModel<T> {
    pub fn eval(&self, x: &[T]) -> T {
        self.terms
            .iter()
            .zip(&self.beta)
            .map(|(t, b)| *b * t.eval(x))
            .fold(T::zero(), |a, b| a + b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn published_term_lists() {
        assert_eq!(term_list(OutputKind::Yield, 3), &[3, 4]);
        assert_eq!(term_list(OutputKind::Ssb, 7), &[2, 3, 4, 5, 8]);
        assert_eq!(term_list(OutputKind::Yield, 0), &[1, 3, 5]);
        assert_eq!(term_list(OutputKind::Ssb, 4).len(), 9);
        assert_eq!(default_term_lists().len(), 18);
    }

    #[test]
    fn spline_basis_values() {
        let t = BasisTerm::Spline { dim: 1, knot: 0.5 };
        assert_eq!(t.eval(&[0.0, 0.4]), 0.0);
        assert_eq!(t.eval(&[0.0, 0.5]), 0.0);
        assert!((t.eval(&[0.0, 1.5f64]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn terms_layout_and_validation() {
        let s = MeanSpec::from_term_list(&[3, 4], &[0.5, 1.0, 1.5]).unwrap();
        let t = s.terms();
        assert_eq!(t.len(), 7);
        assert_eq!(t[4], BasisTerm::Spline { dim: 3, knot: 0.5 });
        assert!(MeanSpec::from_term_list(&[0], &[0.5]).is_err());
        assert!(MeanSpec::from_term_list(&[1], &[1.0, 0.5]).is_err());
        assert!(MeanSpec::from_term_list(&[1], &[2.5]).is_err());
    }

    #[test]
    fn inactive_dimensions_contribute_nothing() {
        let s = MeanSpec::from_term_list(&[2], &[0.5, 1.0, 1.5]).unwrap();
        let m = MeanModel {
            terms: s.terms(),
            beta: vec![1.0, 2.0, 3.0, 4.0],
            dropped: vec![],
        };
        let a = m.eval(&[0.0, 1.2, 0.0]);
        let b = m.eval(&[2.0, 1.2, 1.9]);
        assert_eq!(a, b);
        assert!((a - (1.0 + 2.0 * 0.7f64.powi(3) + 3.0 * 0.2f64.powi(3))).abs() < 1e-14);
    }
}
