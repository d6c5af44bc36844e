//! Nelder-Mead simplex minimisation.

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum<T> {
    pub x: Vec<T>,
    pub value: T,
    pub evaluations: usize,
    pub converged: bool,
}

/// Minimises `f` from `x0` with an axis-aligned initial simplex of size `step`.
///
/// Standard coefficients (reflection 1, expansion 2, contraction 1/2,
/// shrink 1/2). Converges when the spread of simplex values falls below
/// `ftol * (|f_best| + ftol)`. Non-finite values are treated as +inf.
pub fn nelder_mead<T, F>(mut f: F, x0: &[T], step: T, max_evals: usize, ftol: T) -> Minimum<T>
where
    T: Scalar,
    F: FnMut(&[T]) -> T,
{
    let n = x0.len();
    let mut evals = 0usize;
    let mut eval = |x: &[T], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            T::max_value().unwrap()
        }
    };
    let mut simplex: Vec<Vec<T>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += step;
        simplex.push(v);
    }
    let mut values: Vec<T> = simplex.iter().map(|x| eval(x, &mut evals)).collect();
    let half = T::lit(0.5);
    let two = T::lit(2.0);
    let mut converged = false;

    while evals < max_evals {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();
        let best = values[0];
        let worst = values[n];
        if (worst - best).abs() <= ftol * (best.abs() + ftol) {
            converged = true;
            break;
        }
        let mut centroid = vec![T::zero(); n];
        for x in &simplex[..n] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += *v;
            }
        }
        let nt = T::lit(n as f64);
        for c in &mut centroid {
            *c /= nt;
        }
        let along = |t: T| -> Vec<T> {
            centroid
                .iter()
                .zip(&simplex[n])
                .map(|(c, w)| *c + t * (*w - *c))
                .collect()
        };
        let xr = along(-T::one());
        let fr = eval(&xr, &mut evals);
        if fr < values[0] {
            let xe = along(-two);
            let fe = eval(&xe, &mut evals);
            if fe < fr {
                simplex[n] = xe;
                values[n] = fe;
            } else {
                simplex[n] = xr;
                values[n] = fr;
            }
        } else if fr < values[n - 1] {
            simplex[n] = xr;
            values[n] = fr;
        } else {
            let (xc, fc) = if fr < values[n] {
                let xc = along(-half);
                let fc = eval(&xc, &mut evals);
                (xc, fc)
            } else {
                let xc = along(half);
                let fc = eval(&xc, &mut evals);
                (xc, fc)
            };
            if fc < values[n].min(fr) {
                simplex[n] = xc;
                values[n] = fc;
            } else {
                let x0 = simplex[0].clone();
                for k in 1..=n {
                    for (v, b) in simplex[k].iter_mut().zip(&x0) {
                        *v = *b + half * (*v - *b);
                    }
                    values[k] = eval(&simplex[k], &mut evals);
                }
            }
        }
    }
    let best = (0..=n)
        .min_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap())
        .unwrap();
    Minimum {
        x: simplex[best].clone(),
        value: values[best],
        evaluations: evals,
        converged,
    }
}
