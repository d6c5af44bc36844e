use nalgebra::{DMatrix, DVector};
use nashmsy::design::lhc;
use nashmsy::emulator::{FitOptions, GpSurface, Kernel, MeanSpec};
use nashmsy::seeds;
use proptest::prelude::*;
use rand_distr::{Distribution, StandardNormal};

fn m52(d: f64, rho: f64) -> f64 {
    let a = 5f64.sqrt() * d.abs() / rho;
    (1.0 + a + a * a / 3.0) * (-a).exp()
}

/// Dense universal-kriging prediction with basis `h`, assembled from scratch
/// and solved by LU.
fn dense_oracle(
    x: &[f64],
    y: &[f64],
    h: impl Fn(f64) -> Vec<f64>,
    sigma2: f64,
    rho: f64,
    nugget: f64,
    q: f64,
) -> (f64, f64) {
    let n = x.len();
    let k = DMatrix::from_fn(n, n, |i, j| {
        sigma2 * m52(x[i] - x[j], rho) + if i == j { nugget } else { 0.0 }
    });
    let p = h(x[0]).len();
    let hm = DMatrix::from_fn(n, p, |i, j| h(x[i])[j]);
    let yv = DVector::from_column_slice(y);
    let lu = k.clone().lu();
    let kih = lu.solve(&hm).unwrap();
    let kiy = lu.solve(&yv).unwrap();
    let beta = (hm.transpose() * &kih)
        .lu()
        .solve(&(hm.transpose() * &kiy))
        .unwrap();
    let resid = &yv - &hm * &beta;
    let kq = DVector::from_fn(n, |i, _| sigma2 * m52(x[i] - q, rho));
    let mean = DVector::from_vec(h(q)).dot(&beta) + kq.dot(&lu.solve(&resid).unwrap());
    let var = sigma2 - kq.dot(&lu.solve(&kq).unwrap());
    (mean, var)
}

#[test]
fn three_point_instance_matches_dense_solve() {
    let x = [0.2, 0.9, 1.6];
    let y = [1.0, -0.5, 2.0];
    let design: Vec<Vec<f64>> = x.iter().map(|v| vec![*v]).collect();
    let spec = MeanSpec::from_term_list(&[1], &[0.5]).unwrap();
    let basis = |v: f64| vec![1.0, if v >= 0.5 { (v - 0.5).powi(3) } else { 0.0 }];
    for nugget in [0.0, 0.1] {
        let k = Kernel::new(1.5, vec![0.7]).unwrap();
        let s = GpSurface::condition(&design, &y, &spec, k, nugget).unwrap();
        for q in [0.0, 0.55, 1.25, 2.0] {
            let (m, v) = s.predict(&[q]);
            let (mo, vo) = dense_oracle(&x, &y, basis, 1.5, 0.7, nugget, q);
            assert!((m - mo).abs() < 1e-10, "mean {m} vs {mo}");
            assert!((v - vo).abs() < 1e-10, "var {v} vs {vo}");
        }
    }
}

#[test]
fn pure_spline_targets_are_interpolated() {
    let mut rng = seeds::rng(11, "test", &[]);
    let x = lhc::<f64>(40, 9, 0.0, 2.0, &mut rng).points;
    let f = |p: &[f64]| {
        let s = |v: f64, k: f64| if v >= k { (v - k).powi(3) } else { 0.0 };
        2.0 + 0.5 * s(p[2], 0.5) - 0.8 * s(p[2], 1.0) + 0.3 * s(p[3], 1.5)
    };
    let y: Vec<f64> = x.iter().map(|p| f(p)).collect();
    let spec = MeanSpec::from_term_list(&[3, 4], &[0.5, 1.0, 1.5]).unwrap();
    let fitted = GpSurface::fit(&x, &y, &spec, &FitOptions::default(), None).unwrap();
    let exact = GpSurface::condition(&x, &y, &spec, fitted.kernel().clone(), 0.0).unwrap();
    for (p, t) in x.iter().zip(&y) {
        assert!((fitted.predict(p).0 - t).abs() < 1e-6);
        assert!((exact.predict(p).0 - t).abs() < 1e-6);
    }
}

#[test]
fn constant_targets() {
    let mut rng = seeds::rng(12, "test", &[]);
    let x = lhc::<f64>(25, 3, 0.0, 2.0, &mut rng).points;
    let y = vec![4.25; 25];
    let s = GpSurface::fit(
        &x,
        &y,
        &MeanSpec::intercept_only(),
        &FitOptions::default(),
        None,
    )
    .unwrap();
    let mut rng = seeds::rng(13, "test", &[]);
    for q in lhc::<f64>(30, 3, 0.0, 2.0, &mut rng).points {
        assert!((s.predict_mean(&q) - 4.25).abs() < 1e-9);
    }
    for p in &x {
        assert!(s.predict(p).1 < 1e-9);
    }
}

#[test]
fn refit_recovers_length_scales_of_a_gp_draw() {
    let truth = [0.4, 1.0];
    let mut ratios = [Vec::new(), Vec::new()];
    for seed in 0..15u64 {
        let mut rng = seeds::rng(seed, "gp-draw", &[]);
        let x = lhc::<f64>(30, 2, 0.0, 2.0, &mut rng).points;
        let k = Kernel::new(1.0, truth.to_vec()).unwrap();
        let mut gram = k.gram(&x);
        for i in 0..x.len() {
            gram[(i, i)] += 1e-10;
        }
        let l = gram.cholesky().unwrap().unpack();
        let z = DVector::from_fn(x.len(), |_, _| StandardNormal.sample(&mut rng));
        let y: Vec<f64> = (l * z).iter().copied().collect();
        let s = GpSurface::fit(
            &x,
            &y,
            &MeanSpec::intercept_only(),
            &FitOptions::default(),
            None,
        )
        .unwrap();
        for d in 0..2 {
            ratios[d].push(s.kernel().rho[d] / truth[d]);
        }
    }
    for r in &mut ratios {
        r.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = r[r.len() / 2];
        assert!((1.0 / 3.0..=3.0).contains(&median), "median ratio {median}");
    }
}

#[test]
fn large_gram_matrix_is_psd() {
    let mut rng = seeds::rng(14, "test", &[]);
    let x = lhc::<f64>(200, 9, 0.0, 2.0, &mut rng).points;
    let k = Kernel::new(3.0, vec![0.05, 0.3, 1.0, 2.0, 5.0, 10.0, 0.7, 0.2, 50.0]).unwrap();
    let g = k.gram(&x);
    let scale = g.trace() / 200.0;
    let min = g.symmetric_eigenvalues().min();
    assert!(min > -1e-8 * scale, "{min}");
}

fn unit_points(n: usize, d: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(0.0..2.0f64, d), n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn gram_is_psd(
        x in unit_points(12, 3),
        rho in prop::collection::vec(0.05..5.0f64, 3),
        sigma2 in 0.1..10.0f64,
    ) {
        let g = Kernel::new(sigma2, rho).unwrap().gram(&x);
        let min = g.clone().symmetric_eigenvalues().min();
        prop_assert!(min > -1e-8 * g.trace() / 12.0);
    }

    #[test]
    fn prediction_ignores_training_order(
        x in unit_points(8, 2),
        y in prop::collection::vec(-3.0..3.0f64, 8),
        q in prop::collection::vec(0.0..2.0f64, 2),
        shift in 1usize..8,
    ) {
        let spec = MeanSpec::from_term_list(&[1], &[1.0]).unwrap();
        let k = Kernel::new(1.0, vec![0.6, 0.9]).unwrap();
        let a = GpSurface::condition(&x, &y, &spec, k.clone(), 1e-3).unwrap();
        let mut xp = x.clone();
        let mut yp = y.clone();
        xp.rotate_left(shift);
        yp.rotate_left(shift);
        xp.swap(0, 7);
        yp.swap(0, 7);
        let b = GpSurface::condition(&xp, &yp, &spec, k, 1e-3).unwrap();
        let (ma, va) = a.predict(&q);
        let (mb, vb) = b.predict(&q);
        prop_assert!((ma - mb).abs() < 1e-8 * (1.0 + ma.abs()));
        prop_assert!((va - vb).abs() < 1e-8);
    }

    #[test]
    fn extra_point_never_raises_variance(
        x in unit_points(7, 2),
        extra in prop::collection::vec(0.0..2.0f64, 2),
        q in prop::collection::vec(0.0..2.0f64, 2),
    ) {
        let spec = MeanSpec::intercept_only();
        let k = Kernel::new(2.0, vec![0.5, 0.8]).unwrap();
        let y = vec![0.0; 7];
        let small = GpSurface::condition(&x, &y, &spec, k.clone(), 0.0);
        let mut xb = x.clone();
        xb.push(extra);
        let big = GpSurface::condition(&xb, &[0.0; 8], &spec, k, 0.0);
        if let (Ok(small), Ok(big)) = (small, big) {
            prop_assert!(big.predict(&q).1 <= small.predict(&q).1 + 1e-9);
        }
    }
}
