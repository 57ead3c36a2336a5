use flatchain::kernel::MollifierKernel::{self, Epanechnikov, Triangle};
use flatchain::mollify::*;
use flatchain::paths::*;
use flatchain::quad::integrate_piecewise;
use flatchain::sheet::{sheet_holder_constant, SheetGrid, DEFAULT_RATIO};
use flatchain::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

#[test]
fn kernel_point_values() {
    assert_eq!(Epanechnikov.eval(0.0), 0.75);
    assert_eq!(Triangle.eval(1.0), 0.0);
    assert_eq!(Triangle.eval(-1.0), 0.0);
    assert_eq!(Epanechnikov.deriv(0.5), -0.75);
    assert_eq!(Triangle.deriv(-0.3), 1.0);
    for k in MollifierKernel::ALL {
        k.certify().unwrap();
        assert!((k.mass() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn kernel_constants_regression() {
    // mpmath quadrature at 30 digits
    let frozen = [
        (Epanechnikov, 1.111_111_111_111_111_2, 0.708_790_984_318_399_5),
        (Triangle, 1.176_470_588_235_294_2, 0.573_234_076_981_463_2),
    ];
    for (k, k1, k2) in frozen {
        let c = k.constants(0.7);
        assert!((c.kappa_1 - k1).abs() < 1e-10, "{c:?}");
        assert!((c.kappa_2 - k2).abs() < 1e-10, "{c:?}");
    }
}

#[test]
fn constant_and_line_paths() {
    let c = generate_analytic(&AnalyticCurve::Constant { point: vec![2.0, -1.0] }, 256, 1.0).unwrap();
    let l = generate_analytic(&AnalyticCurve::Line { velocity: vec![0.5, 2.0] }, 256, 1.0).unwrap();
    for k in MollifierKernel::ALL {
        let ec = extend_constant(&c);
        assert_eq!(smooth_value(&ec, k, 0.4, 0.3).unwrap(), vec![2.0, -1.0]);
        assert_eq!(smooth_dt(&ec, k, 0.4, 0.3).unwrap(), vec![0.0, 0.0]);
        assert_eq!(smooth_dalpha(&ec, k, 0.4, 0.3).unwrap(), vec![0.0, 0.0]);
        let el = extend_constant(&l);
        let v = smooth_value(&el, k, 0.6, 0.25).unwrap();
        let dt = smooth_dt(&el, k, 0.6, 0.25).unwrap();
        let da = smooth_dalpha(&el, k, 0.6, 0.25).unwrap();
        assert!((v[0] - 0.3).abs() < 1e-10 && (v[1] - 1.2).abs() < 1e-10);
        assert!((dt[0] - 0.5).abs() < 1e-8 && (dt[1] - 2.0).abs() < 1e-8);
        assert!(da[0].abs() < 1e-8 && da[1].abs() < 1e-8);
    }
}

#[test]
fn under_resolved_scale_is_rejected() {
    let p = generate_fbm(0.7, 1, 1 << 10, 1.0, 3).unwrap();
    let e = extend_constant(&p);
    let r = smooth_value(&e, Epanechnikov, 0.5, 3.0 / 1024.0);
    assert!(matches!(r, Err(Error::UnderResolved { .. })));
    assert!(smooth_value(&e, Epanechnikov, 0.5, alpha_floor(p.step())).is_ok());
}

#[test]
fn value_matches_adaptive_quadrature() {
    let p = generate_fbm(0.7, 2, 1 << 12, 1.0, 42).unwrap();
    let e = extend_constant(&p);
    let (t, alpha) = (0.5, 0.1);
    let mut breaks: Vec<f64> = (0..=p.n_steps()).map(|j| p.time(j)).filter(|s| (s - t).abs() < alpha).collect();
    breaks.push(t);
    for k in MollifierKernel::ALL {
        let v = smooth_value(&e, k, t, alpha).unwrap();
        for c in 0..2 {
            let f = |s: f64| {
                let mut x = [0.0; 2];
                e.value_at(s, &mut x);
                k.eval((t - s) / alpha) / alpha * x[c]
            };
            let oracle = integrate_piecewise(&f, t - alpha, t + alpha, &breaks, 1e-13);
            assert!((v[c] - oracle).abs() < 1e-8, "{} vs {oracle}", v[c]);
        }
    }
}

#[test]
fn time_derivative_on_the_circle() {
    let n = 1 << 12;
    let horizon = 2.0 * PI;
    let p = generate_analytic(&AnalyticCurve::Circle { radius: 1.0 }, n, horizon).unwrap();
    let e = extend_constant(&p);
    let (t, alpha) = (PI / 2.0, 0.05);
    let step = horizon / (8.0 * n as f64);
    let dt = smooth_dt(&e, Epanechnikov, t, alpha).unwrap();
    let plus = smooth_value(&e, Epanechnikov, t + step, alpha).unwrap();
    let minus = smooth_value(&e, Epanechnikov, t - step, alpha).unwrap();
    for c in 0..2 {
        let fd = (plus[c] - minus[c]) / (2.0 * step);
        assert!((dt[c] - fd).abs() < 1e-4, "{} vs {fd}", dt[c]);
    }
}

#[test]
fn scale_derivative_on_fbm() {
    let p = generate_fbm(0.7, 2, 1 << 12, 1.0, 42).unwrap();
    let e = extend_constant(&p);
    let (t, alpha) = (0.5, 0.1);
    let step = alpha / 256.0;
    for k in MollifierKernel::ALL {
        let da = smooth_dalpha(&e, k, t, alpha).unwrap();
        let plus = smooth_value(&e, k, t, alpha + step).unwrap();
        let minus = smooth_value(&e, k, t, alpha - step).unwrap();
        for c in 0..2 {
            let fd = (plus[c] - minus[c]) / (2.0 * step);
            assert!((da[c] - fd).abs() < 1e-4, "{} vs {fd}", da[c]);
        }
    }
}

#[test]
fn finite_difference_errors_shrink() {
    let p = generate_fbm(0.7, 2, 1 << 11, 1.0, 5).unwrap();
    let e = extend_reflect(&p);
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..6 {
        let t = rng.gen_range(0.2..0.8);
        let alpha = rng.gen_range(0.05..0.3);
        let pt = smooth_point(&e, Epanechnikov, t, alpha).unwrap();
        let err = |delta: f64, along_t: bool| -> f64 {
            let (tp, tm, ap, am) = if along_t {
                (t + delta, t - delta, alpha, alpha)
            } else {
                (t, t, alpha + delta, alpha - delta)
            };
            let plus = smooth_value(&e, Epanechnikov, tp, ap).unwrap();
            let minus = smooth_value(&e, Epanechnikov, tm, am).unwrap();
            let exact = if along_t { &pt.dt } else { &pt.dalpha };
            (0..2).map(|c| ((plus[c] - minus[c]) / (2.0 * delta) - exact[c]).abs()).fold(0.0, f64::max)
        };
        for along_t in [true, false] {
            let coarse = err(0.2 * alpha, along_t);
            let fine = err(0.05 * alpha, along_t);
            assert!(fine * 3.0 <= coarse || fine < 1e-9, "{coarse} -> {fine} at t={t}, alpha={alpha}");
        }
    }
}

#[test]
fn derivative_bound_sweep() {
    for (hurst, seed) in [(0.6, 1), (0.7, 2), (0.8, 3)] {
        let gamma = hurst - 0.05;
        let p = generate_fbm(hurst, 2, 1 << 11, 1.0, seed).unwrap();
        for ext in [Extension::Constant, Extension::Reflect] {
            for k in MollifierKernel::ALL {
                let g = SheetGrid::new(&p, k, ext, gamma, 4.0 * p.step(), DEFAULT_RATIO).unwrap();
                let c = sheet_holder_constant(&g).unwrap();
                let kc = k.constants(gamma);
                for (m, &alpha) in g.alphas().iter().enumerate() {
                    let scale = 1.05 * c * alpha.powf(gamma - 1.0);
                    for j in 0..g.n_times() {
                        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
                        assert!(norm(g.dt(m, j)) <= scale * kc.kappa_1);
                        assert!(norm(g.dalpha(m, j)) <= scale * kc.kappa_2);
                    }
                }
            }
        }
    }
}
