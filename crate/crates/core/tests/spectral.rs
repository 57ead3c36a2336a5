use flatchain::forms::{builtin, GaussianBump, OneForm};
use flatchain::oracle::{riemann_sum, RiemannScheme};
use flatchain::paths::*;
use flatchain::quad::mean_stderr;
use flatchain::spectral::*;
use num_complex::Complex64;
use proptest::prelude::*;

fn bm_ensemble(count: u64, n: usize, base: u64) -> Vec<SampledPath> {
    (0..count).map(|s| generate_bm(2, n, 1.0, base + s).unwrap()).collect()
}

/// A 1-form whose transform is known and vanishes: the zero form.
struct Zero;
impl OneForm for Zero {
    fn dim(&self) -> usize {
        2
    }
    fn eval(&self, _: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
    fn fourier(&self, _: &[f64], out: &mut [Complex64]) -> bool {
        out.fill(Complex64::new(0.0, 0.0));
        true
    }
}

#[test]
fn left_second_moment_is_uniform_in_k() {
    let grid = WaveGrid::new(2, 3.0, 3).unwrap();
    let k = (0..grid.len()).find(|&i| grid.node(i) == [3.0, 0.0]).unwrap();
    let vals: Vec<f64> = bm_ensemble(400, 1 << 12, 5)
        .iter()
        .map(|p| compute_zk(p, &grid, RiemannScheme::Left).unwrap().norm_sqr(k))
        .collect();
    let (m, se) = mean_stderr(&vals);
    // E|Z_k|² = d·T for the left scheme
    assert!((m - 2.0).abs() < 3.0 * se, "{m} ± {se}");
}

#[test]
fn trivial_reconstructions() {
    let grid = WaveGrid::new(2, 12.0, 49).unwrap();
    let p = generate_bm(2, 1 << 10, 1.0, 1).unwrap();
    let z = compute_zk(&p, &grid, RiemannScheme::Left).unwrap();
    assert_eq!(reconstruct(&Zero, &z).unwrap().value, 0.0);
    let c = generate_analytic(&AnalyticCurve::Constant { point: vec![0.1, 0.2] }, 64, 1.0).unwrap();
    let zc = compute_zk(&c, &grid, RiemannScheme::Left).unwrap();
    let phi = GaussianBump { dim: 2, axis: 0 };
    assert_eq!(reconstruct(&phi, &zc).unwrap().value, 0.0);
}

#[test]
fn reconstruction_matches_left_sum() {
    let grid = WaveGrid::new(2, 12.0, 49).unwrap();
    let phi = builtin("gaussian", 2).unwrap().as_one_form().unwrap();
    let p = generate_bm(2, 1 << 12, 1.0, 5).unwrap();
    let r = reconstruct(phi.as_ref(), &compute_zk(&p, &grid, RiemannScheme::Left).unwrap()).unwrap();
    let direct = riemann_sum(&p, phi.as_ref(), RiemannScheme::Left, 1).unwrap();
    assert!((r.value - direct).abs() <= 0.1 * direct.abs(), "{} vs {direct}", r.value);
    assert!(r.relative_imag() < 0.01);
}

#[test]
fn sobolev_tails() {
    let grid = WaveGrid::new(2, 16.0, 33).unwrap();
    let constants: Vec<SampledPath> = (0..3)
        .map(|i| generate_analytic(&AnalyticCurve::Constant { point: vec![i as f64, 1.0] }, 64, 1.0).unwrap())
        .collect();
    assert_eq!(sobolev_estimate(&constants, &grid, 2.0, RiemannScheme::Left).unwrap().value, 0.0);

    let paths = bm_ensemble(100, 1 << 10, 300);
    let smooth = sobolev_estimate(&paths, &grid, 2.0, RiemannScheme::Left).unwrap();
    let rough = sobolev_estimate(&paths, &grid, 0.5, RiemannScheme::Left).unwrap();
    assert!(smooth.tail_trend < 0.3, "{}", smooth.tail_trend);
    assert!(rough.tail_trend > 0.5, "{}", rough.tail_trend);
    assert!(smooth.value > 0.0 && smooth.per_replica.iter().all(|v| v.is_finite()));
    assert!(sobolev_estimate(&paths[..1], &grid, 2.0, RiemannScheme::Left).is_err());
}

#[test]
fn brownian_moment_table() {
    let grid = WaveGrid::new(2, 16.0, 33).unwrap();
    let paths = bm_ensemble(120, 1 << 11, 900);
    let report = algass_growth_test(&paths, &grid).unwrap();
    let origin = report.row_at(0.0).unwrap();
    assert!((origin.mean_sq - 2.0).abs() < 3.0 * origin.stderr, "{origin:?}");
    // the left-scheme moment is bounded uniformly in k
    let peak = report.rows.iter().map(|r| r.left_mean_sq).fold(0.0, f64::max);
    assert!(peak <= 1.5 * origin.left_mean_sq, "{peak}");
    // the midpoint correction grows with |k|
    assert!(report.row_at(8.0).unwrap().gap > report.row_at(1.0).unwrap().gap);
    assert!(report.slope.is_finite());
}

#[test]
fn fractional_moment_table_is_reported() {
    let grid = WaveGrid::new(2, 16.0, 33).unwrap();
    let paths: Vec<SampledPath> = (0..40).map(|s| generate_fbm(0.7, 2, 1 << 10, 1.0, s).unwrap()).collect();
    let report = algass_growth_test(&paths, &grid).unwrap();
    assert!(report.slope.is_finite());
    assert_eq!(report.replicas, 40);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn reconstruction_is_linear(seed in 0u64..10_000, a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let grid = WaveGrid::new(2, 6.0, 13).unwrap();
        let p = generate_bm(2, 256, 1.0, seed).unwrap();
        let q = generate_bm(2, 256, 1.0, seed + 1).unwrap();
        let zp = compute_zk(&p, &grid, RiemannScheme::Midpoint).unwrap();
        let zq = compute_zk(&q, &grid, RiemannScheme::Midpoint).unwrap();
        let phi = GaussianBump { dim: 2, axis: 0 };
        let psi = GaussianBump { dim: 2, axis: 1 };
        let val = |f: &dyn OneForm, z: &FourierCoefficients| -> f64 {
            let mut hat = vec![Complex64::new(0.0, 0.0); 2];
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..grid.len() {
                f.fourier(&grid.node(i), &mut hat);
                acc += hat[0] * z.at(i)[0] + hat[1] * z.at(i)[1];
            }
            acc.re * grid.cell_volume() / (2.0 * std::f64::consts::PI).powi(2)
        };
        // linearity in Z
        let mut zs = zp.clone();
        for (s, (x, y)) in zs.z.iter_mut().zip(zp.z.iter().zip(&zq.z)) {
            *s = x * a + y * b;
        }
        let lhs = val(&phi, &zs);
        let rhs = a * val(&phi, &zp) + b * val(&phi, &zq);
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + rhs.abs()));
        // the library agrees with the direct sum, and is linear in φ
        let lib = reconstruct(&phi, &zp).unwrap().value + reconstruct(&psi, &zp).unwrap().value;
        prop_assert!((lib - val(&phi, &zp) - val(&psi, &zp)).abs() <= 1e-10 * (1.0 + lib.abs()));
    }
}
