use flatchain::forms::*;
use flatchain::quad::adaptive_simpson;
use flatchain::Error;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn rotation_values() {
    let phi = builtin("rotation", 2).unwrap().as_one_form().unwrap();
    let mut out = [0.0; 2];
    phi.eval(&[0.0, 1.0], &mut out);
    assert_eq!(out, [-1.0, 0.0]);
}

#[test]
fn exterior_derivative_of_gradients_vanishes() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for d in [2, 3] {
        for name in ["grad-half-norm2", "grad-gauss", "grad-x1"] {
            let psi = builtin(&format!("d({name})"), d).unwrap().as_two_form().unwrap();
            let phi = builtin(name, d).unwrap().as_one_form().unwrap();
            let mut comp = vec![0.0; pair_count(d)];
            let mut jac = vec![0.0; d * d];
            for _ in 0..20 {
                let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
                psi.eval(&x, &mut comp);
                assert!(comp.iter().all(|&c| c.abs() < 1e-8), "{name}: {comp:?}");
                phi.jacobian(&x, &mut jac);
                for i in 0..d {
                    for j in 0..d {
                        assert!((jac[i * d + j] - jac[j * d + i]).abs() < 1e-8);
                    }
                }
            }
        }
    }
}

#[test]
fn gaussian_transform_at_zero_is_the_integral() {
    let phi = builtin("gaussian", 2).unwrap().as_one_form().unwrap();
    let mut hat = [Complex64::new(0.0, 0.0); 2];
    assert!(phi.fourier(&[0.0, 0.0], &mut hat));
    let inner = |x: f64| {
        adaptive_simpson(
            &|y: f64| {
                let mut v = [0.0; 2];
                phi.eval(&[x, y], &mut v);
                v[0]
            },
            -10.0,
            10.0,
            1e-12,
        )
    };
    let integral = adaptive_simpson(&inner, -10.0, 10.0, 1e-10);
    assert!((hat[0].re - integral).abs() < 1e-6 * integral, "{} vs {integral}", hat[0].re);
    assert_eq!(hat[1], Complex64::new(0.0, 0.0));
}

#[test]
fn every_builtin_registers() {
    for d in [2, 3] {
        for name in BUILTIN_NAMES {
            let desc = builtin(name, d).unwrap();
            desc.verify().unwrap_or_else(|e| panic!("{name} in {d}: {e}"));
        }
    }
    assert!(builtin("dx1^dx3", 3).is_ok());
}

#[test]
fn unknown_and_malformed_names() {
    assert!(matches!(builtin("spiral", 2), Err(Error::Unknown { .. })));
    assert!(builtin("dx2^dx1", 2).is_err());
    assert!(builtin("rotation", 1).is_err());
    assert!(builtin("d(subgraph)", 1).is_err());
}
