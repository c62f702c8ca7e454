use std::f64::consts::PI;

use ktail::quad::{integrate_pieces, Tolerance};
use ktail::stable::fit_mle;
use ktail::StableParams;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sp(a: f64, b: f64, g: f64, d: f64) -> StableParams {
    StableParams::new(a, b, g, d).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn char_fn_modulus(a in 0.1f64..=2.0, b in -1f64..=1.0, g in 0.1f64..5.0, d in -3f64..3.0, t in -20f64..20.0) {
        let p = sp(a, b, g, d);
        let expect = (-(g.powf(a)) * t.abs().powf(a)).exp();
        prop_assert!((p.char_fn(t).norm() - expect).abs() <= 1e-12);
        prop_assert!((p.char_fn(-t) - p.char_fn(t).conj()).norm() <= 1e-12);
    }

    #[test]
    fn symmetric_pdf(a in 0.5f64..=2.0, g in 0.2f64..3.0, d in -2f64..2.0, x in 0f64..8.0) {
        let p = sp(a, 0.0, g, d);
        prop_assert!((p.pdf(d + x).unwrap() - p.pdf(d - x).unwrap()).abs() <= 1e-9);
    }

    #[test]
    fn cdf_and_sf_complement(a in 0.5f64..=2.0, b in -1f64..=1.0, x in -20f64..20.0) {
        let p = sp(a, b, 1.0, 0.0);
        let total = p.cdf(x).unwrap() + p.sf(x).unwrap();
        prop_assert!((total - 1.0).abs() <= 1e-12);
    }
}

#[test]
fn levy_mass() {
    let p = sp(0.5, 1.0, 1.0, 0.0);
    // Mass left of -2 is zero up to quadrature error: the 0-parameterization
    // puts the support edge at -tan(π/4) = -1.
    let breaks = [-2.0, -1.0, -0.5, 0.0, 1.0, 3.0, 10.0, 40.0];
    let tol = Tolerance { abs: 1e-10, rel: 1e-10, ..Tolerance::default() };
    let body = integrate_pieces(|x| p.pdf(x).unwrap(), &breaks, tol).unwrap().value;
    let mass = p.cdf(-2.0).unwrap() + body + p.sf(40.0).unwrap();
    assert!((mass - 1.0).abs() < 1e-6, "{mass}");
}

#[test]
fn cdf_symmetry_and_monotonicity() {
    for a in [0.7, 1.0, 1.5, 2.0] {
        assert!((sp(a, 0.0, 1.3, 0.0).cdf(0.0).unwrap() - 0.5).abs() < 1e-7);
    }
    let p = sp(1.4, 0.6, 0.8, -0.3);
    let values: Vec<f64> = (0..100).map(|i| p.cdf(-15.0 + 0.3 * i as f64).unwrap()).collect();
    assert!(values.windows(2).all(|w| w[1] >= w[0]));
    assert!(values[0] < 0.01 && values[99] > 0.99);
}

#[test]
fn loglik_permutation_and_location() {
    let cauchy = sp(1.0, 0.0, 1.0, 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let data: Vec<f64> = (0..200).map(|_| (PI * (rng.random::<f64>() - 0.5)).tan()).collect();
    let mut reversed = data.clone();
    reversed.reverse();
    let ll = cauchy.loglik(&data).unwrap();
    assert!((ll - cauchy.loglik(&reversed).unwrap()).abs() < 1e-9);
    let far = sp(1.0, 0.0, 1.0, 25.0).loglik(&data).unwrap();
    assert!(far < ll - 100.0);
}

#[test]
fn fit_recovers_cauchy() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let data: Vec<f64> = (0..5000).map(|_| (PI * (rng.random::<f64>() - 0.5)).tan()).collect();
    let fit = fit_mle(&data, true).unwrap();
    assert!((0.9..=1.1).contains(&fit.params.alpha()), "{:?}", fit.params);
    assert!(fit.params.beta().abs() < 0.1, "{:?}", fit.params);
    assert!(fit.loglik >= fit.initial_loglik);
    assert!((fit.loglik - fit.params.loglik(&data).unwrap()).abs() < 1e-10 * fit.loglik.abs().max(1.0));
}

#[test]
fn fit_reaches_normal_boundary() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let data: Vec<f64> = (0..5000)
        .map(|_| {
            // Box–Muller
            let (u, v): (f64, f64) = (rng.random(), rng.random());
            (-2.0 * (1.0 - u).ln()).sqrt() * (2.0 * PI * v).cos()
        })
        .collect();
    let fit = fit_mle(&data, false).unwrap();
    assert!(fit.params.alpha() > 1.95, "{:?}", fit.params);
    let gamma = fit.params.gamma();
    assert!((gamma * 2f64.sqrt() - 1.0).abs() < 0.1, "{gamma}");
    assert!(fit.loglik >= fit.initial_loglik);

    let heavy = fit_mle(&data, true).unwrap();
    assert!(heavy.params.alpha() < 2.0);
}
