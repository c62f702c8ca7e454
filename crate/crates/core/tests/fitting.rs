use ktail::mle::kappa_initializers;
use ktail::{fit_kappa, fit_normal, Error, KappaParams};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn weibull(n: usize, alpha: f64, beta: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| (-(1.0 - rng.random::<f64>()).ln() / beta).powf(1.0 / alpha)).collect()
}

#[test]
fn weibull_sample_drives_kappa_to_zero() {
    let data = weibull(20_000, 1.3, 40.0, 9);
    let fit = fit_kappa(&data).unwrap();
    let p = fit.kappa_params().unwrap();
    assert!(p.kappa() < 0.15, "{p:?}");
    assert!((p.alpha() / 1.3 - 1.0).abs() < 0.1, "{p:?}");
}

#[test]
fn fit_ascends_from_every_initializer() {
    let truth = KappaParams::new(0.45, 1.3, 120.0).unwrap();
    let data = truth.sample(3000, 17);
    let fit = fit_kappa(&data).unwrap();
    for (k, a, b) in kappa_initializers(&data).unwrap() {
        let start = KappaParams::new(k, a, b).unwrap().loglik(&data).unwrap();
        assert!(fit.loglik >= start, "start ({k}, {a}, {b})");
    }
    let recomputed = fit.kappa_params().unwrap().loglik(&data).unwrap();
    assert!((fit.loglik - recomputed).abs() <= 1e-10 * recomputed.abs().max(1.0));
    let ks = ktail::ks_statistic(&data, |x| fit.survival(x).unwrap());
    assert_eq!(ks, fit.ks);
    assert!(fit.converged);
}

#[test]
fn scale_equivariance() {
    let data = KappaParams::new(0.6, 1.1, 50.0).unwrap().sample(4000, 23);
    let base = fit_kappa(&data).unwrap().kappa_params().unwrap();
    for c in [0.01, 7.0] {
        let scaled: Vec<f64> = data.iter().map(|x| c * x).collect();
        let p = fit_kappa(&scaled).unwrap().kappa_params().unwrap();
        assert!((p.kappa() - base.kappa()).abs() < 1e-3, "c={c}: {p:?} vs {base:?}");
        assert!((p.alpha() / base.alpha() - 1.0).abs() < 1e-3, "c={c}");
        let expect = base.beta() * c.powf(-base.alpha());
        assert!((p.beta() / expect - 1.0).abs() < 1e-2, "c={c}");
    }
}

#[test]
fn fit_kappa_input_errors() {
    assert!(matches!(fit_kappa(&[]), Err(Error::Degenerate(_))));
    assert!(fit_kappa(&[1.0, -2.0, 3.0]).unwrap_err().is_input_error());
    assert!(fit_kappa(&[0.5; 40]).unwrap_err().is_input_error());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn normal_fit_is_shift_equivariant(
        data in prop::collection::vec(-1f64..1.0, 2..200),
        shift in -10f64..10.0,
    ) {
        let base = fit_normal(&data);
        prop_assume!(base.is_ok());
        let base = base.unwrap().normal_params().unwrap();
        let moved: Vec<f64> = data.iter().map(|x| x + shift).collect();
        let p = fit_normal(&moved).unwrap().normal_params().unwrap();
        prop_assert!((p.mu() - base.mu() - shift).abs() <= 1e-12 * (1.0 + shift.abs()));
        prop_assert!((p.sigma() / base.sigma() - 1.0).abs() <= 1e-8);
    }

    #[test]
    fn normal_fit_loglik_consistent(data in prop::collection::vec(-1f64..1.0, 2..200)) {
        let fit = fit_normal(&data);
        prop_assume!(fit.is_ok());
        let fit = fit.unwrap();
        let n = data.len() as f64;
        let mean = data.iter().sum::<f64>() / n;
        let var = data.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let p = fit.normal_params().unwrap();
        prop_assert!((p.mu() - mean).abs() <= 1e-15);
        prop_assert!((p.sigma() - var.sqrt()).abs() <= 1e-15);
        prop_assert!((fit.loglik - p.loglik(&data)).abs() <= 1e-10 * fit.loglik.abs().max(1.0));
        prop_assert!((0.0..=1.0).contains(&fit.ks));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn kappa_fit_invariants(k in 0.2f64..0.8, a in 0.7f64..2.0, b in 1.0f64..100.0, seed in any::<u64>()) {
        let data = KappaParams::new(k, a, b).unwrap().sample(500, seed);
        let fit = fit_kappa(&data).unwrap();
        let p = fit.kappa_params().unwrap();
        prop_assert!(p.kappa() > 0.0 && p.kappa() < 1.0);
        prop_assert!((0.0..=1.0).contains(&fit.ks));
        prop_assert!(fit.loglik.is_finite());
        prop_assert_eq!(fit.n, 500);
        prop_assert!(!fit.low_sample);
        let recomputed = p.loglik(&data).unwrap();
        prop_assert!((fit.loglik - recomputed).abs() <= 1e-10 * recomputed.abs().max(1.0));
    }
}
