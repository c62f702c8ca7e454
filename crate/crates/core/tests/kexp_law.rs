use ktail::kexp::{kexp, klog};
use ktail::quad::{integrate_pieces, Tolerance};
use ktail::{ks_statistic, KappaParams};
use proptest::prelude::*;

fn p(k: f64, a: f64, b: f64) -> KappaParams {
    KappaParams::new(k, a, b).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn params() -> impl Strategy<Value = KappaParams> {
    (0.01f64..0.99, 0.2f64..4.0, 0.05f64..20.0).prop_map(|(k, a, b)| p(k, a, b))
}

proptest! {
    #[test]
    fn reciprocal_identity(x in -1e3f64..1e3, k in 1e-2f64..0.9999) {
        let prod = kexp(x, k).unwrap() * kexp(-x, k).unwrap();
        prop_assert!(rel(prod, 1.0) <= 1e-12);
    }

    #[test]
    fn klog_inverts_kexp(x in prop_oneof![-200f64..-1e-6, 1e-6f64..200.0], k in 0.01f64..0.99) {
        prop_assert!(rel(klog(kexp(x, k).unwrap(), k).unwrap(), x) <= 1e-10);
    }

    #[test]
    fn kexp_inverts_klog(ln_y in -30f64..30.0, k in 0.01f64..0.99) {
        let y = ln_y.exp();
        prop_assert!(rel(kexp(klog(y, k).unwrap(), k).unwrap(), y) <= 1e-10);
    }

    #[test]
    fn survival_decreasing_and_pdf_nonnegative(q in params(), a in 1e-4f64..1e3, b in 1e-4f64..1e3) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assume!(hi > lo * (1.0 + 1e-9));
        prop_assert!(q.survival(lo).unwrap() >= q.survival(hi).unwrap());
        prop_assert!(q.pdf(lo).unwrap() >= 0.0);
        let s = q.survival(lo).unwrap();
        prop_assert!((0.0..=1.0).contains(&s));
    }

    #[test]
    fn quantile_inverts_survival(q in params(), u in 1e-9f64..(1.0 - 1e-9)) {
        let x = q.quantile(u).unwrap();
        prop_assert!((q.survival(x).unwrap() - (1.0 - u)).abs() <= 1e-10);
    }

    #[test]
    fn quantile_increasing(q in params(), u in 1e-6f64..0.99, du in 1e-6f64..1e-2) {
        prop_assert!(q.quantile(u + du).unwrap() > q.quantile(u).unwrap());
    }

    #[test]
    fn loglik_permutation_invariant(q in params(), seed in any::<u64>(), shift in 1usize..50) {
        let data = q.sample(50, seed);
        let mut rotated = data.clone();
        rotated.rotate_left(shift);
        prop_assert!((q.loglik(&data).unwrap() - q.loglik(&rotated).unwrap()).abs() <= 1e-9);
    }
}

#[test]
fn density_normalized_and_matches_finite_difference() {
    let q = p(0.7, 1.5, 0.8);
    // Integrate in ln x so both the body and the power-law tail are smooth.
    let (lo, hi) = (q.quantile(1e-14).unwrap().ln(), q.quantile(1.0 - 1e-14).unwrap().ln());
    let breaks: Vec<f64> = (0..=40).map(|i| lo + (hi - lo) * i as f64 / 40.0).collect();
    let tol = Tolerance { abs: 1e-13, rel: 1e-12, ..Tolerance::default() };
    let mass = integrate_pieces(|t| t.exp() * q.pdf(t.exp()).unwrap(), &breaks, tol).unwrap().value;
    assert!((mass - 1.0).abs() < 1e-8, "{mass}");

    let h = 1e-6;
    for x in [0.5, 1.0, 2.0] {
        let fd = -(q.survival(x + h).unwrap() - q.survival(x - h).unwrap()) / (2.0 * h);
        assert!(rel(fd, q.pdf(x).unwrap()) < 1e-5, "x={x}");
    }
}

#[test]
fn sample_follows_the_law() {
    let q = p(0.6, 1.0, 1.0);
    let n = 50_000;
    let xs = q.sample(n, 42);
    assert_eq!(xs, q.sample(n, 42));
    assert!(xs.iter().all(|&x| x > 0.0 && x.is_finite()));
    let d = ks_statistic(&xs, |x| q.survival(x).unwrap());
    assert!(d < 1.63 / (n as f64).sqrt(), "{d}");
    let mut sorted = xs.clone();
    sorted.sort_by(f64::total_cmp);
    let median = 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    assert!(rel(median, q.quantile(0.5).unwrap()) < 0.02);
}

#[test]
fn domain_errors() {
    let q = p(0.5, 1.0, 1.0);
    for x in [0.0, -1.0, f64::NAN, f64::INFINITY] {
        assert!(q.survival(x).is_err() && q.pdf(x).is_err() && q.log_pdf(x).is_err());
    }
    assert!(q.loglik(&[1.0, 0.0]).is_err());
    for u in [0.0, 1.0, -0.1, f64::NAN] {
        assert!(q.quantile(u).is_err());
    }
    assert!(klog(0.0, 0.5).is_err());
    assert!(kexp(1.0, 1.0).is_err() && kexp(f64::NAN, 0.5).is_err());
}
