use ktail::gof::child_seed;
use ktail::{ks_statistic, mc_gof_test, Error, KappaParams};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn brute_ks(data: &[f64], s: impl Fn(f64) -> f64) -> f64 {
    let n = data.len() as f64;
    let mut d: f64 = 0.0;
    for &x in data {
        let above = data.iter().filter(|&&y| y > x).count() as f64 / n;
        let at_or_above = data.iter().filter(|&&y| y >= x).count() as f64 / n;
        d = d.max((above - s(x)).abs()).max((at_or_above - s(x)).abs());
    }
    d
}

proptest! {
    #[test]
    fn ks_matches_brute_force(
        data in prop::collection::vec(prop_oneof![0.1f64..10.0, Just(1.0), Just(2.5)], 1..60),
        rate in 0.05f64..3.0,
    ) {
        let s = |x: f64| (-rate * x).exp();
        let fast = ks_statistic(&data, s);
        prop_assert!((fast - brute_ks(&data, s)).abs() <= 1e-15);
        prop_assert!((0.0..=1.0).contains(&fast));
    }
}

fn pool(threads: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap()
}

#[test]
fn gof_is_reproducible_across_thread_counts() {
    let data = KappaParams::new(0.5, 1.2, 30.0).unwrap().sample(400, 5);
    let one = pool(1).install(|| mc_gof_test(&data, 24, 0.1, 77)).unwrap();
    let four = pool(4).install(|| mc_gof_test(&data, 24, 0.1, 77)).unwrap();
    assert_eq!(one, four);
    assert_eq!(one.s_boot.len(), 24);
    let exceed = one.s_boot.iter().filter(|&&s| s > one.s_data).count();
    assert_eq!(one.p_value, exceed as f64 / 24.0);
    assert_eq!(one.reject, one.p_value < 0.1);

    let other = mc_gof_test(&data, 24, 0.1, 78).unwrap();
    assert_ne!(one.s_boot, other.s_boot);
    assert_eq!(one.s_data, other.s_data);
}

#[test]
fn gof_argument_errors() {
    let data = KappaParams::new(0.5, 1.2, 30.0).unwrap().sample(100, 5);
    assert!(matches!(mc_gof_test(&data, 0, 0.1, 1), Err(Error::InvalidParams(_))));
    assert!(matches!(mc_gof_test(&data, 10, 1.5, 1), Err(Error::InvalidParams(_))));
    assert!(matches!(mc_gof_test(&[], 10, 0.1, 1), Err(Error::Degenerate(_))));
}

#[test]
fn level_extremes() {
    let data = KappaParams::new(0.5, 1.2, 30.0).unwrap().sample(200, 8);
    let never = mc_gof_test(&data, 10, 0.0, 3).unwrap();
    assert!(!never.reject);
    let always = mc_gof_test(&data, 10, 1.0, 3).unwrap();
    assert_eq!(always.reject, always.p_value < 1.0);
}

#[test]
fn child_seeds_are_distinct() {
    let mut seen = std::collections::HashSet::new();
    for i in 0..1000 {
        for a in 0..4 {
            assert!(seen.insert(child_seed(42, i, a)));
        }
    }
}

/// Half-normal tail against κ data drawn from the half-normal's own fit.
#[test]
#[ignore = "slow; run with --ignored"]
fn normal_tails_score_lower_than_kappa_null() {
    let (n, n_boot, seeds) = (3000, 19, 50u64);
    let mut diff = 0.0;
    for seed in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal: Vec<f64> = (0..n)
            .map(|_| {
                let (u, v): (f64, f64) = (rng.random(), rng.random());
                let z = (-2.0 * (1.0 - u).ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos();
                (0.01 * z).abs()
            })
            .filter(|&x| x > 0.0)
            .collect();
        let on_normal = mc_gof_test(&normal, n_boot, 0.1, seed).unwrap();
        let null = on_normal.params.sample(normal.len(), seed ^ 0xa5a5);
        let on_null = mc_gof_test(&null, n_boot, 0.1, seed).unwrap();
        diff += on_null.p_value - on_normal.p_value;
    }
    let mean = diff / seeds as f64;
    println!("mean p(null) - p(normal) = {mean}");
    assert!(mean > 0.0, "{mean}");
}
