mod common;

use common::{mann_whitney_enumerated, TestRng};
use spectral_forge::eval::{mann_whitney_u, Method, Summary};

/// Every split of `0..n+m` into a first sample of size `n`.
fn splits(n: usize, m: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
    let total = n + m;
    (0u32..1 << total)
        .filter(|mask| mask.count_ones() as usize == n)
        .map(|mask| {
            let (mut a, mut b) = (Vec::new(), Vec::new());
            for i in 0..total {
                if mask >> i & 1 == 1 { a.push(i as f64) } else { b.push(i as f64) }
            }
            (a, b)
        })
        .collect()
}

#[test]
fn exact_p_matches_enumeration_for_all_small_samples() {
    let mut checked = 0;
    for n in 1..=6 {
        for m in 1..=6 {
            for (a, b) in splits(n, m) {
                let got = mann_whitney_u(&a, &b);
                let (u, p) = mann_whitney_enumerated(&a, &b);
                assert_eq!(got.method, Method::Exact);
                assert_eq!(got.u, u);
                assert!((got.p_value - p).abs() <= 1e-12, "{a:?} vs {b:?}: {} vs {p}", got.p_value);
                checked += 1;
            }
        }
    }
    assert!(checked > 2000);
}

#[test]
fn two_by_two_separated_samples() {
    let r = mann_whitney_u(&[1.0, 2.0], &[3.0, 4.0]);
    assert_eq!(r.u, 0.0);
    assert!((r.p_value - 1.0 / 3.0).abs() <= 1e-15);
}

#[test]
fn p_value_is_symmetric_in_its_arguments() {
    let mut rng = TestRng::new(5);
    for _ in 0..1000 {
        let n = 1 + rng.below(14);
        let m = 1 + rng.below(14);
        // quantised values so ties occur in some pairs
        let a: Vec<f64> = (0..n).map(|_| (rng.symmetric() * 8.0).round()).collect();
        let b: Vec<f64> = (0..m).map(|_| (rng.symmetric() * 8.0).round()).collect();
        let (ab, ba) = (mann_whitney_u(&a, &b), mann_whitney_u(&b, &a));
        assert!((ab.p_value - ba.p_value).abs() <= 1e-12, "{a:?} {b:?}");
        assert!((ab.u + ba.u - (n * m) as f64).abs() <= 1e-9);
        assert!(ab.p_value > 0.0 && ab.p_value <= 1.0);
    }
}

#[test]
fn exact_and_normal_agree_at_ten_by_ten() {
    let mut rng = TestRng::new(6);
    for shift in [0.0, 0.3, 0.8] {
        let a: Vec<f64> = (0..10).map(|_| rng.symmetric()).collect();
        let b: Vec<f64> = (0..10).map(|_| rng.symmetric() + shift).collect();
        let exact = mann_whitney_u(&a, &b);
        assert_eq!(exact.method, Method::Exact);
        // one extra tiny sample pushes min(n, m) past the exact limit
        let mut a11 = a.clone();
        a11.push(1e6);
        let mut b11 = b.clone();
        b11.push(1e6 + 1.0);
        assert_eq!(mann_whitney_u(&a11, &b11).method, Method::Normal);

        let mean = 50.0;
        let sd = (10.0 * 10.0 * 21.0 / 12.0f64).sqrt();
        let z = ((exact.u - mean).abs() - 0.5) / sd;
        let normal = (2.0 * (1.0 - 0.5 * (1.0 + libm::erf(z / 2f64.sqrt())))).min(1.0);
        assert!((exact.p_value - normal).abs() <= 0.02, "exact {} normal {normal}", exact.p_value);
    }
}

#[test]
fn summary_uses_population_std() {
    let values = [0.6, 0.7, 0.8, 0.9];
    let s = Summary::of(&values);
    let mean = 0.75;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 4.0;
    assert!((s.mean - mean).abs() <= 1e-15);
    assert!((s.std - var.sqrt()).abs() <= 1e-15);
}
