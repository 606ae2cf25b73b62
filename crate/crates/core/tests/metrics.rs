mod common;

use common::*;
use proptest::prelude::*;
use rand::Rng;
use survsplit::metrics::quantile_sorted;
use survsplit::{concordance_error, paired_delta, rmse_at_horizon};

/// Harrell's C by enumerating every ordered pair.
fn brute_pe(risk: &[f64], t: &[f64], e: &[bool]) -> Option<f64> {
    let (mut comp, mut conc) = (0.0, 0.0);
    for i in 0..t.len() {
        for j in 0..t.len() {
            if t[i] < t[j] && e[i] {
                comp += 1.0;
                if risk[i] > risk[j] {
                    conc += 1.0;
                } else if risk[i] == risk[j] {
                    conc += 0.5;
                }
            }
        }
    }
    (comp > 0.0).then(|| 1.0 - conc / comp)
}

fn random_inputs(seed: u64) -> (Vec<f64>, Vec<f64>, Vec<bool>) {
    let mut r = rng(seed);
    let n = r.random_range(2..60);
    let t = (0..n).map(|_| r.random_range(0..20) as f64).collect();
    let e = (0..n).map(|_| r.random::<f64>() < 0.7).collect();
    let risk = (0..n).map(|_| r.random_range(0..15) as f64 + r.random::<f64>() * 0.1).collect();
    (risk, t, e)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn concordance_matches_pair_enumeration(seed in any::<u64>()) {
        let (risk, t, e) = random_inputs(seed);
        match brute_pe(&risk, &t, &e) {
            Some(want) => prop_assert!((concordance_error(&risk, &t, &e).unwrap() - want).abs() < 1e-12),
            None => prop_assert!(concordance_error(&risk, &t, &e).is_err()),
        }
    }

    #[test]
    fn concordance_rank_invariance_and_complement(seed in any::<u64>()) {
        let (risk, t, e) = random_inputs(seed);
        let Ok(pe) = concordance_error(&risk, &t, &e) else { return Ok(()) };
        let transformed: Vec<f64> = risk.iter().map(|r| (r * 0.3).exp() + 7.0).collect();
        prop_assert!((concordance_error(&transformed, &t, &e).unwrap() - pe).abs() < 1e-12);
        let mut sorted = risk.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).all(|w| w[0] < w[1]) {
            let neg: Vec<f64> = risk.iter().map(|r| -r).collect();
            prop_assert!((concordance_error(&neg, &t, &e).unwrap() + pe - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rmse_nonnegative_zero_iff_equal(a in proptest::collection::vec(0.0f64..1.0, 1..30), b in proptest::collection::vec(0.0f64..1.0, 1..30)) {
        let k = a.len().min(b.len());
        let v = rmse_at_horizon(&a[..k], &b[..k]).unwrap();
        prop_assert!(v >= 0.0);
        prop_assert_eq!(v == 0.0, a[..k] == b[..k]);
    }

    #[test]
    fn paired_quartiles_match_sort_oracle(a in proptest::collection::vec(-1.0f64..1.0, 1..40), seed in any::<u64>()) {
        let mut r = rng(seed);
        let b: Vec<f64> = a.iter().map(|_| r.random_range(-1.0..1.0)).collect();
        let s = paired_delta(&a, &b).unwrap();
        let mut d: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
        prop_assert_eq!(&s.deltas, &d);
        d.sort_by(f64::total_cmp);
        // nearest-rank bracket: each quartile lies between its neighbouring order statistics
        for (q, v) in [(0.25, s.q1), (0.5, s.median), (0.75, s.q3)] {
            let pos = q * (d.len() - 1) as f64;
            let (lo, hi) = (d[pos.floor() as usize], d[pos.ceil() as usize]);
            prop_assert!(lo <= v && v <= hi);
        }
        let n = d.len();
        let med = if n % 2 == 1 { d[n / 2] } else { (d[n / 2 - 1] + d[n / 2]) / 2.0 };
        prop_assert!((s.median - med).abs() < 1e-12);
        prop_assert_eq!(quantile_sorted(&d, 0.0), d[0]);
        prop_assert_eq!(quantile_sorted(&d, 1.0), d[n - 1]);
    }
}
