use proptest::prelude::*;
use proptest::strategy::ValueTree;
use saea_core::stats::{
    kendall_tau, mann_whitney_exact_p, mann_whitney_normal_p, mann_whitney_u, studentized_range_quantile, tukey_hsd,
    PValueMethod, Verdict,
};
use statrs::distribution::{ContinuousCDF, StudentsT};

/// tau-b from tie-group sizes and the pair-sign sum.
fn tau_oracle(xs: &[i64], ys: &[i64]) -> f64 {
    let n = xs.len();
    let mut s = 0i64;
    for i in 0..n {
        for j in 0..n {
            if i < j {
                s += (xs[i] - xs[j]).signum() * (ys[i] - ys[j]).signum();
            }
        }
    }
    let tie_pairs = |v: &[i64]| -> i64 {
        let mut sorted = v.to_vec();
        sorted.sort_unstable();
        sorted
            .chunk_by(|a, b| a == b)
            .map(|g| (g.len() * (g.len() - 1) / 2) as i64)
            .sum()
    };
    let n0 = (n * (n - 1) / 2) as i64;
    let denom = (((n0 - tie_pairs(xs)) as f64) * ((n0 - tie_pairs(ys)) as f64)).sqrt();
    if denom == 0.0 {
        0.0
    } else {
        s as f64 / denom
    }
}

/// Two-sided exact p by listing every assignment of ranks to the first group.
fn exact_p_oracle(a: &[f64], b: &[f64]) -> f64 {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let n = pooled.len();
    let rank = |v: f64| {
        let below = pooled.iter().filter(|&&w| w < v).count() as f64;
        let equal = pooled.iter().filter(|&&w| w == v).count() as f64;
        below + (equal + 1.0) / 2.0
    };
    let ranks: Vec<f64> = pooled.iter().map(|&v| rank(v)).collect();
    let k = a.len();
    let expected = k as f64 * (n as f64 + 1.0) / 2.0;
    let observed: f64 = ranks[..k].iter().sum();
    let (mut extreme, mut total) = (0u64, 0u64);
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != k {
            continue;
        }
        let s: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
        total += 1;
        if (s - expected).abs() >= (observed - expected).abs() - 1e-9 {
            extreme += 1;
        }
    }
    extreme as f64 / total as f64
}

#[test]
fn kendall_matches_pair_counting_on_integer_sequences() {
    let mut runner = proptest::test_runner::TestRunner::deterministic();
    let strategy = (2usize..30).prop_flat_map(|n| {
        (prop::collection::vec(-5i64..5, n), prop::collection::vec(-5i64..5, n))
    });
    for _ in 0..1000 {
        let (xs, ys) = strategy.new_tree(&mut runner).unwrap().current();
        let fx: Vec<f64> = xs.iter().map(|&v| v as f64).collect();
        let fy: Vec<f64> = ys.iter().map(|&v| v as f64).collect();
        assert_eq!(kendall_tau(&fx, &fy).unwrap(), tau_oracle(&xs, &ys), "{xs:?} {ys:?}");
    }
}

#[test]
fn exact_p_reference_case() {
    let p = mann_whitney_exact_p(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
    assert!((p - 0.1).abs() < 1e-12);
    assert!((exact_p_oracle(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]) - 0.1).abs() < 1e-12);
}

#[test]
fn k2_quantile_is_scaled_t_quantile() {
    for df in [1usize, 5, 10, 30, 140, 1000] {
        let t = StudentsT::new(0.0, 1.0, df as f64).unwrap().inverse_cdf(0.975);
        let q = studentized_range_quantile(2, df, 0.05).unwrap();
        let expected = 2f64.sqrt() * t;
        assert!(((q - expected) / expected).abs() < 1e-3, "df {df}: {q} vs {expected}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn kendall_symmetries(v in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 2..40)) {
        let (xs, ys): (Vec<f64>, Vec<f64>) = v.into_iter().unzip();
        let tau = kendall_tau(&xs, &ys).unwrap();
        prop_assert!((-1.0..=1.0).contains(&tau));
        prop_assert_eq!(tau, kendall_tau(&ys, &xs).unwrap());
        let neg: Vec<f64> = ys.iter().map(|y| -y).collect();
        prop_assert_eq!(-tau, kendall_tau(&xs, &neg).unwrap());
        let cubed: Vec<f64> = xs.iter().map(|x| x.powi(3) + 7.0).collect();
        prop_assert_eq!(tau, kendall_tau(&cubed, &ys).unwrap());
    }

    #[test]
    fn exact_p_matches_enumeration(
        a in prop::collection::vec(0u8..6, 1..7),
        b in prop::collection::vec(0u8..6, 1..7),
    ) {
        let a: Vec<f64> = a.into_iter().map(f64::from).collect();
        let b: Vec<f64> = b.into_iter().map(f64::from).collect();
        let p = mann_whitney_exact_p(&a, &b).unwrap();
        prop_assert!((p - exact_p_oracle(&a, &b)).abs() < 1e-9);
    }

    #[test]
    fn normal_p_close_to_exact(
        a in prop::collection::vec(-10.0f64..10.0, 5..=8),
        b in prop::collection::vec(-10.0f64..10.0, 5..=8),
    ) {
        let exact = mann_whitney_exact_p(&a, &b).unwrap();
        let approx = mann_whitney_normal_p(&a, &b).unwrap();
        prop_assert!((exact - approx).abs() < 0.03, "exact {} normal {}", exact, approx);
    }

    #[test]
    fn mann_whitney_swap_symmetry(
        a in prop::collection::vec(0.0f64..10.0, 1..30),
        b in prop::collection::vec(2.0f64..12.0, 1..30),
    ) {
        let ab = mann_whitney_u(&a, &b, 0.05).unwrap();
        let ba = mann_whitney_u(&b, &a, 0.05).unwrap();
        prop_assert!((ab.u + ba.u - (a.len() * b.len()) as f64).abs() < 1e-9);
        prop_assert!((ab.p - ba.p).abs() < 1e-12);
        prop_assert_eq!(ab.verdict, ba.verdict.reversed());
        prop_assert!(ab.p > 0.0 && ab.p <= 1.0);
        let small = a.len().min(b.len()) <= 8 && a.len() + b.len() <= 200;
        prop_assert_eq!(ab.method == PValueMethod::Exact, small);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn tukey_invariant_to_affine_maps(
        groups in prop::collection::vec(prop::collection::vec(0.0f64..10.0, 6), 3),
        offsets in prop::collection::vec(0.0f64..6.0, 3),
        shift in -1e3f64..1e3,
        scale_exp in -4i32..4,
    ) {
        let named: Vec<(String, Vec<f64>)> = groups
            .iter()
            .zip(&offsets)
            .enumerate()
            .map(|(i, (g, o))| (format!("g{i}"), g.iter().map(|v| v + o).collect()))
            .collect();
        let base = tukey_hsd(&named, 0.05).unwrap();
        let scale = 2f64.powi(scale_exp);
        let mapped: Vec<(String, Vec<f64>)> = named
            .iter()
            .map(|(n, g)| (n.clone(), g.iter().map(|v| v * scale + shift).collect()))
            .collect();
        prop_assert_eq!(&base.cells, &tukey_hsd(&mapped, 0.05).unwrap().cells);
        for i in 0..3 {
            prop_assert_eq!(base.get(i, i), Verdict::NotSignificant);
            for j in 0..3 {
                prop_assert_eq!(base.get(i, j), base.get(j, i).reversed());
            }
        }
    }
}
