use metaweight::metrics::{
    confusion, report, wilcoxon_signed_rank, wilcoxon_signed_rank_normal, ConfusionMatrix, WilcoxonMethod,
};
use metaweight::LabelVector;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Two-sided p by listing every sign assignment of the observed ranks.
fn enumerate_p(x: &[f64], y: &[f64]) -> (f64, f64) {
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).filter(|d| *d != 0.0).collect();
    let n = d.len();
    let rank = |i: usize| -> f64 {
        let below = d.iter().filter(|v| v.abs() < d[i].abs()).count() as f64;
        let equal = d.iter().filter(|v| v.abs() == d[i].abs()).count() as f64;
        below + (equal + 1.0) / 2.0
    };
    let ranks: Vec<f64> = (0..n).map(rank).collect();
    let total: f64 = ranks.iter().sum();
    let plus: f64 = (0..n).filter(|&i| d[i] > 0.0).map(|i| ranks[i]).sum();
    let observed = plus.min(total - plus);
    let mut extreme = 0u64;
    for mask in 0u64..(1 << n) {
        let w: f64 = (0..n).filter(|&i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
        if w.min(total - w) <= observed {
            extreme += 1;
        }
    }
    (observed, extreme as f64 / (1u64 << n) as f64)
}

#[test]
fn exact_p_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for case in 0..100 {
        let n = 1 + case % 12;
        // coarse values so ties and zero differences occur
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(0..8) as f64 * 0.5).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(0..8) as f64 * 0.5).collect();
        let Ok(r) = wilcoxon_signed_rank(&x, &y) else {
            assert!(x == y);
            continue;
        };
        let (w, p) = enumerate_p(&x, &y);
        assert_eq!(r.method, WilcoxonMethod::Exact);
        assert_eq!(r.statistic, w);
        assert!((r.p_value - p).abs() <= 1e-12, "case {case}: {} vs {p}", r.p_value);
    }
}

#[test]
fn continuous_twelve_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..20 {
        let x: Vec<f64> = (0..12).map(|_| rng.random::<f64>()).collect();
        let y: Vec<f64> = (0..12).map(|_| rng.random::<f64>() + 0.1).collect();
        let r = wilcoxon_signed_rank(&x, &y).unwrap();
        assert!((r.p_value - enumerate_p(&x, &y).1).abs() <= 1e-12);
    }
}

#[test]
#[ignore = "continuity-corrected normal p deviates from exact by up to 0.0111 at n=15 and 0.0104 at n=16; see normal_approximation_error_by_n"]
fn exact_and_normal_agree_near_cutoff() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for n in 15..=20 {
        for _ in 0..25 {
            let shift = rng.random_range(-0.3..0.3);
            let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let y: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + shift).collect();
            let exact = wilcoxon_signed_rank(&x, &y).unwrap();
            let approx = wilcoxon_signed_rank_normal(&x, &y).unwrap();
            assert!((exact.p_value - approx.p_value).abs() <= 0.01, "n={n}: {} vs {}", exact.p_value, approx.p_value);
        }
    }
}

/// Sweeps every attainable statistic for distinct ranks 1..=n, so the
/// maximum deviation between the two paths is known exactly.
#[test]
fn normal_approximation_error_by_n() {
    let expected_worst = [(15, 0.011053592377697763), (16, 0.010356184561232551), (17, 0.009767946704873354),
        (18, 0.009208254451434472), (19, 0.008730856090167993), (20, 0.008294232452257688)];
    for (n, worst) in expected_worst {
        let total = n * (n + 1) / 2;
        let y = vec![0.0; n];
        let mut max_gap: f64 = 0.0;
        for w in 0..=total / 2 {
            // greedy: ranks summing to w get positive differences
            let mut remaining = w;
            let mut x: Vec<f64> = (1..=n).map(|r| -(r as f64)).collect();
            for r in (1..=n).rev() {
                if r <= remaining {
                    x[r - 1] = r as f64;
                    remaining -= r;
                }
            }
            let exact = wilcoxon_signed_rank(&x, &y).unwrap();
            let approx = wilcoxon_signed_rank_normal(&x, &y).unwrap();
            assert_eq!(exact.statistic, w as f64);
            max_gap = max_gap.max((exact.p_value - approx.p_value).abs());
        }
        assert!((max_gap - worst).abs() < 1e-9, "n={n}: {max_gap}");
        if n >= 17 {
            assert!(max_gap <= 0.01);
        }
    }
}

/// A fixed 4-class matrix and its hand-computed report.
#[test]
fn four_class_report_by_hand() {
    let cm = ConfusionMatrix::from_counts(vec![
        vec![50, 3, 2, 0],
        vec![4, 40, 6, 0],
        vec![1, 5, 30, 4],
        vec![0, 0, 10, 45],
    ])
    .unwrap();
    let r = report(&cm).unwrap();
    // column sums 55, 48, 48, 49; row sums 55, 50, 40, 55; total 200, trace 165
    let precision = [50.0 / 55.0, 40.0 / 48.0, 30.0 / 48.0, 45.0 / 49.0];
    let recall = [50.0 / 55.0, 40.0 / 50.0, 30.0 / 40.0, 45.0 / 55.0];
    let f1 = [100.0 / 110.0, 80.0 / 98.0, 60.0 / 88.0, 90.0 / 104.0];
    let support = [55.0, 50.0, 40.0, 55.0];
    for c in 0..4 {
        assert!((r.per_class[c].precision - precision[c]).abs() <= 1e-12);
        assert!((r.per_class[c].recall - recall[c]).abs() <= 1e-12);
        assert!((r.per_class[c].f1 - f1[c]).abs() <= 1e-12);
        assert_eq!(r.per_class[c].support as f64, support[c]);
    }
    assert!((r.accuracy - 165.0 / 200.0).abs() <= 1e-12);
    let mean = |v: &[f64]| v.iter().sum::<f64>() / 4.0;
    let weighted = |v: &[f64]| v.iter().zip(support).map(|(m, s)| m * s).sum::<f64>() / 200.0;
    assert!((r.macro_avg.precision - mean(&precision)).abs() <= 1e-12);
    assert!((r.macro_avg.recall - mean(&recall)).abs() <= 1e-12);
    assert!((r.macro_avg.f1 - mean(&f1)).abs() <= 1e-12);
    assert!((r.weighted_avg.precision - weighted(&precision)).abs() <= 1e-12);
    assert!((r.weighted_avg.recall - weighted(&recall)).abs() <= 1e-12);
    assert!((r.weighted_avg.f1 - weighted(&f1)).abs() <= 1e-12);
}

fn label_pairs() -> impl Strategy<Value = (usize, Vec<usize>, Vec<usize>)> {
    (2usize..8).prop_flat_map(|k| {
        (1usize..300).prop_flat_map(move |n| {
            (Just(k), prop::collection::vec(0..k, n), prop::collection::vec(0..k, n))
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn weighted_recall_is_accuracy((k, t, p) in label_pairs()) {
        let cm = confusion(&LabelVector::new(k, t).unwrap(), &LabelVector::new(k, p).unwrap(), k).unwrap();
        let r = report(&cm).unwrap();
        prop_assert!((r.weighted_avg.recall - r.accuracy).abs() <= 1e-12);
        for m in &r.per_class {
            prop_assert!((0.0..=1.0).contains(&m.precision) && (0.0..=1.0).contains(&m.recall) && (0.0..=1.0).contains(&m.f1));
        }
    }

    #[test]
    fn perfect_predictions((k, t, _) in label_pairs()) {
        let y = LabelVector::new(k, t).unwrap();
        let r = report(&confusion(&y, &y, k).unwrap()).unwrap();
        prop_assert_eq!(r.accuracy, 1.0);
        for m in r.per_class.iter().filter(|m| m.support > 0) {
            prop_assert_eq!((m.precision, m.recall, m.f1), (1.0, 1.0, 1.0));
        }
    }

    #[test]
    fn order_does_not_matter((k, t, p) in label_pairs(), seed in any::<u64>()) {
        let mut order: Vec<usize> = (0..t.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in (1..order.len()).rev() {
            order.swap(i, rng.random_range(0..=i));
        }
        let shuffled_t: Vec<usize> = order.iter().map(|&i| t[i]).collect();
        let shuffled_p: Vec<usize> = order.iter().map(|&i| p[i]).collect();
        let a = confusion(&LabelVector::new(k, t).unwrap(), &LabelVector::new(k, p).unwrap(), k).unwrap();
        let b = confusion(&LabelVector::new(k, shuffled_t).unwrap(), &LabelVector::new(k, shuffled_p).unwrap(), k).unwrap();
        prop_assert_eq!(report(&a).unwrap(), report(&b).unwrap());
        prop_assert_eq!(a, b);
    }
}
