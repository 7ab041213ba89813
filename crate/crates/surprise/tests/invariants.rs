//! Property tests for the library's stated invariants.

use proptest::prelude::*;

use surprise::baselines::{oracle_cutoff, pava};
use surprise::gpd::{fit_gpd_mle, gpd_cdf, log_likelihood, ExcessSample, GpdParams};
use surprise::metrics::{dcg_at_k, f1_at_k, EvalQuery, Metric};
use surprise::rescore::{surprise_rescore, surprise_value, RankedList, RescoreConfig};
use surprise::truncate::{pvalue_from_surprise, surprise_from_pvalue, truncate_at_threshold};
use surprise::Relevance;

fn arb_params() -> impl Strategy<Value = GpdParams> {
    (prop_oneof![Just(0.0), -3.0..0.0f64], 0.01..50.0f64)
        .prop_map(|(c, a)| GpdParams::new(c, a).unwrap())
}

fn arb_positive_sample() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.001..10.0f64, 10..50)
}

/// Descending score lists with some spread, long enough to rescore.
fn arb_ranked_scores() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..100.0f64, 12..60)
        .prop_filter("needs two distinct scores", |v| {
            v.iter().any(|&s| s != v[0])
        })
        .prop_map(|mut v| {
            v.sort_by(|a, b| b.total_cmp(a));
            v
        })
}

fn list_from(scores: Vec<f64>) -> RankedList {
    let ids = (0..scores.len()).map(|i| format!("d{i}")).collect();
    RankedList::new("q", ids, scores, None).unwrap()
}

proptest! {
    #[test]
    fn cdf_stays_in_range_and_monotone(params in arb_params(), xs in prop::collection::vec(0.0..200.0f64, 1..40)) {
        let mut xs = xs;
        xs.sort_by(f64::total_cmp);
        let mut prev = 0.0;
        prop_assert_eq!(gpd_cdf(&params, 0.0), 0.0);
        for &x in &xs {
            let v = gpd_cdf(&params, x);
            prop_assert!((0.0..=1.0).contains(&v));
            prop_assert!(v >= prev);
            // within the representable region the cdf stays strictly below 1
            if x / params.scale() <= 30.0 {
                prop_assert!(v < 1.0);
            }
            prev = v;
        }
    }

    #[test]
    fn fit_respects_constraints_and_beats_exponential(values in arb_positive_sample()) {
        let sample = ExcessSample::new(values).unwrap();
        let fit = fit_gpd_mle(&sample, 10).unwrap();
        prop_assert!(fit.shape() <= 0.0);
        prop_assert!(fit.scale() > 0.0);
        let exponential = GpdParams::new(0.0, sample.mean()).unwrap();
        prop_assert!(
            log_likelihood(&fit, &sample) >= log_likelihood(&exponential, &sample) - 1e-9
        );
    }

    #[test]
    fn surprise_value_is_monotone_and_zero_at_threshold(
        params in arb_params(),
        u in -50.0..50.0f64,
        mut deltas in prop::collection::vec(-5.0..20.0f64, 2..20),
    ) {
        deltas.sort_by(f64::total_cmp);
        let mut prev = f64::NEG_INFINITY;
        for &d in &deltas {
            let v = surprise_value(&params, u, u + d);
            prop_assert!(v >= 0.0);
            prop_assert!(v >= prev);
            if d <= 0.0 {
                prop_assert_eq!(v, 0.0);
            }
            prev = v;
        }
    }

    #[test]
    fn rescoring_preserves_ranking_and_sign(scores in arb_ranked_scores()) {
        let n = scores.len();
        let list = list_from(scores);
        let res = surprise_rescore(&list, &RescoreConfig::default()).unwrap();
        prop_assert_eq!(res.surprise.len(), n);
        for w in res.surprise.windows(2) {
            prop_assert!(w[0] >= w[1]);
        }
        for (s, v) in list.scores().iter().zip(&res.surprise) {
            prop_assert!(*v >= 0.0);
            prop_assert!(v.is_finite());
            if *s <= res.excess_threshold {
                prop_assert_eq!(*v, 0.0);
            }
        }
        prop_assert!(res.cvm_evaluations <= 2 * n);
        for w in res.cvm_trace.windows(2) {
            prop_assert!(w[1].value < w[0].value);
        }
    }

    #[test]
    fn rescoring_is_shift_invariant_on_dyadic_scores(
        raw in prop::collection::vec(0u32..2_000_000, 12..50),
        shift in -64i32..64,
    ) {
        let quantum = (2.0f64).powi(-16);
        let mut scores: Vec<f64> = raw.iter().map(|&r| r as f64 * quantum).collect();
        scores.sort_by(|a, b| b.total_cmp(a));
        prop_assume!(scores.iter().any(|&s| s != scores[0]));
        let config = RescoreConfig::default();
        let base = surprise_rescore(&list_from(scores.clone()), &config).unwrap();
        let shifted: Vec<f64> = scores.iter().map(|s| s + shift as f64).collect();
        let moved = surprise_rescore(&list_from(shifted), &config).unwrap();
        prop_assert_eq!(base.window, moved.window);
        prop_assert_eq!(base.surprise, moved.surprise);
    }

    #[test]
    fn truncation_is_monotone_in_threshold(
        mut surprise in prop::collection::vec(0.0..10.0f64, 0..40),
        tau1 in 0.0..10.0f64,
        tau2 in 0.0..10.0f64,
    ) {
        surprise.sort_by(|a, b| b.total_cmp(a));
        let (lo, hi) = if tau1 <= tau2 { (tau1, tau2) } else { (tau2, tau1) };
        let k_lo = truncate_at_threshold(&surprise, lo).unwrap();
        let k_hi = truncate_at_threshold(&surprise, hi).unwrap();
        prop_assert!(k_lo >= k_hi);
        // retained set is a prefix: every kept value exceeds tau, rest do not
        for (idx, v) in surprise.iter().enumerate() {
            if idx < k_lo { prop_assert!(*v > lo); } else { prop_assert!(*v <= lo); }
        }
    }

    #[test]
    fn pvalue_round_trip(s in 0.0..50.0f64) {
        let p = pvalue_from_surprise(s).unwrap();
        prop_assert!(p > 0.0 && p <= 1.0);
        let back = surprise_from_pvalue(p).unwrap();
        prop_assert!((back - s).abs() <= 1e-12);
    }

    #[test]
    fn pava_is_monotone_and_mean_preserving(
        targets in prop::collection::vec(0.0..1.0f64, 1..30),
        weights in prop::collection::vec(1.0..4.0f64, 1..30),
    ) {
        let n = targets.len().min(weights.len());
        let (targets, weights) = (&targets[..n], &weights[..n]);
        let fitted = pava(targets, weights);
        prop_assert!(fitted.windows(2).all(|w| w[1] >= w[0]));
        let total_w: f64 = weights.iter().sum();
        let mean_in: f64 = targets.iter().zip(weights).map(|(t, w)| t * w).sum::<f64>() / total_w;
        let mean_out: f64 = fitted.iter().zip(weights).map(|(t, w)| t * w).sum::<f64>() / total_w;
        prop_assert!((mean_in - mean_out).abs() < 1e-9);
        // monotone input is its own fit
        let mut sorted = targets.to_vec();
        sorted.sort_by(f64::total_cmp);
        let identity = pava(&sorted, weights);
        for (a, b) in identity.iter().zip(&sorted) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn f1_bounded_and_dcg_antisymmetric(
        labels in prop::collection::vec(prop::bool::ANY, 1..40),
        extra_relevant in 0usize..5,
    ) {
        let labels: Vec<Relevance> = labels
            .iter()
            .map(|&b| if b { Relevance::Relevant } else { Relevance::NonRelevant })
            .collect();
        let total = labels.iter().filter(|l| l.is_relevant()).count() + extra_relevant;
        let flipped: Vec<Relevance> = labels
            .iter()
            .map(|l| if l.is_relevant() { Relevance::NonRelevant } else { Relevance::Relevant })
            .collect();
        for k in 0..=labels.len() {
            let f1 = f1_at_k(&labels, k, total).unwrap();
            prop_assert!((0.0..=1.0).contains(&f1));
            let d = dcg_at_k(&labels, k).unwrap();
            let d_flipped = dcg_at_k(&flipped, k).unwrap();
            prop_assert!((d + d_flipped).abs() < 1e-12);
        }
    }

    #[test]
    fn oracle_dominates_every_prefix(
        labels in prop::collection::vec(prop::bool::ANY, 1..30),
    ) {
        let labels: Vec<Relevance> = labels
            .iter()
            .map(|&b| if b { Relevance::Relevant } else { Relevance::NonRelevant })
            .collect();
        let total = labels.iter().filter(|l| l.is_relevant()).count();
        let n = labels.len();
        let query = EvalQuery {
            query_id: "q".into(),
            labels,
            total_relevant: total,
            raw_scores: (0..n).map(|i| (n - i) as f64).collect(),
            surprise: None,
        };
        for metric in [Metric::F1, Metric::Dcg, Metric::Accuracy] {
            let (_, best) = oracle_cutoff(&query, metric);
            for k in 0..=n {
                prop_assert!(best >= query.metric_at_k(metric, k));
            }
        }
    }
}

#[test]
fn rescoring_is_scale_invariant_within_tolerance() {
    // spot-check of the 1e-6 relative bound; the acceptance suite runs this
    // over a thousand lists
    let scores: Vec<f64> = (0..60).map(|i| 12.0 - 0.19 * i as f64).collect();
    let config = RescoreConfig::default();
    let base = surprise_rescore(&list_from(scores.clone()), &config).unwrap();
    for lambda in [0.05, 3.0, 128.0] {
        let scaled: Vec<f64> = scores.iter().map(|s| s * lambda).collect();
        let res = surprise_rescore(&list_from(scaled), &config).unwrap();
        assert_eq!(base.window, res.window, "lambda {lambda}");
        for (a, b) in base.surprise.iter().zip(&res.surprise) {
            let tol = 1e-6 * a.abs().max(1.0);
            assert!((a - b).abs() <= tol, "lambda {lambda}: {a} vs {b}");
        }
    }
}
