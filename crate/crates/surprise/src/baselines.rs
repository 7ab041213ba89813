//! Reference truncation policies: fixed global cutoff, per-query neighborhood
//! cutoff, the label-oracle upper bound, and isotonic-regression thresholding.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::metrics::{EvalQuery, Metric};
use crate::rescore::RankedList;
use crate::truncate::{Policy, TruncationDecision};

/// For each test query id, the ordered training query ids designated as its
/// neighborhood. How the neighborhood is built is the data source's business;
/// the synthetic generator uses offset proximity.
pub type NeighborhoodMap = BTreeMap<String, Vec<String>>;

/// Cutoff fixed across queries that maximizes the mean training metric.
/// Ties resolve to the smallest cutoff.
pub fn global_k_fit(train: &[EvalQuery], metric: Metric) -> Result<usize> {
    if train.is_empty() {
        return Err(Error::EmptyInput("training queries"));
    }
    let refs: Vec<&EvalQuery> = train.iter().collect();
    Ok(best_fixed_cutoff(&refs, metric))
}

/// Cutoff chosen for one query from its neighborhood's labeled lists.
pub fn local_k(neighbors: &[&EvalQuery], metric: Metric) -> Result<usize> {
    if neighbors.is_empty() {
        return Err(Error::EmptyInput("neighborhood"));
    }
    Ok(best_fixed_cutoff(neighbors, metric))
}

fn best_fixed_cutoff(queries: &[&EvalQuery], metric: Metric) -> usize {
    let n_max = queries.iter().map(|q| q.len()).max().unwrap_or(0);
    let count = queries.len() as f64;
    let mut best_k = 0;
    let mut best_value = f64::NEG_INFINITY;
    for k in 0..=n_max {
        let mean = queries
            .iter()
            .map(|q| q.metric_at_k(metric, k.min(q.len())))
            .sum::<f64>()
            / count;
        if mean > best_value {
            best_value = mean;
            best_k = k;
        }
    }
    best_k
}

/// Metric-maximizing prefix computed with the query's true labels, and the
/// value it achieves. Upper-bounds every other policy on that query.
pub fn oracle_cutoff(query: &EvalQuery, metric: Metric) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for k in 0..=query.len() {
        let value = query.metric_at_k(metric, k);
        if value > best.1 {
            best = (k, value);
        }
    }
    best
}

/// Weighted pool-adjacent-violators: the least-squares nondecreasing fit to
/// `targets` in sequence order.
pub fn pava(targets: &[f64], weights: &[f64]) -> Vec<f64> {
    assert_eq!(targets.len(), weights.len());
    let n = targets.len();
    let mut value: Vec<f64> = Vec::with_capacity(n);
    let mut weight: Vec<f64> = Vec::with_capacity(n);
    let mut count: Vec<usize> = Vec::with_capacity(n);
    for i in 0..n {
        value.push(targets[i]);
        weight.push(weights[i]);
        count.push(1);
        while value.len() > 1 && value[value.len() - 2] > value[value.len() - 1] {
            let (v2, w2, c2) = (value.pop().unwrap(), weight.pop().unwrap(), count.pop().unwrap());
            let last = value.len() - 1;
            let pooled_w = weight[last] + w2;
            value[last] = (weight[last] * value[last] + w2 * v2) / pooled_w;
            weight[last] = pooled_w;
            count[last] += c2;
        }
    }
    let mut out = Vec::with_capacity(n);
    for (v, c) in value.into_iter().zip(count) {
        out.extend(std::iter::repeat_n(v, c));
    }
    out
}

/// A monotone score-to-relevance map with a decision threshold.
///
/// Prediction is piecewise-linear between the knots and clamped to the end
/// values outside them.
#[derive(Debug, Clone, PartialEq)]
pub struct IsotonicModel {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
    decision_threshold: f64,
}

impl IsotonicModel {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>, decision_threshold: f64) -> Result<Self> {
        if breakpoints.is_empty() || breakpoints.len() != values.len() {
            return Err(Error::Data(
                "isotonic model needs matching, nonempty knots and values".into(),
            ));
        }
        if breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Data("isotonic knots must be strictly increasing".into()));
        }
        if values.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Data("isotonic values must be nondecreasing".into()));
        }
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Data("isotonic values must lie in [0, 1]".into()));
        }
        Ok(Self {
            breakpoints,
            values,
            decision_threshold,
        })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn decision_threshold(&self) -> f64 {
        self.decision_threshold
    }

    /// Fitted relevance for a raw score.
    pub fn predict(&self, score: f64) -> f64 {
        let bp = &self.breakpoints;
        match bp.binary_search_by(|b| b.total_cmp(&score)) {
            Ok(i) => self.values[i],
            Err(0) => self.values[0],
            Err(i) if i == bp.len() => self.values[bp.len() - 1],
            Err(i) => {
                let t = (score - bp[i - 1]) / (bp[i] - bp[i - 1]);
                self.values[i - 1] + t * (self.values[i] - self.values[i - 1])
            }
        }
    }
}

/// Fits an isotonic regression of binary relevance on raw score over the
/// pooled neighborhood results, then picks the decision threshold whose
/// truncations maximize the mean metric across the same neighborhood.
///
/// Relevant results regress to 1 and non-relevant ones to 0; results with
/// exactly equal scores are pooled (weighted by multiplicity) before the
/// monotone fit so the knots stay strictly increasing.
pub fn isotonic_fit(neighbors: &[&EvalQuery], metric: Metric) -> Result<IsotonicModel> {
    if neighbors.is_empty() {
        return Err(Error::EmptyInput("neighborhood"));
    }
    let mut points: Vec<(f64, f64)> = Vec::new();
    for q in neighbors {
        for (s, l) in q.raw_scores.iter().zip(&q.labels) {
            points.push((*s, if l.is_relevant() { 1.0 } else { 0.0 }));
        }
    }
    if points.is_empty() {
        return Err(Error::EmptyInput("neighborhood results"));
    }
    let (knots, values) = fit_monotone(&points);
    let unthresholded = IsotonicModel::new(knots, values, 0.0)?;

    // Candidate thresholds: the fitted values over the neighborhood lists,
    // plus zero so that "keep everything predicted relevant" is available.
    let mut candidates: Vec<f64> = neighbors
        .iter()
        .flat_map(|q| q.raw_scores.iter().map(|s| unthresholded.predict(*s)))
        .chain(std::iter::once(0.0))
        .collect();
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();

    let count = neighbors.len() as f64;
    let mut best = (0.0, f64::NEG_INFINITY);
    for &t in &candidates {
        let mean = neighbors
            .iter()
            .map(|q| {
                let k = q
                    .raw_scores
                    .iter()
                    .take_while(|s| unthresholded.predict(**s) > t)
                    .count();
                q.metric_at_k(metric, k)
            })
            .sum::<f64>()
            / count;
        if mean > best.1 {
            best = (t, mean);
        }
    }
    IsotonicModel::new(
        unthresholded.breakpoints,
        unthresholded.values,
        best.0,
    )
}

/// Least-squares monotone fit of target on score for raw points in any order.
/// Returns strictly increasing knots with their fitted values.
pub fn fit_monotone(points: &[(f64, f64)]) -> (Vec<f64>, Vec<f64>) {
    let mut sorted: Vec<(f64, f64)> = points.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut knots: Vec<f64> = Vec::new();
    let mut targets: Vec<f64> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    for (score, target) in sorted {
        if knots.last() == Some(&score) {
            let last = targets.len() - 1;
            let w = weights[last];
            targets[last] = (targets[last] * w + target) / (w + 1.0);
            weights[last] = w + 1.0;
        } else {
            knots.push(score);
            targets.push(target);
            weights.push(1.0);
        }
    }
    let fitted = pava(&targets, &weights);
    (knots, fitted)
}

/// Applies a fitted model to one ranked list: keeps the prefix whose fitted
/// relevance stays strictly above the decision threshold.
pub fn isotonic_apply(model: &IsotonicModel, list: &RankedList) -> TruncationDecision {
    let cutoff = list
        .scores()
        .iter()
        .take_while(|s| model.predict(**s) > model.decision_threshold)
        .count();
    TruncationDecision {
        query_id: list.query_id().to_string(),
        cutoff,
        threshold: model.decision_threshold,
        policy: Policy::Isotonic,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Relevance::{NonRelevant as N, Relevant as R};

    fn query(id: &str, labels: Vec<crate::Relevance>) -> EvalQuery {
        let n = labels.len();
        let total = labels.iter().filter(|l| l.is_relevant()).count();
        EvalQuery {
            query_id: id.into(),
            raw_scores: (0..n).map(|i| (n - i) as f64).collect(),
            labels,
            total_relevant: total,
            surprise: None,
        }
    }

    #[test]
    fn global_k_hand_examples() {
        let train = vec![query("q", vec![R, N])];
        assert_eq!(global_k_fit(&train, Metric::F1).unwrap(), 1);

        let all_neg = vec![query("a", vec![N, N, N]), query("b", vec![N, N])];
        assert_eq!(global_k_fit(&all_neg, Metric::Dcg).unwrap(), 0);

        assert!(global_k_fit(&[], Metric::F1).is_err());
    }

    #[test]
    fn local_k_hand_examples() {
        let single = query("n", vec![R, R, N]);
        assert_eq!(local_k(&[&single], Metric::F1).unwrap(), 2);

        // Mean DCG is 0 at every cutoff for this pair, so the tie resolves
        // down to the empty prefix.
        let a = query("a", vec![R, N]);
        let b = query("b", vec![N, R]);
        assert_eq!(local_k(&[&a, &b], Metric::Dcg).unwrap(), 0);

        let own = query("q", vec![R, N, R, N]);
        let (oracle_k, _) = oracle_cutoff(&own, Metric::F1);
        assert_eq!(local_k(&[&own], Metric::F1).unwrap(), oracle_k);

        assert!(local_k(&[], Metric::F1).is_err());
    }

    #[test]
    fn oracle_hand_examples() {
        let q = query("q", vec![R, R, N]);
        let (k, value) = oracle_cutoff(&q, Metric::Dcg);
        assert_eq!(k, 2);
        assert!((value - 1.6309297).abs() < 1e-6);

        let none = query("q", vec![N, N]);
        assert_eq!(oracle_cutoff(&none, Metric::Dcg), (0, 0.0));
    }

    #[test]
    fn pava_hand_examples() {
        // already monotone input is its own fit
        assert_eq!(pava(&[0.0, 0.0, 1.0], &[1.0; 3]), vec![0.0, 0.0, 1.0]);
        assert_eq!(
            pava(&[0.0, 1.0, 0.0, 1.0], &[1.0; 4]),
            vec![0.0, 0.5, 0.5, 1.0]
        );
        assert_eq!(pava(&[0.7; 4], &[1.0; 4]), vec![0.7; 4]);
    }

    #[test]
    fn monotone_fit_pools_tied_scores() {
        let points = [(1.0, 0.0), (1.0, 1.0), (2.0, 1.0)];
        let (knots, values) = fit_monotone(&points);
        assert_eq!(knots, vec![1.0, 2.0]);
        assert_eq!(values, vec![0.5, 1.0]);
    }

    #[test]
    fn isotonic_apply_hand_example() {
        let model = IsotonicModel::new(vec![1.0, 2.0, 3.0], vec![0.0, 0.0, 1.0], 0.5).unwrap();
        assert_eq!(model.predict(3.5), 1.0);
        assert_eq!(model.predict(2.5), 0.5);
        assert_eq!(model.predict(1.5), 0.0);
        let list = RankedList::new(
            "q",
            vec!["a".into(), "b".into(), "c".into()],
            vec![3.5, 2.5, 1.5],
            None,
        )
        .unwrap();
        assert_eq!(isotonic_apply(&model, &list).cutoff, 1);

        let all = IsotonicModel::new(vec![1.0, 2.0], vec![0.0, 1.0], -0.1).unwrap();
        assert_eq!(isotonic_apply(&all, &list).cutoff, 3);
        let nothing = IsotonicModel::new(vec![1.0, 2.0], vec![0.0, 1.0], 1.0).unwrap();
        assert_eq!(isotonic_apply(&nothing, &list).cutoff, 0);
    }

    #[test]
    fn isotonic_fit_single_class_is_constant() {
        let q = query("q", vec![R, R, R]);
        let model = isotonic_fit(&[&q], Metric::F1).unwrap();
        assert!(model.values().iter().all(|&v| v == 1.0));
        // threshold 0 keeps everything, which is optimal here
        let list = RankedList::new("q", vec!["a".into(), "b".into(), "c".into()], q.raw_scores.clone(), None)
            .unwrap();
        assert_eq!(isotonic_apply(&model, &list).cutoff, 3);
    }

    #[test]
    fn oracle_dominates_other_policies() {
        let q = query("q", vec![R, N, R, N, N, R, N, N]);
        for metric in [Metric::F1, Metric::Dcg, Metric::Accuracy] {
            let (_, oracle_value) = oracle_cutoff(&q, metric);
            for k in 0..=q.len() {
                assert!(oracle_value >= q.metric_at_k(metric, k));
            }
        }
    }
}
