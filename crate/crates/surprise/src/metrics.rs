//! Evaluation metrics for truncated ranked lists: F1 at a cutoff, signed DCG
//! at a cutoff, and match accuracy, plus the report type the CLI serializes.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Relevance;

/// Which metric a policy is optimized and evaluated against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    F1,
    Dcg,
    Accuracy,
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::F1 => "f1",
            Metric::Dcg => "dcg",
            Metric::Accuracy => "accuracy",
        })
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f1" => Ok(Metric::F1),
            "dcg" => Ok(Metric::Dcg),
            "accuracy" => Ok(Metric::Accuracy),
            other => Err(Error::Config(format!(
                "unknown metric {other:?} (expected f1, dcg, or accuracy)"
            ))),
        }
    }
}

/// F1 of the length-`k` prefix.
///
/// `total_relevant` is the number of relevant items that exist for the query,
/// which may exceed the relevant count inside the retrieved list; recall uses
/// it as the denominator. `k = 0` and zero denominators score 0.
pub fn f1_at_k(labels: &[Relevance], k: usize, total_relevant: usize) -> Result<f64> {
    if k > labels.len() {
        return Err(Error::Domain(format!(
            "cutoff {k} exceeds list length {}",
            labels.len()
        )));
    }
    if k == 0 || total_relevant == 0 {
        return Ok(0.0);
    }
    let hits = labels[..k].iter().filter(|l| l.is_relevant()).count() as f64;
    let precision = hits / k as f64;
    let recall = hits / total_relevant as f64;
    if precision + recall == 0.0 {
        Ok(0.0)
    } else {
        Ok(2.0 * precision * recall / (precision + recall))
    }
}

/// Signed discounted cumulative gain of the length-`k` prefix, with gains
/// `+1` for relevant and `-1` for non-relevant results:
///
/// ```text
/// DCG_k = Σ_{i=1..k} rel_i / log2(i + 1)
/// ```
pub fn dcg_at_k(labels: &[Relevance], k: usize) -> Result<f64> {
    if k > labels.len() {
        return Err(Error::Domain(format!(
            "cutoff {k} exceeds list length {}",
            labels.len()
        )));
    }
    Ok(labels[..k]
        .iter()
        .enumerate()
        .map(|(idx, l)| l.gain() / ((idx + 2) as f64).log2())
        .sum())
}

/// One query's outcome for the match-accuracy metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatchDecision {
    pub cutoff: usize,
    pub has_match: bool,
    pub match_in_prefix: bool,
}

/// Fraction of queries handled correctly: a query with a match must have it
/// inside the returned prefix, and a query without one must return nothing.
pub fn match_accuracy(decisions: &[MatchDecision]) -> Result<f64> {
    if decisions.is_empty() {
        return Err(Error::EmptyInput("match decisions"));
    }
    let correct = decisions
        .iter()
        .filter(|d| {
            if d.has_match {
                d.match_in_prefix
            } else {
                d.cutoff == 0
            }
        })
        .count();
    Ok(correct as f64 / decisions.len() as f64)
}

/// One query prepared for evaluation: ranked labels plus whatever score
/// vectors the policies under comparison need.
#[derive(Debug, Clone)]
pub struct EvalQuery {
    pub query_id: String,
    /// Labels in ranked (descending score) order.
    pub labels: Vec<Relevance>,
    /// Ground-truth relevant count for the query, in-list or not.
    pub total_relevant: usize,
    /// Raw scores in ranked order.
    pub raw_scores: Vec<f64>,
    /// Calibrated scores in ranked order, when the query has been rescored.
    pub surprise: Option<Vec<f64>>,
}

impl EvalQuery {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Metric value of the length-`k` prefix. `k` must not exceed the list.
    pub fn metric_at_k(&self, metric: Metric, k: usize) -> f64 {
        match metric {
            Metric::F1 => f1_at_k(&self.labels, k, self.total_relevant).expect("cutoff in range"),
            Metric::Dcg => dcg_at_k(&self.labels, k).expect("cutoff in range"),
            Metric::Accuracy => {
                let has_match = self.total_relevant > 0;
                let in_prefix = self.labels[..k].iter().any(|l| l.is_relevant());
                if (has_match && in_prefix) || (!has_match && k == 0) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Per-query and mean metric values for a set of policies.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EvalReport {
    pub metric: String,
    pub query_count: usize,
    /// Policy name -> mean metric over all queries.
    pub mean: BTreeMap<String, f64>,
    /// Query id -> policy name -> metric value.
    pub per_query: BTreeMap<String, BTreeMap<String, f64>>,
}

impl EvalReport {
    /// Builds a report from per-policy cutoff vectors aligned with `queries`.
    pub fn new(
        metric: Metric,
        queries: &[EvalQuery],
        cutoffs: &BTreeMap<String, Vec<usize>>,
    ) -> Result<Self> {
        if queries.is_empty() {
            return Err(Error::EmptyInput("evaluation queries"));
        }
        let mut per_query: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
        for (policy, ks) in cutoffs {
            if ks.len() != queries.len() {
                return Err(Error::Data(format!(
                    "policy {policy}: {} cutoffs for {} queries",
                    ks.len(),
                    queries.len()
                )));
            }
            for (q, &k) in queries.iter().zip(ks) {
                let entry = per_query.entry(q.query_id.clone()).or_default();
                if entry
                    .insert(policy.clone(), q.metric_at_k(metric, k))
                    .is_some()
                {
                    return Err(Error::Data(format!(
                        "query {} appears more than once",
                        q.query_id
                    )));
                }
            }
        }
        // Means are accumulated in sorted query-id order so that recomputing
        // them from `per_query` reproduces the same floating-point sums.
        let mut mean = BTreeMap::new();
        for policy in cutoffs.keys() {
            let sum: f64 = per_query.values().map(|m| m[policy]).sum();
            mean.insert(policy.clone(), sum / queries.len() as f64);
        }
        Ok(Self {
            metric: metric.to_string(),
            query_count: queries.len(),
            mean,
            per_query,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Relevance::{NonRelevant as N, Relevant as R};

    #[test]
    fn f1_examples() {
        assert_eq!(f1_at_k(&[R, R, N, N], 2, 2).unwrap(), 1.0);
        assert_eq!(f1_at_k(&[R, R, N, N], 0, 2).unwrap(), 0.0);
        assert!((f1_at_k(&[R, N, R], 2, 2).unwrap() - 0.5).abs() < 1e-15);
        assert!(f1_at_k(&[R, N], 3, 2).is_err());
        // relevant items may exist beyond the retrieved list
        assert!((f1_at_k(&[R], 1, 4).unwrap() - 2.0 * 0.25 / 1.25).abs() < 1e-15);
    }

    #[test]
    fn dcg_examples() {
        let v = dcg_at_k(&[R, R, N], 3).unwrap();
        assert!((v - 1.1309297).abs() < 1e-6);
        assert_eq!(dcg_at_k(&[R, R, N], 0).unwrap(), 0.0);
        assert_eq!(dcg_at_k(&[N], 1).unwrap(), -1.0);
        assert!(dcg_at_k(&[N], 2).is_err());
    }

    #[test]
    fn dcg_prefix_difference_identity() {
        let labels = [R, N, N, R, R, N, R];
        for k in 1..=labels.len() {
            let diff = dcg_at_k(&labels, k).unwrap() - dcg_at_k(&labels, k - 1).unwrap();
            let expect = labels[k - 1].gain() / ((k + 1) as f64).log2();
            assert!((diff - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn accuracy_examples() {
        let one = |cutoff, has_match, match_in_prefix| MatchDecision {
            cutoff,
            has_match,
            match_in_prefix,
        };
        assert_eq!(match_accuracy(&[one(0, false, false)]).unwrap(), 1.0);
        assert_eq!(match_accuracy(&[one(0, true, false)]).unwrap(), 0.0);
        let two = [one(3, true, true), one(2, false, false)];
        assert_eq!(match_accuracy(&two).unwrap(), 0.5);
        assert!(match_accuracy(&[]).is_err());
    }

    #[test]
    fn report_means_match_per_query_values() {
        let queries = vec![
            EvalQuery {
                query_id: "a".into(),
                labels: vec![R, N],
                total_relevant: 1,
                raw_scores: vec![2.0, 1.0],
                surprise: None,
            },
            EvalQuery {
                query_id: "b".into(),
                labels: vec![N, R],
                total_relevant: 1,
                raw_scores: vec![2.0, 1.0],
                surprise: None,
            },
        ];
        let mut cutoffs = BTreeMap::new();
        cutoffs.insert("fixed".to_string(), vec![1usize, 1]);
        let report = EvalReport::new(Metric::F1, &queries, &cutoffs).unwrap();
        let recomputed: f64 = report
            .per_query
            .values()
            .map(|m| m["fixed"])
            .sum::<f64>()
            / report.query_count as f64;
        assert_eq!(report.mean["fixed"], recomputed);
    }
}
