//! Turning calibrated scores into cutoff decisions: threshold application,
//! threshold sweeps over training data, and the p-value correspondence.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{EvalQuery, Metric};
use crate::par::par_map;

/// Default sweep range for surprise thresholds.
pub const DEFAULT_SWEEP_RANGE: (f64, f64) = (0.0, 8.0);
/// Default sweep grid spacing; fine enough to resolve F1 plateaus.
pub const DEFAULT_SWEEP_STEP: f64 = 0.05;

/// Tag naming the method that produced a decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    Surprise,
    GlobalK,
    LocalK,
    Oracle,
    Isotonic,
    ScoreThreshold,
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Policy::Surprise => "surprise",
            Policy::GlobalK => "global_k",
            Policy::LocalK => "local_k",
            Policy::Oracle => "oracle",
            Policy::Isotonic => "isotonic",
            Policy::ScoreThreshold => "score_threshold",
        })
    }
}

/// A cutoff for one query: results `1..=k` are returned.
///
/// Retention is strict — a result is kept only when its value exceeds the
/// threshold — so a threshold of zero can still drop the zero-surprise region
/// below the excess threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationDecision {
    pub query_id: String,
    #[serde(rename = "k")]
    pub cutoff: usize,
    pub threshold: f64,
    pub policy: Policy,
}

/// Number of leading entries strictly above `tau` in a nonincreasing list.
pub fn truncate_at_threshold(values: &[f64], tau: f64) -> Result<usize> {
    if values.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::Contract(
            "threshold truncation requires nonincreasing values".into(),
        ));
    }
    Ok(values.iter().take_while(|&&v| v > tau).count())
}

/// Which per-result value vector a sweep thresholds on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreSource {
    Surprise,
    RawScore,
}

/// Outcome of a threshold sweep: the grid, the mean metric at each grid
/// point, and the argmax (smallest threshold on ties).
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdSweepResult {
    pub grid: Vec<f64>,
    pub mean_metric: Vec<f64>,
    pub best_threshold: f64,
    pub best_mean: f64,
}

/// Mean metric over `queries` when every list is truncated at `tau`.
pub fn mean_metric_at_threshold(
    queries: &[EvalQuery],
    source: ScoreSource,
    metric: Metric,
    tau: f64,
) -> Result<f64> {
    if queries.is_empty() {
        return Err(Error::EmptyInput("evaluation queries"));
    }
    let mut sum = 0.0;
    for q in queries {
        let values = source_values(q, source)?;
        let k = truncate_at_threshold(values, tau)?;
        sum += q.metric_at_k(metric, k);
    }
    Ok(sum / queries.len() as f64)
}

/// Evaluates the mean metric on an ascending threshold grid over `[lo, hi]`
/// with the given step, and returns the full curve plus its argmax.
///
/// Grid points are evaluated in parallel (under the `parallel` feature); the
/// argmax reduction runs in ascending grid order either way, so the result is
/// scheduling-independent.
pub fn sweep_threshold(
    train: &[EvalQuery],
    source: ScoreSource,
    metric: Metric,
    lo: f64,
    hi: f64,
    step: f64,
) -> Result<ThresholdSweepResult> {
    if lo.is_nan() || hi.is_nan() || lo >= hi {
        return Err(Error::Config(format!(
            "sweep range must satisfy lo < hi, got [{lo}, {hi}]"
        )));
    }
    if step.is_nan() || step <= 0.0 {
        return Err(Error::Config(format!("sweep step must be positive, got {step}")));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    let grid: Vec<f64> = (0..count).map(|i| lo + i as f64 * step).collect();
    sweep_grid(train, source, metric, grid)
}

/// Sweeps a single global threshold on the raw scores, over a grid spanning
/// the observed score range (padded one step below the minimum so "keep
/// everything" is reachable).
pub fn sweep_raw_threshold(
    train: &[EvalQuery],
    metric: Metric,
    steps: usize,
) -> Result<ThresholdSweepResult> {
    if train.is_empty() {
        return Err(Error::EmptyInput("training queries"));
    }
    if steps < 2 {
        return Err(Error::Config("raw sweep needs at least 2 steps".into()));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for q in train {
        for &s in &q.raw_scores {
            lo = lo.min(s);
            hi = hi.max(s);
        }
    }
    if !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Data("training queries carry no scores".into()));
    }
    let pad = if hi > lo { (hi - lo) / (steps - 1) as f64 } else { 1.0 };
    let grid: Vec<f64> = (0..=steps).map(|i| lo - pad + i as f64 * pad).collect();
    sweep_grid(train, ScoreSource::RawScore, metric, grid)
}

fn sweep_grid(
    train: &[EvalQuery],
    source: ScoreSource,
    metric: Metric,
    grid: Vec<f64>,
) -> Result<ThresholdSweepResult> {
    if train.is_empty() {
        return Err(Error::EmptyInput("training queries"));
    }
    for q in train {
        source_values(q, source)?;
    }
    let evaluated = par_map(&grid, |&tau| {
        mean_metric_at_threshold(train, source, metric, tau).expect("inputs validated above")
    });
    let mut best_idx = 0;
    for (i, &v) in evaluated.iter().enumerate() {
        if v > evaluated[best_idx] {
            best_idx = i;
        }
    }
    Ok(ThresholdSweepResult {
        best_threshold: grid[best_idx],
        best_mean: evaluated[best_idx],
        grid,
        mean_metric: evaluated,
    })
}

fn source_values(q: &EvalQuery, source: ScoreSource) -> Result<&[f64]> {
    match source {
        ScoreSource::RawScore => Ok(&q.raw_scores),
        ScoreSource::Surprise => q
            .surprise
            .as_deref()
            .ok_or_else(|| Error::Data(format!("query {} has not been rescored", q.query_id))),
    }
}

/// `p = exp(-s)`: the tail probability of a surprise value under the fitted
/// non-relevance null.
pub fn pvalue_from_surprise(surprise: f64) -> Result<f64> {
    if surprise.is_nan() || surprise < 0.0 {
        return Err(Error::Domain(format!(
            "surprise must be nonnegative, got {surprise}"
        )));
    }
    Ok((-surprise).exp())
}

/// Inverse of [`pvalue_from_surprise`]: `s = -ln(p)` for `p` in `(0, 1]`.
pub fn surprise_from_pvalue(pvalue: f64) -> Result<f64> {
    if pvalue.is_nan() || pvalue <= 0.0 || pvalue > 1.0 {
        return Err(Error::Domain(format!(
            "p-value must lie in (0, 1], got {pvalue}"
        )));
    }
    Ok(-pvalue.ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Relevance::{NonRelevant as N, Relevant as R};

    fn query(id: &str, labels: Vec<crate::Relevance>, surprise: Vec<f64>) -> EvalQuery {
        let total = labels.iter().filter(|l| l.is_relevant()).count();
        EvalQuery {
            query_id: id.into(),
            raw_scores: surprise.iter().map(|s| s + 10.0).collect(),
            labels,
            total_relevant: total,
            surprise: Some(surprise),
        }
    }

    #[test]
    fn truncation_counts_strictly_above() {
        assert_eq!(truncate_at_threshold(&[5.1, 2.0, 0.3, 0.0], 2.3).unwrap(), 1);
        assert_eq!(truncate_at_threshold(&[5.1, 2.0, 0.3, 0.0], 0.0).unwrap(), 3);
        assert_eq!(truncate_at_threshold(&[5.1, 2.0, 0.3, 0.0], 5.1).unwrap(), 0);
        assert!(truncate_at_threshold(&[1.0, 2.0], 0.5).is_err());
    }

    #[test]
    fn sweep_hand_example() {
        let train = vec![query("q", vec![R, N, N], vec![3.0, 1.0, 0.0])];
        let sweep = sweep_threshold(&train, ScoreSource::Surprise, Metric::F1, 0.0, 4.0, 2.0).unwrap();
        assert_eq!(sweep.grid, vec![0.0, 2.0, 4.0]);
        // tau=0 keeps two results (F1 = 2/3); tau=2 keeps exactly the hit.
        assert_eq!(sweep.best_threshold, 2.0);
        assert_eq!(sweep.best_mean, 1.0);
    }

    #[test]
    fn sweep_with_no_relevant_items_prefers_empty_lists() {
        // Under signed DCG the best attainable value is 0, reached once every
        // list is cut to nothing; ties resolve to the smallest threshold.
        let train = vec![
            query("a", vec![N, N, N], vec![2.9, 1.0, 0.0]),
            query("b", vec![N, N, N], vec![1.5, 0.4, 0.0]),
        ];
        let sweep = sweep_threshold(&train, ScoreSource::Surprise, Metric::Dcg, 0.0, 8.0, 0.5).unwrap();
        assert_eq!(sweep.best_mean, 0.0);
        assert_eq!(sweep.best_threshold, 3.0);
        let k = truncate_at_threshold(train[0].surprise.as_deref().unwrap(), sweep.best_threshold)
            .unwrap();
        assert_eq!(k, 0);
    }

    #[test]
    fn sweep_argmax_matches_recomputation() {
        let train = vec![
            query("a", vec![R, N, R, N], vec![4.0, 2.5, 2.0, 0.0]),
            query("b", vec![N, R, N, N], vec![3.0, 2.8, 0.5, 0.1]),
        ];
        let sweep =
            sweep_threshold(&train, ScoreSource::Surprise, Metric::F1, 0.0, 8.0, 0.05).unwrap();
        let recomputed =
            mean_metric_at_threshold(&train, ScoreSource::Surprise, Metric::F1, sweep.best_threshold)
                .unwrap();
        assert_eq!(sweep.best_mean, recomputed);
        assert!(sweep.grid.len() == 161);
    }

    #[test]
    fn sweep_rejects_bad_inputs() {
        let train = vec![query("q", vec![R], vec![1.0])];
        assert!(sweep_threshold(&[], ScoreSource::Surprise, Metric::F1, 0.0, 8.0, 0.05).is_err());
        assert!(sweep_threshold(&train, ScoreSource::Surprise, Metric::F1, 3.0, 1.0, 0.05).is_err());
        assert!(sweep_threshold(&train, ScoreSource::Surprise, Metric::F1, 0.0, 8.0, 0.0).is_err());
        let unscored = EvalQuery {
            surprise: None,
            ..train[0].clone()
        };
        assert!(
            sweep_threshold(&[unscored], ScoreSource::Surprise, Metric::F1, 0.0, 8.0, 0.05)
                .is_err()
        );
    }

    #[test]
    fn pvalue_mapping() {
        assert_eq!(pvalue_from_surprise(0.0).unwrap(), 1.0);
        assert!((pvalue_from_surprise(std::f64::consts::LN_10).unwrap() - 0.1).abs() < 1e-6);
        assert!((pvalue_from_surprise(2.0 * std::f64::consts::LN_10).unwrap() - 0.01).abs() < 1e-6);
        assert!(pvalue_from_surprise(-0.1).is_err());

        assert_eq!(surprise_from_pvalue(1.0).unwrap(), 0.0);
        assert!((surprise_from_pvalue(0.1).unwrap() - std::f64::consts::LN_10).abs() < 1e-6);
        assert!((surprise_from_pvalue((-5.0f64).exp()).unwrap() - 5.0).abs() < 1e-12);
        assert!(surprise_from_pvalue(0.0).is_err());
        assert!(surprise_from_pvalue(1.5).is_err());
    }
}
