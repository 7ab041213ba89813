//! Rescoring of a single ranked list: greedy two-sided fit-window selection
//! followed by a GPD fit on the retained excesses and a `-log` tail-probability
//! transform of every score at or above the excess threshold.
//!
//! The rescoring consumes only the score values of one list. Labels are
//! carried through untouched; they exist for evaluation alone. Ordering is
//! preserved: the transform is monotone in the raw score, so the rescored list
//! ranks identically to the input.

use crate::error::{Error, Result};
use crate::gpd::{
    cvm_statistic, fit_gpd_mle, CvmStatistic, ExcessSample, GpdParams, DEFAULT_MIN_FIT_SIZE,
};
use crate::par::par_map;
use crate::Relevance;

/// Tie tolerance for the greedy loops: a shrink step is accepted only if it
/// lowers the statistic by more than this, so plateaus terminate.
const CVM_TIE_EPS: f64 = 1e-12;

/// One query's ranked results: ids and scores in descending-relevance order,
/// with optional binary labels.
///
/// Scores are oriented "higher = more relevant". Distance-like scores must be
/// negated upstream (see the data module); this type rejects lists whose
/// scores are not nonincreasing.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedList {
    query_id: String,
    result_ids: Vec<String>,
    scores: Vec<f64>,
    labels: Option<Vec<Relevance>>,
}

impl RankedList {
    pub fn new(
        query_id: impl Into<String>,
        result_ids: Vec<String>,
        scores: Vec<f64>,
        labels: Option<Vec<Relevance>>,
    ) -> Result<Self> {
        let query_id = query_id.into();
        if result_ids.len() != scores.len() {
            return Err(Error::Data(format!(
                "query {query_id}: {} ids but {} scores",
                result_ids.len(),
                scores.len()
            )));
        }
        if let Some(labels) = &labels {
            if labels.len() != scores.len() {
                return Err(Error::Data(format!(
                    "query {query_id}: {} labels but {} scores",
                    labels.len(),
                    scores.len()
                )));
            }
        }
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::Data(format!("query {query_id}: non-finite score")));
        }
        if scores.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::Data(format!(
                "query {query_id}: scores must be nonincreasing in rank order"
            )));
        }
        Ok(Self {
            query_id,
            result_ids,
            scores,
            labels,
        })
    }

    /// Builds a list from results in arbitrary order by sorting them into
    /// descending score order (stable, so tied results keep their relative
    /// position).
    pub fn from_unordered(
        query_id: impl Into<String>,
        result_ids: Vec<String>,
        scores: Vec<f64>,
        labels: Option<Vec<Relevance>>,
    ) -> Result<Self> {
        if result_ids.len() != scores.len() {
            return Err(Error::Data(format!(
                "{} ids but {} scores",
                result_ids.len(),
                scores.len()
            )));
        }
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
        let result_ids = order.iter().map(|&k| result_ids[k].clone()).collect();
        let sorted_scores = order.iter().map(|&k| scores[k]).collect();
        let labels = labels.map(|ls| order.iter().map(|&k| ls[k]).collect());
        Self::new(query_id, result_ids, sorted_scores, labels)
    }

    pub fn query_id(&self) -> &str {
        &self.query_id
    }

    pub fn result_ids(&self) -> &[String] {
        &self.result_ids
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn labels(&self) -> Option<&[Relevance]> {
        self.labels.as_deref()
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// Replaces the labels, e.g. after joining against relevance judgments.
    pub fn with_labels(mut self, labels: Vec<Relevance>) -> Result<Self> {
        if labels.len() != self.scores.len() {
            return Err(Error::Data(format!(
                "query {}: {} labels but {} scores",
                self.query_id,
                labels.len(),
                self.scores.len()
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }
}

/// The slice of the ascending score list retained for fitting.
///
/// `start` counts the lowest scores excluded (the excess threshold is the
/// score at `start`), `end` bounds the window before the suspected-relevant
/// tail, and the window itself is `ascending[start..end]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FitWindow {
    pub start: usize,
    pub end: usize,
    pub total: usize,
}

impl FitWindow {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }

    /// Number of high scores dropped as suspected relevant.
    pub fn trimmed_high(&self) -> usize {
        self.total - self.end
    }

    /// Number of low scores excluded below the excess threshold.
    pub fn trimmed_low(&self) -> usize {
        self.start
    }
}

/// Knobs for window selection and fitting.
#[derive(Debug, Clone)]
pub struct RescoreConfig {
    /// Smallest window (and fit sample) size the greedy loops may reach.
    pub min_fit_size: usize,
    /// Hard cap on how many scores may be trimmed per side; defaults to
    /// `ceil(n/2)` when unset. Trimming a majority would contradict the
    /// premise that most of the list is non-relevant.
    pub trim_cap: Option<usize>,
    /// Fit on the whole tail `ascending[start..]` instead of the selected
    /// window `ascending[start..end]`. Off by default: the trimmed top scores
    /// are suspected relevant and would contaminate the fit; they are still
    /// rescored either way.
    pub fit_full_tail: bool,
}

impl Default for RescoreConfig {
    fn default() -> Self {
        Self {
            min_fit_size: DEFAULT_MIN_FIT_SIZE,
            trim_cap: None,
            fit_full_tail: false,
        }
    }
}

impl RescoreConfig {
    fn validate(&self) -> Result<()> {
        if self.min_fit_size < 2 {
            return Err(Error::Config(format!(
                "min_fit_size must be at least 2, got {}",
                self.min_fit_size
            )));
        }
        Ok(())
    }

    fn trim_cap_for(&self, n: usize) -> usize {
        self.trim_cap.unwrap_or(n.div_ceil(2))
    }
}

/// Outcome of the greedy window search.
#[derive(Debug, Clone)]
pub struct WindowSelection {
    pub window: FitWindow,
    /// Statistic at the initial full window followed by each accepted shrink;
    /// strictly decreasing after the first entry.
    pub trace: Vec<CvmStatistic>,
    /// Total number of statistic evaluations, including rejected candidates.
    pub evaluations: usize,
}

/// Per-result calibrated scores plus the diagnostics of the fit that produced
/// them, aligned with the originating [`RankedList`] order.
#[derive(Debug, Clone)]
pub struct SurpriseResult {
    /// Nonnegative, nonincreasing in ranked order; exactly zero for results
    /// scoring at or below the excess threshold.
    pub surprise: Vec<f64>,
    pub window: FitWindow,
    /// The raw score acting as the excess threshold (`u`).
    pub excess_threshold: f64,
    pub gpd: GpdParams,
    pub cvm_trace: Vec<CvmStatistic>,
    pub cvm_evaluations: usize,
}

/// The calibrated score `-log(1 - G(s - u))` for `s >= u`, zero otherwise.
///
/// Evaluated in closed form — `(s-u)/α` for `c = 0` and
/// `-ln(1 + |c|·(s-u)/α)/c` for `c < 0` — so large excesses do not saturate
/// the CDF before the log.
pub fn surprise_value(gpd: &GpdParams, threshold: f64, score: f64) -> f64 {
    let excess = score - threshold;
    if excess <= 0.0 {
        return 0.0;
    }
    let c = gpd.shape();
    if c == 0.0 {
        excess / gpd.scale()
    } else {
        -(-c * excess / gpd.scale()).ln_1p() / c
    }
}

/// Greedy two-sided window selection on an ascending score list.
///
/// Starting from the full list, repeatedly drops the largest score while the
/// refitted Cramér–von Mises statistic of `scores[start..end] - scores[start]`
/// strictly decreases, then raises `start` from below under the same rule.
/// Each loop also stops rather than shrink the window below `min_fit_size` or
/// trim more than the per-side cap.
pub fn select_fit_window(
    scores_ascending: &[f64],
    config: &RescoreConfig,
) -> Result<WindowSelection> {
    config.validate()?;
    let n = scores_ascending.len();
    if n < config.min_fit_size {
        return Err(Error::InsufficientData {
            got: n,
            need: config.min_fit_size,
        });
    }
    if scores_ascending.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Contract("scores must be ascending".into()));
    }
    let cap = config.trim_cap_for(n);

    let mut evaluations = 0usize;
    let mut evaluate = |start: usize, end: usize| -> Result<CvmStatistic> {
        evaluations += 1;
        let base = scores_ascending[start];
        let excess: Vec<f64> = scores_ascending[start..end].iter().map(|s| s - base).collect();
        cvm_statistic(&ExcessSample::new(excess)?, config.min_fit_size)
    };

    let mut start = 0usize;
    let mut end = n;
    let mut current = evaluate(start, end)?;
    let mut trace = vec![current];

    // Drop suspected-relevant scores from the top.
    while end - start > config.min_fit_size && n - (end - 1) <= cap {
        match evaluate(start, end - 1) {
            Ok(cand) if cand.value < current.value - CVM_TIE_EPS => {
                end -= 1;
                current = cand;
                trace.push(cand);
            }
            _ => break,
        }
    }
    // Raise the excess threshold from below.
    while end - start > config.min_fit_size && start < cap {
        match evaluate(start + 1, end) {
            Ok(cand) if cand.value < current.value - CVM_TIE_EPS => {
                start += 1;
                current = cand;
                trace.push(cand);
            }
            _ => break,
        }
    }

    Ok(WindowSelection {
        window: FitWindow {
            start,
            end,
            total: n,
        },
        trace,
        evaluations,
    })
}

/// Rescores one ranked list.
///
/// Sorts the scores ascending, selects the fit window, fits the GPD on the
/// window excesses, and assigns a surprise value to every result — including
/// the trimmed suspected-relevant tail, whose scores may exceed anything the
/// fit saw. Results below the excess threshold get exactly zero. The output
/// vector is aligned with the input (descending) order.
pub fn surprise_rescore(list: &RankedList, config: &RescoreConfig) -> Result<SurpriseResult> {
    let n = list.len();
    let scores = list.scores();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let ascending: Vec<f64> = order.iter().map(|&k| scores[k]).collect();

    let selection = select_fit_window(&ascending, config)?;
    let FitWindow { start, end, .. } = selection.window;
    let threshold = ascending[start];
    let fit_slice = if config.fit_full_tail {
        &ascending[start..]
    } else {
        &ascending[start..end]
    };
    let excess: Vec<f64> = fit_slice.iter().map(|s| s - threshold).collect();
    let gpd = fit_gpd_mle(&ExcessSample::new(excess)?, config.min_fit_size)?;

    let mut surprise = vec![0.0; n];
    for (pos, &original) in order.iter().enumerate() {
        surprise[original] = surprise_value(&gpd, threshold, ascending[pos]);
    }

    Ok(SurpriseResult {
        surprise,
        window: selection.window,
        excess_threshold: threshold,
        gpd,
        cvm_trace: selection.trace,
        cvm_evaluations: selection.evaluations,
    })
}

/// Rescores a batch of independent lists. With the `parallel` feature (on by
/// default) the queries run on the rayon pool; output order always matches
/// input order.
pub fn rescore_all(lists: &[RankedList], config: &RescoreConfig) -> Vec<Result<SurpriseResult>> {
    par_map(lists, |list| surprise_rescore(list, config))
}
