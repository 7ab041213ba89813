//! Calibration of ranked retrieval scores via extreme-value tail fitting, and
//! result-list truncation on the calibrated scores.
//!
//! Raw relevance scores — especially nearest-neighbor distances — occupy a
//! different range for every query, so no single raw threshold separates
//! relevant from non-relevant results across queries. This crate rescores one
//! ranked list at a time using nothing but its own scores: it selects the
//! portion of the list that behaves like a non-relevance tail, fits a
//! Generalized Pareto distribution to those score excesses, and maps every
//! score to `-log` of its tail probability under that fit. The rescored
//! values are comparable across queries (and convert to p-values via
//! `exp(-s)`), which turns truncation into a single-threshold decision.
//!
//! Modules:
//! - [`gpd`]: GPD primitives — CDF, log-density, constrained MLE, and the
//!   Cramér–von Mises fit statistic.
//! - [`rescore`]: greedy fit-window selection and per-list rescoring.
//! - [`truncate`]: threshold application, threshold sweeps, p-value mapping.
//! - [`baselines`]: global-k, local-k, oracle, and isotonic-regression
//!   truncation policies.
//! - [`metrics`]: F1 / signed DCG / match accuracy and report building.
//! - [`data`]: TREC and JSONL ingestion plus the synthetic benchmark
//!   generator.
//!
//! Batch operations (rescoring, sweeps, generation) are data-parallel via
//! rayon under the `parallel` feature, which is on by default; disabling it
//! yields a dependency-free sequential build with identical outputs.

pub mod baselines;
pub mod data;
pub mod error;
pub mod gpd;
pub mod metrics;
mod par;
pub mod rescore;
pub mod truncate;

pub use error::{Error, Result};
pub use gpd::{
    cvm_statistic, fit_gpd_mle, gpd_cdf, gpd_log_pdf, CvmStatistic, ExcessSample, GpdParams,
    DEFAULT_MIN_FIT_SIZE,
};
pub use metrics::{EvalQuery, EvalReport, Metric};
pub use rescore::{
    rescore_all, surprise_rescore, surprise_value, FitWindow, RankedList, RescoreConfig,
    SurpriseResult,
};
pub use truncate::{
    pvalue_from_surprise, surprise_from_pvalue, sweep_threshold, truncate_at_threshold, Policy,
    ScoreSource, ThresholdSweepResult, TruncationDecision,
};

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Binary relevance of one result. Serializes as `+1` / `-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Relevance {
    Relevant,
    NonRelevant,
}

impl Relevance {
    pub fn is_relevant(self) -> bool {
        matches!(self, Relevance::Relevant)
    }

    /// Signed gain used by the DCG metric.
    pub fn gain(self) -> f64 {
        match self {
            Relevance::Relevant => 1.0,
            Relevance::NonRelevant => -1.0,
        }
    }

    pub fn from_signed(value: i64) -> Result<Self> {
        match value {
            1 => Ok(Relevance::Relevant),
            -1 => Ok(Relevance::NonRelevant),
            other => Err(Error::Data(format!(
                "relevance label must be +1 or -1, got {other}"
            ))),
        }
    }

    pub fn to_signed(self) -> i64 {
        match self {
            Relevance::Relevant => 1,
            Relevance::NonRelevant => -1,
        }
    }
}

impl Serialize for Relevance {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_i64(self.to_signed())
    }
}

impl<'de> Deserialize<'de> for Relevance {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let value = i64::deserialize(deserializer)?;
        Relevance::from_signed(value).map_err(|_| {
            D::Error::custom(format!("relevance label must be +1 or -1, got {value}"))
        })
    }
}
