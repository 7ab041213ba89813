//! The JSONL interchange format: one object per line with fields
//! `query_id`, `result_ids`, `scores`, and optional `labels`, `surprise`, and
//! `fit` (`{"i","j","u","c","alpha"}`). Unknown fields are preserved on
//! round-trip. A present-but-null `fit` marks a query whose rescoring failed.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rescore::{RankedList, SurpriseResult};
use crate::Relevance;

/// Wire form of the fit diagnostics attached to a rescored query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    /// Lower window index into the ascending score list.
    pub i: usize,
    /// Upper window bound into the ascending score list.
    pub j: usize,
    /// Excess threshold score.
    pub u: f64,
    /// Fitted GPD shape.
    pub c: f64,
    /// Fitted GPD scale.
    pub alpha: f64,
}

/// One JSONL line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsonlRecord {
    pub query_id: String,
    pub result_ids: Vec<String>,
    pub scores: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<Relevance>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub surprise: Option<Vec<f64>>,
    /// `None` = absent, `Some(None)` = explicit null (failed rescore),
    /// `Some(Some(..))` = diagnostics.
    #[serde(
        default,
        skip_serializing_if = "Option::is_none",
        with = "nullable_fit"
    )]
    pub fit: Option<Option<FitSummary>>,
    #[serde(flatten)]
    pub extra: serde_json::Map<String, serde_json::Value>,
}

mod nullable_fit {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use super::FitSummary;

    pub fn serialize<S: Serializer>(
        value: &Option<Option<FitSummary>>,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        match value {
            Some(inner) => inner.serialize(serializer),
            None => serializer.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Option<Option<FitSummary>>, D::Error> {
        Option::<FitSummary>::deserialize(deserializer).map(Some)
    }
}

impl JsonlRecord {
    pub fn from_list(list: &RankedList) -> Self {
        Self {
            query_id: list.query_id().to_string(),
            result_ids: list.result_ids().to_vec(),
            scores: list.scores().to_vec(),
            labels: list.labels().map(<[Relevance]>::to_vec),
            surprise: None,
            fit: None,
            extra: serde_json::Map::new(),
        }
    }

    pub fn with_rescore(list: &RankedList, rescored: &SurpriseResult) -> Self {
        let mut record = Self::from_list(list);
        record.surprise = Some(rescored.surprise.clone());
        record.fit = Some(Some(FitSummary {
            i: rescored.window.start,
            j: rescored.window.end,
            u: rescored.excess_threshold,
            c: rescored.gpd.shape(),
            alpha: rescored.gpd.scale(),
        }));
        record
    }

    /// Record for a query whose rescoring failed its preconditions: the
    /// original fields pass through and `fit` serializes as an explicit null.
    pub fn failed_rescore(list: &RankedList) -> Self {
        let mut record = Self::from_list(list);
        record.fit = Some(None);
        record
    }

    /// Field-length consistency; violations in a file are schema errors.
    pub fn validate(&self) -> Result<()> {
        let n = self.scores.len();
        if self.result_ids.len() != n {
            return Err(Error::Data(format!(
                "query {}: {} result_ids but {} scores",
                self.query_id,
                self.result_ids.len(),
                n
            )));
        }
        if let Some(labels) = &self.labels {
            if labels.len() != n {
                return Err(Error::Data(format!(
                    "query {}: {} labels but {} scores",
                    self.query_id,
                    labels.len(),
                    n
                )));
            }
        }
        if let Some(surprise) = &self.surprise {
            if surprise.len() != n {
                return Err(Error::Data(format!(
                    "query {}: {} surprise values but {} scores",
                    self.query_id,
                    surprise.len(),
                    n
                )));
            }
        }
        Ok(())
    }

    pub fn to_ranked_list(&self) -> Result<RankedList> {
        self.validate()?;
        RankedList::new(
            self.query_id.clone(),
            self.result_ids.clone(),
            self.scores.clone(),
            self.labels.clone(),
        )
    }
}

/// Reads one record per line, reporting schema violations with their line
/// number. Blank lines are tolerated.
pub fn read_jsonl<R: BufRead>(reader: R) -> Result<Vec<JsonlRecord>> {
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let number = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let record: JsonlRecord = serde_json::from_str(&line).map_err(|e| Error::Schema {
            line: number,
            message: e.to_string(),
        })?;
        record.validate().map_err(|e| Error::Schema {
            line: number,
            message: e.to_string(),
        })?;
        records.push(record);
    }
    Ok(records)
}

/// Writes one record per line.
pub fn write_jsonl<W: Write>(mut writer: W, records: &[JsonlRecord]) -> Result<()> {
    for record in records {
        serde_json::to_writer(&mut writer, record)
            .map_err(|e| Error::Data(format!("serialization failed: {e}")))?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}
