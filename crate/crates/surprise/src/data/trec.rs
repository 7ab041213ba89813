//! TREC run and qrels parsing.
//!
//! Run lines are `qid Q0 docid rank score tag` (six whitespace-separated
//! fields); qrels lines are `qid iter docid rel`. Repeated whitespace and
//! blank lines are tolerated; comment lines are not.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::rescore::RankedList;
use crate::Relevance;

/// Whether larger raw scores mean more relevant (`higher`) or the scores are
/// distances where smaller means closer (`lower`). Distance scores are negated
/// on ingestion so that every downstream consumer sees "higher is better".
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    HigherBetter,
    LowerBetter,
}

impl FromStr for Orientation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "higher" => Ok(Orientation::HigherBetter),
            "lower" => Ok(Orientation::LowerBetter),
            other => Err(Error::Config(format!(
                "unknown orientation {other:?} (expected higher or lower)"
            ))),
        }
    }
}

impl fmt::Display for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Orientation::HigherBetter => "higher",
            Orientation::LowerBetter => "lower",
        })
    }
}

/// One raw run-file line. Scores here are as written in the file, before any
/// orientation normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct TrecRunRecord {
    pub query_id: String,
    pub doc_id: String,
    pub rank: u32,
    pub score: f64,
    pub tag: String,
}

/// Parses run-file lines into records, rejecting malformed lines and
/// duplicate `(query, doc)` pairs with the offending line number.
pub fn parse_trec_records<R: BufRead>(reader: R) -> Result<Vec<TrecRunRecord>> {
    let mut records = Vec::new();
    let mut seen: HashSet<(String, String)> = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let number = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 6 {
            return Err(Error::Parse {
                line: number,
                message: format!("expected 6 fields, found {}", fields.len()),
            });
        }
        let rank: u32 = fields[3].parse().map_err(|_| Error::Parse {
            line: number,
            message: format!("rank must be a positive integer, got {:?}", fields[3]),
        })?;
        let score: f64 = fields[4].parse().map_err(|_| Error::Parse {
            line: number,
            message: format!("score must be numeric, got {:?}", fields[4]),
        })?;
        if !seen.insert((fields[0].to_string(), fields[2].to_string())) {
            return Err(Error::Parse {
                line: number,
                message: format!("duplicate document {} for query {}", fields[2], fields[0]),
            });
        }
        records.push(TrecRunRecord {
            query_id: fields[0].to_string(),
            doc_id: fields[2].to_string(),
            rank,
            score,
            tag: fields[5].to_string(),
        });
    }
    Ok(records)
}

/// Serializes records back to the six-field line format.
pub fn write_trec_records<W: std::io::Write>(
    mut writer: W,
    records: &[TrecRunRecord],
) -> Result<()> {
    for r in records {
        writeln!(
            writer,
            "{} Q0 {} {} {} {}",
            r.query_id, r.doc_id, r.rank, r.score, r.tag
        )?;
    }
    Ok(())
}

/// Groups records into per-query ranked lists, ordered by rank, with scores
/// negated when the orientation is `lower`. Queries come out in first-seen
/// order. Rejects rank collisions and rank orders that disagree with the
/// normalized scores.
pub fn group_run_records(
    records: Vec<TrecRunRecord>,
    orientation: Orientation,
) -> Result<Vec<RankedList>> {
    let mut order: Vec<String> = Vec::new();
    let mut groups: HashMap<String, Vec<TrecRunRecord>> = HashMap::new();
    for r in records {
        if !groups.contains_key(&r.query_id) {
            order.push(r.query_id.clone());
        }
        groups.entry(r.query_id.clone()).or_default().push(r);
    }
    let mut lists = Vec::with_capacity(order.len());
    for qid in order {
        let mut group = groups.remove(&qid).unwrap();
        group.sort_by_key(|r| r.rank);
        if group.windows(2).any(|w| w[1].rank == w[0].rank) {
            return Err(Error::Data(format!("query {qid}: duplicate rank")));
        }
        let ids = group.iter().map(|r| r.doc_id.clone()).collect();
        let scores: Vec<f64> = group
            .iter()
            .map(|r| match orientation {
                Orientation::HigherBetter => r.score,
                Orientation::LowerBetter => -r.score,
            })
            .collect();
        lists.push(RankedList::new(qid, ids, scores, None)?);
    }
    Ok(lists)
}

/// Parses a run file straight into orientation-normalized ranked lists.
pub fn parse_trec_run<R: BufRead>(reader: R, orientation: Orientation) -> Result<Vec<RankedList>> {
    group_run_records(parse_trec_records(reader)?, orientation)
}

/// Relevance judgments: per-document labels and per-query relevant totals.
///
/// The totals count every judged-relevant document for a query, retrieved or
/// not, which is what recall denominators need.
#[derive(Debug, Clone, Default)]
pub struct Qrels {
    labels: HashMap<String, HashMap<String, Relevance>>,
    totals: BTreeMap<String, usize>,
}

impl Qrels {
    pub fn label(&self, query_id: &str, doc_id: &str) -> Option<Relevance> {
        self.labels.get(query_id)?.get(doc_id).copied()
    }

    pub fn total_relevant(&self, query_id: &str) -> usize {
        self.totals.get(query_id).copied().unwrap_or(0)
    }

    pub fn judged_queries(&self) -> impl Iterator<Item = &str> {
        self.totals.keys().map(String::as_str)
    }

    /// Labels a ranked list against the judgments; unjudged documents count
    /// as non-relevant.
    pub fn attach(&self, list: RankedList) -> Result<RankedList> {
        let labels = list
            .result_ids()
            .iter()
            .map(|doc| {
                self.label(list.query_id(), doc)
                    .unwrap_or(Relevance::NonRelevant)
            })
            .collect();
        list.with_labels(labels)
    }
}

/// Parses qrels lines; `rel > 0` means relevant.
pub fn parse_qrels<R: BufRead>(reader: R) -> Result<Qrels> {
    let mut qrels = Qrels::default();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let number = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(Error::Parse {
                line: number,
                message: format!("expected 4 fields, found {}", fields.len()),
            });
        }
        let rel: i32 = fields[3].parse().map_err(|_| Error::Parse {
            line: number,
            message: format!("relevance must be an integer, got {:?}", fields[3]),
        })?;
        let label = if rel > 0 {
            Relevance::Relevant
        } else {
            Relevance::NonRelevant
        };
        let per_query = qrels.labels.entry(fields[0].to_string()).or_default();
        if per_query.insert(fields[2].to_string(), label).is_some() {
            return Err(Error::Parse {
                line: number,
                message: format!("duplicate judgment for {} {}", fields[0], fields[2]),
            });
        }
        let total = qrels.totals.entry(fields[0].to_string()).or_insert(0);
        if rel > 0 {
            *total += 1;
        }
    }
    Ok(qrels)
}
