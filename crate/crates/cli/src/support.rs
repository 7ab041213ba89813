//! Shared plumbing for the subcommands: error-to-exit-code mapping, input
//! loading, truth sources, and evaluation-query assembly.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use surprise::data::{
    parse_qrels, parse_trec_run, read_jsonl, JsonlRecord, Orientation, Qrels, QueryTruth,
};
use surprise::metrics::EvalQuery;
use surprise::rescore::RankedList;
use surprise::{Error, Metric};

/// Usage errors exit 1, data errors exit 2.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
}

pub type CliResult<T> = Result<T, CliError>;

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Domain(_) => CliError::Usage(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

pub fn usage(message: impl Into<String>) -> CliError {
    CliError::Usage(message.into())
}

pub fn data_err(message: impl Into<String>) -> CliError {
    CliError::Data(message.into())
}

pub fn open_reader(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| data_err(format!("cannot read {}: {e}", path.display())))
}

pub fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| data_err(format!("cannot write {}: {e}", path.display())))
}

/// Either a file sink or stdout.
pub fn open_sink(path: Option<&PathBuf>) -> CliResult<Box<dyn Write>> {
    match path {
        Some(p) => Ok(Box::new(create(p)?)),
        None => Ok(Box::new(std::io::stdout().lock())),
    }
}

pub fn load_jsonl_records(path: &Path) -> CliResult<Vec<JsonlRecord>> {
    let records = read_jsonl(open_reader(path)?)
        .map_err(|e| data_err(format!("{}: {e}", path.display())))?;
    if records.is_empty() {
        return Err(data_err(format!("{}: no queries in input", path.display())));
    }
    Ok(records)
}

pub fn load_qrels(path: &Path) -> CliResult<Qrels> {
    parse_qrels(open_reader(path)?).map_err(|e| data_err(format!("{}: {e}", path.display())))
}

pub fn load_truth(path: &Path) -> CliResult<BTreeMap<String, QueryTruth>> {
    let reader = open_reader(path)?;
    serde_json::from_reader(reader)
        .map_err(|e| data_err(format!("{}: invalid truth file: {e}", path.display())))
}

/// Loads ranked lists plus the JSONL records that will carry them onward.
/// TREC runs get fresh records; JSONL inputs keep their original records so
/// unknown fields survive.
pub fn load_input(
    path: &Path,
    format: &str,
    orientation: &str,
    qrels: Option<&Qrels>,
) -> CliResult<Vec<(JsonlRecord, RankedList)>> {
    match format {
        "trec" => {
            let orientation: Orientation = orientation
                .parse()
                .map_err(|e: Error| usage(e.to_string()))?;
            let lists = parse_trec_run(open_reader(path)?, orientation)
                .map_err(|e| data_err(format!("{}: {e}", path.display())))?;
            if lists.is_empty() {
                return Err(data_err(format!("{}: no queries in input", path.display())));
            }
            lists
                .into_iter()
                .map(|list| {
                    let list = match qrels {
                        Some(q) => q.attach(list)?,
                        None => list,
                    };
                    Ok((JsonlRecord::from_list(&list), list))
                })
                .collect::<Result<_, Error>>()
                .map_err(CliError::from)
        }
        "jsonl" => {
            if orientation == "lower" {
                return Err(usage(
                    "--orientation lower applies to --format trec only; JSONL scores \
                     are already oriented higher-is-better",
                ));
            }
            load_jsonl_records(path)?
                .into_iter()
                .map(|record| {
                    let list = record
                        .to_ranked_list()
                        .map_err(|e| data_err(format!("{}: {e}", path.display())))?;
                    Ok((record, list))
                })
                .collect()
        }
        other => Err(usage(format!("unknown format {other:?}"))),
    }
}

/// Where per-query relevant totals come from.
pub enum TruthSource {
    Sidecar(BTreeMap<String, QueryTruth>),
    Judgments(Qrels),
    /// Count the relevant labels inside the list; only sound for DCG, which
    /// never reads the total.
    InList,
}

impl TruthSource {
    /// Resolves the truth flags against what the metric needs. F1 and
    /// accuracy need real totals (recall denominators and match existence);
    /// DCG does not.
    pub fn resolve(
        truth: Option<&PathBuf>,
        qrels: Option<&PathBuf>,
        metric: Metric,
    ) -> CliResult<Self> {
        if let Some(path) = truth {
            return Ok(TruthSource::Sidecar(load_truth(path)?));
        }
        if let Some(path) = qrels {
            return Ok(TruthSource::Judgments(load_qrels(path)?));
        }
        match metric {
            Metric::Dcg => Ok(TruthSource::InList),
            other => Err(usage(format!(
                "--metric {other} needs per-query relevant totals; pass --truth or --qrels"
            ))),
        }
    }

    fn total_relevant(&self, record: &JsonlRecord) -> CliResult<usize> {
        match self {
            TruthSource::Sidecar(map) => map
                .get(&record.query_id)
                .map(|t| t.total_relevant)
                .ok_or_else(|| {
                    data_err(format!("truth file has no entry for query {}", record.query_id))
                }),
            TruthSource::Judgments(qrels) => Ok(qrels.total_relevant(&record.query_id)),
            TruthSource::InList => Ok(record
                .labels
                .iter()
                .flatten()
                .filter(|l| l.is_relevant())
                .count()),
        }
    }
}

/// Assembles an evaluation query from a (labeled) record.
pub fn eval_query(record: &JsonlRecord, truth: &TruthSource) -> CliResult<EvalQuery> {
    let labels = record
        .labels
        .clone()
        .ok_or_else(|| data_err(format!("query {} has no labels", record.query_id)))?;
    Ok(EvalQuery {
        query_id: record.query_id.clone(),
        total_relevant: truth.total_relevant(record)?,
        labels,
        raw_scores: record.scores.clone(),
        surprise: record.surprise.clone(),
    })
}
