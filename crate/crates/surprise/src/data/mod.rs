//! Ingestion and generation of ranked-list data: TREC run/qrels files, the
//! JSONL interchange format, and the seeded synthetic benchmark generator.

mod jsonl;
mod synth;
mod trec;

pub use jsonl::{read_jsonl, write_jsonl, FitSummary, JsonlRecord};
pub use synth::{generate_synthetic, QueryTruth, SyntheticConfig, SyntheticDataset};
pub use trec::{
    group_run_records, parse_qrels, parse_trec_records, parse_trec_run, write_trec_records,
    Orientation, Qrels, TrecRunRecord,
};
