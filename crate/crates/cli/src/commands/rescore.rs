use surprise::data::{write_jsonl, JsonlRecord};
use surprise::rescore::{rescore_all, RescoreConfig};

use crate::support::{load_input, load_qrels, open_sink, CliResult};
use crate::RescoreArgs;

pub fn run(args: RescoreArgs, verbose: bool) -> CliResult<usize> {
    let qrels = args.qrels.as_deref().map(load_qrels).transpose()?;
    let pairs = load_input(&args.input, &args.format, &args.orientation, qrels.as_ref())?;
    let config = RescoreConfig {
        min_fit_size: args.m_min,
        trim_cap: args.trim_cap,
        fit_full_tail: args.fit_full_tail,
    };

    let lists: Vec<_> = pairs.iter().map(|(_, list)| list.clone()).collect();
    let outcomes = rescore_all(&lists, &config);

    let mut warnings = 0;
    let mut records = Vec::with_capacity(pairs.len());
    for ((mut record, list), outcome) in pairs.into_iter().zip(outcomes) {
        match outcome {
            Ok(rescored) => {
                if verbose {
                    eprintln!(
                        "query {}: window [{}, {}) of {}, u={}, c={}, alpha={}, cvm evaluations={}, trace length={}",
                        list.query_id(),
                        rescored.window.start,
                        rescored.window.end,
                        rescored.window.total,
                        rescored.excess_threshold,
                        rescored.gpd.shape(),
                        rescored.gpd.scale(),
                        rescored.cvm_evaluations,
                        rescored.cvm_trace.len(),
                    );
                }
                let enriched = JsonlRecord::with_rescore(&list, &rescored);
                record.surprise = enriched.surprise;
                record.fit = enriched.fit;
            }
            Err(e) => {
                warnings += 1;
                eprintln!("warning: query {}: {e}", list.query_id());
                record.surprise = None;
                record.fit = Some(None);
            }
        }
        records.push(record);
    }

    let mut sink = open_sink(args.output.as_ref())?;
    write_jsonl(&mut sink, &records)?;
    sink.flush().map_err(surprise::Error::from)?;
    Ok(warnings)
}
