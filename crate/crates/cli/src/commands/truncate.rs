use std::collections::BTreeMap;
use std::io::Write;

use surprise::metrics::EvalReport;
use surprise::truncate::{
    surprise_from_pvalue, sweep_threshold, truncate_at_threshold, Policy, ScoreSource,
    TruncationDecision,
};

use crate::support::{
    data_err, eval_query, load_jsonl_records, open_sink, usage, CliResult, TruthSource,
};
use crate::TruncateArgs;

pub fn run(args: TruncateArgs, verbose: bool) -> CliResult<usize> {
    let records = load_jsonl_records(&args.input)?;
    if records.iter().all(|r| r.surprise.is_none()) {
        return Err(data_err(format!(
            "{}: no query carries surprise values; run `surprise rescore` first",
            args.input.display()
        )));
    }

    let tau = resolve_threshold(&args, verbose)?;

    let mut warnings = 0;
    let mut decisions = Vec::with_capacity(records.len());
    for record in &records {
        let cutoff = match &record.surprise {
            Some(values) => truncate_at_threshold(values, tau)
                .map_err(|e| data_err(format!("query {}: {e}", record.query_id)))?,
            None => {
                warnings += 1;
                eprintln!(
                    "warning: query {} has no surprise values (failed rescore); returning nothing",
                    record.query_id
                );
                0
            }
        };
        decisions.push(TruncationDecision {
            query_id: record.query_id.clone(),
            cutoff,
            threshold: tau,
            policy: Policy::Surprise,
        });
    }

    let mut sink = open_sink(args.output.as_ref())?;
    for decision in &decisions {
        serde_json::to_writer(&mut sink, decision)
            .map_err(|e| data_err(format!("serialization failed: {e}")))?;
        sink.write_all(b"\n").map_err(surprise::Error::from)?;
    }
    sink.flush().map_err(surprise::Error::from)?;

    if let Some(report_path) = &args.report {
        let truth = TruthSource::resolve(args.truth.as_ref(), args.qrels.as_ref(), args.metric)?;
        let queries: Vec<_> = records
            .iter()
            .map(|r| eval_query(r, &truth))
            .collect::<CliResult<_>>()?;
        let mut cutoffs = BTreeMap::new();
        cutoffs.insert(
            Policy::Surprise.to_string(),
            decisions.iter().map(|d| d.cutoff).collect(),
        );
        let report = EvalReport::new(args.metric, &queries, &cutoffs)?;
        let mut out = crate::support::create(report_path)?;
        serde_json::to_writer_pretty(&mut out, &report)
            .map_err(|e| data_err(format!("serialization failed: {e}")))?;
        out.write_all(b"\n").map_err(surprise::Error::from)?;
        out.flush().map_err(surprise::Error::from)?;
        if verbose {
            eprintln!(
                "mean {} over {} queries: {}",
                report.metric,
                report.query_count,
                report.mean[&Policy::Surprise.to_string()]
            );
        }
    }

    Ok(warnings)
}

fn resolve_threshold(args: &TruncateArgs, verbose: bool) -> CliResult<f64> {
    if let Some(tau) = args.threshold {
        if !tau.is_finite() {
            return Err(usage(format!("threshold must be finite, got {tau}")));
        }
        return Ok(tau);
    }
    if let Some(p) = args.pvalue {
        return surprise_from_pvalue(p).map_err(Into::into);
    }
    let train_path = args.sweep.as_ref().expect("clap enforces the group");
    let train_records = load_jsonl_records(train_path)?;
    let truth = TruthSource::resolve(args.truth.as_ref(), args.qrels.as_ref(), args.metric)?;
    let train: Vec<_> = train_records
        .iter()
        .map(|r| eval_query(r, &truth))
        .collect::<CliResult<_>>()?;
    let (lo, hi) = args.sweep_range;
    let sweep = sweep_threshold(
        &train,
        ScoreSource::Surprise,
        args.metric,
        lo,
        hi,
        args.sweep_step,
    )?;
    if verbose {
        eprintln!(
            "swept {} thresholds on {}: best {} with mean {} {}",
            sweep.grid.len(),
            train_path.display(),
            sweep.best_threshold,
            args.metric,
            sweep.best_mean,
        );
    }
    Ok(sweep.best_threshold)
}
