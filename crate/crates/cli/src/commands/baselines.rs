use std::collections::BTreeMap;
use std::io::Write;

use surprise::baselines::{
    global_k_fit, isotonic_apply, isotonic_fit, local_k, oracle_cutoff, NeighborhoodMap,
};
use surprise::data::JsonlRecord;
use surprise::metrics::{EvalQuery, EvalReport};
use surprise::rescore::{rescore_all, RankedList, RescoreConfig};
use surprise::truncate::{
    sweep_raw_threshold, sweep_threshold, truncate_at_threshold, ScoreSource,
};

use crate::support::{
    data_err, eval_query, load_jsonl_records, open_sink, usage, CliResult, TruthSource,
};
use crate::BaselinesArgs;

/// Grid density for the raw-score threshold sweep; matches the 161-point
/// default surprise grid.
const RAW_SWEEP_STEPS: usize = 161;

pub fn run(args: BaselinesArgs, verbose: bool) -> CliResult<usize> {
    let truth = TruthSource::resolve(args.truth.as_ref(), args.qrels.as_ref(), args.metric)?;
    let config = RescoreConfig {
        min_fit_size: args.m_min,
        trim_cap: args.trim_cap,
        fit_full_tail: false,
    };

    let mut test_records = load_jsonl_records(&args.input)?;
    let mut train_records = load_jsonl_records(&args.train)?;
    ensure_rescored(&mut test_records, &config)?;
    ensure_rescored(&mut train_records, &config)?;

    let neighborhoods: Option<NeighborhoodMap> = match &args.neighborhood_map {
        Some(path) => Some(
            serde_json::from_reader(crate::support::open_reader(path)?)
                .map_err(|e| data_err(format!("{}: invalid neighborhood map: {e}", path.display())))?,
        ),
        None => None,
    };

    let policies = requested_policies(args.policies.as_deref(), neighborhoods.is_some())?;

    let test_queries: Vec<EvalQuery> = test_records
        .iter()
        .map(|r| eval_query(r, &truth))
        .collect::<CliResult<_>>()?;
    let train_queries: Vec<EvalQuery> = train_records
        .iter()
        .map(|r| eval_query(r, &truth))
        .collect::<CliResult<_>>()?;
    let test_lists: Vec<RankedList> = test_records
        .iter()
        .map(|r| r.to_ranked_list().map_err(Into::into))
        .collect::<CliResult<_>>()?;

    let train_by_id: BTreeMap<&str, &EvalQuery> = train_queries
        .iter()
        .map(|q| (q.query_id.as_str(), q))
        .collect();

    let mut cutoffs: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for policy in &policies {
        let ks = match policy.as_str() {
            "oracle" => test_queries
                .iter()
                .map(|q| oracle_cutoff(q, args.metric).0)
                .collect(),
            "global_k" => {
                let k = global_k_fit(&train_queries, args.metric)?;
                if verbose {
                    eprintln!("global_k: fixed cutoff {k}");
                }
                test_queries.iter().map(|q| k.min(q.len())).collect()
            }
            "surprise" => {
                let (lo, hi) = args.sweep_range;
                let sweep = sweep_threshold(
                    &train_queries,
                    ScoreSource::Surprise,
                    args.metric,
                    lo,
                    hi,
                    args.sweep_step,
                )?;
                if verbose {
                    eprintln!("surprise: swept threshold {}", sweep.best_threshold);
                }
                collect_threshold_cutoffs(&test_queries, ScoreSource::Surprise, sweep.best_threshold)?
            }
            "score_threshold" => {
                let sweep = sweep_raw_threshold(&train_queries, args.metric, RAW_SWEEP_STEPS)?;
                if verbose {
                    eprintln!("score_threshold: swept raw threshold {}", sweep.best_threshold);
                }
                collect_threshold_cutoffs(&test_queries, ScoreSource::RawScore, sweep.best_threshold)?
            }
            "local_k" => {
                let map = neighborhoods.as_ref().expect("checked above");
                let mut ks = Vec::with_capacity(test_queries.len());
                for q in &test_queries {
                    let neighbors = lookup_neighbors(map, &q.query_id, &train_by_id)?;
                    ks.push(local_k(&neighbors, args.metric)?.min(q.len()));
                }
                ks
            }
            "isotonic" => {
                let map = neighborhoods.as_ref().expect("checked above");
                let mut ks = Vec::with_capacity(test_queries.len());
                for (q, list) in test_queries.iter().zip(&test_lists) {
                    let neighbors = lookup_neighbors(map, &q.query_id, &train_by_id)?;
                    let model = isotonic_fit(&neighbors, args.metric)?;
                    ks.push(isotonic_apply(&model, list).cutoff);
                }
                ks
            }
            other => return Err(usage(format!("unknown policy {other:?}"))),
        };
        cutoffs.insert(policy.clone(), ks);
    }

    let report = EvalReport::new(args.metric, &test_queries, &cutoffs)?;
    if verbose {
        eprintln!("mean {} over {} test queries:", report.metric, report.query_count);
        for (policy, mean) in &report.mean {
            eprintln!("  {policy:>16}  {mean:.6}");
        }
    }
    let mut sink = open_sink(args.output.as_ref())?;
    serde_json::to_writer_pretty(&mut sink, &report)
        .map_err(|e| data_err(format!("serialization failed: {e}")))?;
    sink.write_all(b"\n").map_err(surprise::Error::from)?;
    sink.flush().map_err(surprise::Error::from)?;
    Ok(0)
}

fn collect_threshold_cutoffs(
    queries: &[EvalQuery],
    source: ScoreSource,
    tau: f64,
) -> CliResult<Vec<usize>> {
    queries
        .iter()
        .map(|q| {
            let values: &[f64] = match source {
                ScoreSource::RawScore => &q.raw_scores,
                ScoreSource::Surprise => q
                    .surprise
                    .as_deref()
                    .expect("queries were rescored above"),
            };
            truncate_at_threshold(values, tau)
                .map_err(|e| data_err(format!("query {}: {e}", q.query_id)))
        })
        .collect()
}

fn lookup_neighbors<'a>(
    map: &NeighborhoodMap,
    query_id: &str,
    train_by_id: &BTreeMap<&str, &'a EvalQuery>,
) -> CliResult<Vec<&'a EvalQuery>> {
    let ids = map.get(query_id).ok_or_else(|| {
        data_err(format!("neighborhood map has no entry for query {query_id}"))
    })?;
    ids.iter()
        .map(|id| {
            train_by_id.get(id.as_str()).copied().ok_or_else(|| {
                data_err(format!(
                    "neighborhood of {query_id} references unknown training query {id}"
                ))
            })
        })
        .collect()
}

fn requested_policies(flag: Option<&str>, have_map: bool) -> CliResult<Vec<String>> {
    let mut policies: Vec<String> = match flag {
        Some(list) => list
            .split(',')
            .map(|p| p.trim().replace('-', "_"))
            .filter(|p| !p.is_empty())
            .collect(),
        None => {
            let mut defaults = vec![
                "oracle".to_string(),
                "global_k".to_string(),
                "surprise".to_string(),
                "score_threshold".to_string(),
            ];
            if have_map {
                defaults.insert(2, "local_k".to_string());
                defaults.insert(3, "isotonic".to_string());
            }
            defaults
        }
    };
    // the oracle upper bound is always part of the comparison
    if !policies.iter().any(|p| p == "oracle") {
        policies.push("oracle".to_string());
    }
    for p in &policies {
        if matches!(p.as_str(), "local_k" | "isotonic") && !have_map {
            return Err(usage(format!(
                "policy {p} needs --neighborhood-map (local methods truncate per query \
                 from its training neighborhood)"
            )));
        }
    }
    Ok(policies)
}

fn ensure_rescored(records: &mut [JsonlRecord], config: &RescoreConfig) -> CliResult<()> {
    let missing: Vec<usize> = (0..records.len())
        .filter(|&i| records[i].surprise.is_none())
        .collect();
    if missing.is_empty() {
        return Ok(());
    }
    let lists: Vec<RankedList> = missing
        .iter()
        .map(|&i| records[i].to_ranked_list().map_err(Into::into))
        .collect::<CliResult<_>>()?;
    let outcomes = rescore_all(&lists, config);
    for ((&i, list), outcome) in missing.iter().zip(&lists).zip(outcomes) {
        let rescored = outcome.map_err(|e| {
            data_err(format!("query {}: cannot rescore: {e}", records[i].query_id))
        })?;
        let enriched = JsonlRecord::with_rescore(list, &rescored);
        records[i].surprise = enriched.surprise;
        records[i].fit = enriched.fit;
    }
    Ok(())
}
