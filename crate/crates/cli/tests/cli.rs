//! End-to-end behavior of the `surprise` binary: exit codes, warnings,
//! determinism, and the full simulate → rescore → truncate → baselines
//! pipeline.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use surprise::data::read_jsonl;
use surprise::metrics::EvalReport;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_surprise"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn assert_code(output: &Output, code: i32) {
    assert_eq!(
        output.status.code(),
        Some(code),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
}

fn data_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn small_simulate(dir: &Path, seed: u64) {
    let out = run(&[
        "simulate",
        "--output",
        dir.to_str().unwrap(),
        "--seed",
        &seed.to_string(),
        "--num-train",
        "8",
        "--num-test",
        "4",
        "--list-length",
        "40",
        "--background",
        "3000",
        "--neighbors",
        "3",
    ]);
    assert_code(&out, 0);
}

#[test]
fn usage_errors_exit_one() {
    // unknown flag
    let out = run(&["rescore", "--no-such-flag"]);
    assert_code(&out, 1);
    // threshold and pvalue are mutually exclusive
    let out = run(&[
        "truncate",
        "--input",
        data_path("sample10_rescored.golden.jsonl").to_str().unwrap(),
        "--threshold",
        "1.0",
        "--pvalue",
        "0.5",
    ]);
    assert_code(&out, 1);
    // one of them is required
    let out = run(&[
        "truncate",
        "--input",
        data_path("sample10_rescored.golden.jsonl").to_str().unwrap(),
    ]);
    assert_code(&out, 1);
    // pvalue outside (0, 1]
    let out = run(&[
        "truncate",
        "--input",
        data_path("sample10_rescored.golden.jsonl").to_str().unwrap(),
        "--pvalue",
        "1.5",
    ]);
    assert_code(&out, 1);
    // help exits 0
    let out = run(&["--help"]);
    assert_code(&out, 0);
}

#[test]
fn data_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    // unreadable input
    let out = run(&[
        "rescore",
        "--input",
        dir.path().join("missing.jsonl").to_str().unwrap(),
    ]);
    assert_code(&out, 2);

    // empty input file
    let empty = dir.path().join("empty.jsonl");
    std::fs::write(&empty, "").unwrap();
    let out = run(&["rescore", "--input", empty.to_str().unwrap()]);
    assert_code(&out, 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("no queries"));

    // schema violation names the line
    let bad = dir.path().join("bad.jsonl");
    std::fs::write(&bad, "{\"query_id\":\"q\",\"result_ids\":[\"a\"]}\n").unwrap();
    let out = run(&["rescore", "--input", bad.to_str().unwrap()]);
    assert_code(&out, 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));
}

#[test]
fn short_query_gets_null_fit_and_warning() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("mixed.jsonl");
    let long: Vec<String> = (0..20).map(|i| format!("\"d{i}\"")).collect();
    let long_scores: Vec<String> = (0..20).map(|i| format!("{}", 20.0 - i as f64)).collect();
    std::fs::write(
        &input,
        format!(
            "{{\"query_id\":\"ok\",\"result_ids\":[{}],\"scores\":[{}]}}\n{{\"query_id\":\"tiny\",\"result_ids\":[\"a\",\"b\",\"c\",\"d\",\"e\"],\"scores\":[5,4,3,2,1]}}\n",
            long.join(","),
            long_scores.join(",")
        ),
    )
    .unwrap();
    let out_path = dir.path().join("rescored.jsonl");
    let out = run(&[
        "rescore",
        "--input",
        input.to_str().unwrap(),
        "--output",
        out_path.to_str().unwrap(),
    ]);
    assert_code(&out, 0);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("warning: query tiny"), "{stderr}");
    assert!(stderr.contains("1 warning(s)"), "{stderr}");

    let text = std::fs::read_to_string(&out_path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].contains("\"surprise\":["), "{}", lines[0]);
    assert!(lines[1].contains("\"fit\":null"), "{}", lines[1]);
    assert!(!lines[1].contains("\"surprise\""), "{}", lines[1]);

    let records = read_jsonl(text.as_bytes()).unwrap();
    assert_eq!(records[1].fit, Some(None));
}

#[test]
fn simulate_is_deterministic_and_parses_back() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    small_simulate(a.path(), 33);
    small_simulate(b.path(), 33);
    for name in ["train.jsonl", "test.jsonl", "neighborhoods.json", "truth.json"] {
        let left = std::fs::read(a.path().join(name)).unwrap();
        let right = std::fs::read(b.path().join(name)).unwrap();
        assert_eq!(left, right, "{name} differs between identical seeds");
        assert!(!left.is_empty());
    }
    let records = read_jsonl(
        std::fs::read(a.path().join("train.jsonl")).unwrap().as_slice(),
    )
    .unwrap();
    assert_eq!(records.len(), 8);
    for r in &records {
        r.to_ranked_list().unwrap();
        assert!(r.labels.is_some());
    }

    let c = tempfile::tempdir().unwrap();
    small_simulate(c.path(), 34);
    assert_ne!(
        std::fs::read(a.path().join("train.jsonl")).unwrap(),
        std::fs::read(c.path().join("train.jsonl")).unwrap(),
        "different seeds must differ"
    );
}

#[test]
fn simulate_with_zero_relevant_range_labels_everything_negative() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "simulate",
        "--output",
        dir.path().to_str().unwrap(),
        "--seed",
        "5",
        "--num-train",
        "3",
        "--num-test",
        "2",
        "--list-length",
        "30",
        "--background",
        "2000",
        "--relevant-max",
        "0",
    ]);
    assert_code(&out, 0);
    let records = read_jsonl(
        std::fs::read(dir.path().join("train.jsonl")).unwrap().as_slice(),
    )
    .unwrap();
    for r in records {
        assert!(r
            .labels
            .unwrap()
            .iter()
            .all(|l| !l.is_relevant()));
    }
}

#[test]
fn truncate_with_high_threshold_returns_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let decisions = dir.path().join("decisions.jsonl");
    let out = run(&[
        "truncate",
        "--input",
        data_path("sample10_rescored.golden.jsonl").to_str().unwrap(),
        "--threshold",
        "1e100",
        "--output",
        decisions.to_str().unwrap(),
    ]);
    assert_code(&out, 0);
    let text = std::fs::read_to_string(&decisions).unwrap();
    assert_eq!(text.lines().count(), 10);
    for line in text.lines() {
        assert!(line.contains("\"k\":0"), "{line}");
    }

    // at threshold 8 every query keeps exactly its count of values above 8
    let out = run(&[
        "truncate",
        "--input",
        data_path("sample10_rescored.golden.jsonl").to_str().unwrap(),
        "--threshold",
        "8",
        "--output",
        decisions.to_str().unwrap(),
    ]);
    assert_code(&out, 0);
    let records = read_jsonl(
        std::fs::read(data_path("sample10_rescored.golden.jsonl"))
            .unwrap()
            .as_slice(),
    )
    .unwrap();
    let text = std::fs::read_to_string(&decisions).unwrap();
    for (line, record) in text.lines().zip(&records) {
        let parsed: surprise::truncate::TruncationDecision = serde_json::from_str(line).unwrap();
        let expected = record
            .surprise
            .as_ref()
            .unwrap()
            .iter()
            .filter(|&&v| v > 8.0)
            .count();
        assert_eq!(parsed.cutoff, expected, "query {}", record.query_id);
    }
}

#[test]
fn full_pipeline_with_sweep_matches_library_evaluation() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    small_simulate(&data, 77);

    let train_rescored = dir.path().join("train_rescored.jsonl");
    let test_rescored = dir.path().join("test_rescored.jsonl");
    for (input, output) in [
        (data.join("train.jsonl"), &train_rescored),
        (data.join("test.jsonl"), &test_rescored),
    ] {
        let out = run(&[
            "rescore",
            "--input",
            input.to_str().unwrap(),
            "--output",
            output.to_str().unwrap(),
        ]);
        assert_code(&out, 0);
    }

    let decisions = dir.path().join("decisions.jsonl");
    let report = dir.path().join("report.json");
    let out = run(&[
        "truncate",
        "--input",
        test_rescored.to_str().unwrap(),
        "--sweep",
        train_rescored.to_str().unwrap(),
        "--truth",
        data.join("truth.json").to_str().unwrap(),
        "--output",
        decisions.to_str().unwrap(),
        "--report",
        report.to_str().unwrap(),
    ]);
    assert_code(&out, 0);

    // recompute the same pipeline with library calls
    let truth: std::collections::BTreeMap<String, surprise::data::QueryTruth> =
        serde_json::from_slice(&std::fs::read(data.join("truth.json")).unwrap()).unwrap();
    let to_queries = |path: &Path| -> Vec<surprise::metrics::EvalQuery> {
        read_jsonl(std::fs::read(path).unwrap().as_slice())
            .unwrap()
            .iter()
            .map(|r| surprise::metrics::EvalQuery {
                query_id: r.query_id.clone(),
                labels: r.labels.clone().unwrap(),
                total_relevant: truth[&r.query_id].total_relevant,
                raw_scores: r.scores.clone(),
                surprise: r.surprise.clone(),
            })
            .collect()
    };
    let train_queries = to_queries(&train_rescored);
    let test_queries = to_queries(&test_rescored);
    let sweep = surprise::truncate::sweep_threshold(
        &train_queries,
        surprise::truncate::ScoreSource::Surprise,
        surprise::Metric::F1,
        0.0,
        8.0,
        0.05,
    )
    .unwrap();

    let decisions_text = std::fs::read_to_string(&decisions).unwrap();
    for (line, q) in decisions_text.lines().zip(&test_queries) {
        let parsed: surprise::truncate::TruncationDecision = serde_json::from_str(line).unwrap();
        assert_eq!(parsed.query_id, q.query_id);
        assert_eq!(parsed.threshold, sweep.best_threshold);
        let expected = surprise::truncate::truncate_at_threshold(
            q.surprise.as_deref().unwrap(),
            sweep.best_threshold,
        )
        .unwrap();
        assert_eq!(parsed.cutoff, expected);
    }

    let report: EvalReport =
        serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    assert_eq!(report.query_count, 4);
    let recomputed = surprise::truncate::mean_metric_at_threshold(
        &test_queries,
        surprise::truncate::ScoreSource::Surprise,
        surprise::Metric::F1,
        sweep.best_threshold,
    )
    .unwrap();
    assert_eq!(report.mean["surprise"], recomputed);
}

#[test]
fn baselines_report_is_dominated_by_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    small_simulate(&data, 90);
    let report_path = dir.path().join("baselines.json");
    let out = run(&[
        "baselines",
        "--input",
        data.join("test.jsonl").to_str().unwrap(),
        "--train",
        data.join("train.jsonl").to_str().unwrap(),
        "--truth",
        data.join("truth.json").to_str().unwrap(),
        "--neighborhood-map",
        data.join("neighborhoods.json").to_str().unwrap(),
        "--output",
        report_path.to_str().unwrap(),
    ]);
    assert_code(&out, 0);
    let report: EvalReport =
        serde_json::from_slice(&std::fs::read(&report_path).unwrap()).unwrap();
    let oracle = report.mean["oracle"];
    for (policy, mean) in &report.mean {
        assert!(
            oracle >= *mean,
            "oracle {oracle} below {policy} {mean}"
        );
    }
    for policy in ["oracle", "global_k", "local_k", "isotonic", "surprise", "score_threshold"] {
        assert!(report.mean.contains_key(policy), "missing {policy}");
    }
    // per-query values dominated too
    for values in report.per_query.values() {
        for (policy, v) in values {
            assert!(values["oracle"] >= *v, "oracle beaten by {policy}");
        }
    }
}

#[test]
fn baselines_without_relevant_items_converges_to_empty_prefixes() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let out = run(&[
        "simulate",
        "--output",
        data.to_str().unwrap(),
        "--seed",
        "12",
        "--num-train",
        "6",
        "--num-test",
        "3",
        "--list-length",
        "30",
        "--background",
        "2000",
        "--relevant-max",
        "0",
        "--neighbors",
        "3",
    ]);
    assert_code(&out, 0);
    let report_path = dir.path().join("report.json");
    let out = run(&[
        "baselines",
        "--input",
        data.join("test.jsonl").to_str().unwrap(),
        "--train",
        data.join("train.jsonl").to_str().unwrap(),
        "--metric",
        "dcg",
        "--neighborhood-map",
        data.join("neighborhoods.json").to_str().unwrap(),
        "--policies",
        "oracle,global_k,local_k,isotonic",
        "--output",
        report_path.to_str().unwrap(),
    ]);
    assert_code(&out, 0);
    let report: EvalReport =
        serde_json::from_slice(&std::fs::read(&report_path).unwrap()).unwrap();
    assert_eq!(report.mean.len(), 4);
    for (policy, mean) in &report.mean {
        assert_eq!(*mean, 0.0, "{policy} should settle at the empty prefix");
    }
    for values in report.per_query.values() {
        for v in values.values() {
            assert_eq!(*v, 0.0);
        }
    }
}

#[test]
fn baselines_local_policy_requires_neighborhood_map() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    small_simulate(&data, 55);
    let out = run(&[
        "baselines",
        "--input",
        data.join("test.jsonl").to_str().unwrap(),
        "--train",
        data.join("train.jsonl").to_str().unwrap(),
        "--truth",
        data.join("truth.json").to_str().unwrap(),
        "--policies",
        "local_k,surprise",
    ]);
    assert_code(&out, 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("neighborhood"));
}

#[test]
fn metric_requiring_truth_fails_without_it() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    small_simulate(&data, 61);
    let out = run(&[
        "baselines",
        "--input",
        data.join("test.jsonl").to_str().unwrap(),
        "--train",
        data.join("train.jsonl").to_str().unwrap(),
    ]);
    assert_code(&out, 1);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("--truth") || stderr.contains("--qrels"), "{stderr}");
}

#[test]
fn trec_workflow_rescores_with_qrels_labels() {
    let dir = tempfile::tempdir().unwrap();
    let run_file = dir.path().join("run.txt");
    let qrels_file = dir.path().join("qrels.txt");
    let mut lines = Vec::new();
    let mut qrels = Vec::new();
    for q in 0..2 {
        for i in 0..25 {
            // distances: lower is better
            lines.push(format!("q{q} Q0 d{i} {} {} tag", i + 1, 0.1 * (i + 1) as f64));
        }
        qrels.push(format!("q{q} 0 d0 1"));
        qrels.push(format!("q{q} 0 d1 0"));
    }
    std::fs::write(&run_file, lines.join("\n")).unwrap();
    std::fs::write(&qrels_file, qrels.join("\n")).unwrap();

    let rescored = dir.path().join("rescored.jsonl");
    let out = run(&[
        "rescore",
        "--input",
        run_file.to_str().unwrap(),
        "--format",
        "trec",
        "--orientation",
        "lower",
        "--qrels",
        qrels_file.to_str().unwrap(),
        "--output",
        rescored.to_str().unwrap(),
        "--verbose",
    ]);
    assert_code(&out, 0);
    assert!(String::from_utf8_lossy(&out.stderr).contains("window"));

    let records = read_jsonl(std::fs::read(&rescored).unwrap().as_slice()).unwrap();
    assert_eq!(records.len(), 2);
    for r in &records {
        // negated distances: closest first, scores descending
        assert!(r.scores.windows(2).all(|w| w[1] <= w[0]));
        let labels = r.labels.as_ref().unwrap();
        assert!(labels[0].is_relevant());
        assert!(labels[1..].iter().all(|l| !l.is_relevant()));
        assert!(r.surprise.is_some());
    }
}
