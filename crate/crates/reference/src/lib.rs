//! Brute-force and straight-line reference implementations used to validate
//! the `surprise` crate. Everything here favors obviousness over speed:
//! dense grid searches, exhaustive enumeration, and literal transcriptions of
//! the procedures under test. Test code only — nothing in the main library
//! may call into this crate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use surprise::data::{generate_synthetic, SyntheticConfig};
use surprise::gpd::{cvm_statistic, fit_gpd_mle, gpd_cdf, ExcessSample, GpdParams};
use surprise::metrics::{EvalQuery, Metric};
use surprise::rescore::{RankedList, RescoreConfig};

/// GPD log-likelihood written directly from the density formula, sharing no
/// code with the library's evaluation path.
pub fn gpd_log_likelihood(shape: f64, scale: f64, xs: &[f64]) -> f64 {
    assert!(shape <= 0.0 && scale > 0.0);
    let mut ll = 0.0;
    for &x in xs {
        if shape == 0.0 {
            ll += -scale.ln() - x / scale;
        } else {
            ll += -scale.ln() + (1.0 / shape - 1.0) * (1.0 - shape * x / scale).ln();
        }
    }
    ll
}

/// Result of [`grid_search_gpd`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridFit {
    pub shape: f64,
    pub scale: f64,
    pub log_likelihood: f64,
}

/// Dense 2-D grid search for the constrained GPD maximum-likelihood fit:
/// shape on a linear grid in `[-10, 0]`, scale on a log grid around the
/// sample mean, refined by three zoom rounds. The exponential candidate
/// (shape 0, scale = mean) is always evaluated explicitly.
pub fn grid_search_gpd(xs: &[f64]) -> GridFit {
    const CELLS: usize = 200;
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    assert!(mean > 0.0, "grid search needs a nondegenerate sample");

    let mut best = GridFit {
        shape: 0.0,
        scale: mean,
        log_likelihood: gpd_log_likelihood(0.0, mean, xs),
    };

    let mut c_lo = -10.0;
    let mut c_hi = 0.0;
    let mut ln_a_lo = (mean / 100.0).ln();
    let mut ln_a_hi = (mean * 100.0).ln();
    for _round in 0..4 {
        let c_step = (c_hi - c_lo) / CELLS as f64;
        let a_step = (ln_a_hi - ln_a_lo) / CELLS as f64;
        let mut best_i = 0;
        let mut best_j = 0;
        let mut round_best = f64::NEG_INFINITY;
        for i in 0..=CELLS {
            let c = (c_lo + i as f64 * c_step).min(0.0);
            for j in 0..=CELLS {
                let a = (ln_a_lo + j as f64 * a_step).exp();
                let ll = gpd_log_likelihood(c, a, xs);
                if ll > round_best {
                    round_best = ll;
                    best_i = i;
                    best_j = j;
                }
            }
        }
        if round_best > best.log_likelihood {
            best = GridFit {
                shape: (c_lo + best_i as f64 * c_step).min(0.0),
                scale: (ln_a_lo + best_j as f64 * a_step).exp(),
                log_likelihood: round_best,
            };
        }
        let new_c_lo = c_lo + best_i.saturating_sub(2) as f64 * c_step;
        let new_c_hi = (c_lo + (best_i + 2).min(CELLS) as f64 * c_step).min(0.0);
        let new_a_lo = ln_a_lo + best_j.saturating_sub(2) as f64 * a_step;
        let new_a_hi = ln_a_lo + (best_j + 2).min(CELLS) as f64 * a_step;
        c_lo = new_c_lo;
        c_hi = new_c_hi;
        ln_a_lo = new_a_lo;
        ln_a_hi = new_a_hi;
    }
    best
}

/// The Cramér–von Mises summation computed term by term from `gpd_cdf`
/// outputs at explicitly supplied parameters.
pub fn cvm_direct(params: &GpdParams, excess_ascending: &[f64]) -> f64 {
    let m = excess_ascending.len() as f64;
    let mut total = 0.0;
    for (idx, &e) in excess_ascending.iter().enumerate() {
        let plotting = (2.0 * (idx + 1) as f64 - 1.0) / (2.0 * m);
        total += (gpd_cdf(params, e) - plotting).powi(2);
    }
    total + 1.0 / (12.0 * m)
}

/// The greedy two-sided window search, re-implemented as a literal loop over
/// an ascending score list. Returns the retained window `(i, j)`.
pub fn window_transcript(ascending: &[f64], min_fit: usize, trim_cap: Option<usize>) -> (usize, usize) {
    let n = ascending.len();
    let cap = trim_cap.unwrap_or(n.div_ceil(2));
    let statistic = |i: usize, j: usize| -> Option<f64> {
        let base = ascending[i];
        let excess: Vec<f64> = ascending[i..j].iter().map(|s| s - base).collect();
        let sample = ExcessSample::new(excess).ok()?;
        Some(cvm_statistic(&sample, min_fit).ok()?.value)
    };

    let mut i = 0usize;
    let mut j = n;
    let mut current = statistic(i, j).expect("full window must be fittable");
    while j - i > min_fit && n - (j - 1) <= cap {
        match statistic(i, j - 1) {
            Some(cand) if cand < current - 1e-12 => {
                j -= 1;
                current = cand;
            }
            _ => break,
        }
    }
    while j - i > min_fit && i < cap {
        match statistic(i + 1, j) {
            Some(cand) if cand < current - 1e-12 => {
                i += 1;
                current = cand;
            }
            _ => break,
        }
    }
    (i, j)
}

/// Straight-line transcription of the greedy rescoring procedure. Reuses the
/// library's fit and statistic primitives (each validated against independent
/// oracles above) but re-implements the loops, the window bookkeeping, the
/// alignment, and the `-ln(1 - cdf)` rescoring from scratch.
pub fn rescore_transcript(
    scores_descending: &[f64],
    min_fit: usize,
    trim_cap: Option<usize>,
    fit_full_tail: bool,
) -> Vec<f64> {
    let n = scores_descending.len();
    assert!(n >= min_fit);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores_descending[a].total_cmp(&scores_descending[b]));
    let ascending: Vec<f64> = order.iter().map(|&k| scores_descending[k]).collect();

    let (i, j) = window_transcript(&ascending, min_fit, trim_cap);
    let u = ascending[i];
    let slice = if fit_full_tail {
        &ascending[i..]
    } else {
        &ascending[i..j]
    };
    let excess: Vec<f64> = slice.iter().map(|s| s - u).collect();
    let gpd = fit_gpd_mle(&ExcessSample::new(excess).unwrap(), min_fit).unwrap();

    let mut out = vec![0.0; n];
    for (pos, &original) in order.iter().enumerate() {
        let s = ascending[pos];
        out[original] = if s >= u {
            -(1.0 - gpd_cdf(&gpd, s - u)).ln()
        } else {
            0.0
        };
    }
    out
}

/// Fixed-cutoff search by plain enumeration.
pub fn best_fixed_cutoff_bruteforce(queries: &[&EvalQuery], metric: Metric) -> usize {
    let n_max = queries.iter().map(|q| q.len()).max().unwrap();
    let mut best_k = 0;
    let mut best_value = f64::NEG_INFINITY;
    for k in 0..=n_max {
        let mut sum = 0.0;
        for q in queries {
            sum += q.metric_at_k(metric, k.min(q.len()));
        }
        let mean = sum / queries.len() as f64;
        if mean > best_value {
            best_value = mean;
            best_k = k;
        }
    }
    best_k
}

/// Oracle cutoff by plain enumeration.
pub fn oracle_cutoff_bruteforce(query: &EvalQuery, metric: Metric) -> (usize, f64) {
    let mut best_k = 0;
    let mut best_value = f64::NEG_INFINITY;
    for k in 0..=query.len() {
        let value = query.metric_at_k(metric, k);
        if value > best_value {
            best_value = value;
            best_k = k;
        }
    }
    (best_k, best_value)
}

/// Threshold sweep by nested loops over an explicit grid; retention counted
/// with a filter rather than a prefix scan.
pub fn sweep_bruteforce(
    queries: &[&EvalQuery],
    use_surprise: bool,
    metric: Metric,
    grid: &[f64],
) -> (f64, f64, Vec<f64>) {
    let mut curve = Vec::with_capacity(grid.len());
    let mut best = (grid[0], f64::NEG_INFINITY);
    for &tau in grid {
        let mut sum = 0.0;
        for q in queries {
            let values: &[f64] = if use_surprise {
                q.surprise.as_deref().unwrap()
            } else {
                &q.raw_scores
            };
            let k = values.iter().filter(|&&v| v > tau).count();
            sum += q.metric_at_k(metric, k);
        }
        let mean = sum / queries.len() as f64;
        curve.push(mean);
        if mean > best.1 {
            best = (tau, mean);
        }
    }
    (best.0, best.1, curve)
}

/// Exhaustive least-squares monotone fit over all contiguous block
/// partitions. Only usable for short inputs (`n <= 20`).
pub fn monotone_fit_bruteforce(targets: &[f64], weights: &[f64]) -> Vec<f64> {
    let n = targets.len();
    assert!((1..=20).contains(&n));
    let mut best_sse = f64::INFINITY;
    let mut best_fit: Vec<f64> = Vec::new();
    for mask in 0u32..(1 << (n - 1)) {
        let mut fitted = Vec::with_capacity(n);
        let mut block_means = Vec::new();
        let mut start = 0usize;
        for p in 0..n {
            let block_ends = p == n - 1 || (mask >> p) & 1 == 1;
            if block_ends {
                let mut sw = 0.0;
                let mut swv = 0.0;
                for q in start..=p {
                    sw += weights[q];
                    swv += weights[q] * targets[q];
                }
                let mean = swv / sw;
                block_means.push(mean);
                fitted.extend(std::iter::repeat_n(mean, p + 1 - start));
                start = p + 1;
            }
        }
        if block_means.windows(2).any(|w| w[1] < w[0]) {
            continue;
        }
        let sse: f64 = (0..n)
            .map(|q| weights[q] * (fitted[q] - targets[q]).powi(2))
            .sum();
        if sse < best_sse {
            best_sse = sse;
            best_fit = fitted;
        }
    }
    best_fit
}

/// Inverse-CDF draws from a GPD with `shape <= 0`, for generating test
/// samples with known parameters.
pub fn sample_gpd(shape: f64, scale: f64, n: usize, seed: u64) -> Vec<f64> {
    assert!(shape <= 0.0 && scale > 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            if shape == 0.0 {
                -scale * (1.0 - u).ln()
            } else {
                scale / shape * (1.0 - (1.0 - u).powf(shape))
            }
        })
        .collect()
}

/// Pipeline numbers for a synthetic benchmark, computed end to end by the
/// reference routes: transcription rescoring, nested-loop sweeps, and
/// enumerated cutoffs.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkSummary {
    pub oracle_mean: f64,
    pub global_k: usize,
    pub global_k_mean: f64,
    pub raw_threshold: f64,
    pub raw_threshold_mean: f64,
    pub surprise_train_threshold: f64,
    pub surprise_test_threshold: f64,
    pub surprise_mean: f64,
}

/// Builds evaluation queries from labeled lists, rescoring each with the
/// transcription above.
pub fn eval_queries_via_transcript(
    lists: &[RankedList],
    truth_total: impl Fn(&str) -> usize,
    rescore: &RescoreConfig,
) -> Vec<EvalQuery> {
    lists
        .iter()
        .map(|list| EvalQuery {
            query_id: list.query_id().to_string(),
            labels: list.labels().expect("labeled list").to_vec(),
            total_relevant: truth_total(list.query_id()),
            raw_scores: list.scores().to_vec(),
            surprise: Some(rescore_transcript(
                list.scores(),
                rescore.min_fit_size,
                rescore.trim_cap,
                rescore.fit_full_tail,
            )),
        })
        .collect()
}

/// Uniform grid helper matching `lo + i*step` semantics.
pub fn uniform_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    (0..count).map(|i| lo + i as f64 * step).collect()
}

/// Raw-score sweep grid: the observed range padded one step below the
/// minimum, `steps + 1` points.
pub fn raw_grid(queries: &[&EvalQuery], steps: usize) -> Vec<f64> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for q in queries {
        for &s in &q.raw_scores {
            lo = lo.min(s);
            hi = hi.max(s);
        }
    }
    let pad = if hi > lo { (hi - lo) / (steps - 1) as f64 } else { 1.0 };
    (0..=steps).map(|i| lo - pad + i as f64 * pad).collect()
}

/// Runs the full reference pipeline on a synthetic benchmark and reports the
/// mean F1 of every policy on the test split. The acceptance fixture pins the
/// numbers this returns for the default configuration.
pub fn evaluate_benchmark(
    config: &SyntheticConfig,
    rescore: &RescoreConfig,
    sweep_lo: f64,
    sweep_hi: f64,
    sweep_step: f64,
    raw_steps: usize,
) -> BenchmarkSummary {
    let data = generate_synthetic(config).expect("valid config");
    let truth = &data.truth;
    let train = eval_queries_via_transcript(&data.train, |q| truth[q].total_relevant, rescore);
    let test = eval_queries_via_transcript(&data.test, |q| truth[q].total_relevant, rescore);
    let train_refs: Vec<&EvalQuery> = train.iter().collect();
    let test_refs: Vec<&EvalQuery> = test.iter().collect();
    let metric = Metric::F1;

    let oracle_mean = test_refs
        .iter()
        .map(|q| oracle_cutoff_bruteforce(q, metric).1)
        .sum::<f64>()
        / test_refs.len() as f64;

    let global_k = best_fixed_cutoff_bruteforce(&train_refs, metric);
    let global_k_mean = test_refs
        .iter()
        .map(|q| q.metric_at_k(metric, global_k.min(q.len())))
        .sum::<f64>()
        / test_refs.len() as f64;

    let (raw_threshold, _, _) =
        sweep_bruteforce(&train_refs, false, metric, &raw_grid(&train_refs, raw_steps));
    let (_, raw_threshold_mean, _) =
        sweep_bruteforce(&test_refs, false, metric, &[raw_threshold]);

    let surprise_grid = uniform_grid(sweep_lo, sweep_hi, sweep_step);
    let (tau_train, _, _) = sweep_bruteforce(&train_refs, true, metric, &surprise_grid);
    let (tau_test, _, _) = sweep_bruteforce(&test_refs, true, metric, &surprise_grid);
    let (_, surprise_mean, _) = sweep_bruteforce(&test_refs, true, metric, &[tau_train]);

    BenchmarkSummary {
        oracle_mean,
        global_k,
        global_k_mean,
        raw_threshold,
        raw_threshold_mean,
        surprise_train_threshold: tau_train,
        surprise_test_threshold: tau_test,
        surprise_mean,
    }
}
