//! Seeded synthetic benchmark generator.
//!
//! Reproduces the per-query miscalibration that motivates calibrated
//! rescoring: every query draws its background scores from the same
//! exponential tail shifted by a query-specific offset, so no single raw-score
//! threshold separates relevant from non-relevant results across queries,
//! while relevant results sit a fixed shift above their own query's
//! background.
//!
//! Reproducibility contract: the generator is ChaCha8 seeded with the
//! configured seed, and query number `k` (train queries first, then test)
//! draws from stream `k`. Within a stream the draw order is: offset, relevant
//! count, the background scores, the relevant scores. Exponential values are
//! inverse-CDF draws `-scale·ln(1 - U)` with `U` a standard 53-bit uniform in
//! `[0, 1)`. Datasets are therefore identical across runs, platforms, and
//! thread counts.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::baselines::NeighborhoodMap;
use crate::error::{Error, Result};
use crate::par::par_map_range;
use crate::rescore::RankedList;
use crate::Relevance;

/// Generator settings. The defaults produce the benchmark used by the
/// acceptance suite: 500 train and 500 test queries of 200 results each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub train_queries: usize,
    pub test_queries: usize,
    /// Results retained per query (the top of the merged draw).
    pub list_length: usize,
    /// Per-query relevant count is uniform on `[relevant_min, relevant_max]`.
    pub relevant_min: usize,
    pub relevant_max: usize,
    /// Query offsets are uniform on `[offset_min, offset_max]`.
    pub offset_min: f64,
    pub offset_max: f64,
    /// Scale of the exponential background tail.
    pub tail_scale: f64,
    /// How far above its query's background the relevant distribution sits.
    pub relevant_shift: f64,
    /// Background (non-relevant) draws per query.
    pub background_size: usize,
    /// Neighborhood size recorded for each test query.
    pub neighbors: usize,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            train_queries: 500,
            test_queries: 500,
            list_length: 200,
            relevant_min: 0,
            relevant_max: 10,
            offset_min: 0.0,
            offset_max: 20.0,
            tail_scale: 1.0,
            relevant_shift: 10.0,
            background_size: 100_000,
            neighbors: 20,
            seed: 42,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        if self.list_length == 0 || self.background_size == 0 {
            return Err(Error::Config(
                "list_length and background_size must be positive".into(),
            ));
        }
        if self.relevant_min > self.relevant_max {
            return Err(Error::Config(format!(
                "relevant_min {} exceeds relevant_max {}",
                self.relevant_min, self.relevant_max
            )));
        }
        if self.offset_min.is_nan() || self.offset_max.is_nan() || self.offset_min > self.offset_max {
            return Err(Error::Config(format!(
                "offset range [{}, {}] is empty",
                self.offset_min, self.offset_max
            )));
        }
        if self.tail_scale.is_nan() || self.tail_scale <= 0.0 {
            return Err(Error::Config(format!(
                "tail_scale must be positive, got {}",
                self.tail_scale
            )));
        }
        if self.relevant_shift.is_nan() || self.relevant_shift <= 0.0 {
            return Err(Error::Config(format!(
                "relevant_shift must be positive, got {}",
                self.relevant_shift
            )));
        }
        if self.list_length > self.background_size + self.relevant_min {
            return Err(Error::Config(format!(
                "list_length {} exceeds the guaranteed draw count {}",
                self.list_length,
                self.background_size + self.relevant_min
            )));
        }
        Ok(())
    }
}

/// Generator ground truth for one query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryTruth {
    /// The query's location offset.
    pub offset: f64,
    /// Number of relevant items drawn, whether or not they survived the
    /// top-`n` cut; recall denominators use this.
    pub total_relevant: usize,
}

/// A generated benchmark: labeled train/test lists, neighborhoods of test
/// queries over train queries, and per-query truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    pub train: Vec<RankedList>,
    pub test: Vec<RankedList>,
    pub neighborhoods: NeighborhoodMap,
    pub truth: BTreeMap<String, QueryTruth>,
}

pub fn generate_synthetic(config: &SyntheticConfig) -> Result<SyntheticDataset> {
    config.validate()?;
    let total = config.train_queries + config.test_queries;
    let built: Vec<Result<(RankedList, QueryTruth)>> =
        par_map_range(total, |ordinal| build_query(config, ordinal));

    let mut train = Vec::with_capacity(config.train_queries);
    let mut test = Vec::with_capacity(config.test_queries);
    let mut truth = BTreeMap::new();
    let mut offsets: Vec<(String, f64, bool)> = Vec::with_capacity(total);
    for (ordinal, item) in built.into_iter().enumerate() {
        let (list, query_truth) = item?;
        let is_train = ordinal < config.train_queries;
        offsets.push((list.query_id().to_string(), query_truth.offset, is_train));
        truth.insert(list.query_id().to_string(), query_truth);
        if is_train {
            train.push(list);
        } else {
            test.push(list);
        }
    }

    let neighborhoods = nearest_train_neighborhoods(&offsets, config.neighbors);
    Ok(SyntheticDataset {
        train,
        test,
        neighborhoods,
        truth,
    })
}

fn query_id(config: &SyntheticConfig, ordinal: usize) -> String {
    if ordinal < config.train_queries {
        format!("train_{ordinal:04}")
    } else {
        format!("test_{:04}", ordinal - config.train_queries)
    }
}

fn exponential_draw(rng: &mut ChaCha8Rng, scale: f64) -> f64 {
    -scale * (1.0 - rng.random::<f64>()).ln()
}

fn build_query(config: &SyntheticConfig, ordinal: usize) -> Result<(RankedList, QueryTruth)> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(ordinal as u64);

    let offset = rng.random_range(config.offset_min..=config.offset_max);
    let relevant_count = rng.random_range(config.relevant_min..=config.relevant_max);
    if config.list_length > config.background_size + relevant_count {
        return Err(Error::Config(format!(
            "list_length {} exceeds the {} draws available for query {}",
            config.list_length,
            config.background_size + relevant_count,
            query_id(config, ordinal)
        )));
    }

    // (score, label, draw index); the index breaks score ties deterministically
    let mut draws: Vec<(f64, Relevance, usize)> =
        Vec::with_capacity(config.background_size + relevant_count);
    for i in 0..config.background_size {
        let score = offset + exponential_draw(&mut rng, config.tail_scale);
        draws.push((score, Relevance::NonRelevant, i));
    }
    for i in 0..relevant_count {
        let score =
            offset + config.relevant_shift + exponential_draw(&mut rng, config.tail_scale);
        draws.push((score, Relevance::Relevant, config.background_size + i));
    }

    let by_score_desc = |a: &(f64, Relevance, usize), b: &(f64, Relevance, usize)| {
        b.0.total_cmp(&a.0).then(a.2.cmp(&b.2))
    };
    let n = config.list_length;
    if draws.len() > n {
        draws.select_nth_unstable_by(n - 1, by_score_desc);
        draws.truncate(n);
    }
    draws.sort_by(by_score_desc);

    let ids = draws
        .iter()
        .map(|&(_, label, idx)| match label {
            Relevance::NonRelevant => format!("n{idx:05}"),
            Relevance::Relevant => format!("r{}", idx - config.background_size),
        })
        .collect();
    let scores: Vec<f64> = draws.iter().map(|d| d.0).collect();
    let labels: Vec<Relevance> = draws.iter().map(|d| d.1).collect();

    let list = RankedList::new(query_id(config, ordinal), ids, scores, Some(labels))?;
    Ok((
        list,
        QueryTruth {
            offset,
            total_relevant: relevant_count,
        },
    ))
}

fn nearest_train_neighborhoods(
    offsets: &[(String, f64, bool)],
    neighbors: usize,
) -> NeighborhoodMap {
    let train: Vec<(&String, f64)> = offsets
        .iter()
        .filter(|(_, _, is_train)| *is_train)
        .map(|(id, offset, _)| (id, *offset))
        .collect();
    let mut map = NeighborhoodMap::new();
    for (qid, offset, is_train) in offsets {
        if *is_train {
            continue;
        }
        let mut ranked: Vec<(f64, usize)> = train
            .iter()
            .enumerate()
            .map(|(idx, (_, mu))| ((mu - offset).abs(), idx))
            .collect();
        ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let chosen = ranked
            .iter()
            .take(neighbors.min(train.len()))
            .map(|&(_, idx)| train[idx].0.clone())
            .collect();
        map.insert(qid.clone(), chosen);
    }
    map
}
