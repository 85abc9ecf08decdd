//! Exact memory-bank baselines: nearest neighbor, k-NN average and a greedy
//! k-center coreset.
//!
//! All distances are squared Euclidean.

use rand::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;
use rayon::prelude::*;

use crate::bank::{FeatureBank, QueryBatch};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NnResult {
    pub score: f64,
    pub index: usize,
}

#[inline]
pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn check_query(bank: &FeatureBank, y: &[f64]) -> Result<()> {
    if bank.is_empty() {
        return Err(Error::Parameter("bank is empty".into()));
    }
    if y.len() != bank.dim() {
        return Err(Error::DimensionMismatch {
            expected: bank.dim(),
            got: y.len(),
        });
    }
    Ok(())
}

/// Closest bank column to `y`; ties go to the lowest index.
pub fn nn_distance(bank: &FeatureBank, y: &[f64]) -> Result<NnResult> {
    check_query(bank, y)?;
    let mut best = NnResult {
        score: f64::INFINITY,
        index: 0,
    };
    for (i, f) in bank.patches().enumerate() {
        let s = squared_distance(y, f);
        if s < best.score {
            best = NnResult { score: s, index: i };
        }
    }
    Ok(best)
}

/// Mean of the `k` smallest squared distances from `y` to the bank.
pub fn knn_avg_distance(bank: &FeatureBank, y: &[f64], k: usize) -> Result<f64> {
    check_query(bank, y)?;
    if k == 0 || k > bank.len() {
        return Err(Error::Parameter(format!(
            "k must be in 1..={}, got {k}",
            bank.len()
        )));
    }
    if k == 1 {
        return Ok(nn_distance(bank, y)?.score);
    }
    let mut dists: Vec<f64> = bank.patches().map(|f| squared_distance(y, f)).collect();
    dists.select_nth_unstable_by(k - 1, f64::total_cmp);
    let nearest = &mut dists[..k];
    nearest.sort_unstable_by(f64::total_cmp);
    Ok(nearest.iter().sum::<f64>() / k as f64)
}

/// [`nn_distance`] for every query, parallel over queries on the current rayon pool.
pub fn nn_scores(bank: &FeatureBank, queries: &QueryBatch) -> Result<Vec<NnResult>> {
    (0..queries.len())
        .into_par_iter()
        .map(|j| nn_distance(bank, queries.query(j)))
        .collect()
}

/// [`knn_avg_distance`] for every query, parallel over queries.
pub fn knn_scores(bank: &FeatureBank, queries: &QueryBatch, k: usize) -> Result<Vec<f64>> {
    (0..queries.len())
        .into_par_iter()
        .map(|j| knn_avg_distance(bank, queries.query(j), k))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoresetSelection {
    /// Selected bank columns in selection order.
    pub indices: Vec<usize>,
    pub fraction: f64,
}

impl CoresetSelection {
    pub fn apply(&self, bank: &FeatureBank) -> Result<FeatureBank> {
        bank.select(&self.indices)
    }
}

/// Number of columns a coreset of `fraction` keeps out of `n`.
pub fn coreset_size(n: usize, fraction: f64) -> usize {
    ((fraction * n as f64).round() as usize).clamp(1, n)
}

/// Greedy farthest-point (k-center) subsampling.
///
/// The first column is drawn from a SplitMix64 generator seeded with `seed`;
/// every later pick maximizes the distance to the selected set, ties going to
/// the lowest index.
pub fn greedy_coreset(bank: &FeatureBank, fraction: f64, seed: u64) -> Result<CoresetSelection> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Parameter(format!(
            "coreset fraction must be in (0, 1], got {fraction}"
        )));
    }
    let n = bank.len();
    let target = coreset_size(n, fraction);
    let mut rng = SplitMix64::seed_from_u64(seed);
    let first = rng.random_range(0..n);

    let mut indices = Vec::with_capacity(target);
    let mut min_dist = vec![f64::INFINITY; n];
    let mut latest = first;
    indices.push(first);
    // Selected columns sit at -inf so they are never picked again.
    min_dist[first] = f64::NEG_INFINITY;
    while indices.len() < target {
        let center = bank.patch(latest);
        let mut far = (f64::NEG_INFINITY, 0);
        for (i, (f, md)) in bank.patches().zip(min_dist.iter_mut()).enumerate() {
            let d = squared_distance(f, center);
            if d < *md {
                *md = d;
            }
            if *md > far.0 {
                far = (*md, i);
            }
        }
        latest = far.1;
        indices.push(latest);
        min_dist[latest] = f64::NEG_INFINITY;
    }
    Ok(CoresetSelection { indices, fraction })
}
