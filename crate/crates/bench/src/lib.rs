//! Wall-clock and memory comparison between CRD scoring and exact
//! nearest-neighbor scans over the same queries.
//!
//! Building the scorer is an offline step and is not timed. Both scoring
//! paths run on the same rayon pool so they see the same thread budget.

use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crd_core::baselines::{knn_scores, nn_scores};
use crd_core::crd::{build_scorer, crd_score_blocked};
use crd_core::evalkit::synth_dataset;
use crd_core::io::model_file_len;
use crd_core::{Error, FeatureBank, QueryBatch, Result};

/// Query columns per GEMM call on the CRD path.
pub const CRD_BLOCK: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchOptions {
    pub lambda: f64,
    /// Neighbors averaged by the baseline; 1 is the plain nearest neighbor.
    pub k: usize,
    pub reps: usize,
    pub warmup: usize,
    pub threads: usize,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            lambda: crd_core::DEFAULT_LAMBDA,
            k: 1,
            reps: 5,
            warmup: 1,
            threads: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub d: usize,
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub lambda: f64,
    pub reps: usize,
    pub threads: usize,
    pub crd_ns_per_query: f64,
    pub nn_ns_per_query: f64,
    pub speedup: f64,
    pub crd_model_bytes: usize,
    pub bank_bytes: usize,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

impl BenchReport {
    pub fn memory_ratio(&self) -> f64 {
        self.bank_bytes as f64 / self.crd_model_bytes as f64
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

/// Scores from the last timed repetition of each path.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRun {
    pub report: BenchReport,
    pub crd_scores: Vec<f64>,
    pub nn_scores: Vec<f64>,
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_unstable_by(f64::total_cmp);
    let mid = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[mid]
    } else {
        (xs[mid - 1] + xs[mid]) / 2.0
    }
}

/// Runs `f` `warmup + reps` times, returning per-rep nanoseconds and the
/// output, which must be identical across every run.
fn time_reps<F>(reps: usize, warmup: usize, what: &str, mut f: F) -> Result<(Vec<f64>, Vec<f64>)>
where
    F: FnMut() -> Result<Vec<f64>>,
{
    let reference = f()?;
    for _ in 1..warmup {
        f()?;
    }
    let mut times = Vec::with_capacity(reps);
    for _ in 0..reps {
        let start = Instant::now();
        let out = std::hint::black_box(f()?);
        times.push(start.elapsed().as_nanos() as f64);
        if out != reference {
            return Err(Error::Numerical(format!("{what} scores changed between repetitions")));
        }
    }
    Ok((times, reference))
}

pub fn bench_compare(bank: &FeatureBank, queries: &QueryBatch, opts: &BenchOptions) -> Result<BenchRun> {
    if opts.reps < 3 {
        return Err(Error::Parameter(format!("reps must be at least 3, got {}", opts.reps)));
    }
    if opts.warmup < 1 {
        return Err(Error::Parameter("warmup must be at least 1".into()));
    }
    if opts.threads < 1 {
        return Err(Error::Parameter("threads must be at least 1".into()));
    }
    if opts.k < 1 || opts.k > bank.len() {
        return Err(Error::Parameter(format!("k must be in 1..={}, got {}", bank.len(), opts.k)));
    }
    if queries.dim() != bank.dim() {
        return Err(Error::DimensionMismatch {
            expected: bank.dim(),
            got: queries.dim(),
        });
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.threads)
        .build()
        .map_err(|e| Error::Parameter(format!("thread pool: {e}")))?;

    let scorer = build_scorer(bank, opts.lambda)?;
    let m = queries.len();

    let (crd_times, crd_scores) = pool.install(|| {
        time_reps(opts.reps, opts.warmup, "CRD", || crd_score_blocked(&scorer, queries, CRD_BLOCK))
    })?;
    let (nn_times, nn_scores) = pool.install(|| {
        time_reps(opts.reps, opts.warmup, "NN", || {
            if opts.k == 1 {
                Ok(nn_scores(bank, queries)?.into_iter().map(|r| r.score).collect())
            } else {
                knn_scores(bank, queries, opts.k)
            }
        })
    })?;

    // Timer resolution floor keeps the ratio finite.
    let crd_ns = (median(crd_times) / m as f64).max(f64::MIN_POSITIVE);
    let nn_ns = (median(nn_times) / m as f64).max(f64::MIN_POSITIVE);
    let timestamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let report = BenchReport {
        d: bank.dim(),
        n: bank.len(),
        m,
        k: opts.k,
        lambda: opts.lambda,
        reps: opts.reps,
        threads: opts.threads,
        crd_ns_per_query: crd_ns,
        nn_ns_per_query: nn_ns,
        speedup: nn_ns / crd_ns,
        crd_model_bytes: model_file_len(bank.dim()),
        bank_bytes: bank.dim() * bank.len() * 4,
        timestamp,
    };
    Ok(BenchRun {
        report,
        crd_scores,
        nn_scores,
    })
}

/// Synthetic bank of `n` patches and `m` queries of dimension `d`.
pub fn synthetic_workload(d: usize, n: usize, m: usize, seed: u64) -> Result<(FeatureBank, QueryBatch)> {
    if m < 2 {
        return Err(Error::Parameter(format!("need at least 2 queries, got {m}")));
    }
    let data = synth_dataset(d, n, m - m / 2, m / 2, 0.5, seed)?;
    Ok((data.bank, data.queries))
}

/// Fixed-width text table, one row per report.
pub fn format_table(reports: &[BenchReport]) -> String {
    let mut out = format!(
        "{:>6} {:>9} {:>7} {:>3} {:>7} {:>14} {:>14} {:>10} {:>12} {:>12} {:>8}\n",
        "d", "n", "m", "k", "threads", "crd ns/query", "nn ns/query", "speedup", "model B", "bank B", "mem x"
    );
    for r in reports {
        out.push_str(&format!(
            "{:>6} {:>9} {:>7} {:>3} {:>7} {:>14.1} {:>14.1} {:>9.1}x {:>12} {:>12} {:>7.1}x\n",
            r.d,
            r.n,
            r.m,
            r.k,
            r.threads,
            r.crd_ns_per_query,
            r.nn_ns_per_query,
            r.speedup,
            r.crd_model_bytes,
            r.bank_bytes,
            r.memory_ratio()
        ));
    }
    out
}
