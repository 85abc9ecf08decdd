use std::io::Write;

use anyhow::{Context, Result};

use crd_bench::{bench_compare, format_table, synthetic_workload, BenchOptions};
use crd_core::io::{read_feature_tensor, read_manifest};
use crd_core::QueryBatch;

use crate::args::BenchArgs;

pub fn run(args: BenchArgs, threads: usize) -> Result<()> {
    let opts = BenchOptions {
        lambda: args.lambda,
        k: args.k,
        reps: args.reps,
        warmup: args.warmup,
        threads,
    };
    let mut reports = Vec::new();
    if let (Some(bank_path), Some(manifest)) = (&args.bank, &args.manifest) {
        let bank = read_feature_tensor(bank_path)?;
        let queries: QueryBatch = read_manifest(manifest)?.load_bank()?.into();
        reports.push(bench_compare(&bank, &queries, &opts)?.report);
    } else {
        for &n in &args.n {
            let (bank, queries) = synthetic_workload(args.d, n, args.m, args.seed)?;
            reports.push(bench_compare(&bank, &queries, &opts)?.report);
        }
    }

    print!("{}", format_table(&reports));
    if let Some(out) = &args.out {
        let mut file = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(out)
            .with_context(|| format!("opening {}", out.display()))?;
        for r in &reports {
            writeln!(file, "{}", r.to_json_line()).with_context(|| format!("writing {}", out.display()))?;
        }
    }
    Ok(())
}
