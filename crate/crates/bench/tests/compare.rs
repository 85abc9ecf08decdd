use crd_bench::{bench_compare, format_table, synthetic_workload, BenchOptions, BenchReport};
use crd_core::baselines::{knn_avg_distance, nn_distance};
use crd_core::{build_scorer, crd_score};

#[test]
fn benchmark_does_not_change_scores() {
    let (bank, queries) = synthetic_workload(16, 300, 40, 3).unwrap();
    let opts = BenchOptions {
        lambda: 2.0,
        reps: 3,
        ..Default::default()
    };
    let run = bench_compare(&bank, &queries, &opts).unwrap();

    let scorer = build_scorer(&bank, 2.0).unwrap();
    assert_eq!(run.crd_scores, crd_score(&scorer, &queries).unwrap());
    let direct: Vec<f64> = queries.queries().map(|y| nn_distance(&bank, y).unwrap().score).collect();
    assert_eq!(run.nn_scores, direct);

    let r = &run.report;
    assert_eq!((r.d, r.n, r.m), (16, 300, 40));
    assert!(r.crd_ns_per_query > 0.0 && r.nn_ns_per_query > 0.0);
    assert!((r.speedup - r.nn_ns_per_query / r.crd_ns_per_query).abs() <= 1e-9 * r.speedup);
    assert_eq!(r.bank_bytes, 16 * 300 * 4);
}

#[test]
fn knn_baseline_path() {
    let (bank, queries) = synthetic_workload(8, 100, 10, 1).unwrap();
    let opts = BenchOptions {
        k: 5,
        reps: 3,
        ..Default::default()
    };
    let run = bench_compare(&bank, &queries, &opts).unwrap();
    let direct: Vec<f64> = queries.queries().map(|y| knn_avg_distance(&bank, y, 5).unwrap()).collect();
    assert_eq!(run.nn_scores, direct);
}

#[test]
fn thread_count_does_not_change_scores() {
    let (bank, queries) = synthetic_workload(12, 200, 600, 8).unwrap();
    let one = bench_compare(&bank, &queries, &BenchOptions { reps: 3, ..Default::default() }).unwrap();
    let four = bench_compare(
        &bank,
        &queries,
        &BenchOptions {
            reps: 3,
            threads: 4,
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(one.crd_scores, four.crd_scores);
    assert_eq!(one.nn_scores, four.nn_scores);
}

#[test]
fn report_serializes_as_one_json_line() {
    let (bank, queries) = synthetic_workload(4, 20, 4, 0).unwrap();
    let run = bench_compare(&bank, &queries, &BenchOptions { reps: 3, ..Default::default() }).unwrap();
    let line = run.report.to_json_line();
    assert!(!line.contains('\n'));
    let back: BenchReport = serde_json::from_str(&line).unwrap();
    assert_eq!(back, run.report);
    let table = format_table(&[run.report]);
    assert_eq!(table.lines().count(), 2);
}
