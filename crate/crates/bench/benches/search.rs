use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use planevo::{solve, HeuristicKind, SearchLimits};
use planevo_bench::workloads;

fn greedy_search(c: &mut Criterion) {
    let mut group = c.benchmark_group("gbfs");
    group.sample_size(10);
    let limits = SearchLimits::new(60.0, 1 << 30);
    for w in workloads(1) {
        for kind in [
            HeuristicKind::Ff,
            HeuristicKind::EvolvedFfNone3,
            HeuristicKind::GoalCount,
        ] {
            group.bench_with_input(
                BenchmarkId::new(kind.as_str(), w.name),
                &w.task,
                |b, task| b.iter(|| solve(task, &kind, &limits).unwrap().outcome),
            );
        }
    }
    group.finish();
}

criterion_group!(benches, greedy_search);
criterion_main!(benches);
