use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

use planevo::HeuristicKind;
use planevo_bench::workloads;

fn per_state(c: &mut Criterion) {
    let mut group = c.benchmark_group("evaluate");
    for w in workloads(500) {
        group.throughput(Throughput::Elements(w.states.len() as u64));
        for kind in HeuristicKind::ALL {
            let mut h = kind.instantiate(&w.task);
            group.bench_with_input(
                BenchmarkId::new(kind.as_str(), w.name),
                &w.states,
                |b, states| {
                    b.iter(|| {
                        for s in states {
                            std::hint::black_box(h.evaluate(s.values()).unwrap());
                        }
                    })
                },
            );
        }
    }
    group.finish();
}

criterion_group!(benches, per_state);
criterion_main!(benches);
