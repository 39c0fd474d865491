use std::hint::black_box;

use bdiv_core::bdivisor::is_nef_probe;
use bdiv_core::connection::IrrAnalysis;
use bdiv_core::fixtures;
use bdiv_core::suite::check_corpus;
use bdiv_core::Execution;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn nef_probe(c: &mut Criterion) {
    let s = fixtures::scen_b();
    let a = IrrAnalysis::new(&s.connections["M"], &s.pair, 64).unwrap();
    let mut g = c.benchmark_group("nef-probe-scen-b");
    for depth in [2, 3] {
        for (name, exec) in MODES {
            g.bench_with_input(BenchmarkId::new(name, depth), &depth, |b, &d| {
                b.iter(|| black_box(is_nef_probe(&a.irr, d, exec).nef))
            });
        }
    }
    g.finish();
}

fn corpus_checks(c: &mut Criterion) {
    let corpus: Vec<_> = fixtures::random_corpus(24, 7)
        .into_iter()
        .enumerate()
        .map(|(i, s)| (format!("r{i}"), s))
        .collect();
    let mut g = c.benchmark_group("check-corpus-24");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(name, |b| b.iter(|| black_box(check_corpus(&corpus, exec).len())));
    }
    g.finish();
}

criterion_group!(benches, nef_probe, corpus_checks);
criterion_main!(benches);
