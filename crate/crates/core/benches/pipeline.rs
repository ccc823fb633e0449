use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use psind_core::indicators::compute_all;
use psind_core::reporting::{build_panels, DEFAULT_FLAG_QUANTILE};
use psind_core::synth::{self, SynthProfile};
use psind_core::{Execution, Lexicon, PipelineConfig};

const MODES: [(&str, Execution); 2] = [
    ("parallel", Execution::Parallel),
    ("sequential", Execution::Sequential),
];

fn profile() -> SynthProfile {
    SynthProfile {
        teams: 6,
        days: 28,
        ..SynthProfile::default()
    }
}

fn bench_compute(c: &mut Criterion) {
    let lexicon = Lexicon::demo();
    let corpora: Vec<_> = synth::generate(&profile(), &lexicon)
        .unwrap()
        .into_iter()
        .map(|t| t.into_corpus().unwrap())
        .collect();

    let mut group = c.benchmark_group("compute_all");
    group.sample_size(10);
    for (name, execution) in MODES {
        let config = PipelineConfig {
            execution,
            ..PipelineConfig::default()
        };
        group.bench_with_input(BenchmarkId::from_parameter(name), &config, |b, config| {
            b.iter(|| compute_all(black_box(&corpora), &lexicon, config).unwrap())
        });
    }
    group.finish();

    let series = compute_all(&corpora, &lexicon, &PipelineConfig::default()).unwrap();
    c.bench_function("build_panels", |b| {
        b.iter(|| build_panels(black_box(&series), DEFAULT_FLAG_QUANTILE))
    });
}

fn bench_synth(c: &mut Criterion) {
    let lexicon = Lexicon::demo();
    let p = profile();
    let mut group = c.benchmark_group("synth_generate");
    group.sample_size(10);
    for (name, execution) in MODES {
        group.bench_function(name, |b| {
            b.iter(|| synth::generate_with(black_box(&p), &lexicon, execution).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_compute, bench_synth);
criterion_main!(benches);
