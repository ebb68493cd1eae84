//! Compare the data-parallel batch layer against sequential execution on the
//! two batch workloads: gathering simulations and exhaustive enumeration
//! checks.
//!
//! The parallel path comes from the default `parallel` feature; the
//! sequential baseline is the same worker mapped over a plain iterator, so
//! the comparison isolates the rayon bridge.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use chaingather_core::constants::Constants;
use chaingather_core::generate::random_loop;
use chaingather_core::oracle::{check_lemma, enumerate_small_chains, LemmaId};
use chaingather_core::scheduler::{run_to_gathering, RunOptions};

fn simulate_one(seed: u64) -> u64 {
    let consts = Constants::DEFAULT;
    let chain = random_loop(64, seed).unwrap();
    let (_, report) = run_to_gathering(chain, &consts, &RunOptions::default(), None).unwrap();
    report.phases_run
}

fn bench_simulation_batch(c: &mut Criterion) {
    let seeds: Vec<u64> = (0..24).collect();
    let mut group = c.benchmark_group("simulation_batch");
    group.sample_size(10);
    group.bench_with_input(BenchmarkId::new("parallel", seeds.len()), &seeds, |b, s| {
        b.iter(|| {
            let out = chaingather_core::batch::map_batch(s.clone(), simulate_one);
            out.iter().sum::<u64>()
        })
    });
    group.bench_with_input(
        BenchmarkId::new("sequential", seeds.len()),
        &seeds,
        |b, s| {
            b.iter(|| {
                s.iter()
                    .map(|&seed| simulate_one(seed))
                    .sum::<u64>()
            })
        },
    );
    group.finish();
}

fn bench_lemma_sweep(c: &mut Criterion) {
    let consts = Constants::DEFAULT;
    let chains = enumerate_small_chains(10).unwrap();
    let mut group = c.benchmark_group("lemma_sweep");
    group.sample_size(10);
    group.bench_function("parallel", |b| {
        b.iter(|| {
            let inputs: Vec<_> = chains.clone();
            chaingather_core::batch::map_batch(inputs, |chain| {
                check_lemma(&chain, LemmaId::MergeProgress, &consts).passed()
            })
            .iter()
            .filter(|&&ok| ok)
            .count()
        })
    });
    group.bench_function("sequential", |b| {
        b.iter(|| {
            chains
                .iter()
                .map(|chain| check_lemma(chain, LemmaId::MergeProgress, &consts).passed())
                .filter(|&ok| ok)
                .count()
        })
    });
    group.finish();
}

criterion_group!(benches, bench_simulation_batch, bench_lemma_sweep);
criterion_main!(benches);
