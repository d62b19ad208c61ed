use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use scriptnarr::features::pcar::pcar_change_score;
use scriptnarr::pipeline::{export_features, PipelineConfig, RunOptions};
use scriptnarr::synth::{write_corpus, SynthConfig};
use scriptnarr::{BlockSet, Execution};

type Units = Vec<Vec<f64>>;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn featurize(c: &mut Criterion) {
    let dir = tempfile::tempdir().unwrap();
    let synth = SynthConfig { n_docs: 48, tokens_per_doc: 3000, arcs: true, ..SynthConfig::default() };
    let manifest = write_corpus(dir.path(), &synth).unwrap();
    let cfg = PipelineConfig { n_perm: 199, ..PipelineConfig::default() };

    let mut group = c.benchmark_group("featurize");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::new("all_blocks", name), |b| {
            b.iter(|| {
                let opts = RunOptions { exec, ..RunOptions::default() };
                export_features(&manifest, &cfg, BlockSet::all(), None, opts, &mut std::io::sink()).unwrap()
            })
        });
    }
    group.finish();
}

fn pcar_batch(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let pairs: Vec<(Units, Units)> = (0..64)
        .map(|_| {
            let mut side =
                |n: usize| -> Units { (0..n).map(|_| (0..6).map(|_| rng.random_range(0.0..1.0)).collect()).collect() };
            (side(30), side(30))
        })
        .collect();

    let mut group = c.benchmark_group("pcar");
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::new("64_pairs_999_perm", name), |b| {
            b.iter(|| exec.map(&pairs, |(a, b)| pcar_change_score(a, b, 999, 1).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, featurize, pcar_batch);
criterion_main!(benches);
