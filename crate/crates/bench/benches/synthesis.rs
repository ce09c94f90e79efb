use criterion::{criterion_group, criterion_main, Criterion, Throughput};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use seasynth::formation::{synthesize_with_resampling, ResampleOptions};
use seasynth::pipeline::{cmd_synthesize, SynthesisConfig};
use seasynth::JerlovTable;
use seasynth_bench::{depth, library, scene, write_corpus};

fn in_memory(c: &mut Criterion) {
    let clean = scene(512, 512, 0);
    let z = depth(512, 512);
    let table = JerlovTable::embedded();
    let lib = library();
    let opts = ResampleOptions::default();
    let mut g = c.benchmark_group("synthesize");
    g.throughput(Throughput::Elements(1));
    g.bench_function("512x512", |b| {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        b.iter(|| synthesize_with_resampling(&clean, &z, &table, &lib, &mut rng, &opts).unwrap())
    });
    g.finish();
}

/// Full command including decoding and writing every output file.
fn pipeline(c: &mut Criterion) {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = SynthesisConfig::parse(&write_corpus(tmp.path(), 16, 512)).unwrap();
    cfg.workers = 8;
    let mut g = c.benchmark_group("pipeline");
    g.sample_size(10);
    g.throughput(Throughput::Elements(16));
    g.bench_function("16x512x512_8_workers", |b| b.iter(|| cmd_synthesize(&cfg, true, false).unwrap()));
    g.finish();
}

criterion_group!(benches, in_memory, pipeline);
criterion_main!(benches);
