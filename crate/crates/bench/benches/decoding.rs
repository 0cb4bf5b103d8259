use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ghostlab::dem::{extract_dem, ghost_decompose, partition_dem};
use ghostlab::ghost::GhostConfig;
use ghostlab::matching::{build_matching_graph, decode_mwpm, GraphOptions};
use ghostlab::window::{GlobalDecoder, WindowedDecoder};
use ghostlab_bench::{noisy_memory, noisy_tproxy, syndromes, tproxy_dem};

fn dem_extraction(c: &mut Criterion) {
    let mut g = c.benchmark_group("extract_dem");
    for d in [3, 5] {
        let mem = noisy_memory(d, 1e-3);
        g.bench_with_input(BenchmarkId::new("memory", d), &mem, |b, circ| b.iter(|| extract_dem(circ).unwrap()));
        let (tp, _) = noisy_tproxy(d, 1e-3);
        g.bench_with_input(BenchmarkId::new("tproxy", d), &tp, |b, circ| b.iter(|| extract_dem(circ).unwrap()));
    }
    g.finish();
}

fn matcher(c: &mut Criterion) {
    let mut g = c.benchmark_group("mwpm");
    for d in [3, 5, 7] {
        let dem = extract_dem(&noisy_memory(d, 3e-3)).unwrap();
        let dec = ghost_decompose(&dem).unwrap();
        let graph = build_matching_graph(&dec, &partition_dem(&dec)[0], GraphOptions::default()).unwrap();
        let shots: Vec<Vec<u32>> = syndromes(&dem, 1, 64)
            .iter()
            .map(|s| graph.detectors.iter().copied().filter(|&d| s[d as usize]).collect())
            .collect();
        g.bench_function(BenchmarkId::new("memory", d), |b| {
            b.iter(|| shots.iter().map(|s| decode_mwpm(&graph, s).unwrap().weight).sum::<f64>())
        });
    }
    g.finish();
}

fn ghost_pipelines(c: &mut Criterion) {
    let mut g = c.benchmark_group("tproxy_decode");
    g.sample_size(20);
    for d in [3, 5] {
        let (dem, sched) = tproxy_dem(d, 1e-3);
        let cfg = GhostConfig::default();
        let shots = syndromes(&dem, 2, 32);
        let windowed = WindowedDecoder::new(&dem, &sched, 1, &cfg).unwrap();
        let global = GlobalDecoder::for_tproxy(&dem, &sched, &cfg).unwrap();
        g.bench_function(BenchmarkId::new("windowed", d), |b| {
            b.iter(|| shots.iter().filter(|s| windowed.decode(s).unwrap()[0]).count())
        });
        g.bench_function(BenchmarkId::new("global", d), |b| {
            b.iter(|| shots.iter().filter(|s| global.decode(s).unwrap()[0]).count())
        });
    }
    g.finish();
}

criterion_group!(benches, dem_extraction, matcher, ghost_pipelines);
criterion_main!(benches);
