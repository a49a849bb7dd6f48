//! Benchmarks for the paths that dominate real workloads: closure queries,
//! chain verification, base scoring and exchange parsing.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

use cso_bench::{envelope_lines, layered_graph, provenance_chain};
use cso_core::exchange::{decode, parse_record};
use cso_core::graph::ResourceId;
use cso_core::provenance::verify_chain;
use cso_core::scoring::{cvss_base, ScoreVector};

fn closures(c: &mut Criterion) {
    let mut group = c.benchmark_group("dependents_closure");
    for nodes in [100usize, 1_000, 5_000] {
        let graph = layered_graph(nodes, 3, 7);
        let root = ResourceId::from("r0");
        group.throughput(Throughput::Elements(nodes as u64));
        group.bench_with_input(BenchmarkId::from_parameter(nodes), &graph, |b, graph| {
            b.iter(|| black_box(graph.dependents_closure(black_box(&root)).unwrap().len()));
        });
    }
    group.finish();
}

fn chain_verification(c: &mut Criterion) {
    let mut group = c.benchmark_group("verify_chain");
    for length in [100usize, 1_000, 10_000] {
        let chain = provenance_chain(length);
        group.throughput(Throughput::Elements(length as u64));
        group.bench_with_input(BenchmarkId::from_parameter(length), &chain, |b, chain| {
            b.iter(|| verify_chain(black_box(chain)).unwrap());
        });
    }
    group.finish();
}

fn base_scoring(c: &mut Criterion) {
    let vectors = ScoreVector::all();
    let mut group = c.benchmark_group("cvss_base");
    group.throughput(Throughput::Elements(vectors.len() as u64));
    group.bench_function("full_sweep", |b| {
        b.iter(|| {
            vectors
                .iter()
                .map(|v| cvss_base(black_box(v)).value)
                .sum::<f64>()
        });
    });
    group.finish();
}

fn exchange_parsing(c: &mut Criterion) {
    let lines = envelope_lines(512, 7);
    let bytes: usize = lines.iter().map(Vec::len).sum();
    let mut group = c.benchmark_group("exchange");
    group.throughput(Throughput::Bytes(bytes as u64));
    group.bench_function("parse_and_decode_512_lines", |b| {
        b.iter(|| {
            for line in &lines {
                let envelope = parse_record(black_box(line)).unwrap();
                black_box(decode(&envelope).unwrap());
            }
        });
    });
    group.finish();
}

criterion_group!(
    benches,
    closures,
    chain_verification,
    base_scoring,
    exchange_parsing
);
criterion_main!(benches);
