use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gridmap::gridfit::hungarian;
use gridmap::network::build_network;
use gridmap::snake::{grid_size, run_snake, SnakeConfig};
use gridmap_bench::{cost_matrix, wiggly_map};
use gridmap_cli::{run_pipeline, PipelineConfig};

fn network(c: &mut Criterion) {
    let mut group = c.benchmark_group("build_network");
    for detail in [1, 4, 9] {
        let rs = wiggly_map(5, detail);
        let s = grid_size(rs.total_area(), rs.len()).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(detail), &rs, |b, rs| {
            b.iter(|| build_network(rs, None, s).unwrap())
        });
    }
    group.finish();
}

fn snake(c: &mut Criterion) {
    let mut group = c.benchmark_group("run_snake");
    group.sample_size(20);
    for detail in [1, 4, 9] {
        let rs = wiggly_map(5, detail);
        let s = grid_size(rs.total_area(), rs.len()).unwrap();
        let net = build_network(&rs, None, s).unwrap();
        let cfg = SnakeConfig::default();
        group.bench_with_input(BenchmarkId::from_parameter(net.len()), &net, |b, net| {
            b.iter(|| run_snake(net, &rs, &cfg).unwrap())
        });
    }
    group.finish();
}

fn assignment(c: &mut Criterion) {
    let mut group = c.benchmark_group("hungarian");
    for n in [10, 50, 200] {
        let cost = cost_matrix(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &cost, |b, cost| {
            b.iter(|| hungarian(cost).unwrap())
        });
    }
    group.finish();
}

fn pipeline(c: &mut Criterion) {
    let mut group = c.benchmark_group("pipeline");
    group.sample_size(10);
    let cfg = PipelineConfig::default();
    for detail in [1, 9] {
        let rs = wiggly_map(5, detail);
        group.bench_with_input(BenchmarkId::from_parameter(detail), &rs, |b, rs| {
            b.iter(|| run_pipeline(rs.clone(), &cfg).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, network, snake, assignment, pipeline);
criterion_main!(benches);
