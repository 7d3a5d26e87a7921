//! Sequential vs data-parallel execution of the heavy kernels. Build with
//! `--no-default-features` to see the fallback path for both variants.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use expgraph::bounds::{optimize_params_with, MixingEnvelope, ParamGrid, StripProblem};
use expgraph::embed::{refutation_witness_with, LatticeMap};
use expgraph::fields::{FieldKind, FieldSpec};
use expgraph::paircount::pair_histogram_enum;
use expgraph::par::Exec;
use expgraph::tree::{Region, Tree};
use expgraph::verify::{mc_tail, TailOptions};

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn enumeration(c: &mut Criterion) {
    let mut group = c.benchmark_group("pair_enumeration");
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::new(name, "A3_P6"), &exec, |b, &exec| {
            b.iter(|| pair_histogram_enum(exec, black_box(3), 6).unwrap())
        });
    }
    group.finish();
}

fn monte_carlo(c: &mut Criterion) {
    let tree = Tree::new(2).unwrap();
    let mut group = c.benchmark_group("mc_tail_generations10");
    group.sample_size(10);
    for kind in [FieldKind::Independent, FieldKind::MDependent { m: 1 }] {
        let field = FieldSpec::new(kind, 1.0, 1).unwrap();
        for (name, exec) in MODES {
            let opts = TailOptions { exec, ..TailOptions::default() };
            group.bench_with_input(BenchmarkId::new(name, kind), &opts, |b, opts| {
                b.iter(|| mc_tail(&field, &Region::Generations { count: 10 }, &tree, &[0.1, 0.5], 1000, opts).unwrap())
            });
        }
    }
    group.finish();
}

fn optimizer(c: &mut Criterion) {
    let problem = StripProblem {
        rate: 2,
        level: 8,
        depth: 4,
        amplitude: 1.0,
        sigma2: 1.0 / 3.0,
        envelope: MixingEnvelope::m_dependent(2),
        epsilon: 500.0,
    };
    let grid = ParamGrid::default();
    let mut group = c.benchmark_group("optimize_params");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::new(name, "default_grid"), &exec, |b, &exec| {
            b.iter(|| optimize_params_with(exec, black_box(&problem), &grid).unwrap())
        });
    }
    group.finish();
}

fn witness_search(c: &mut Criterion) {
    let tree = Tree::new(2).unwrap();
    let map = LatticeMap::row_layout(2, 2, 12).unwrap();
    let mut group = c.benchmark_group("refutation_witness");
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::new(name, "row_layout_C2_k12"), &exec, |b, &exec| {
            b.iter(|| refutation_witness_with(exec, &tree, &map, black_box(2.0), 12).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, enumeration, monte_carlo, optimizer, witness_search);
criterion_main!(benches);
