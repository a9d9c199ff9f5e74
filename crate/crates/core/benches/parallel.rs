use adafix::fixedpoint::{adagrad_norm_fp, SolverConfig};
use adafix::metric::Metric;
use adafix::operators::{cocoercivity_probe_with, star_cocoercivity_probe_with};
use adafix::par::{self, Execution};
use adafix::problems::synthetic::l_nonexpansive;
use adafix::rng::SeededRng;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn probes(c: &mut Criterion) {
    let d = 64;
    let mut rng = SeededRng::new(0);
    let xs = vec![0.0; d];
    let f = l_nonexpansive(d, 2.0, &xs, &mut rng).unwrap();
    let metric = Metric::scalar(2.0).unwrap();
    let pairs: Vec<_> = (0..4000).map(|_| (rng.normal_vec(d), rng.normal_vec(d))).collect();
    let points: Vec<_> = pairs.iter().map(|p| p.0.clone()).collect();

    let mut group = c.benchmark_group("probe");
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::new("cocoercivity", name), &exec, |b, &e| {
            b.iter(|| cocoercivity_probe_with(e, &f, &metric, black_box(&pairs)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("star_cocoercivity", name), &exec, |b, &e| {
            b.iter(|| star_cocoercivity_probe_with(e, &f, &metric, &xs, black_box(&points)).unwrap())
        });
    }
    group.finish();
}

fn sweep(c: &mut Criterion) {
    let d = 16;
    let mut group = c.benchmark_group("seed_sweep");
    group.sample_size(20);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::new("adagrad_norm", name), &exec, |b, &e| {
            b.iter(|| {
                par::map_range(e, 16, |seed| {
                    let mut rng = SeededRng::new(seed as u64);
                    let xs = rng.uniform_vec(d, -1.0, 1.0);
                    let f = l_nonexpansive(d, 3.0, &xs, &mut rng).unwrap();
                    let x1 = rng.uniform_vec(d, -3.0, 3.0);
                    let cfg = SolverConfig::adaptive(2000).with_x_star(xs);
                    adagrad_norm_fp(&f, &x1, 1.0, &cfg).unwrap().final_l2()
                })
            })
        });
    }
    group.finish();
}

criterion_group!(benches, probes, sweep);
criterion_main!(benches);
