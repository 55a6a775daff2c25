//! Sequential vs rayon execution of the data-parallel kernels.
//!
//! With `--no-default-features` both policies run the same serial code, which
//! gives the baseline for the parallel speedup.

use std::hint::black_box;
use std::time::Duration;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use kawahara_core::bourgain::{bilinear_ratio, counting_scan, dyadic_packet, CountingScan, PacketParams};
use kawahara_core::evolution::{integrate, EvolutionParams, Scheme};
use kawahara_core::hierarchy::{lemma_bound_scan, Hierarchy, HierarchyContext};
use kawahara_core::illposed::{inflation_scan, WitnessSpec};
use kawahara_core::rng::CounterRng;
use kawahara_core::{Beta, Exec, IMultiplier, SpectralField, TorusSpec};

const POLICIES: [Exec; 2] = [Exec::Sequential, Exec::Parallel];

fn name(exec: Exec) -> &'static str {
    match exec {
        Exec::Sequential => "sequential",
        Exec::Parallel => "parallel",
    }
}

fn data(spec: TorusSpec) -> SpectralField {
    SpectralField::cosines(spec, &[(1, 1.0), (2, 0.5), (3, 0.3), (4, 0.2)])
}

fn hierarchy(c: &mut Criterion) {
    let spec = TorusSpec::unit(12, Beta::Plus);
    let ctx = HierarchyContext::new(IMultiplier::kink(-1.0, 2.0), spec);
    let u = data(spec);
    let mut g = c.benchmark_group("hierarchy");
    g.sample_size(10);
    for exec in POLICIES {
        g.bench_function(BenchmarkId::new("build_level4_K12", name(exec)), |b| {
            b.iter(|| Hierarchy::new(black_box(ctx), 4, exec).unwrap())
        });
        let h = Hierarchy::new(ctx, 4, exec).unwrap();
        g.bench_function(BenchmarkId::new("lambda5_m5_K12", name(exec)), |b| {
            b.iter(|| h.lambda5_m5(black_box(&u)).unwrap())
        });
        let wide = TorusSpec::unit(128, Beta::Plus);
        let cont = HierarchyContext::new(IMultiplier::kink(-1.0, 8.0), wide).continuum();
        g.bench_function(BenchmarkId::new("lemma_bound_grid24", name(exec)), |b| {
            b.iter(|| lemma_bound_scan(black_box(&cont), 24, exec).unwrap())
        });
    }
    g.finish();
}

fn bourgain(c: &mut Criterion) {
    let spec = TorusSpec::unit(64, Beta::Plus);
    let mut rng = CounterRng::new(5);
    let pp = |shell, block| PacketParams {
        shell,
        block,
        width: 4,
        delta_tau: 1.0,
    };
    let u = dyadic_packet(&spec, &pp(4, 3), &mut rng).unwrap();
    let v = dyadic_packet(&spec, &pp(2, 1), &mut rng).unwrap();
    let scan = CountingScan::default();
    let mut g = c.benchmark_group("bourgain");
    g.sample_size(10);
    for exec in POLICIES {
        g.bench_function(BenchmarkId::new("bilinear_ratio_K64", name(exec)), |b| {
            b.iter(|| bilinear_ratio(black_box(&u), black_box(&v), -1.5, exec).unwrap())
        });
        g.bench_function(BenchmarkId::new("counting_scan_default", name(exec)), |b| {
            b.iter(|| counting_scan(black_box(&scan), exec).unwrap())
        });
    }
    g.finish();
}

fn witness(c: &mut Criterion) {
    let ws = WitnessSpec::new(-1.8, 0.1, vec![8, 16, 32, 64, 128, 256]);
    let mut g = c.benchmark_group("illposed");
    g.sample_size(10);
    for exec in POLICIES {
        g.bench_function(BenchmarkId::new("inflation_scan", name(exec)), |b| {
            b.iter(|| inflation_scan(black_box(&ws), exec).unwrap())
        });
    }
    g.finish();
}

/// Integration is serial per trajectory; this tracks the step cost per scheme.
fn evolution(c: &mut Criterion) {
    let spec = TorusSpec::unit(128, Beta::Plus);
    let u = SpectralField::cosines(spec, &[(1, 1.0), (2, 0.5)]);
    let mut g = c.benchmark_group("evolution");
    g.sample_size(10).measurement_time(Duration::from_secs(5));
    for scheme in [Scheme::IfRk4, Scheme::EtdRk4, Scheme::IfGl4] {
        let p = EvolutionParams::new(spec, 1e-3, 0.05)
            .with_scheme(scheme)
            .with_record_every(50);
        g.bench_function(BenchmarkId::new("K128_50_steps", format!("{scheme:?}")), |b| {
            b.iter(|| integrate(black_box(&u), &p).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, hierarchy, bourgain, witness, evolution);
criterion_main!(benches);
