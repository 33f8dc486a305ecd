use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use pentalab::chi_map::ChiMapper;
use pentalab::expansion::extract_alphas;
use pentalab::fit::EpsLadder;
use pentalab::kdv::{kdv_rhs, PseudoDiffOp};
use pentalab::realization::{check_34, mari_beffa_family};
use pentalab::{Dd, Precision, Real};
use pentalab_bench::{probes, short_diagonal_fixture};

fn chi_map(c: &mut Criterion) {
    for d in [2, 3] {
        let (spec, chi) = short_diagonal_fixture(d);
        let m = ChiMapper::<f64>::new(&spec, &chi, 0.4, 0.2, 0.0, 2 * d + 2).unwrap();
        c.bench_function(&format!("chi_map d={d} f64"), |b| b.iter(|| m.map(black_box(0.1), 0.0).unwrap()));
        let m = ChiMapper::<Dd>::new(&spec, &chi, Dd::from_f64(0.4), 0.2, 0.0, 2 * d + 2).unwrap();
        c.bench_function(&format!("chi_map d={d} dd"), |b| b.iter(|| m.map(black_box(Dd::from_f64(0.1)), Dd::zero()).unwrap()));
    }
}

fn expansion(c: &mut Criterion) {
    let (spec, chi) = short_diagonal_fixture(3);
    let ladder = EpsLadder::accurate(chi.max_abs_node());
    let mut g = c.benchmark_group("expansion");
    g.sample_size(20);
    g.bench_function("extract d=3 double kmax=4", |b| {
        b.iter(|| extract_alphas(&spec, &chi, black_box(0.4), &ladder, 4, Precision::Double).unwrap())
    });
    g.bench_function("extract d=3 extended kmax=6", |b| {
        b.iter(|| extract_alphas(&spec, &chi, black_box(0.4), &ladder, 6, Precision::Extended).unwrap())
    });
    g.finish();
}

fn psdo(c: &mut Criterion) {
    for d in [2, 4] {
        let (spec, _) = short_diagonal_fixture(d);
        let l = PseudoDiffOp::<f64>::from_curve(&spec, 0.4, 32).unwrap();
        c.bench_function(&format!("kdv_rhs m=2 d={d}"), |b| b.iter(|| kdv_rhs(black_box(&l), 2).unwrap()));
    }
}

fn realization(c: &mut Criterion) {
    let probes = probes();
    let (chi, _) = mari_beffa_family(-2.0, 3.0, -5.0);
    let mut g = c.benchmark_group("realization");
    g.sample_size(10);
    g.bench_function("check_34 integer instance", |b| b.iter(|| check_34(black_box(&chi), &probes, 0.4).unwrap()));
    g.finish();
}

criterion_group!(benches, chi_map, expansion, psdo, realization);
criterion_main!(benches);
