use std::f64::consts::FRAC_PI_2;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fringebench_core::dynamics::kernel_propagate;
use fringebench_core::locality::local_commutator_scan;
use fringebench_core::measurement::{conditional_fringe, sequential_probability, SequentialForm};
use fringebench_core::purification::{purified_double_slit, ScreenRegister};
use fringebench_core::sampling::{
    random_density, random_diagonal_projector, random_unitary, seeded,
};
use fringebench_core::{gaussian_packet, make_grid, FreeEvolution, PhysParams, Scenario};

fn spectral(c: &mut Criterion) {
    let params = PhysParams::default();
    let mut group = c.benchmark_group("spectral_propagate");
    for n in [1024usize, 4096, 16384] {
        let half = n as f64 / 8.0;
        let g = make_grid(n, -half, half).unwrap();
        let psi = gaussian_packet(g, 0.0, 0.5, 2.0, &params).unwrap();
        let evo = FreeEvolution::new(g, params);
        group.bench_with_input(BenchmarkId::from_parameter(n), &psi, |b, psi| {
            b.iter(|| evo.propagate(black_box(psi), 10.0).unwrap())
        });
    }
    group.finish();
}

fn kernel(c: &mut Criterion) {
    let params = PhysParams::default();
    let g = make_grid(1024, -25.6, 25.6).unwrap();
    let psi = gaussian_packet(g, -1.0, 1.0, 1.0, &params).unwrap();
    c.bench_function("kernel_propagate_1024", |b| {
        b.iter(|| kernel_propagate(black_box(&psi), 1.0, &params).unwrap())
    });
}

fn forms(c: &mut Criterion) {
    let g = make_grid(64, -8.0, 8.0).unwrap();
    let mut rng = seeded(1);
    let rho = random_density(g, &mut rng).unwrap();
    let u1 = random_unitary(g, &mut rng);
    let p1 = random_diagonal_projector(g, &mut rng);
    let u2 = random_unitary(g, &mut rng);
    let p2 = random_diagonal_projector(g, &mut rng);
    let mut group = c.benchmark_group("sequential_probability_64");
    for form in SequentialForm::ALL {
        group.bench_function(format!("{form:?}"), |b| {
            b.iter(|| sequential_probability(form, &rho, &u1, &p1, &u2, &p2).unwrap())
        });
    }
    group.finish();
}

fn fringes(c: &mut Criterion) {
    let sc = Scenario::reference();
    let reg = ScreenRegister::for_screen(sc.grid, &sc.screen, 4, FRAC_PI_2).unwrap();
    c.bench_function("reference_projective", |b| {
        b.iter(|| conditional_fringe(black_box(&sc)).unwrap())
    });
    c.bench_function("reference_purified", |b| {
        b.iter(|| purified_double_slit(black_box(&sc), &reg).unwrap())
    });
}

fn commutators(c: &mut Criterion) {
    let params = PhysParams::default();
    let g = make_grid(256, -32.0, 32.0).unwrap();
    let psi = gaussian_packet(g, 0.0, 0.3, 2.0, &params).unwrap();
    let mut group = c.benchmark_group("commutator_scan");
    group.sample_size(10);
    group.bench_function("2x2_cells_256", |b| {
        b.iter(|| local_commutator_scan(&[-2.0, 2.0], &[0.0, 1.0], 2.0, &psi, &params).unwrap())
    });
    group.finish();
}

criterion_group!(benches, spectral, kernel, forms, fringes, commutators);
criterion_main!(benches);
