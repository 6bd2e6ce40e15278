use fringebench_core::dynamics::free_unitary;
use fringebench_core::lattice::{make_grid, LinearOperator, StateVector};
use fringebench_core::measurement::{
    p_rank_one, p_seq_schrodinger, sequential_probability, slit_state, SequentialForm, SlitScreen,
};
use fringebench_core::sampling::{
    random_density, random_diagonal_projector, random_packet, random_unitary, seeded,
};
use fringebench_core::{gaussian_packet, PhysParams};

#[test]
fn three_forms_agree_on_random_instances() {
    let g = make_grid(64, -8.0, 8.0).unwrap();
    let mut rng = seeded(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let rho = random_density(g, &mut rng).unwrap();
        let u1 = random_unitary(g, &mut rng);
        let p1 = random_diagonal_projector(g, &mut rng);
        let u2 = random_unitary(g, &mut rng);
        let p2 = random_diagonal_projector(g, &mut rng);
        let v: Vec<_> = SequentialForm::ALL
            .iter()
            .map(|&f| sequential_probability(f, &rho, &u1, &p1, &u2, &p2).unwrap())
            .collect();
        for z in &v {
            assert!(z.im.abs() <= 1e-12, "imaginary residue {}", z.im);
            assert!(z.re >= -1e-12 && z.re <= 1.0 + 1e-10);
        }
        worst = worst
            .max((v[0].re - v[1].re).abs())
            .max((v[0].re - v[2].re).abs())
            .max((v[1].re - v[2].re).abs());
    }
    assert!(worst <= 1e-12, "max pairwise difference {worst:e}");
}

#[test]
fn forms_agree_with_free_evolution_and_random_packets() {
    let g = make_grid(64, -16.0, 16.0).unwrap();
    let params = PhysParams::default();
    let mut rng = seeded(9);
    for _ in 0..10 {
        let rho = random_packet(g, &params, &mut rng).unwrap().to_density();
        let u1 = free_unitary(g, &params, 0.8);
        let u2 = free_unitary(g, &params, 2.1);
        let p1 = random_diagonal_projector(g, &mut rng);
        let p2 = random_diagonal_projector(g, &mut rng);
        let v: Vec<f64> = SequentialForm::ALL
            .iter()
            .map(|&f| {
                sequential_probability(f, &rho, &u1, &p1, &u2, &p2)
                    .unwrap()
                    .re
            })
            .collect();
        assert!((v[0] - v[1]).abs() <= 1e-12 && (v[0] - v[2]).abs() <= 1e-12);
    }
}

#[test]
fn rank_one_reduction_matches_trace_form() {
    let g = make_grid(256, -32.0, 32.0).unwrap();
    let params = PhysParams::default();
    let (t1, t2) = (2.0, 5.0);
    let screen = SlitScreen::new(4.0, 0.0, t1).unwrap();
    let psi0 = gaussian_packet(g, 0.5, 0.3, 1.5, &params).unwrap();
    let slits = slit_state(g, &screen).unwrap();

    let u1 = free_unitary(g, &params, t1);
    let u2 = free_unitary(g, &params, t2 - t1);
    let p1 = LinearOperator::rank_one(&slits);
    let ut2 = free_unitary(g, &params, t2).adjoint();
    let psi1 = u1.adjoint().apply(&slits).unwrap();
    let p_slits = psi0.inner(&psi1).unwrap().norm_sqr();

    for s in [-6.0, -1.0, 0.0, 2.5, 7.0] {
        let site = StateVector::point(g, g.nearest_index(s).unwrap());
        let p2 = LinearOperator::rank_one(&site);
        let trace = p_seq_schrodinger(&psi0.to_density(), &u1, &p1, &u2, &p2).unwrap();
        let psi2 = ut2.apply(&site).unwrap();
        let rank = p_rank_one(&psi0, &psi1, &psi2).unwrap();
        assert!((trace - rank).abs() <= 1e-9, "s = {s}: {trace} vs {rank}");
        // conditional: |⟨ψ1|ψ2⟩|² = p(1,2)/p(1)
        let cond = psi1.inner(&psi2).unwrap().norm_sqr();
        assert!((trace / p_slits - cond).abs() <= 1e-9 * cond.max(1.0));
    }
}
