use cavity_gates::circuit::text::parse_circuit;
use cavity_gates::circuit::{build_cnot, build_resonant, build_toffoli, GateKind};
use cavity_gates::metrics::{xi_terms, InputAngles};
use cavity_gates::ReflectionPair;
use num_complex::Complex64;

const CNOT_FILE: &str = include_str!("../../../circuits/cnot.circ");
const TOFFOLI_FILE: &str = include_str!("../../../circuits/toffoli.circ");

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn basis(dim: usize, index: usize) -> Vec<Complex64> {
    let mut v = vec![c(0.0); dim];
    v[index] = c(1.0);
    v
}

fn assert_close(got: &[Complex64], want: &[Complex64], tol: f64) {
    assert_eq!(got.len(), want.len());
    for (i, (g, w)) in got.iter().zip(want).enumerate() {
        assert!((g - w).norm() <= tol, "component {i}: got {g}, want {w}");
    }
}

#[test]
fn ideal_cnot_flips_target_for_left_photon() {
    let cnot = build_cnot(c(1.0), c(-1.0));
    // |L,0> -> |L,1>
    let out = cnot.run(&cnot.spec.vector_input(&basis(4, 2)).unwrap()).unwrap();
    assert_close(&out.out_state.gate_vector(cnot.spec.output_port()), &basis(4, 3), 1e-12);
    assert!(out.discard_state.is_empty());
    assert!(out.absorbed.abs() < 1e-12);
}

#[test]
fn ideal_cnot_on_product_input() {
    let (ap, bp, a, b) = (0.6, 0.8, 0.28, 0.96);
    let cnot = build_cnot(c(1.0), c(-1.0));
    let out = cnot
        .run(&cnot.spec.product_input([c(ap), c(bp)], &[[c(a), c(b)]]).unwrap())
        .unwrap();
    let want = [c(ap * a), c(ap * b), c(bp * b), c(bp * a)];
    assert_close(&out.out_state.gate_vector(cnot.spec.output_port()), &want, 1e-12);
}

#[test]
fn ideal_toffoli_flips_only_when_both_controls_set() {
    let toffoli = build_toffoli(c(1.0), c(-1.0), c(1.0), c(-1.0));
    for index in 0..8 {
        let expected = if index >= 6 { index ^ 1 } else { index };
        let out = toffoli
            .run(&toffoli.spec.vector_input(&basis(8, index)).unwrap())
            .unwrap();
        assert_close(
            &out.out_state.gate_vector(toffoli.spec.output_port()),
            &basis(8, expected),
            1e-12,
        );
    }
}

#[test]
fn lossy_toffoli_discard_matches_xi6() {
    let r = c(0.8);
    let toffoli = build_resonant(GateKind::Toffoli, r);
    // |L,0,0> corresponds to φ = π/2, θ = 0, η = 0.
    let angles = InputAngles::toffoli(std::f64::consts::FRAC_PI_2, 0.0, 0.0);
    let out = toffoli.run(&toffoli.spec.vector_input(&basis(8, 4)).unwrap()).unwrap();
    let xi = xi_terms(r, &angles);
    assert!(xi.xi6 > 1e-3);
    assert!((out.discard_state.total_norm() - xi.xi6).abs() < 1e-12);
    assert!((out.out_state.total_norm() - xi.out_port()).abs() < 1e-12);
    assert!((out.absorbed - (1.0 - xi.total())).abs() < 1e-12);
}

#[test]
fn lossy_cnot_left_zero() {
    let cnot = build_resonant(GateKind::Cnot, c(0.8));
    let out = cnot.run(&cnot.spec.vector_input(&basis(4, 2)).unwrap()).unwrap();
    let want = [c(0.0), c(0.0), c(-0.1), c(0.9)];
    assert_close(&out.out_state.gate_vector(cnot.spec.output_port()), &want, 1e-12);
    assert!((out.absorbed - 0.18).abs() < 1e-12);
}

#[test]
fn circuit_files_match_builders() {
    let nodes = [
        ReflectionPair::new(Complex64::new(0.3, -0.4), Complex64::new(-0.9, 0.1)),
        ReflectionPair::new(Complex64::new(0.7, 0.2), c(-1.0)),
    ];
    let cases = [
        (CNOT_FILE, build_cnot(nodes[0].r_coupled, nodes[0].r_empty), 4),
        (
            TOFFOLI_FILE,
            build_toffoli(
                nodes[0].r_coupled,
                nodes[0].r_empty,
                nodes[1].r_coupled,
                nodes[1].r_empty,
            ),
            8,
        ),
    ];
    for (text, built, dim) in cases {
        let parsed = parse_circuit(text).unwrap().bind(built.nodes.clone());
        assert_eq!(
            parsed.spec.checkpoints().iter().map(|c| &c.label).collect::<Vec<_>>(),
            built.spec.checkpoints().iter().map(|c| &c.label).collect::<Vec<_>>()
        );
        for index in 0..dim {
            let a = built
                .run(&built.spec.vector_input(&basis(dim, index)).unwrap())
                .unwrap();
            let b = parsed
                .run(&parsed.spec.vector_input(&basis(dim, index)).unwrap())
                .unwrap();
            assert_close(
                &b.out_state.gate_vector(parsed.spec.output_port()),
                &a.out_state.gate_vector(built.spec.output_port()),
                1e-14,
            );
            assert_close(
                &b.discard_state.gate_vector(parsed.spec.discard_port().unwrap()),
                &a.discard_state.gate_vector(built.spec.discard_port().unwrap()),
                1e-14,
            );
        }
    }
}

#[test]
fn induced_matrix_of_lossy_gate_is_contractive() {
    let toffoli = build_resonant(GateKind::Toffoli, c(0.5));
    let m = toffoli.induced_matrix().unwrap();
    let sv = m.singular_values();
    assert!(sv.iter().all(|s| *s <= 1.0 + 1e-12));
}
