use num_complex::Complex64 as C64;
use proptest::prelude::*;
use vrp_core::eigen::EigenSolver;
use vrp_core::rabi::*;

fn spectrum(eta: f64, n_fock: usize, solver: EigenSolver) -> DressedSpectrum {
    DressedSpectrum::compute(RabiParams::new(1.0, eta).unwrap(), n_fock, 3, solver).unwrap()
}

fn overlap(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<C64>().norm_sqr()
}

#[test]
fn ground_photons_and_transitions_at_eta_0_1() {
    let s = spectrum(0.1, 20, EigenSolver::Dense);
    let n = ground_state_photon_number(&s).unwrap();
    assert!((n - 0.0025).abs() <= 5e-4);
    let (minus, plus) = s.transition_energies().unwrap();
    assert!((minus - 0.9).abs() <= 2e-3);
    assert!((plus - 1.1).abs() <= 2e-3);
    // second-order energies: Ẽ₀ = −1/2 − η²/2, ω̃± = 1/2 ± η − η²/2
    assert!((s.energies[0] + 0.505).abs() <= 2e-3);
    assert!((s.energies[1] - 0.395).abs() <= 2e-3);
    assert!((s.energies[2] - 0.595).abs() <= 2e-3);
}

#[test]
fn energies_strictly_ascending_and_normalized() {
    for eta in [0.05, 0.1, 0.2, 0.3] {
        let s = spectrum(eta, default_n_fock(eta), EigenSolver::Dense);
        assert!(s.energies.windows(2).all(|w| w[0] < w[1]));
        for v in &s.states {
            let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum();
            assert!((norm - 1.0).abs() <= 1e-12);
            let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
            let pivot = v.iter().find(|z| z.norm() >= max * (1.0 - 1e-9)).unwrap();
            assert!(pivot.re > 0.0 && pivot.im == 0.0);
        }
    }
}

#[test]
fn photon_number_at_eta_0_2() {
    let s = spectrum(0.2, 30, EigenSolver::Dense);
    let n = ground_state_photon_number(&s).unwrap();
    // exact value at n_fock = 30 is 0.0105106
    assert!((n - 0.01).abs() <= 2e-3, "{n}");
    assert!((n - 0.010_510_6).abs() <= 1e-6, "{n}");
}

#[test]
fn truncation_convergence_at_eta_0_3() {
    let a = spectrum(0.3, 40, EigenSolver::Dense);
    let b = spectrum(0.3, 80, EigenSolver::Dense);
    for (x, y) in a.energies.iter().zip(&b.energies) {
        assert!((x - y).abs() < 1e-10);
    }
}

#[test]
fn spectral_quantities_stable_under_doubling() {
    for eta in [0.05, 0.1, 0.15] {
        let n = default_n_fock(eta);
        let a = extract_matrix_elements(&spectrum(eta, n, EigenSolver::Dense)).unwrap();
        let b = extract_matrix_elements(&spectrum(eta, 2 * n, EigenSolver::Dense)).unwrap();
        for ((name, x), (_, y)) in a.resolved().unwrap().fields().iter().zip(b.resolved().unwrap().fields()) {
            assert!((x - y).abs() < 1e-9, "{name} at eta {eta}: {x} vs {y}");
        }
    }
}

#[test]
fn sparse_solver_matches_dense() {
    let dense = spectrum(0.15, 300, EigenSolver::Dense);
    let sparse = spectrum(0.15, 300, EigenSolver::ShiftInvert);
    assert_eq!(sparse.solver, EigenSolver::ShiftInvert);
    for j in 0..3 {
        assert!((dense.energies[j] - sparse.energies[j]).abs() < 1e-9);
        let diff = dense.states[j]
            .iter()
            .zip(&sparse.states[j])
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-9);
    }
}

#[test]
fn exact_elements_follow_second_order_forms() {
    for eta in [0.05, 0.1, 0.15] {
        let exact = *extract_matrix_elements(&spectrum(eta, default_n_fock(eta), EigenSolver::Dense))
            .unwrap()
            .resolved()
            .unwrap();
        let closed = MatrixElements::printed(eta, ZetaAForm::SquaredAmplitude);
        let tol = 5.0 * eta.powi(3);
        for ((name, x), (_, y)) in exact.fields().iter().zip(closed.fields()) {
            assert!((x - y).abs() <= tol, "{name} at eta {eta}: {x} vs {y}");
        }
        assert!(exact.ground_to_branch <= 1e-10);
        for z in [exact.zeta_a_plus, exact.zeta_a_minus, exact.zeta_sigma_plus, exact.zeta_sigma_minus] {
            assert!((0.0..=1.0).contains(&z));
        }
    }
}

#[test]
fn zeta_a_expansion_form_is_off_at_first_order() {
    let eta = 0.1;
    let exact = *extract_matrix_elements(&spectrum(eta, 20, EigenSolver::Dense))
        .unwrap()
        .resolved()
        .unwrap();
    let expansion = MatrixElements::printed(eta, ZetaAForm::PrintedExpansion);
    assert!((expansion.zeta_a_plus - 0.487_656_25).abs() < 1e-12);
    assert!((exact.zeta_a_plus - expansion.zeta_a_plus).abs() > 10.0 * eta.powi(3));
    assert!((exact.zeta_a_plus - 0.431_96).abs() < 1e-5);
}

#[test]
fn perturbative_states_overlap_exact() {
    let eta = 0.1;
    let s = spectrum(eta, 20, EigenSolver::Dense);
    let t = perturbative_dressed_states(eta).unwrap();
    let g = PerturbativeStates::to_bare(&t.ground, 20);
    let norm: f64 = g.iter().map(|z| z.norm_sqr()).sum();
    assert!(overlap(&g, s.ground()) / norm >= 0.9995);
    // signs agree with the phase-fixed exact ground state
    assert!(g.iter().zip(s.ground()).all(|(a, b)| (a.re * b.re) >= -1e-12));
    for (table, exact) in [(&t.minus, &s.states[1]), (&t.plus, &s.states[2])] {
        let v = PerturbativeStates::to_bare(table, 20);
        let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        assert!(overlap(&v, exact) / norm >= 0.999);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn parity_selection_rule(eta in 0.01..0.3f64) {
        let s = spectrum(eta, default_n_fock(eta), EigenSolver::Dense);
        let m = extract_matrix_elements(&s).unwrap();
        prop_assert!(m.resolved().unwrap().ground_to_branch <= 1e-10);
    }

    #[test]
    fn hamiltonian_hermitian_and_parity_symmetric(eta in 0.0..0.49f64, n_fock in 4usize..40) {
        let h = build_rabi_hamiltonian(&RabiParams::new(1.0, eta).unwrap(), n_fock).unwrap();
        prop_assert!(h.is_hermitian(1e-12));
        let pi = parity_operator(n_fock).unwrap();
        prop_assert!(h.commutator(&pi).unwrap().matrix().max_abs() <= 1e-12);
    }
}
