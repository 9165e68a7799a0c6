use num_complex::Complex64 as C64;
use proptest::prelude::*;
use vrp_core::effective::*;
use vrp_core::eigen::{lowest_eigenpairs, EigenSolver};
use vrp_core::error::Error;
use vrp_core::hilbert::*;
use vrp_core::rabi::*;

#[test]
fn bogoliubov_table_matches_numeric_normal_modes() {
    for eta in [0.0, 0.05, 0.1, 0.3, 0.45] {
        let t = bogoliubov_coefficients(eta, 1.0).unwrap();
        let n = normal_modes_numeric(eta, 1.0).unwrap();
        assert!((n.frequencies[0] - t.omega_plus).abs() < 1e-10, "eta {eta}");
        assert!((n.frequencies[1] - t.omega_minus).abs() < 1e-10, "eta {eta}");
        assert!(n.offdiag_residual < 1e-10, "eta {eta}: {}", n.offdiag_residual);
        if eta > 0.0 {
            // at eta = 0 the normal modes are degenerate and any rotation is valid
            let m = t.matrix();
            for j in 0..2 {
                for k in 0..2 {
                    assert!((m[j][k] - n.transform[j][k]).abs() < 1e-10, "eta {eta} ({j},{k})");
                }
            }
        }
    }
}

#[test]
fn bogoliubov_value_at_eta_0_1() {
    let t = bogoliubov_coefficients(0.1, 1.0).unwrap();
    let plus = (1.0 / (2.0 * 1.2f64.sqrt())).sqrt();
    let minus = (1.0 / (2.0 * 0.8f64.sqrt())).sqrt();
    assert!((t.coeff_plus - plus).abs() < 1e-12, "{}", t.coeff_plus);
    assert!((t.coeff_minus - minus).abs() < 1e-12, "{}", t.coeff_minus);
    assert!((t.coeff_plus - 0.675_600).abs() < 1e-6);
    assert!((t.coeff_minus.powi(2) - 0.559_017).abs() < 1e-6);
}

#[test]
fn bogoliubov_energies_match_two_mode_diagonalization() {
    for eta in [0.05, 0.1, 0.2] {
        let h = build_bosonic_two_mode(&RabiParams::new(1.0, eta).unwrap(), 28).unwrap();
        let e = lowest_eigenpairs(&h, 4, EigenSolver::Auto).unwrap().values;
        let t = bogoliubov_coefficients(eta, 1.0).unwrap();
        let e0 = t.ground_energy();
        let mut expected = [e0, e0 + t.omega_minus, e0 + t.omega_plus, e0 + 2.0 * t.omega_minus];
        expected.sort_by(f64::total_cmp);
        for (x, y) in e.iter().zip(expected) {
            assert!((x - y).abs() < 1e-10, "eta {eta}: {x} vs {y}");
        }
    }
}

fn sector_block(h: &LinearOperator, sig: &ModeSignature, np: usize, nm: usize) -> faer::Mat<C64> {
    let n = sig.dims()[2];
    faer::Mat::from_fn(n, n, |i, j| h.get(sig.index_of(&[np, nm, i]), sig.index_of(&[np, nm, j])))
}

fn ground_amplitude(block: &faer::Mat<C64>) -> (f64, C64) {
    let n = block.nrows();
    let evd = block.self_adjoint_eigen(faer::Side::Lower).unwrap();
    let v = evd.U().col(0);
    let b: C64 = (1..n).map(|i| v[i - 1].conj() * v[i] * (i as f64).sqrt()).sum();
    (evd.S().column_vector()[0].re, b)
}

#[test]
fn polariton_block_is_displaced_oscillator() {
    let ep = effective_params(0.1, 1.0, MatterKind::Spin).unwrap();
    let (g0, delta) = (0.3, 0.7);
    let op = OptomechParams::new(g0, 1e3, 1.0, delta, true).unwrap();
    let sig = ModeSignature::new(vec![3, 3, 40]).unwrap();
    let h = build_effective_hamiltonian(&ep, &op, &sig).unwrap();
    let (e00, b00) = ground_amplitude(&sector_block(&h, &sig, 0, 0));
    let (e10, b10) = ground_amplitude(&sector_block(&h, &sig, 1, 0));
    // relative shift of the (1,0) block with respect to the vacuum block
    let shift = -g0 * ep.alpha_plus / (2.0 * delta);
    assert!((b10 - b00 - shift).norm() < 1e-10, "{}", b10 - b00);
    // absolute: force (g0/2)(α₊ + ξ) against δ
    let f = g0 / 2.0 * (ep.alpha_plus + ep.xi);
    assert!((b10.re + f / delta).abs() < 1e-10);
    assert!((e10 - (ep.omega_plus - f * f / delta)).abs() < 1e-10);
    let f0 = g0 / 2.0 * ep.xi;
    assert!((e00 + f0 * f0 / delta).abs() < 1e-10);
    // spacing of the displaced ladder is δ
    let evd = sector_block(&h, &sig, 1, 0).self_adjoint_eigen(faer::Side::Lower).unwrap();
    let s = evd.S().column_vector();
    assert!((s[1].re - s[0].re - delta).abs() < 1e-10);
}

#[test]
fn vacuum_sector_is_xi_driven_oscillator() {
    let ep = effective_params(0.1, 1.0, MatterKind::Spin).unwrap();
    let op = OptomechParams::new(0.4, 1e3, 1.0, 0.9, true).unwrap();
    let sig = ModeSignature::new(vec![2, 2, 12]).unwrap();
    let h = build_effective_hamiltonian(&ep, &op, &sig).unwrap();
    let block = sector_block(&h, &sig, 0, 0);
    let b = annihilation(12).unwrap();
    let drive = b.add(&b.dagger()).unwrap().scale(0.4 / 2.0 * ep.xi);
    let expected = number(12).unwrap().scale(0.9).add(&drive).unwrap();
    for i in 0..12 {
        for j in 0..12 {
            assert!((block[(i, j)] - expected.get(i, j)).norm() < 1e-15);
        }
    }
}

#[test]
fn unmodulated_uses_full_coupling_and_mechanical_frequency() {
    let ep = effective_params(0.1, 1.0, MatterKind::Spin).unwrap();
    let op = OptomechParams::new(0.4, 2.5, 1.0, 0.9, false).unwrap();
    let sig = ModeSignature::new(vec![2, 2, 10]).unwrap();
    let h = build_effective_hamiltonian(&ep, &op, &sig).unwrap();
    let block = sector_block(&h, &sig, 0, 1);
    assert!((block[(1, 1)].re - (ep.omega_minus + 2.5)).abs() < 1e-14);
    assert!((block[(1, 0)].re - 0.4 * (ep.alpha_minus + ep.xi)).abs() < 1e-14);
}

#[test]
fn three_slot_signature_required() {
    let ep = effective_params(0.1, 1.0, MatterKind::Spin).unwrap();
    let op = OptomechParams::new(0.4, 1e3, 1.0, 0.0, true).unwrap();
    let sig = ModeSignature::new(vec![3, 8]).unwrap();
    assert!(build_effective_hamiltonian(&ep, &op, &sig).is_err());
}

#[test]
fn bath_equal_temperatures_give_bose_occupations() {
    let ep = effective_params(0.1, 1.0, MatterKind::Spin).unwrap();
    let bp = BathParams {
        kappa1: 0.3,
        kappa2: 0.1,
        occupations: Occupations::Temperatures { t1: 0.7, t2: 0.7 },
        n_m: 0.0,
    };
    let b = effective_bath(&bp, &ep, &ZetaSource::Formula { zeta_a: ZetaAForm::SquaredAmplitude }).unwrap();
    assert_eq!(b.n_plus, bose(ep.omega_plus, 0.7));
    assert_eq!(b.n_minus, bose(ep.omega_minus, 0.7));
    assert!((b.t_plus.unwrap() - 0.7).abs() < 1e-12);
}

#[test]
fn bath_single_channel_limit() {
    for kind in [MatterKind::Spin, MatterKind::Bosonic] {
        let ep = effective_params(0.1, 1.0, kind).unwrap();
        let bp = BathParams {
            kappa1: 0.3,
            kappa2: 0.0,
            occupations: Occupations::Temperatures { t1: 0.5, t2: 3.0 },
            n_m: 0.0,
        };
        let b = effective_bath(&bp, &ep, &ZetaSource::Formula { zeta_a: ZetaAForm::SquaredAmplitude }).unwrap();
        assert!((b.n_plus - bose(ep.omega_plus, 0.5)).abs() < 1e-15);
        assert!((b.n_minus - bose(ep.omega_minus, 0.5)).abs() < 1e-15);
    }
}

#[test]
fn bath_weighted_average_differs_from_summed_temperature_form() {
    let ep = effective_params(0.1, 1.0, MatterKind::Spin).unwrap();
    let bp = BathParams {
        kappa1: 1.0,
        kappa2: 0.2,
        occupations: Occupations::Temperatures { t1: 0.4, t2: 1.5 },
        n_m: 0.0,
    };
    let b = effective_bath(&bp, &ep, &ZetaSource::Formula { zeta_a: ZetaAForm::SquaredAmplitude }).unwrap();
    let (wa, ws) = b.weights_plus;
    let n = (wa * 1.0 * bose(ep.omega_plus, 0.4) + ws * 0.2 * bose(ep.omega_plus, 1.5)) / (wa + ws * 0.2);
    assert!((b.n_plus - n).abs() < 1e-14);
    assert!((bose(ep.omega_plus, b.t_plus.unwrap()) - b.n_plus).abs() < 1e-12);
    assert!((b.t_plus.unwrap() - b.t_plus_summed_form.unwrap()).abs() > 1e-3);
}

#[test]
fn bath_rates_use_exact_weights() {
    let spec = DressedSpectrum::compute(RabiParams::new(1.0, 0.1).unwrap(), 20, 3, EigenSolver::Dense).unwrap();
    let m = *extract_matrix_elements(&spec).unwrap().resolved().unwrap();
    let ep = effective_params_exact(&spec).unwrap();
    let kappa = 0.37;
    let bp = BathParams {
        kappa1: kappa,
        kappa2: kappa,
        occupations: Occupations::Direct { n_plus: 0.0, n_minus: 0.0 },
        n_m: 0.0,
    };
    let b = effective_bath(&bp, &ep, &ZetaSource::Exact { elements: m }).unwrap();
    assert!((b.kappa_plus - (m.zeta_a_plus + m.zeta_sigma_plus) * kappa).abs() < 1e-15);
    assert!((b.kappa_minus - (m.zeta_a_minus + m.zeta_sigma_minus) * kappa).abs() < 1e-15);
}

#[test]
fn bosonic_rates_carry_frequency_prefactor() {
    let ep = effective_params(0.2, 1.0, MatterKind::Bosonic).unwrap();
    let bp = BathParams {
        kappa1: 0.4,
        kappa2: 0.2,
        occupations: Occupations::Direct { n_plus: 0.1, n_minus: 0.2 },
        n_m: 0.0,
    };
    let b = effective_bath(&bp, &ep, &ZetaSource::Formula { zeta_a: ZetaAForm::SquaredAmplitude }).unwrap();
    assert!((b.kappa_plus - 0.6 / (2.0 * ep.omega_plus)).abs() < 1e-15);
    assert!((b.kappa_minus - 0.6 / (2.0 * ep.omega_minus)).abs() < 1e-15);
    assert_eq!((b.n_plus, b.n_minus), (0.1, 0.2));
}

#[test]
fn bath_input_errors() {
    let ep = effective_params(0.1, 1.0, MatterKind::Spin).unwrap();
    let z = ZetaSource::Formula { zeta_a: ZetaAForm::SquaredAmplitude };
    let mut bp = BathParams {
        kappa1: -0.1,
        kappa2: 0.1,
        occupations: Occupations::Direct { n_plus: 0.0, n_minus: 0.0 },
        n_m: 0.0,
    };
    assert!(matches!(effective_bath(&bp, &ep, &z), Err(Error::NegativeRate { .. })));
    bp.kappa1 = 0.0;
    bp.kappa2 = 0.0;
    bp.occupations = Occupations::Temperatures { t1: 1.0, t2: 1.0 };
    assert!(matches!(effective_bath(&bp, &ep, &z), Err(Error::ZeroCoupling)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bosonic_coefficients_are_second_order(eta in 0.0..0.2f64) {
        let ep = effective_params(eta, 1.0, MatterKind::Bosonic).unwrap();
        let tol = 5.0 * eta.powi(3) + 1e-15;
        prop_assert!((ep.alpha_plus - (0.5 + eta * eta / 4.0)).abs() <= tol);
        prop_assert!((ep.alpha_minus - (0.5 + eta * eta / 4.0)).abs() <= tol);
        prop_assert!((ep.xi - eta * eta / 4.0).abs() <= tol);
        let spin = effective_params(eta, 1.0, MatterKind::Spin).unwrap();
        prop_assert!((spin.xi - ep.xi).abs() <= tol);
    }

    #[test]
    fn hamiltonian_conserves_polariton_numbers(
        eta in 0.0..0.3f64,
        g0 in 0.0..2.0f64,
        delta in -2.0..2.0f64,
        modulated in any::<bool>(),
    ) {
        let ep = effective_params(eta, 1.0, MatterKind::Spin).unwrap();
        let op = OptomechParams::new(g0, 1.5, 1.0, delta, modulated).unwrap();
        let sig = ModeSignature::new(vec![3, 3, 6]).unwrap();
        let h = build_effective_hamiltonian(&ep, &op, &sig).unwrap();
        prop_assert!(h.is_hermitian(1e-12));
        let (np, nm) = polariton_numbers(&sig).unwrap();
        prop_assert!(h.commutator(&np).unwrap().matrix().max_abs() <= 1e-12);
        prop_assert!(h.commutator(&nm).unwrap().matrix().max_abs() <= 1e-12);
    }
}
