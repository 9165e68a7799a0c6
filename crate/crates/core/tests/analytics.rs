use std::f64::consts::SQRT_2;

use num_complex::Complex64 as C64;
use proptest::prelude::*;
use vrp_core::analytics::*;
use vrp_core::effective::{build_effective_hamiltonian, Occupations, OptomechParams};
use vrp_core::hilbert::{annihilation, embed, expectation, number, ModeSignature};
use vrp_core::lindblad::{build_liouvillian_sectored, polariton_labels, steady_state, Dissipator, SteadyStateOptions};
use vrp_core::oracle::{solve, OracleOptions, OracleTruncation};
use vrp_core::validation::oracle_model;

fn point(eta: f64, eta_bar_m: f64, n_bar: f64, q: f64, n_m: f64) -> SystemParams {
    let mut sp = SystemParams::ideal(eta, eta_bar_m).with_occupation(n_bar);
    sp.delta = q * sp.gamma_m;
    sp.n_m = n_m;
    sp
}

#[test]
fn redefinition_examples() {
    let v = modulation_redefine(&SystemParams::ideal(0.1, 600.0));
    assert_eq!((v.g0, v.eta_bar, v.q), (300.0, 300.0, 0.0));
    let mut sp = SystemParams::ideal(0.1, 600.0);
    sp.modulated = false;
    let v = modulation_redefine(&sp);
    assert_eq!((v.g0, v.omega), (600.0, sp.omega_m));
    // drive detuned by a full ω_m recovers the static suppression
    let mut sp = SystemParams::ideal(0.1, 600.0);
    sp.delta = sp.omega_m;
    let (a, b) = (modulation_redefine(&sp), modulation_redefine(&SystemParams { modulated: false, ..sp }));
    assert_eq!(a.q, b.q);
}

#[test]
fn means_solve_the_linear_mechanics() {
    // ⟨b⟩ of δ b†b + g α (b + b†) with damping Γ: ⟨b⟩ = −g α/(δ − iΓ/2)
    for (q, nb) in [(0.0, 0.0), (1.0, 0.1), (0.3, 0.5)] {
        let sp = point(0.1, 2.0, nb, q, 0.2);
        let r = resolve(&sp).unwrap();
        let b = -r.view.g0 * r.alpha() / C64::new(r.view.omega, -r.view.gamma_m / 2.0);
        let m = r.means();
        assert!((m.x_avg - SQRT_2 * b.re).abs() < 1e-14);
        assert!((m.xt_avg - SQRT_2 * b.im).abs() < 1e-14);
    }
}

#[test]
fn headline_point() {
    let sp = SystemParams::ideal(0.1, 600.0);
    let m = quadrature_means(&sp).unwrap();
    assert!((m.xt_avg.abs() - 2.0 * SQRT_2 * 300.0 * 0.0025).abs() < 1e-12);
    assert_eq!(m.x_avg, 0.0);
    let v = visibility(&sp).unwrap();
    assert!((v.f_gs - 3.0).abs() < 1e-10);
    assert!((v.bounds.eta_m_sql.unwrap() - 200.0).abs() < 1e-10);
    assert!((v.bounds.n_gs - 0.0025).abs() < 1e-15);
    assert!((v.bounds.n_sql - 2.5e-5).abs() < 1e-15);
    assert_eq!(v.bounds.n_max, v.bounds.n_sql);
}

#[test]
fn threshold_coupling_gives_unit_visibility() {
    for eta in [0.05, 0.1, 0.2] {
        let v = visibility(&SystemParams::ideal(eta, 2.0 / (eta * eta))).unwrap();
        assert!((v.f_gs - 1.0).abs() < 1e-10, "eta {eta}: {}", v.f_gs);
    }
}

#[test]
fn no_matter_no_ground_state_signal() {
    for n in [0.0, 1e-3, 0.1, 10.0] {
        let v = visibility(&point(0.0, 400.0, n, 0.0, 0.0)).unwrap();
        assert_eq!(v.f_gs, 0.0);
        if n == 0.0 {
            assert_eq!(v.f, 0.0);
        }
    }
    let small = visibility(&point(0.0, 400.0, 1e-8, 0.0, 0.0)).unwrap().f;
    assert!(small < 1e-4);
}

#[test]
fn vacuum_limits() {
    let r = resolve(&point(0.1, 3.0, 0.0, 1.0, 0.0)).unwrap();
    let c = r.correlations();
    assert_eq!((c.p_plus, c.p_minus, c.s_plus, c.s_minus), (0.0, 0.0, 0.0, 0.0));
    assert_eq!(c.beta_plus, 2.0);
    assert_eq!(c.beta_minus, 2.0);
    assert!((r.moments().var_xt - 0.5).abs() < 1e-15);
    let r = resolve(&point(0.0, 3.0, 0.0, 0.0, 0.0)).unwrap();
    let m = r.means();
    assert_eq!((m.x_avg, m.xt_avg), (0.0, 0.0));
}

#[test]
fn resonant_correlations() {
    let r = resolve(&point(0.1, 3.0, 0.2, 0.0, 0.0)).unwrap();
    let c = r.correlations();
    let e = r.effective;
    assert_eq!(c.p_plus, 0.0);
    let s = 2.0 * SQRT_2 * r.view.eta_bar * e.alpha_plus * 0.2 * 1.2 / 2.0;
    assert!((c.s_plus - s).abs() < 1e-15);
}

#[test]
fn static_response() {
    let mut sp = SystemParams::ideal(0.1, 10.0);
    sp.omega_m = 1000.0;
    sp.g0 = 10.0;
    let r = static_and_susceptibility(1.0, &sp);
    assert!((r.x_static - 0.02).abs() < 1e-15);
    assert!((r.x_gs_static - 0.005 * 0.01).abs() < 1e-15);
    assert!((r.amplification / 1000.0 - 1.0).abs() < 1e-3);
    let chi0 = susceptibility(1000.0, 1.0, 0.0);
    assert!((chi0 - C64::new(1e-3, 0.0)).norm() < 1e-18);
}

#[test]
fn high_occupation_asymptotes() {
    let a = asymptotics(&SystemParams::ideal(0.1, 600.0), Eta0BetaConvention::Standard).unwrap();
    assert!((a.f_infinity - 2.0).abs() < 1e-14);
    assert!((a.pressure_ratio - 1.005).abs() < 1e-15);
    let f = visibility(&point(0.1, 600.0, 1e4, 0.0, 0.0)).unwrap().f;
    assert!((f / a.f_infinity - 1.0).abs() < 1e-2, "{f}");
    assert!(asymptotics(&point(0.1, 600.0, 0.0, 1.0, 0.0), Eta0BetaConvention::Standard).is_err());
}

#[test]
fn thermal_threshold_vanishes_when_noise_dominates() {
    // R grows with n̄ until ξ² ≤ R and no coupling reaches the SQL
    let b = bounds(&point(0.1, 600.0, 0.01, 0.0, 0.0)).unwrap();
    assert!(b.eta_m_sql.is_none());
    let b = bounds(&point(0.1, 600.0, 1e-6, 0.0, 0.0)).unwrap();
    assert!(b.eta_m_sql.unwrap() > 200.0);
}

fn params() -> impl Strategy<Value = SystemParams> {
    (0.0..0.3f64, 0.1..50.0f64, 0.0..2.0f64, 0.0..3.0f64, 0.0..1.0f64, 0.05..3.0f64, 0.05..3.0f64).prop_map(
        |(eta, eb, n, q, nm, kp, km)| {
            let mut sp = point(eta, eb, n, q, nm);
            sp.rates = Rates::Polariton {
                kappa_plus: kp,
                kappa_minus: km,
            };
            sp
        },
    )
}

proptest! {
    #[test]
    fn variance_bounded_and_tight_at_resonance(sp in params()) {
        let m = variances(&sp).unwrap();
        prop_assert!(m.var_x >= 0.0 && m.var_xt >= 0.0);
        prop_assert!(m.var_xt <= m.var_xt_bound + 1e-12);
        let at_resonance = variances(&SystemParams { delta: 0.0, ..sp }).unwrap();
        prop_assert!((at_resonance.var_xt_bound - at_resonance.var_xt).abs() <= 1e-12 * at_resonance.var_xt.max(1.0));
    }

    #[test]
    fn displacement_split_is_exact(sp in params()) {
        let v = visibility(&sp).unwrap();
        let m = quadrature_means(&sp).unwrap();
        prop_assert!((v.xt_gs + v.xt_thermal - m.xt_avg).abs() <= 1e-14 * m.xt_avg.abs().max(1e-300));
        prop_assert!((v.f - (v.f_gs + v.f_thermal)).abs() <= 1e-12 * v.f.max(1.0));
    }

    #[test]
    fn ground_state_visibility_falls_with_noise(sp in params(), dn in 1e-3..1.0f64) {
        prop_assume!(sp.eta > 1e-3);
        let base = visibility(&sp).unwrap().f_gs;
        let Occupations::Direct { n_plus, .. } = sp.occupations else { unreachable!() };
        let hotter = visibility(&sp.with_occupation(n_plus + dn)).unwrap().f_gs;
        let warmer = visibility(&SystemParams { n_m: sp.n_m + dn, ..sp }).unwrap().f_gs;
        prop_assert!(hotter < base && warmer < base);
    }

    #[test]
    fn threshold_closure(sp in params(), eta in 0.05..0.3f64, log_n in -12.0..-5.0f64) {
        // the threshold only exists while ξ² exceeds the thermal noise R
        let sp = SystemParams { eta, ..sp }.with_occupation(10f64.powf(log_n));
        let b = bounds(&sp).unwrap();
        prop_assume!(b.eta_m_sql.is_some());
        let at = SystemParams { g0: b.eta_m_sql.unwrap() * sp.gamma_m, ..sp };
        let v = visibility(&at).unwrap();
        prop_assert!((v.f_gs_bound - 1.0).abs() < 1e-10);
        prop_assert_eq!(b.n_max, b.n_gs.min(b.n_sql));
    }

    #[test]
    fn means_scale_linearly_with_coupling(sp in params(), k in 0.1..10.0f64) {
        let (a, b) = (quadrature_means(&sp).unwrap(), quadrature_means(&SystemParams { g0: k * sp.g0, ..sp }).unwrap());
        prop_assert!((b.xt_avg - k * a.xt_avg).abs() <= 1e-12 * b.xt_avg.abs().max(1e-300));
    }
}

#[test]
fn oracle_agrees_with_generic_steady_state() {
    let sp = point(0.1, 1.0, 0.1, 1.0, 0.2);
    let r = resolve(&sp).unwrap();
    let (p, n_oracle, n_generic) = (4, 14, 18);
    let trunc = OracleTruncation {
        p_plus: p,
        p_minus: p,
        n_mech: n_oracle,
    };
    let o = solve(&oracle_model(&r), &trunc, &OracleOptions::default()).unwrap().moments;

    let sig = ModeSignature::new(vec![p, p, n_generic]).unwrap();
    let op = OptomechParams::new(sp.g0, sp.omega_m, sp.gamma_m, sp.delta, sp.modulated).unwrap();
    let h = build_effective_hamiltonian(&r.effective, &op, &sig).unwrap();
    let mode = |slot: usize, dim: usize| embed(&annihilation(dim).unwrap(), slot, &sig).unwrap();
    let d = vec![
        Dissipator::thermal(mode(0, p), r.kappa_plus, r.n_plus).unwrap(),
        Dissipator::thermal(mode(1, p), r.kappa_minus, r.n_minus).unwrap(),
        Dissipator::thermal(mode(2, n_generic), sp.gamma_m, sp.n_m).unwrap(),
    ];
    let l = build_liouvillian_sectored(&h, &d, &polariton_labels(&sig)).unwrap();
    let ss = steady_state(&l, &SteadyStateOptions::default()).unwrap();
    let b = mode(2, n_generic);
    let mean = expectation(&ss.rho, &b).unwrap();
    let b2 = expectation(&ss.rho, &b.mul(&b).unwrap()).unwrap();
    let nb = expectation(&ss.rho, &b.dagger().mul(&b).unwrap()).unwrap().re;
    let np = embed(&number(p).unwrap(), 0, &sig).unwrap();
    let np_b = expectation(&ss.rho, &np.mul(&b).unwrap()).unwrap();

    let close = |a: f64, b: f64| (a - b).abs() < 1e-8;
    assert!(close(o.x, SQRT_2 * mean.re), "{} {}", o.x, SQRT_2 * mean.re);
    assert!(close(o.xt, SQRT_2 * mean.im));
    assert!(close(o.phonons, nb));
    assert!(close(o.var_xt, nb + 0.5 - b2.re - 2.0 * mean.im * mean.im));
    assert!(close(o.n_plus_x, SQRT_2 * np_b.re));
    assert!(close(o.n_plus_xt, SQRT_2 * np_b.im));
}
