//! Quantum Rabi model: Hamiltonian, phase-fixed low-energy spectrum and the
//! dressed-state matrix elements that parameterize the effective model.
//!
//! The composite space is `[n_fock, 2]`: cavity in slot 0, two-level
//! system in slot 1 ordered `(g, e)`. Frequencies are in arbitrary units
//! with ħ = 1.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::eigen::{lowest_eigenpairs, EigenSolver, PhaseConvention};
use crate::error::{Error, Result};
use crate::hilbert::{annihilation, embed, number, pauli_ops, LinearOperator, ModeSignature};
use crate::sparse::SparseMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RabiParams {
    pub omega: f64,
    pub eta: f64,
}

impl RabiParams {
    pub fn new(omega: f64, eta: f64) -> Result<Self> {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::ParameterOutOfRange {
                name: "omega",
                value: omega,
                reason: "must be positive and finite",
            });
        }
        if !(0.0..0.5).contains(&eta) {
            return Err(Error::ParameterOutOfRange {
                name: "eta",
                value: eta,
                reason: "model window is 0 <= eta < 0.5",
            });
        }
        Ok(Self { omega, eta })
    }
}

/// `max(20, ceil(1000 η²))`.
pub fn default_n_fock(eta: f64) -> usize {
    20usize.max((1000.0 * eta * eta).ceil() as usize)
}

pub const MIN_N_FOCK: usize = 4;

/// `H = ω a†a + (ω/2) σ_z + ηω (σ₊ + σ₋)(a + a†)` on `[n_fock, 2]`.
pub fn build_rabi_hamiltonian(params: &RabiParams, n_fock: usize) -> Result<LinearOperator> {
    if n_fock < MIN_N_FOCK {
        return Err(Error::TruncationTooSmall {
            n_fock,
            min: MIN_N_FOCK,
        });
    }
    let sig = ModeSignature::new(vec![n_fock, 2])?;
    let a = annihilation(n_fock)?;
    let (sz, sp, sm) = pauli_ops();
    let n_a = embed(&number(n_fock)?, 0, &sig)?;
    let sz = embed(&sz, 1, &sig)?;
    let x = embed(&a.add(&a.dagger())?, 0, &sig)?;
    let sx = embed(&sp.add(&sm)?, 1, &sig)?;
    let w = params.omega;
    n_a.scale(w)
        .add(&sz.scale(w / 2.0))?
        .add(&sx.mul(&x)?.scale(params.eta * w))
}

/// `Π = exp(iπ(a†a + σ₊σ₋))`, diagonal with entries `(-1)^(n + s)`.
pub fn parity_operator(n_fock: usize) -> Result<LinearOperator> {
    let sig = ModeSignature::new(vec![n_fock, 2])?;
    let diag: Vec<C64> = (0..sig.total())
        .map(|i| {
            let d = sig.digits_of(i);
            C64::new(if (d[0] + d[1]) % 2 == 0 { 1.0 } else { -1.0 }, 0.0)
        })
        .collect();
    LinearOperator::new(sig, SparseMatrix::from_diagonal(&diag))
}

/// Bosonic-matter model with the spin replaced by a second oscillator:
/// `ω a₁†a₁ + ω a₂†a₂ + ηω (a₁ + a₁†)(a₂ + a₂†)` on `[n_fock, n_fock]`.
pub fn build_bosonic_two_mode(params: &RabiParams, n_fock: usize) -> Result<LinearOperator> {
    if n_fock < MIN_N_FOCK {
        return Err(Error::TruncationTooSmall {
            n_fock,
            min: MIN_N_FOCK,
        });
    }
    let sig = ModeSignature::new(vec![n_fock, n_fock])?;
    let a = annihilation(n_fock)?;
    let q = a.add(&a.dagger())?;
    let n = number(n_fock)?;
    let w = params.omega;
    embed(&n, 0, &sig)?
        .add(&embed(&n, 1, &sig)?)?
        .scale(w)
        .add(&embed(&q, 0, &sig)?.mul(&embed(&q, 1, &sig)?)?.scale(params.eta * w))
}

/// Lowest eigenpairs of the Rabi Hamiltonian. Index 0 is `|G⟩`; for `k ≥ 3`
/// indices 1 and 2 are `|−⟩` and `|+⟩`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DressedSpectrum {
    pub params: RabiParams,
    pub n_fock: usize,
    pub energies: Vec<f64>,
    pub states: Vec<Vec<C64>>,
    pub phase_convention: PhaseConvention,
    pub solver: EigenSolver,
}

impl DressedSpectrum {
    pub fn compute(params: RabiParams, n_fock: usize, k: usize, solver: EigenSolver) -> Result<Self> {
        let h = build_rabi_hamiltonian(&params, n_fock)?;
        let eig = diagonalize_low(&h, k, solver)?;
        Ok(Self {
            params,
            n_fock,
            energies: eig.values,
            states: eig.vectors,
            phase_convention: eig.phase,
            solver: eig.solver,
        })
    }

    pub fn signature(&self) -> ModeSignature {
        ModeSignature::new(vec![self.n_fock, 2]).expect("n_fock >= 4")
    }

    pub fn ground(&self) -> &[C64] {
        &self.states[0]
    }

    /// `(Ẽ₋ − Ẽ₀, Ẽ₊ − Ẽ₀)`; needs `k ≥ 3`.
    pub fn transition_energies(&self) -> Option<(f64, f64)> {
        (self.energies.len() >= 3).then(|| {
            (
                self.energies[1] - self.energies[0],
                self.energies[2] - self.energies[0],
            )
        })
    }
}

/// Lowest `k` phase-fixed eigenpairs of a Hermitian operator.
pub fn diagonalize_low(
    h: &LinearOperator,
    k: usize,
    solver: EigenSolver,
) -> Result<crate::eigen::Eigenpairs> {
    lowest_eigenpairs(h, k, solver)
}

fn cavity_number(n_fock: usize) -> Result<LinearOperator> {
    let sig = ModeSignature::new(vec![n_fock, 2])?;
    embed(&number(n_fock)?, 0, &sig)
}

/// `⟨G|a†a|G⟩`.
pub fn ground_state_photon_number(spec: &DressedSpectrum) -> Result<f64> {
    let n = cavity_number(spec.n_fock)?;
    Ok(n.matrix_element(spec.ground(), spec.ground()).re)
}

/// Label of a bare-basis or Jaynes-Cummings-basis state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum JcState {
    /// `|0, g⟩`.
    Vacuum,
    /// `|n,+⟩ = (|n,g⟩ + |n−1,e⟩)/√2`, `n ≥ 1`.
    Plus(usize),
    /// `|n,−⟩ = (|n,g⟩ − |n−1,e⟩)/√2`, `n ≥ 1`.
    Minus(usize),
}

impl JcState {
    /// Bare-basis amplitudes on `[n_fock, 2]`.
    pub fn to_bare(self, n_fock: usize) -> Vec<C64> {
        let sig = ModeSignature::new(vec![n_fock, 2]).expect("valid truncation");
        let mut v = vec![C64::new(0.0, 0.0); sig.total()];
        let r = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            JcState::Vacuum => v[sig.index_of(&[0, 0])] = C64::new(1.0, 0.0),
            JcState::Plus(n) | JcState::Minus(n) => {
                let s = if matches!(self, JcState::Plus(_)) { 1.0 } else { -1.0 };
                v[sig.index_of(&[n, 0])] = C64::new(r, 0.0);
                v[sig.index_of(&[n - 1, 1])] = C64::new(s * r, 0.0);
            }
        }
        v
    }
}

/// Second-order perturbative dressed states in the JC basis.
///
/// The source expansion writes the dressed one-excitation states with the
/// same `|1,±⟩` label used for the JC basis; here the left side is read as
/// the dressed `|±⟩`, the right side as JC basis states.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbativeStates {
    pub eta: f64,
    pub ground: Vec<(JcState, f64)>,
    pub minus: Vec<(JcState, f64)>,
    pub plus: Vec<(JcState, f64)>,
}

pub const PERTURBATIVE_ETA_MAX: f64 = 0.3;

pub fn perturbative_dressed_states(eta: f64) -> Result<PerturbativeStates> {
    if !(0.0..=PERTURBATIVE_ETA_MAX).contains(&eta) {
        return Err(Error::ParameterOutOfRange {
            name: "eta",
            value: eta,
            reason: "perturbative expansion needs 0 <= eta <= 0.3",
        });
    }
    let s2 = 2f64.sqrt();
    let e2 = eta * eta;
    let ground = vec![
        (JcState::Vacuum, 1.0 - e2 / 8.0),
        (JcState::Minus(2), eta / (2.0 * s2) + e2 / 4.0),
        (JcState::Plus(2), -eta / (2.0 * s2) + e2 / 4.0),
    ];
    let one = |s: f64| {
        let (same, other) = if s > 0.0 {
            (JcState::Plus(1), JcState::Minus(1))
        } else {
            (JcState::Minus(1), JcState::Plus(1))
        };
        let c3 = eta / (2.0 * s2) + s * e2 / (8.0 * s2);
        let d3 = 3f64.sqrt() * e2 / (4.0 * s2);
        vec![
            (same, 1.0 - e2 / 8.0 - e2 / 32.0),
            (other, -s * (eta / 4.0) * (1.0 + s * eta / 2.0)),
            (JcState::Minus(3), c3 + d3),
            (JcState::Plus(3), -c3 + d3),
        ]
    };
    Ok(PerturbativeStates {
        eta,
        ground,
        minus: one(-1.0),
        plus: one(1.0),
    })
}

impl PerturbativeStates {
    /// Expands a coefficient table into the bare basis (not renormalized).
    pub fn to_bare(table: &[(JcState, f64)], n_fock: usize) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); 2 * n_fock];
        for &(state, c) in table {
            for (o, b) in out.iter_mut().zip(state.to_bare(n_fock)) {
                *o += b * c;
            }
        }
        out
    }
}

/// Which second-order expression for `ζ±_a` a formula-side table uses.
///
/// The source gives the quantity twice: as `½(1 ∓ 3η/4 + 15η²/32)²` and as
/// the expansion `½(1 ∓ η/4 + η²/32)`. They disagree at first order; exact
/// diagonalization follows the squared form.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ZetaAForm {
    SquaredAmplitude,
    PrintedExpansion,
}

/// Dressed-state matrix elements.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixElements {
    /// `⟨G|a†a|G⟩`
    pub xi: f64,
    /// `⟨+|a†a|+⟩`
    pub alpha_tilde_plus: f64,
    /// `⟨−|a†a|−⟩`
    pub alpha_tilde_minus: f64,
    /// `⟨+|a†a|−⟩` under the phase convention of the spectrum.
    pub offdiag: f64,
    /// `|⟨±|(a + a†)|G⟩|²`
    pub zeta_a_plus: f64,
    pub zeta_a_minus: f64,
    /// `|⟨±|(σ₋ + σ₊)|G⟩|²`
    pub zeta_sigma_plus: f64,
    pub zeta_sigma_minus: f64,
    /// `max(|⟨G|a†a|+⟩|, |⟨G|a†a|−⟩|)`, zero by parity.
    pub ground_to_branch: f64,
}

impl MatrixElements {
    /// Second-order closed forms. `ground_to_branch` is exactly zero.
    pub fn printed(eta: f64, zeta_a: ZetaAForm) -> Self {
        let e2 = eta * eta;
        let za = |s: f64| match zeta_a {
            ZetaAForm::SquaredAmplitude => 0.5 * (1.0 - s * 3.0 * eta / 4.0 + 15.0 * e2 / 32.0).powi(2),
            ZetaAForm::PrintedExpansion => 0.5 * (1.0 - s * eta / 4.0 + e2 / 32.0),
        };
        let zs = |s: f64| 0.5 * (1.0 - s * eta / 2.0 + e2 / 8.0);
        Self {
            xi: e2 / 4.0,
            alpha_tilde_plus: 0.5 - eta / 4.0 + e2 / 4.0,
            alpha_tilde_minus: 0.5 + eta / 4.0 + e2 / 4.0,
            offdiag: 0.5 + 3.0 * e2 / 16.0,
            zeta_a_plus: za(1.0),
            zeta_a_minus: za(-1.0),
            zeta_sigma_plus: zs(1.0),
            zeta_sigma_minus: zs(-1.0),
            ground_to_branch: 0.0,
        }
    }

    /// Field-by-field `(name, self, other)` triples for comparison reports.
    pub fn fields(&self) -> [(&'static str, f64); 9] {
        [
            ("xi", self.xi),
            ("alpha_tilde_plus", self.alpha_tilde_plus),
            ("alpha_tilde_minus", self.alpha_tilde_minus),
            ("offdiag", self.offdiag),
            ("zeta_a_plus", self.zeta_a_plus),
            ("zeta_a_minus", self.zeta_a_minus),
            ("zeta_sigma_plus", self.zeta_sigma_plus),
            ("zeta_sigma_minus", self.zeta_sigma_minus),
            ("ground_to_branch", self.ground_to_branch),
        ]
    }
}

/// Below this coupling the one-excitation doublet is treated as degenerate.
pub const DEGENERATE_ETA: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Extraction {
    Resolved(MatrixElements),
    /// `|±⟩` are degenerate and branch labels carry no meaning; only the
    /// label-free ground-state photon number is reported.
    DegenerateLimit { eta: f64, xi: f64 },
}

impl Extraction {
    pub fn resolved(&self) -> Option<&MatrixElements> {
        match self {
            Extraction::Resolved(m) => Some(m),
            Extraction::DegenerateLimit { .. } => None,
        }
    }
}

pub fn extract_matrix_elements(spec: &DressedSpectrum) -> Result<Extraction> {
    if spec.states.len() < 3 {
        return Err(Error::InvalidDimension {
            dim: spec.states.len(),
            reason: "matrix-element extraction needs the three lowest states",
        });
    }
    let xi = ground_state_photon_number(spec)?;
    if spec.params.eta < DEGENERATE_ETA {
        return Ok(Extraction::DegenerateLimit {
            eta: spec.params.eta,
            xi,
        });
    }
    let sig = spec.signature();
    let a = annihilation(spec.n_fock)?;
    let n = cavity_number(spec.n_fock)?;
    let q = embed(&a.add(&a.dagger())?, 0, &sig)?;
    let (_, sp, sm) = pauli_ops();
    let sx = embed(&sp.add(&sm)?, 1, &sig)?;
    let (g, minus, plus) = (&spec.states[0], &spec.states[1], &spec.states[2]);
    Ok(Extraction::Resolved(MatrixElements {
        xi,
        alpha_tilde_plus: n.matrix_element(plus, plus).re,
        alpha_tilde_minus: n.matrix_element(minus, minus).re,
        offdiag: n.matrix_element(plus, minus).re,
        zeta_a_plus: q.matrix_element(plus, g).norm_sqr(),
        zeta_a_minus: q.matrix_element(minus, g).norm_sqr(),
        zeta_sigma_plus: sx.matrix_element(plus, g).norm_sqr(),
        zeta_sigma_minus: sx.matrix_element(minus, g).norm_sqr(),
        ground_to_branch: n
            .matrix_element(g, plus)
            .norm()
            .max(n.matrix_element(g, minus).norm()),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spectrum(eta: f64, n_fock: usize) -> DressedSpectrum {
        DressedSpectrum::compute(RabiParams::new(1.0, eta).unwrap(), n_fock, 3, EigenSolver::Dense).unwrap()
    }

    #[test]
    fn params_window() {
        assert!(RabiParams::new(1.0, 0.5).is_err());
        assert!(RabiParams::new(0.0, 0.1).is_err());
        assert!(RabiParams::new(1.0, -0.1).is_err());
        assert_eq!(default_n_fock(0.1), 20);
        assert_eq!(default_n_fock(0.3), 90);
    }

    #[test]
    fn truncation_guard() {
        let p = RabiParams::new(1.0, 0.1).unwrap();
        assert!(matches!(
            build_rabi_hamiltonian(&p, 3),
            Err(Error::TruncationTooSmall { n_fock: 3, min: 4 })
        ));
    }

    #[test]
    fn decoupled_limit() {
        let h = build_rabi_hamiltonian(&RabiParams::new(1.0, 0.0).unwrap(), 10).unwrap();
        assert!(h.matrix().iter().all(|(i, j, _)| i == j));
        let s = spectrum(0.0, 10);
        assert!((s.energies[0] + 0.5).abs() < 1e-14);
        assert!((s.ground()[0] - C64::new(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn parity_commutes() {
        let p = RabiParams::new(1.0, 0.2).unwrap();
        let h = build_rabi_hamiltonian(&p, 20).unwrap();
        let pi = parity_operator(20).unwrap();
        assert!(h.commutator(&pi).unwrap().matrix().max_abs() <= 1e-12);
        assert!(h.is_hermitian(1e-12));
    }

    #[test]
    fn perturbative_ground_amplitude() {
        let t = perturbative_dressed_states(0.1).unwrap();
        let c = t.ground.iter().find(|(s, _)| *s == JcState::Minus(2)).unwrap().1;
        assert!((c - 0.037855).abs() < 1e-6);
        let zero = perturbative_dressed_states(0.0).unwrap();
        assert_eq!(PerturbativeStates::to_bare(&zero.ground, 6), JcState::Vacuum.to_bare(6));
        assert!(perturbative_dressed_states(0.31).is_err());
    }

    #[test]
    fn degenerate_marker() {
        let s = spectrum(0.0, 10);
        assert!(matches!(
            extract_matrix_elements(&s).unwrap(),
            Extraction::DegenerateLimit { .. }
        ));
    }

    #[test]
    fn repeated_extraction_is_bitwise_stable() {
        let a = extract_matrix_elements(&spectrum(0.1, 20)).unwrap();
        let b = extract_matrix_elements(&spectrum(0.1, 20)).unwrap();
        assert_eq!(a, b);
    }
}
