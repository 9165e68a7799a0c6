//! Low-energy effective model: two polariton modes and the mechanical mode.
//!
//! The polaritons `a±` carry pressure coefficients `α±` and the ground state
//! contributes the constant `ξ`. Both matter variants are supported: a spin
//! (second-order dressed-state expansion) and a bosonic mode (exact
//! Bogoliubov diagonalization at `g₀ = 0`).

use faer::{Mat, Side};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{annihilation, embed, number, LinearOperator, ModeSignature};
use crate::rabi::{build_rabi_hamiltonian, DressedSpectrum, Extraction, MatrixElements, RabiParams, ZetaAForm};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatterKind {
    Spin,
    Bosonic,
}

/// Where effective coefficients came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParamSource {
    /// Closed-form expressions in `η`.
    Formula,
    /// Exact dressed-state matrix elements at the given cavity truncation.
    ExactDiagonalization { n_fock: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectiveParams {
    pub matter_kind: MatterKind,
    pub omega: f64,
    pub eta: f64,
    pub omega_plus: f64,
    pub omega_minus: f64,
    pub alpha_plus: f64,
    pub alpha_minus: f64,
    pub xi: f64,
    pub source: ParamSource,
}

pub const SPIN_ETA_MAX: f64 = 0.3;

pub fn effective_params(eta: f64, omega: f64, matter_kind: MatterKind) -> Result<EffectiveParams> {
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::ParameterOutOfRange {
            name: "omega",
            value: omega,
            reason: "must be positive and finite",
        });
    }
    let window_ok = match matter_kind {
        MatterKind::Spin => (0.0..=SPIN_ETA_MAX).contains(&eta),
        MatterKind::Bosonic => (0.0..0.5).contains(&eta),
    };
    if !window_ok {
        return Err(Error::ParameterOutOfRange {
            name: "eta",
            value: eta,
            reason: match matter_kind {
                MatterKind::Spin => "spin expansion needs 0 <= eta <= 0.3",
                MatterKind::Bosonic => "bosonic model needs 0 <= eta < 0.5",
            },
        });
    }
    let (wp, wm, ap, am, xi) = match matter_kind {
        MatterKind::Spin => (
            omega * (1.0 + eta),
            omega * (1.0 - eta),
            0.5 - eta / 4.0,
            0.5 + eta / 4.0,
            eta * eta / 4.0,
        ),
        MatterKind::Bosonic => {
            let wp = omega * (1.0 + 2.0 * eta).sqrt();
            let wm = omega * (1.0 - 2.0 * eta).sqrt();
            let alpha = |w: f64| (omega * omega + w * w) / (4.0 * omega * w);
            let xi = (omega - wp).powi(2) / (8.0 * omega * wp) + (omega - wm).powi(2) / (8.0 * omega * wm);
            (wp, wm, alpha(wp), alpha(wm), xi)
        }
    };
    Ok(EffectiveParams {
        matter_kind,
        omega,
        eta,
        omega_plus: wp,
        omega_minus: wm,
        alpha_plus: ap,
        alpha_minus: am,
        xi,
        source: ParamSource::Formula,
    })
}

/// Spin-matter coefficients from exact diagonalization:
/// `ω± = Ẽ± − Ẽ₀`, `α± = ⟨±|a†a|±⟩ − ξ`, `ξ = ⟨G|a†a|G⟩`.
pub fn effective_params_exact(spec: &DressedSpectrum) -> Result<EffectiveParams> {
    let m = match crate::rabi::extract_matrix_elements(spec)? {
        Extraction::Resolved(m) => m,
        Extraction::DegenerateLimit { .. } => {
            return Err(Error::ParameterOutOfRange {
                name: "eta",
                value: spec.params.eta,
                reason: "dressed doublet is degenerate, branches cannot be labelled",
            })
        }
    };
    let (wm, wp) = spec.transition_energies().expect("k >= 3 checked by extraction");
    Ok(EffectiveParams {
        matter_kind: MatterKind::Spin,
        omega: spec.params.omega,
        eta: spec.params.eta,
        omega_plus: wp,
        omega_minus: wm,
        alpha_plus: m.alpha_tilde_plus - m.xi,
        alpha_minus: m.alpha_tilde_minus - m.xi,
        xi: m.xi,
        source: ParamSource::ExactDiagonalization {
            n_fock: spec.n_fock,
        },
    })
}

/// Closed-form Bogoliubov transform of the bosonic-matter model:
/// `a_j + a_j† = c₊ (a₊ + a₊†) + (−1)^j c₋ (a₋ + a₋†)`, `c± = √(ω / 2ω±)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BogoliubovTable {
    pub eta: f64,
    pub omega: f64,
    pub omega_plus: f64,
    pub omega_minus: f64,
    pub coeff_plus: f64,
    pub coeff_minus: f64,
}

impl BogoliubovTable {
    /// Rows are the bare modes `j = 1, 2`, columns the normal modes `(+, −)`.
    pub fn matrix(&self) -> [[f64; 2]; 2] {
        [
            [self.coeff_plus, -self.coeff_minus],
            [self.coeff_plus, self.coeff_minus],
        ]
    }

    /// `E₀ = (ω₊ + ω₋)/2 − ω`, ground energy relative to the bare vacuum.
    pub fn ground_energy(&self) -> f64 {
        (self.omega_plus + self.omega_minus) / 2.0 - self.omega
    }
}

pub fn bogoliubov_coefficients(eta: f64, omega: f64) -> Result<BogoliubovTable> {
    if !(0.0..0.5).contains(&eta) || !(omega > 0.0) {
        return Err(Error::ParameterOutOfRange {
            name: "eta",
            value: eta,
            reason: "Bogoliubov transform needs 0 <= eta < 0.5 and omega > 0",
        });
    }
    let wp = omega * (1.0 + 2.0 * eta).sqrt();
    let wm = omega * (1.0 - 2.0 * eta).sqrt();
    Ok(BogoliubovTable {
        eta,
        omega,
        omega_plus: wp,
        omega_minus: wm,
        coeff_plus: (omega / (2.0 * wp)).sqrt(),
        coeff_minus: (omega / (2.0 * wm)).sqrt(),
    })
}

/// Normal modes of the two-oscillator quadratic form found numerically.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalModes {
    /// `(ω₊, ω₋)`.
    pub frequencies: [f64; 2],
    /// Same layout as [`BogoliubovTable::matrix`]; column signs fixed by a
    /// positive `j = 2` entry.
    pub transform: [[f64; 2]; 2],
    /// Largest off-diagonal entry of the potential and kinetic matrices in
    /// normal coordinates.
    pub offdiag_residual: f64,
}

/// Diagonalizes `H = ½ pᵀ T p + ½ qᵀ V q` with `T = ω I`,
/// `V = [[ω, 2ηω], [2ηω, ω]]`, which is the bosonic model at `g₀ = 0` in
/// quadratures `q_j = (a_j + a_j†)/√2`. With `T^{1/2} V T^{1/2} = U Λ Uᵀ`
/// the transform is `a_j + a_j† = Σ_k √(ω/ω_k) U_jk (a_k + a_k†)`.
pub fn normal_modes_numeric(eta: f64, omega: f64) -> Result<NormalModes> {
    let t = [omega, omega];
    let v = Mat::<f64>::from_fn(2, 2, |i, j| if i == j { omega } else { 2.0 * eta * omega });
    let m = Mat::<f64>::from_fn(2, 2, |i, j| t[i].sqrt() * v[(i, j)] * t[j].sqrt());
    let evd = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::EigenNonConvergence(format!("{e:?}")))?;
    let lam = evd.S().column_vector();
    // faer sorts ascending: index 1 is the + mode
    let order = [1usize, 0usize];
    let mut u = [[0.0f64; 2]; 2];
    let mut w = [0.0f64; 2];
    for (col, &k) in order.iter().enumerate() {
        if lam[k] <= 0.0 {
            return Err(Error::ParameterOutOfRange {
                name: "eta",
                value: eta,
                reason: "quadratic form is not positive definite",
            });
        }
        w[col] = lam[k].sqrt();
        let sign = if evd.U()[(1, k)] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..2 {
            u[j][col] = sign * evd.U()[(j, k)];
        }
    }
    let mut transform = [[0.0; 2]; 2];
    for j in 0..2 {
        for k in 0..2 {
            transform[j][k] = (omega / w[k]).sqrt() * u[j][k];
        }
    }
    // q = S Q, p = R P with S = T^{1/2} U W^{-1/2}, R = T^{-1/2} U W^{1/2}
    let s = Mat::<f64>::from_fn(2, 2, |j, k| t[j].sqrt() * u[j][k] / w[k].sqrt());
    let r = Mat::<f64>::from_fn(2, 2, |j, k| u[j][k] * w[k].sqrt() / t[j].sqrt());
    let tm = Mat::<f64>::from_fn(2, 2, |i, j| if i == j { t[i] } else { 0.0 });
    let v_nm = s.transpose() * &v * &s;
    let t_nm = r.transpose() * &tm * &r;
    let mut residual: f64 = 0.0;
    for k in 0..2 {
        residual = residual.max((v_nm[(k, k)] - w[k]).abs()).max((t_nm[(k, k)] - w[k]).abs());
    }
    residual = residual
        .max(v_nm[(0, 1)].abs())
        .max(v_nm[(1, 0)].abs())
        .max(t_nm[(0, 1)].abs())
        .max(t_nm[(1, 0)].abs());
    Ok(NormalModes {
        frequencies: w,
        transform,
        offdiag_residual: residual,
    })
}

/// Bosonic pressure ratio between coupled and uncoupled matter at equal
/// polariton occupations. Returns `(second_order, exact)`: `1 + η²/2` and
/// `α₊ + α₋` with the exact Bogoliubov pressure coefficients.
pub fn pressure_ratio(eta: f64) -> Result<(f64, f64)> {
    let ep = effective_params(eta, 1.0, MatterKind::Bosonic)?;
    Ok((1.0 + eta * eta / 2.0, ep.alpha_plus + ep.alpha_minus))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptomechParams {
    pub g0: f64,
    pub omega_m: f64,
    pub gamma_m: f64,
    /// `ω_m − ω_d`.
    pub delta: f64,
    pub modulated: bool,
}

impl OptomechParams {
    pub fn new(g0: f64, omega_m: f64, gamma_m: f64, delta: f64, modulated: bool) -> Result<Self> {
        if !(gamma_m > 0.0 && gamma_m.is_finite()) {
            return Err(Error::ParameterOutOfRange {
                name: "gamma_m",
                value: gamma_m,
                reason: "mechanical damping must be positive",
            });
        }
        if !(omega_m > 0.0) {
            return Err(Error::ParameterOutOfRange {
                name: "omega_m",
                value: omega_m,
                reason: "mechanical frequency must be positive",
            });
        }
        if !(g0 >= 0.0) {
            return Err(Error::ParameterOutOfRange {
                name: "g0",
                value: g0,
                reason: "coupling must be non-negative",
            });
        }
        Ok(Self {
            g0,
            omega_m,
            gamma_m,
            delta,
            modulated,
        })
    }

    /// `g₀/ω_m`.
    pub fn eta_m(&self) -> f64 {
        self.g0 / self.omega_m
    }

    /// `g₀/Γ_m`.
    pub fn eta_bar_m(&self) -> f64 {
        self.g0 / self.gamma_m
    }

    pub fn q_m(&self) -> f64 {
        self.omega_m / self.gamma_m
    }

    pub fn q_delta(&self) -> f64 {
        self.delta / self.gamma_m
    }

    pub fn drive_frequency(&self) -> f64 {
        self.omega_m - self.delta
    }
}

fn check_three_slots(trunc: &ModeSignature) -> Result<()> {
    if trunc.slots() != 3 {
        return Err(Error::InvalidDimension {
            dim: trunc.slots(),
            reason: "effective model needs slots (plus, minus, mechanics)",
        });
    }
    if trunc.dims()[2] < 2 {
        return Err(Error::InvalidDimension {
            dim: trunc.dims()[2],
            reason: "mechanical mode needs at least two levels",
        });
    }
    Ok(())
}

/// Effective Hamiltonian on `(plus, minus, mechanics)`.
///
/// Modulated: `ω₊N₊ + ω₋N₋ + δ b†b + (g₀/2)(α₊N₊ + α₋N₋ + ξ)(b + b†)`.
/// Unmodulated: `ω₊N₊ + ω₋N₋ + ω_m b†b + g₀(α₊N₊ + α₋N₋ + ξ)(b + b†)`.
/// Zero-point terms are omitted.
pub fn build_effective_hamiltonian(
    ep: &EffectiveParams,
    op: &OptomechParams,
    trunc: &ModeSignature,
) -> Result<LinearOperator> {
    check_three_slots(trunc)?;
    let d = trunc.dims();
    let np = embed(&number(d[0])?, 0, trunc)?;
    let nm = embed(&number(d[1])?, 1, trunc)?;
    let b = embed(&annihilation(d[2])?, 2, trunc)?;
    let nb = embed(&number(d[2])?, 2, trunc)?;
    let q = b.add(&b.dagger())?;
    let (w_mech, g) = if op.modulated {
        (op.delta, op.g0 / 2.0)
    } else {
        (op.omega_m, op.g0)
    };
    let pressure = np
        .scale(ep.alpha_plus)
        .add(&nm.scale(ep.alpha_minus))?
        .add(&LinearOperator::identity(trunc).scale(ep.xi))?;
    np.scale(ep.omega_plus)
        .add(&nm.scale(ep.omega_minus))?
        .add(&nb.scale(w_mech))?
        .add(&pressure.mul(&q)?.scale(g))
}

/// Polariton number operators `(N₊, N₋)` on the effective signature.
pub fn polariton_numbers(trunc: &ModeSignature) -> Result<(LinearOperator, LinearOperator)> {
    check_three_slots(trunc)?;
    Ok((
        embed(&number(trunc.dims()[0])?, 0, trunc)?,
        embed(&number(trunc.dims()[1])?, 1, trunc)?,
    ))
}

/// `H(t) = H₀ + cos(ω_d t) H₁` in the lab frame on `[n_fock, 2, n_mech]`, with
/// `H₀ = H_R + ω_m b†b` and `H₁ = g₀ a†a (b + b†)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeDependentHamiltonian {
    pub h0: LinearOperator,
    pub h1: LinearOperator,
    pub omega_d: f64,
}

impl TimeDependentHamiltonian {
    pub fn modulation(&self, t: f64) -> f64 {
        (self.omega_d * t).cos()
    }

    pub fn at(&self, t: f64) -> LinearOperator {
        self.h0
            .add(&self.h1.scale(self.modulation(t)))
            .expect("h0 and h1 share a signature")
    }

    pub fn signature(&self) -> &ModeSignature {
        self.h0.signature()
    }
}

pub fn build_time_dependent_hamiltonian(
    rabi: &RabiParams,
    op: &OptomechParams,
    n_fock: usize,
    n_mech: usize,
) -> Result<TimeDependentHamiltonian> {
    let hr = build_rabi_hamiltonian(rabi, n_fock)?;
    let mech_sig = ModeSignature::single(n_mech)?;
    let full = hr.signature().tensor(&mech_sig);
    let b = embed(&annihilation(n_mech)?, 2, &full)?;
    let nb = embed(&number(n_mech)?, 2, &full)?;
    let na = embed(&number(n_fock)?, 0, &full)?;
    let h0 = hr
        .tensor(&LinearOperator::identity(&mech_sig))
        .add(&nb.scale(op.omega_m))?;
    let h1 = na.mul(&b.add(&b.dagger())?)?.scale(op.g0);
    Ok(TimeDependentHamiltonian {
        h0,
        h1,
        omega_d: op.drive_frequency(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RwaVerdict {
    Valid,
    Marginal,
    Invalid,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RwaCheck {
    /// `g₀ / (ω η³)`.
    pub ratio: f64,
    pub verdict: RwaVerdict,
    pub valid_below: f64,
    pub marginal_below: f64,
}

pub const RWA_VALID_MAX: f64 = 0.1;
pub const RWA_MARGINAL_MAX: f64 = 1.0;

pub fn rwa_validity(g0: f64, omega: f64, eta: f64) -> Result<RwaCheck> {
    if eta == 0.0 {
        return Err(Error::UndefinedRatio("g0/(omega eta^3) needs eta > 0"));
    }
    let ratio = g0 / (omega * eta.powi(3));
    // relative slack so that decimal inputs such as 1e-3 at eta = 0.1 land on the boundary
    let le = |a: f64, b: f64| a <= b * (1.0 + 1e-12);
    let verdict = if le(ratio, RWA_VALID_MAX) {
        RwaVerdict::Valid
    } else if le(ratio, RWA_MARGINAL_MAX) {
        RwaVerdict::Marginal
    } else {
        RwaVerdict::Invalid
    };
    Ok(RwaCheck {
        ratio,
        verdict,
        valid_below: RWA_VALID_MAX,
        marginal_below: RWA_MARGINAL_MAX,
    })
}

/// Bose-Einstein occupation `1/(e^{ω/T} − 1)` with `k_B = ħ = 1`; zero at `T = 0`.
pub fn bose(omega: f64, temperature: f64) -> f64 {
    if temperature <= 0.0 {
        0.0
    } else {
        1.0 / (omega / temperature).exp_m1()
    }
}

/// Temperature at which a mode of frequency `omega` holds `n` quanta.
pub fn bose_temperature(omega: f64, n: f64) -> f64 {
    if n <= 0.0 {
        0.0
    } else {
        omega / (1.0 / n).ln_1p()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Occupations {
    Direct { n_plus: f64, n_minus: f64 },
    /// Bath temperatures of the cavity (`t1`) and matter (`t2`) channels, in
    /// the same frequency units as `ω`.
    Temperatures { t1: f64, t2: f64 },
}

/// Bare channel rates at the polariton frequencies. Spectral densities are
/// treated as flat: `κⱼ = 2π dⱼ λⱼ²` is one number per channel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BathParams {
    pub kappa1: f64,
    pub kappa2: f64,
    pub occupations: Occupations,
    pub n_m: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ZetaSource {
    Formula { zeta_a: ZetaAForm },
    Exact { elements: MatrixElements },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectiveBath {
    pub kappa_plus: f64,
    pub kappa_minus: f64,
    pub n_plus: f64,
    pub n_minus: f64,
    /// Effective temperatures from inverting the Bose function at `ω±`.
    pub t_plus: Option<f64>,
    pub t_minus: Option<f64>,
    /// `ω± / ln(1 + 1/(n̄(ω±,T₁) + n̄(ω±,T₂)))`, kept for comparison only.
    pub t_plus_summed_form: Option<f64>,
    pub t_minus_summed_form: Option<f64>,
    /// `(ζ_a, ζ_σ)` weights used for `(+, −)`.
    pub weights_plus: (f64, f64),
    pub weights_minus: (f64, f64),
}

pub fn effective_bath(bp: &BathParams, ep: &EffectiveParams, zetas: &ZetaSource) -> Result<EffectiveBath> {
    for (name, v) in [("kappa1", bp.kappa1), ("kappa2", bp.kappa2)] {
        if !(v >= 0.0) {
            return Err(Error::NegativeRate { name, value: v });
        }
    }
    if !(bp.n_m >= 0.0) {
        return Err(Error::ParameterOutOfRange {
            name: "n_m",
            value: bp.n_m,
            reason: "occupations must be non-negative",
        });
    }
    let (wp, wm) = match ep.matter_kind {
        MatterKind::Spin => {
            let m = match zetas {
                ZetaSource::Formula { zeta_a } => MatrixElements::printed(ep.eta, *zeta_a),
                ZetaSource::Exact { elements } => *elements,
            };
            ((m.zeta_a_plus, m.zeta_sigma_plus), (m.zeta_a_minus, m.zeta_sigma_minus))
        }
        MatterKind::Bosonic => {
            let cp = ep.omega / (2.0 * ep.omega_plus);
            let cm = ep.omega / (2.0 * ep.omega_minus);
            ((cp, cp), (cm, cm))
        }
    };
    let kappa = |w: (f64, f64)| w.0 * bp.kappa1 + w.1 * bp.kappa2;
    let (kp, km) = (kappa(wp), kappa(wm));
    let mut out = EffectiveBath {
        kappa_plus: kp,
        kappa_minus: km,
        n_plus: 0.0,
        n_minus: 0.0,
        t_plus: None,
        t_minus: None,
        t_plus_summed_form: None,
        t_minus_summed_form: None,
        weights_plus: wp,
        weights_minus: wm,
    };
    match bp.occupations {
        Occupations::Direct { n_plus, n_minus } => {
            for (name, v) in [("n_plus", n_plus), ("n_minus", n_minus)] {
                if !(v >= 0.0) {
                    return Err(Error::ParameterOutOfRange {
                        name,
                        value: v,
                        reason: "occupations must be non-negative",
                    });
                }
            }
            out.n_plus = n_plus;
            out.n_minus = n_minus;
        }
        Occupations::Temperatures { t1, t2 } => {
            for (name, v) in [("t1", t1), ("t2", t2)] {
                if !(v >= 0.0) {
                    return Err(Error::ParameterOutOfRange {
                        name,
                        value: v,
                        reason: "temperatures must be non-negative",
                    });
                }
            }
            let weighted = |w: (f64, f64), freq: f64| -> Result<(f64, f64, f64)> {
                let (c1, c2) = (w.0 * bp.kappa1, w.1 * bp.kappa2);
                if c1 + c2 == 0.0 {
                    return Err(Error::ZeroCoupling);
                }
                let (n1, n2) = (bose(freq, t1), bose(freq, t2));
                let n = if t1 == t2 { n1 } else { (c1 * n1 + c2 * n2) / (c1 + c2) };
                Ok((n, bose_temperature(freq, n), bose_temperature(freq, n1 + n2)))
            };
            let (np, tp, sp) = weighted(wp, ep.omega_plus)?;
            let (nm, tm, sm) = weighted(wm, ep.omega_minus)?;
            out.n_plus = np;
            out.n_minus = nm;
            out.t_plus = Some(tp);
            out.t_minus = Some(tm);
            out.t_plus_summed_form = Some(sp);
            out.t_minus_summed_form = Some(sm);
        }
    }
    Ok(out)
}

/// Product basis vector with the given occupation digits.
pub fn basis_state(sig: &ModeSignature, digits: &[usize]) -> Vec<C64> {
    let mut v = vec![C64::new(0.0, 0.0); sig.total()];
    v[sig.index_of(digits)] = C64::new(1.0, 0.0);
    v
}
