//! Closed-form steady-state moments, correlations, variances and visibility.
//!
//! Everything here consumes a [`ModulationView`]: with a modulated coupling the
//! rotating frame replaces `g₀ → g₀/2`, `η̄_m → η̄_m/2` and `ω_m → δ`, so the
//! same expressions serve both the static and the modulated setups.
//!
//! Quadratures are `X = (b + b†)/√2` and `X̃ = i(b† − b)/√2`.

use std::f64::consts::SQRT_2;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::effective::{
    effective_bath, effective_params, effective_params_exact, BathParams, EffectiveBath, EffectiveParams,
    MatterKind, Occupations, ZetaSource,
};
use crate::eigen::EigenSolver;
use crate::error::{Error, Result};
use crate::rabi::{extract_matrix_elements, DressedSpectrum, RabiParams, ZetaAForm};

/// Decay rates either of the bare channels or directly of the polaritons.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Rates {
    /// Cavity (`κ₁`) and matter (`κ₂`) channel rates; polariton rates follow
    /// from the matter-kind weights.
    Bare { kappa1: f64, kappa2: f64 },
    Polariton { kappa_plus: f64, kappa_minus: f64 },
}

/// Source of `ω±`, `α±`, `ξ` and the spin weights `ζ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CoefficientSource {
    Formula,
    /// Exact diagonalization of the Rabi model (spin matter only).
    Exact { n_fock: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub omega: f64,
    pub eta: f64,
    pub g0: f64,
    pub omega_m: f64,
    pub gamma_m: f64,
    /// `ω_m − ω_d`; only used when `modulated`.
    pub delta: f64,
    pub rates: Rates,
    pub occupations: Occupations,
    pub n_m: f64,
    pub matter_kind: MatterKind,
    pub modulated: bool,
    pub coefficients: CoefficientSource,
    /// Polariton rate at `η = 0`, used for the `β` of `n_SQL`.
    pub kappa_eta0: Option<f64>,
    /// Apply the `α → α + 1/2` zero-point shift to the means.
    pub zero_point: bool,
}

impl SystemParams {
    /// Spin matter, `ω = 1`, modulated at resonance, polariton rates `κ± = Γ_m/2`,
    /// vacuum baths.
    pub fn ideal(eta: f64, eta_bar_m: f64) -> Self {
        Self {
            omega: 1.0,
            eta,
            g0: eta_bar_m,
            omega_m: 1e3,
            gamma_m: 1.0,
            delta: 0.0,
            rates: Rates::Polariton {
                kappa_plus: 0.5,
                kappa_minus: 0.5,
            },
            occupations: Occupations::Direct {
                n_plus: 0.0,
                n_minus: 0.0,
            },
            n_m: 0.0,
            matter_kind: MatterKind::Spin,
            modulated: true,
            coefficients: CoefficientSource::Formula,
            kappa_eta0: None,
            zero_point: false,
        }
    }

    pub fn with_occupation(mut self, n: f64) -> Self {
        self.occupations = Occupations::Direct { n_plus: n, n_minus: n };
        self
    }

    /// `g₀/Γ_m` of the lab-frame coupling.
    pub fn eta_bar_m(&self) -> f64 {
        self.g0 / self.gamma_m
    }
}

/// Effective optomechanical parameters consumed by the closed forms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModulationView {
    pub g0: f64,
    pub eta_bar: f64,
    /// Mechanical frequency in the working frame (`δ` or `ω_m`).
    pub omega: f64,
    /// `ω/Γ_m` in the working frame.
    pub q: f64,
    pub gamma_m: f64,
    pub modulated: bool,
}

pub fn modulation_redefine(sp: &SystemParams) -> ModulationView {
    let (g0, omega) = if sp.modulated {
        (sp.g0 / 2.0, sp.delta)
    } else {
        (sp.g0, sp.omega_m)
    };
    ModulationView {
        g0,
        eta_bar: g0 / sp.gamma_m,
        omega,
        q: omega / sp.gamma_m,
        gamma_m: sp.gamma_m,
        modulated: sp.modulated,
    }
}

/// Which `β` entered `n_SQL`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BetaSource {
    /// `1 + 2κ_{η=0}/Γ_m` from the supplied rate.
    Eta0Rate,
    /// Mean of `β₊` and `β₋`.
    MeanOfBranches,
}

/// Parameters after resolving the coefficient, rate and occupation inputs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Resolved {
    pub params: SystemParams,
    pub view: ModulationView,
    pub effective: EffectiveParams,
    pub kappa_plus: f64,
    pub kappa_minus: f64,
    pub n_plus: f64,
    pub n_minus: f64,
    pub beta_plus: f64,
    pub beta_minus: f64,
    pub bath: Option<EffectiveBath>,
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::ParameterOutOfRange {
            name,
            value: v,
            reason: "must be positive and finite",
        })
    }
}

fn non_negative(name: &'static str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::ParameterOutOfRange {
            name,
            value: v,
            reason: "must be non-negative and finite",
        })
    }
}

pub fn resolve(sp: &SystemParams) -> Result<Resolved> {
    positive("omega", sp.omega)?;
    positive("omega_m", sp.omega_m)?;
    positive("gamma_m", sp.gamma_m)?;
    non_negative("g0", sp.g0)?;
    non_negative("n_m", sp.n_m)?;
    if !sp.delta.is_finite() {
        return Err(Error::ParameterOutOfRange {
            name: "delta",
            value: sp.delta,
            reason: "must be finite",
        });
    }
    let (effective, zetas) = match sp.coefficients {
        CoefficientSource::Formula => (
            effective_params(sp.eta, sp.omega, sp.matter_kind)?,
            ZetaSource::Formula {
                zeta_a: ZetaAForm::SquaredAmplitude,
            },
        ),
        CoefficientSource::Exact { n_fock } => {
            if sp.matter_kind != MatterKind::Spin {
                return Err(Error::ParameterOutOfRange {
                    name: "eta",
                    value: sp.eta,
                    reason: "exact coefficients are only available for spin matter",
                });
            }
            let spec = DressedSpectrum::compute(RabiParams::new(sp.omega, sp.eta)?, n_fock, 3, EigenSolver::Auto)?;
            let ep = effective_params_exact(&spec)?;
            let elements = *extract_matrix_elements(&spec)?
                .resolved()
                .expect("effective_params_exact rejects the degenerate limit");
            (ep, ZetaSource::Exact { elements })
        }
    };
    let (kappa_plus, kappa_minus, n_plus, n_minus, bath) = match sp.rates {
        Rates::Bare { kappa1, kappa2 } => {
            let b = effective_bath(
                &BathParams {
                    kappa1,
                    kappa2,
                    occupations: sp.occupations,
                    n_m: sp.n_m,
                },
                &effective,
                &zetas,
            )?;
            (b.kappa_plus, b.kappa_minus, b.n_plus, b.n_minus, Some(b))
        }
        Rates::Polariton {
            kappa_plus,
            kappa_minus,
        } => {
            for (name, v) in [("kappa_plus", kappa_plus), ("kappa_minus", kappa_minus)] {
                if !(v >= 0.0) {
                    return Err(Error::NegativeRate { name, value: v });
                }
            }
            let (np, nm) = match sp.occupations {
                Occupations::Direct { n_plus, n_minus } => {
                    non_negative("n_plus", n_plus)?;
                    non_negative("n_minus", n_minus)?;
                    (n_plus, n_minus)
                }
                Occupations::Temperatures { t1, t2 } if t1 == t2 => (
                    crate::effective::bose(effective.omega_plus, t1),
                    crate::effective::bose(effective.omega_minus, t1),
                ),
                Occupations::Temperatures { t1, .. } => {
                    return Err(Error::ParameterOutOfRange {
                        name: "t1",
                        value: t1,
                        reason: "unequal bath temperatures need bare channel rates for the weighting",
                    })
                }
            };
            (kappa_plus, kappa_minus, np, nm, None)
        }
    };
    Ok(Resolved {
        params: *sp,
        view: modulation_redefine(sp),
        effective,
        kappa_plus,
        kappa_minus,
        n_plus,
        n_minus,
        beta_plus: 1.0 + 2.0 * kappa_plus / sp.gamma_m,
        beta_minus: 1.0 + 2.0 * kappa_minus / sp.gamma_m,
        bath,
    })
}

impl Resolved {
    /// `α = α₊n̄₊ + α₋n̄₋ + ξ`.
    pub fn alpha(&self) -> f64 {
        let e = &self.effective;
        e.alpha_plus * self.n_plus + e.alpha_minus * self.n_minus + e.xi
    }

    fn alpha_means(&self) -> f64 {
        self.alpha() + if self.params.zero_point { 0.5 } else { 0.0 }
    }

    /// `√2 ⟨b⟩` of a mechanical mode driven by pressure `a` (same units as α).
    fn quadratures_for(&self, a: f64) -> (f64, f64) {
        let (eb, q) = (self.view.eta_bar, self.view.q);
        let den = 1.0 + 4.0 * q * q;
        (-4.0 * SQRT_2 * a * eb * q / den, -2.0 * SQRT_2 * a * eb / den)
    }

    /// `R = Σ± α±² n̄±(1+n̄±)/β±`.
    pub fn r(&self) -> f64 {
        let e = &self.effective;
        e.alpha_plus.powi(2) * self.n_plus * (1.0 + self.n_plus) / self.beta_plus
            + e.alpha_minus.powi(2) * self.n_minus * (1.0 + self.n_minus) / self.beta_minus
    }

    /// `R̃ = Σ± α±² n̄±(1+n̄±)/(4(1+β±))`.
    pub fn r_tilde(&self) -> f64 {
        let e = &self.effective;
        e.alpha_plus.powi(2) * self.n_plus * (1.0 + self.n_plus) / (4.0 * (1.0 + self.beta_plus))
            + e.alpha_minus.powi(2) * self.n_minus * (1.0 + self.n_minus) / (4.0 * (1.0 + self.beta_minus))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureMeans {
    pub x_avg: f64,
    pub xt_avg: f64,
    /// `α` used for the means (includes the zero-point shift when requested).
    pub alpha: f64,
}

pub fn quadrature_means(sp: &SystemParams) -> Result<QuadratureMeans> {
    Ok(resolve(sp)?.means())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Correlations {
    pub p_plus: f64,
    pub p_minus: f64,
    pub s_plus: f64,
    pub s_minus: f64,
    pub beta_plus: f64,
    pub beta_minus: f64,
}

impl Correlations {
    /// `p = α₊p₊ + α₋p₋`.
    pub fn p(&self, ep: &EffectiveParams) -> f64 {
        ep.alpha_plus * self.p_plus + ep.alpha_minus * self.p_minus
    }

    /// `s = α₊s₊ + α₋s₋`.
    pub fn s(&self, ep: &EffectiveParams) -> f64 {
        ep.alpha_plus * self.s_plus + ep.alpha_minus * self.s_minus
    }
}

pub fn correlations(sp: &SystemParams) -> Result<Correlations> {
    Ok(resolve(sp)?.correlations())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteadyStateMoments {
    pub x_avg: f64,
    pub xt_avg: f64,
    pub p_plus: f64,
    pub p_minus: f64,
    pub s_plus: f64,
    pub s_minus: f64,
    pub x2: f64,
    pub xt2: f64,
    /// `⟨X X̃ + X̃ X⟩`.
    pub xxt_sym: f64,
    pub var_x: f64,
    pub var_xt: f64,
    pub var_xt_bound: f64,
    pub var_x_bound: f64,
}

pub fn variances(sp: &SystemParams) -> Result<SteadyStateMoments> {
    Ok(resolve(sp)?.moments())
}

/// Mixed polariton-mechanics expectations implied by the closed forms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointMoments {
    pub n_plus: f64,
    pub n_minus: f64,
    pub n_plus_sq: f64,
    pub n_minus_sq: f64,
    pub n_plus_n_minus: f64,
    /// `⟨N± X⟩` and `⟨N± X̃⟩`.
    pub n_plus_x: f64,
    pub n_minus_x: f64,
    pub n_plus_xt: f64,
    pub n_minus_xt: f64,
}

impl Resolved {
    pub fn means(&self) -> QuadratureMeans {
        let a = self.alpha_means();
        let (x_avg, xt_avg) = self.quadratures_for(a);
        QuadratureMeans { x_avg, xt_avg, alpha: a }
    }

    pub fn correlations(&self) -> Correlations {
        let (eb, q) = (self.view.eta_bar, self.view.q);
        let e = &self.effective;
        let branch = |alpha: f64, n: f64, beta: f64| {
            let c = eb * alpha * n * (1.0 + n) / (4.0 * q * q + beta * beta);
            (4.0 * SQRT_2 * q * c, 2.0 * SQRT_2 * beta * c)
        };
        let (p_plus, s_plus) = branch(e.alpha_plus, self.n_plus, self.beta_plus);
        let (p_minus, s_minus) = branch(e.alpha_minus, self.n_minus, self.beta_minus);
        Correlations {
            p_plus,
            p_minus,
            s_plus,
            s_minus,
            beta_plus: self.beta_plus,
            beta_minus: self.beta_minus,
        }
    }

    pub fn joint_moments(&self) -> JointMoments {
        // zero-point shifts never enter correlations
        let (x, xt) = self.quadratures_for(self.alpha());
        let c = self.correlations();
        let (np, nm) = (self.n_plus, self.n_minus);
        JointMoments {
            n_plus: np,
            n_minus: nm,
            n_plus_sq: np + 2.0 * np * np,
            n_minus_sq: nm + 2.0 * nm * nm,
            n_plus_n_minus: np * nm,
            n_plus_x: x * np - c.p_plus,
            n_minus_x: x * nm - c.p_minus,
            n_plus_xt: xt * np - c.s_plus,
            n_minus_xt: xt * nm - c.s_minus,
        }
    }

    pub fn moments(&self) -> SteadyStateMoments {
        let (eb, q, nm) = (self.view.eta_bar, self.view.q, self.params.n_m);
        let den = 1.0 + 4.0 * q * q;
        let alpha = self.alpha();
        let (x, xt) = self.quadratures_for(alpha);
        let c = self.correlations();
        let (p, s) = (c.p(&self.effective), c.s(&self.effective));
        let k = 2.0 * SQRT_2 * eb / den;
        let var_x = nm + 0.5 + k * q * (p + 2.0 * q * s);
        let var_xt = nm + 0.5 - k * q * p + k * (1.0 + 2.0 * q * q) * s;
        // reported second moments include the (possibly shifted) means
        let means = self.means();
        SteadyStateMoments {
            x_avg: means.x_avg,
            xt_avg: means.xt_avg,
            p_plus: c.p_plus,
            p_minus: c.p_minus,
            s_plus: c.s_plus,
            s_minus: c.s_minus,
            x2: var_x + means.x_avg.powi(2),
            xt2: var_xt + means.xt_avg.powi(2),
            xxt_sym: 2.0 * x * xt + k * (p + 2.0 * q * s) + 2.0 * (means.x_avg * means.xt_avg - x * xt),
            var_x,
            var_xt,
            var_xt_bound: nm + 0.5 + 8.0 * eb * eb * self.r(),
            var_x_bound: nm + 0.5 + 16.0 * eb * eb * self.r_tilde(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub n_gs: f64,
    pub n_sql: f64,
    pub n_max: f64,
    /// `g₀/Γ_m` of the lab-frame coupling at which `F_GS = 1`; `None` when
    /// `ξ² ≤ (1+4Q²)² R`.
    pub eta_m_sql: Option<f64>,
    pub beta: f64,
    pub beta_source: BetaSource,
}

pub fn bounds(sp: &SystemParams) -> Result<Bounds> {
    Ok(resolve(sp)?.bounds())
}

/// Convention for the large-occupation limit without matter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Eta0BetaConvention {
    /// `β = 1 + 2κ₁/Γ_m`, as used for `β±`.
    Standard,
    /// `β = Γ_m/(Γ_m + 2κ₁)`.
    Reciprocal,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Asymptotics {
    /// `2(1/β₊ + 1/β₋)^(−1/2)`.
    pub f_infinity: f64,
    /// `√β` under the selected convention.
    pub f_infinity_eta0: f64,
    pub convention: Eta0BetaConvention,
    /// `√β` under the other convention.
    pub f_infinity_eta0_alternative: f64,
    /// Exact `F` of a bare cavity (`α = 1`, `ξ = 0`, rate `κ₁`) at `n̄ = 10⁸`.
    pub single_mode_exact: f64,
    /// Convention whose value is closer to `single_mode_exact`.
    pub continuous_convention: Eta0BetaConvention,
    /// Bosonic pressure ratio at second order and exactly.
    pub pressure_ratio: f64,
    pub pressure_ratio_exact: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VisibilityReport {
    pub f: f64,
    pub f_gs: f64,
    pub f_thermal: f64,
    pub f_x: f64,
    /// `F_GS` with the variance replaced by its upper bound.
    pub f_gs_bound: f64,
    pub xt_gs: f64,
    pub xt_thermal: f64,
    /// Zero-point part of the mean (zero unless the shift is enabled).
    pub xt_zero_point: f64,
    pub delta_xt: f64,
    pub delta_x: f64,
    pub bounds: Bounds,
    /// Only at `δ = 0` with a modulated coupling.
    pub asymptotes: Option<Asymptotics>,
}

pub fn visibility(sp: &SystemParams) -> Result<VisibilityReport> {
    resolve(sp)?.visibility(Eta0BetaConvention::Standard)
}

pub fn asymptotics(sp: &SystemParams, convention: Eta0BetaConvention) -> Result<Asymptotics> {
    resolve(sp)?.asymptotics(convention)
}

impl Resolved {
    pub fn bounds(&self) -> Bounds {
        let eta = self.params.eta;
        let q = self.view.q;
        let den = 1.0 + 4.0 * q * q;
        let (beta, beta_source) = match self.params.kappa_eta0 {
            Some(k) => (1.0 + 2.0 * k / self.params.gamma_m, BetaSource::Eta0Rate),
            None => (0.5 * (self.beta_plus + self.beta_minus), BetaSource::MeanOfBranches),
        };
        let n_gs = eta * eta / 4.0;
        let n_sql = beta * eta.powi(4) / (8.0 * den * den);
        let xi = self.effective.xi;
        let gap = xi * xi - den * den * self.r();
        let eta_m_sql = (gap > 0.0).then(|| (den * den * (1.0 + 2.0 * self.params.n_m) / (4.0 * gap)).sqrt());
        Bounds {
            n_gs,
            n_sql,
            n_max: n_gs.min(n_sql),
            eta_m_sql,
            beta,
            beta_source,
        }
    }

    pub fn visibility(&self, convention: Eta0BetaConvention) -> Result<VisibilityReport> {
        let m = self.moments();
        let xi = self.effective.xi;
        let (_, xt_gs) = self.quadratures_for(xi);
        let (_, xt_thermal) = self.quadratures_for(self.alpha() - xi);
        let xt_zero_point = m.xt_avg - xt_gs - xt_thermal;
        let dxt = m.var_xt.sqrt();
        let dx = m.var_x.sqrt();
        Ok(VisibilityReport {
            f: m.xt_avg.abs() / dxt,
            f_gs: xt_gs.abs() / dxt,
            f_thermal: xt_thermal.abs() / dxt,
            f_x: m.x_avg.abs() / dx,
            f_gs_bound: xt_gs.abs() / m.var_xt_bound.sqrt(),
            xt_gs,
            xt_thermal,
            xt_zero_point,
            delta_xt: dxt,
            delta_x: dx,
            bounds: self.bounds(),
            asymptotes: if self.view.q == 0.0 && self.params.modulated {
                Some(self.asymptotics(convention)?)
            } else {
                None
            },
        })
    }

    pub fn asymptotics(&self, convention: Eta0BetaConvention) -> Result<Asymptotics> {
        if self.view.q != 0.0 {
            return Err(Error::ParameterOutOfRange {
                name: "delta",
                value: self.params.delta,
                reason: "high-occupation limits are stated at resonant modulation",
            });
        }
        let f_infinity = 2.0 / (1.0 / self.beta_plus + 1.0 / self.beta_minus).sqrt();
        let kappa1 = match self.params.rates {
            Rates::Bare { kappa1, .. } => kappa1,
            // without bare rates the single cavity mode inherits the mean polariton rate
            Rates::Polariton {
                kappa_plus,
                kappa_minus,
            } => 0.5 * (kappa_plus + kappa_minus),
        };
        let gm = self.params.gamma_m;
        let standard = (1.0 + 2.0 * kappa1 / gm).sqrt();
        let reciprocal = (gm / (gm + 2.0 * kappa1)).sqrt();
        let single_mode_exact = single_mode_visibility(self.view.eta_bar, 1e8, 1.0 + 2.0 * kappa1 / gm, self.params.n_m);
        let (selected, alternative) = match convention {
            Eta0BetaConvention::Standard => (standard, reciprocal),
            Eta0BetaConvention::Reciprocal => (reciprocal, standard),
        };
        let continuous_convention = if (standard - single_mode_exact).abs() <= (reciprocal - single_mode_exact).abs() {
            Eta0BetaConvention::Standard
        } else {
            Eta0BetaConvention::Reciprocal
        };
        let (pressure_ratio, pressure_ratio_exact) = crate::effective::pressure_ratio(self.params.eta.min(0.499))?;
        Ok(Asymptotics {
            f_infinity,
            f_infinity_eta0: selected,
            convention,
            f_infinity_eta0_alternative: alternative,
            single_mode_exact,
            continuous_convention,
            pressure_ratio,
            pressure_ratio_exact,
        })
    }
}

/// `F` of one thermal cavity mode with unit pressure coefficient at resonance.
fn single_mode_visibility(eta_bar: f64, n: f64, beta: f64, n_m: f64) -> f64 {
    let mean = 2.0 * SQRT_2 * eta_bar * n;
    let var = 0.5 + n_m + 8.0 * eta_bar * eta_bar * n * (1.0 + n) / beta;
    mean / var.sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StaticResponse {
    /// `2 n η_m` in units of `x_zp`.
    pub x_static: f64,
    /// `(η²/2) η_m`.
    pub x_gs_static: f64,
    /// `|χ(ω_m)| / |χ(0)|`.
    pub amplification: f64,
}

/// `χ(ω) = ω_m / (ω_m² − ω² − iωΓ_m)`.
pub fn susceptibility(omega_m: f64, gamma_m: f64, w: f64) -> C64 {
    C64::new(omega_m, 0.0) / C64::new(omega_m * omega_m - w * w, -w * gamma_m)
}

pub fn static_and_susceptibility(n: f64, sp: &SystemParams) -> StaticResponse {
    let eta_m = sp.g0 / sp.omega_m;
    StaticResponse {
        x_static: 2.0 * n * eta_m,
        x_gs_static: sp.eta * sp.eta / 2.0 * eta_m,
        amplification: susceptibility(sp.omega_m, sp.gamma_m, sp.omega_m).norm()
            / susceptibility(sp.omega_m, sp.gamma_m, 0.0).norm(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn redefinition_table() {
        let sp = SystemParams::ideal(0.1, 600.0);
        let v = modulation_redefine(&sp);
        assert_eq!(v.eta_bar, 300.0);
        assert_eq!(v.q, 0.0);
        let mut st = sp;
        st.modulated = false;
        let v = modulation_redefine(&st);
        assert_eq!((v.eta_bar, v.q), (600.0, 1000.0));
    }

    #[test]
    fn headline_displacement_and_visibility() {
        let sp = SystemParams::ideal(0.1, 600.0);
        let m = quadrature_means(&sp).unwrap();
        // √2 · (g₀/Γ_m) · ξ with the lab-frame ratio 600
        assert!((m.xt_avg.abs() - SQRT_2 * 600.0 * 0.0025).abs() < 1e-12);
        let v = visibility(&sp).unwrap();
        assert!((v.f_gs - 3.0).abs() < 1e-12);
        assert!((v.bounds.eta_m_sql.unwrap() - 200.0).abs() < 1e-10);
    }

    #[test]
    fn vacuum_variance() {
        let m = variances(&SystemParams::ideal(0.1, 5.0)).unwrap();
        assert_eq!(m.var_xt, 0.5);
        assert_eq!((m.p_plus, m.s_minus), (0.0, 0.0));
    }
}
