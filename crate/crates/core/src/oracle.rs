//! Numerical steady state of the effective polariton-mechanics model.
//!
//! `H = Σ± ω± N± + ω b†b + g(α₊N₊ + α₋N₋ + ξ)(b + b†)` commutes with both
//! polariton numbers and the polariton baths only move between neighbouring
//! number sectors, so the stationary state is block diagonal:
//! `ρ = Σₙ |n⟩⟨n| ⊗ ρₙ` with `n = (n₊, n₋)`. Each mechanical block is stored
//! in a Fock basis displaced by an amplitude `μₙ`. After the shift the sector
//! sees the free damped oscillator `M` plus a residual drive
//! `εₙ = fₙ + (ω − iΓ/2)μₙ` with `fₙ = g(α·n + ξ)`, and the polariton jumps
//! become `ρ̃ₙ ← Dₙₘ ρ̃ₘ Dₙₘ†` with `Dₙₘ = D(μₘ − μₙ)`. The change of frame is
//! exact for any `μₙ`; only the Fock cutoffs `(P₊, P₋, N)` approximate.
//!
//! `μₙ` is taken as the conditional mean `tr(b ρₙ)/tr ρₙ`, which obeys a
//! closed linear system over the sectors alone. This keeps every block close
//! to the Fock vacuum of its frame even when the mechanics cannot follow the
//! polariton switching.
//!
//! The linear system is solved with restarted GMRES, preconditioned by the
//! exact inverse of `M − λₙ` in every sector (tridiagonal along each
//! coherence diagonal `i − j = k`).

use faer::prelude::*;
use faer::Mat;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lindblad::gmres;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Parameters of the effective model in its working frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleModel {
    pub alpha_plus: f64,
    pub alpha_minus: f64,
    pub xi: f64,
    /// Optomechanical coupling `g` of the working frame.
    pub g: f64,
    /// Mechanical frequency of the working frame.
    pub omega: f64,
    pub gamma_m: f64,
    pub n_m: f64,
    pub kappa_plus: f64,
    pub kappa_minus: f64,
    pub n_plus: f64,
    pub n_minus: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleTruncation {
    pub p_plus: usize,
    pub p_minus: usize,
    pub n_mech: usize,
}

impl OracleTruncation {
    pub fn unknowns(&self) -> usize {
        self.p_plus * self.p_minus * self.n_mech * self.n_mech
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleOptions {
    pub tol: f64,
    pub restart: usize,
    pub max_iter: usize,
    pub max_unknowns: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            tol: 1e-11,
            restart: 60,
            max_iter: 3000,
            max_unknowns: 2_000_000,
        }
    }
}

/// Steady-state expectations in the lab frame of the mechanics.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OracleMoments {
    pub n_plus: f64,
    pub n_minus: f64,
    pub n_plus_sq: f64,
    pub n_minus_sq: f64,
    pub n_plus_n_minus: f64,
    pub x: f64,
    pub xt: f64,
    pub x2: f64,
    pub xt2: f64,
    /// `⟨X X̃ + X̃ X⟩`.
    pub xxt_sym: f64,
    pub var_x: f64,
    pub var_xt: f64,
    pub n_plus_x: f64,
    pub n_minus_x: f64,
    pub n_plus_xt: f64,
    pub n_minus_xt: f64,
    /// Mean mechanical occupation `⟨b†b⟩`.
    pub phonons: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleSolution {
    pub truncation: OracleTruncation,
    pub moments: OracleMoments,
    /// Sector populations, index `n₊·P₋ + n₋`.
    pub populations: Vec<f64>,
    /// `‖A x‖₂/‖x‖₂` of the normalized solution.
    pub residual: f64,
    pub iterations: usize,
    /// Largest population in the top mechanical level of any sector, weighted by
    /// the sector population.
    pub edge_population: f64,
    /// Largest anti-Hermitian part removed from a block.
    pub hermitization_correction: f64,
    /// `|tr(A ρ)|` of the normalized solution: probability lost per unit time
    /// through the mechanical cutoff.
    pub trace_leak: f64,
    /// Total population in the top third of the mechanical levels.
    pub tail_population: f64,
}

/// `D(γ) = exp(γ b† − γ* b)` truncated to `n` levels, computed in an enlarged
/// space so the truncation edge does not contaminate the kept block.
pub fn displacement_matrix(gamma: C64, n: usize) -> Mat<C64> {
    let big = n + 40 + (8.0 * gamma.norm_sqr()).ceil() as usize;
    // K = i(γ b† − γ* b) is Hermitian and D = exp(−iK)
    let k = Mat::<C64>::from_fn(big, big, |i, j| {
        let i_ = C64::new(0.0, 1.0);
        if i == j + 1 {
            i_ * gamma * (i as f64).sqrt()
        } else if j == i + 1 {
            -i_ * gamma.conj() * (j as f64).sqrt()
        } else {
            ZERO
        }
    });
    let evd = k.self_adjoint_eigen(faer::Side::Lower).expect("Hermitian tridiagonal");
    let u = evd.U();
    let s = evd.S().column_vector();
    let phase: Vec<C64> = (0..big).map(|l| C64::from_polar(1.0, -s[l].re)).collect();
    Mat::<C64>::from_fn(n, n, |i, j| {
        let mut acc = ZERO;
        for l in 0..big {
            acc += u[(i, l)] * phase[l] * u[(j, l)].conj();
        }
        acc
    })
}

/// `n × n` block of `D(γ)` from the closed form
/// `⟨m|D|k⟩ = √(k!/m!) γ^{m−k} e^{−|γ|²/2} L_k^{(m−k)}(|γ|²)` for `m ≥ k`
/// (and its mirror with `−γ*` above the diagonal). The Laguerre polynomials
/// come from the forward degree recurrence; the prefactor is built in logs.
pub fn displacement_block(gamma: C64, n: usize) -> Mat<C64> {
    let x = gamma.norm_sqr();
    let phase = |g: C64, p: usize| if g == ZERO { C64::new(1.0, 0.0) } else { (g / g.norm()).powu(p as u32) };
    let ln_abs = gamma.norm().ln();
    // lf[k] = ln k!
    let mut lf = vec![0.0; n + 1];
    for k in 1..=n {
        lf[k] = lf[k - 1] + (k as f64).ln();
    }
    let mut d = Mat::<C64>::zeros(n, n);
    let mut lag = vec![0.0; n];
    for p in 0..n {
        // L_k^{(p)}(x) for k = 0..n−p
        let a = p as f64;
        let len = n - p;
        lag[0] = 1.0;
        if len > 1 {
            lag[1] = 1.0 + a - x;
        }
        for k in 1..len.saturating_sub(1) {
            let kf = k as f64;
            lag[k + 1] = ((2.0 * kf + 1.0 + a - x) * lag[k] - (kf + a) * lag[k - 1]) / (kf + 1.0);
        }
        for k in 0..len {
            let m = k + p;
            let l = lag[k];
            if l == 0.0 || (p > 0 && gamma == ZERO) {
                continue;
            }
            let pow = if p > 0 { p as f64 * ln_abs } else { 0.0 };
            let mag = (0.5 * (lf[k] - lf[m]) + pow - x / 2.0 + l.abs().ln()).exp() * l.signum();
            d[(m, k)] = phase(gamma, p) * mag;
            if p > 0 {
                d[(k, m)] = phase(-gamma.conj(), p) * mag;
            }
        }
    }
    d
}

struct Layout {
    pp: usize,
    pm: usize,
    n: usize,
}

impl Layout {
    fn sectors(&self) -> usize {
        self.pp * self.pm
    }
    fn block(&self) -> usize {
        self.n * self.n
    }
    fn sector(&self, np: usize, nm: usize) -> usize {
        np * self.pm + nm
    }
}

struct System<'a> {
    model: &'a OracleModel,
    lay: Layout,
    /// Frame amplitude of every sector.
    mu: Vec<C64>,
    /// Residual drive of every sector.
    eps: Vec<C64>,
    /// `D(μ_{n+e±} − μₙ)` per sector, when that neighbour exists.
    up_plus: Vec<Option<Mat<C64>>>,
    up_minus: Vec<Option<Mat<C64>>>,
    /// Loss rate out of each sector.
    loss: Vec<f64>,
    /// bb† diagonal of the truncated mode.
    c: Vec<f64>,
}

impl<'a> System<'a> {
    fn new(model: &'a OracleModel, t: &OracleTruncation) -> Result<Self> {
        let lay = Layout {
            pp: t.p_plus,
            pm: t.p_minus,
            n: t.n_mech,
        };
        let m = model;
        let mut loss = vec![0.0; lay.sectors()];
        for np in 0..lay.pp {
            for nm in 0..lay.pm {
                let mut l = m.kappa_plus * (1.0 + m.n_plus) * np as f64 + m.kappa_minus * (1.0 + m.n_minus) * nm as f64;
                if np + 1 < lay.pp {
                    l += m.kappa_plus * m.n_plus * (np + 1) as f64;
                }
                if nm + 1 < lay.pm {
                    l += m.kappa_minus * m.n_minus * (nm + 1) as f64;
                }
                loss[lay.sector(np, nm)] = l;
            }
        }
        let mu = conditional_means(m, &lay, &loss)?;
        let z = C64::new(m.omega, -m.gamma_m / 2.0);
        let mut eps = Vec::with_capacity(lay.sectors());
        let mut up_plus = Vec::with_capacity(lay.sectors());
        let mut up_minus = Vec::with_capacity(lay.sectors());
        for np in 0..lay.pp {
            for nm in 0..lay.pm {
                let here = mu[lay.sector(np, nm)];
                eps.push(C64::new(force(m, np, nm), 0.0) + z * here);
                up_plus.push((np + 1 < lay.pp).then(|| displacement_block(mu[lay.sector(np + 1, nm)] - here, lay.n)));
                up_minus.push((nm + 1 < lay.pm).then(|| displacement_block(mu[lay.sector(np, nm + 1)] - here, lay.n)));
            }
        }
        let c = (0..lay.n).map(|i| if i + 1 < lay.n { (i + 1) as f64 } else { 0.0 }).collect();
        Ok(Self {
            model,
            mu,
            eps,
            up_plus,
            up_minus,
            loss,
            c,
            lay,
        })
    }

    /// `out += −i[ε b† + ε* b, ρ]`.
    fn drive(&self, rho: &[C64], eps: C64, out: &mut [C64]) {
        let n = self.lay.n;
        let mi = C64::new(0.0, -1.0);
        for j in 0..n {
            for i in 0..n {
                let mut v = ZERO;
                if i > 0 {
                    v += eps * (i as f64).sqrt() * rho[(i - 1) + n * j];
                }
                if i + 1 < n {
                    v += eps.conj() * ((i + 1) as f64).sqrt() * rho[(i + 1) + n * j];
                }
                if j + 1 < n {
                    v -= eps * ((j + 1) as f64).sqrt() * rho[i + n * (j + 1)];
                }
                if j > 0 {
                    v -= eps.conj() * (j as f64).sqrt() * rho[i + n * (j - 1)];
                }
                out[i + n * j] += mi * v;
            }
        }
    }

    /// `out = M(ρ) − λ ρ` for one column-major block.
    fn free(&self, rho: &[C64], lambda: f64, out: &mut [C64]) {
        let n = self.lay.n;
        let m = self.model;
        let (down, up) = (m.gamma_m * (1.0 + m.n_m), m.gamma_m * m.n_m);
        for j in 0..n {
            for i in 0..n {
                let idx = i + n * j;
                let mut v = C64::new(
                    -down * 0.5 * (i + j) as f64 - up * 0.5 * (self.c[i] + self.c[j]) - lambda,
                    -m.omega * (i as f64 - j as f64),
                ) * rho[idx];
                if i + 1 < n && j + 1 < n {
                    v += rho[idx + 1 + n] * (down * (((i + 1) * (j + 1)) as f64).sqrt());
                }
                if i > 0 && j > 0 && up != 0.0 {
                    v += rho[idx - 1 - n] * (up * ((i * j) as f64).sqrt());
                }
                out[idx] = v;
            }
        }
    }

    /// Exact solve of `(M − λ) x = r` along every coherence diagonal.
    fn free_solve(&self, r: &[C64], lambda: f64, x: &mut [C64]) {
        let n = self.lay.n as isize;
        let m = self.model;
        let (down, up) = (m.gamma_m * (1.0 + m.n_m), m.gamma_m * m.n_m);
        let mut cp = vec![ZERO; self.lay.n];
        let mut dp = vec![ZERO; self.lay.n];
        for k in -(n - 1)..n {
            // positions (i, j) = (s + max(k,0), s + max(−k,0))
            let (i0, j0) = (k.max(0) as usize, (-k).max(0) as usize);
            let len = (n - k.abs()) as usize;
            let at = |s: usize| (i0 + s) + self.lay.n * (j0 + s);
            let diag = |s: usize| {
                let (i, j) = (i0 + s, j0 + s);
                C64::new(
                    -down * 0.5 * (i + j) as f64 - up * 0.5 * (self.c[i] + self.c[j]) - lambda,
                    -m.omega * k as f64,
                )
            };
            let upper = |s: usize| down * (((i0 + s + 1) * (j0 + s + 1)) as f64).sqrt();
            let lower = |s: usize| up * (((i0 + s) * (j0 + s)) as f64).sqrt();
            // Thomas algorithm
            for s in 0..len {
                let a = if s > 0 { lower(s) } else { 0.0 };
                let b = diag(s) - if s > 0 { cp[s - 1] * a } else { ZERO };
                cp[s] = if s + 1 < len { C64::new(upper(s), 0.0) / b } else { ZERO };
                dp[s] = (r[at(s)] - if s > 0 { dp[s - 1] * a } else { ZERO }) / b;
            }
            for s in (0..len).rev() {
                let v = dp[s] - if s + 1 < len { cp[s] * x[at(s + 1)] } else { ZERO };
                x[at(s)] = v;
            }
        }
    }

    fn precond_shift(&self, sector: usize) -> f64 {
        self.loss[sector].max(0.05 * self.model.gamma_m)
    }

    /// `out += rate · U ρ U†`, or `rate · U† ρ U` when `adjoint`.
    fn transfer(&self, u: &Mat<C64>, adjoint: bool, rho: &[C64], rate: f64, out: &mut [C64]) {
        let n = self.lay.n;
        let r = faer::MatRef::from_column_major_slice(rho, n, n);
        let prod = if adjoint { u.adjoint() * r * u } else { u * r * u.adjoint() };
        for j in 0..n {
            for i in 0..n {
                out[i + n * j] += prod[(i, j)] * rate;
            }
        }
    }

    fn apply(&self, x: &[C64], out: &mut [C64]) {
        let lay = &self.lay;
        let bs = lay.block();
        let m = self.model;
        let blk_of = |t: usize| &x[t * bs..(t + 1) * bs];
        for np in 0..lay.pp {
            for nm in 0..lay.pm {
                let s = lay.sector(np, nm);
                let blk = &mut out[s * bs..(s + 1) * bs];
                self.free(blk_of(s), self.loss[s], blk);
                if self.eps[s] != ZERO {
                    self.drive(blk_of(s), self.eps[s], blk);
                }
                // decay from above, seen through D(μ_above − μ_here)
                if let Some(u) = &self.up_plus[s] {
                    let rate = m.kappa_plus * (1.0 + m.n_plus) * (np + 1) as f64;
                    self.transfer(u, false, blk_of(lay.sector(np + 1, nm)), rate, blk);
                }
                if let Some(u) = &self.up_minus[s] {
                    let rate = m.kappa_minus * (1.0 + m.n_minus) * (nm + 1) as f64;
                    self.transfer(u, false, blk_of(lay.sector(np, nm + 1)), rate, blk);
                }
                // excitation from below, D(μ_below − μ_here) = D(μ_here − μ_below)†
                if np > 0 && m.n_plus > 0.0 {
                    let below = lay.sector(np - 1, nm);
                    let u = self.up_plus[below].as_ref().expect("neighbour exists");
                    self.transfer(u, true, blk_of(below), m.kappa_plus * m.n_plus * np as f64, blk);
                }
                if nm > 0 && m.n_minus > 0.0 {
                    let below = lay.sector(np, nm - 1);
                    let u = self.up_minus[below].as_ref().expect("neighbour exists");
                    self.transfer(u, true, blk_of(below), m.kappa_minus * m.n_minus * nm as f64, blk);
                }
            }
        }
    }

    fn trace(&self, x: &[C64]) -> C64 {
        let (n, bs) = (self.lay.n, self.lay.block());
        (0..self.lay.sectors())
            .map(|s| (0..n).map(|i| x[s * bs + i + n * i]).sum::<C64>())
            .sum()
    }
}

/// `A' = A + u tᵀ` with `u = |0⟩⟨0|` in sector 0.
fn apply_aug(sys: &System, v: &[C64], out: &mut [C64]) {
    sys.apply(v, out);
    out[0] += sys.trace(v);
}

fn force(m: &OracleModel, np: usize, nm: usize) -> f64 {
    m.g * (m.alpha_plus * np as f64 + m.alpha_minus * nm as f64 + m.xi)
}

/// Stationary populations of the truncated polariton ladders. They stay
/// exactly geometric because detailed balance survives the cutoff.
fn ladder_populations(m: &OracleModel, lay: &Layout) -> Vec<f64> {
    let geo = |n_bar: f64, p: usize| -> Vec<f64> {
        let r = n_bar / (1.0 + n_bar);
        let w: Vec<f64> = (0..p).map(|k| r.powi(k as i32)).collect();
        let z: f64 = w.iter().sum();
        w.into_iter().map(|v| v / z).collect()
    };
    let (a, b) = (geo(m.n_plus, lay.pp), geo(m.n_minus, lay.pm));
    a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect()
}

/// Conditional mean amplitudes `tr(b ρₙ)/tr ρₙ` from the closed first-moment
/// equations `0 = −(iω + Γ/2 + λₙ)Bₙ − i fₙ pₙ + Σₘ cₙₘ Bₘ`.
fn conditional_means(m: &OracleModel, lay: &Layout, loss: &[f64]) -> Result<Vec<C64>> {
    let ns = lay.sectors();
    let p = ladder_populations(m, lay);
    let mut a = Mat::<C64>::zeros(ns, ns);
    let mut rhs = Mat::<C64>::zeros(ns, 1);
    for np in 0..lay.pp {
        for nm in 0..lay.pm {
            let s = lay.sector(np, nm);
            a[(s, s)] = C64::new(-(m.gamma_m / 2.0 + loss[s]), -m.omega);
            rhs[(s, 0)] = C64::new(0.0, force(m, np, nm) * p[s]);
            if np + 1 < lay.pp {
                a[(s, lay.sector(np + 1, nm))] += m.kappa_plus * (1.0 + m.n_plus) * (np + 1) as f64;
            }
            if nm + 1 < lay.pm {
                a[(s, lay.sector(np, nm + 1))] += m.kappa_minus * (1.0 + m.n_minus) * (nm + 1) as f64;
            }
            if np > 0 {
                a[(s, lay.sector(np - 1, nm))] += m.kappa_plus * m.n_plus * np as f64;
            }
            if nm > 0 {
                a[(s, lay.sector(np, nm - 1))] += m.kappa_minus * m.n_minus * nm as f64;
            }
        }
    }
    let b = a.partial_piv_lu().solve(&rhs);
    (0..ns)
        .map(|s| {
            let v = b[(s, 0)] / p[s];
            if v.re.is_finite() && v.im.is_finite() {
                Ok(v)
            } else {
                Err(Error::SolveFailed("sector first-moment system is singular".into()))
            }
        })
        .collect()
}

fn check_model(m: &OracleModel) -> Result<()> {
    for (name, v) in [
        ("gamma_m", m.gamma_m),
        ("kappa_plus", m.kappa_plus),
        ("kappa_minus", m.kappa_minus),
        ("n_m", m.n_m),
        ("n_plus", m.n_plus),
        ("n_minus", m.n_minus),
    ] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::NegativeRate { name, value: v });
        }
    }
    if m.gamma_m == 0.0 {
        return Err(Error::ParameterOutOfRange {
            name: "gamma_m",
            value: 0.0,
            reason: "mechanical damping must be positive for a unique steady state",
        });
    }
    Ok(())
}

pub fn solve(model: &OracleModel, trunc: &OracleTruncation, opts: &OracleOptions) -> Result<OracleSolution> {
    check_model(model)?;
    if trunc.p_plus == 0 || trunc.p_minus == 0 || trunc.n_mech < 2 {
        return Err(Error::InvalidDimension {
            dim: trunc.n_mech,
            reason: "polariton cutoffs must be >= 1 and the mechanical cutoff >= 2",
        });
    }
    let unknowns = trunc.unknowns();
    if unknowns > opts.max_unknowns {
        return Err(Error::MemoryCapExceeded {
            required: unknowns,
            cap: opts.max_unknowns,
        });
    }
    let sys = System::new(model, trunc)?;
    let (n, bs) = (sys.lay.n, sys.lay.block());

    // rank-one completion A' = A + u tᵀ with u = |0⟩⟨0| in sector 0
    let mut rhs = vec![ZERO; unknowns];
    rhs[0] = C64::new(1.0, 0.0);
    let mut apply = |v: &[C64], out: &mut [C64]| apply_aug(&sys, v, out);
    let mut precond = |v: &[C64], out: &mut [C64]| {
        for s in 0..sys.lay.sectors() {
            sys.free_solve(&v[s * bs..(s + 1) * bs], sys.precond_shift(s), &mut out[s * bs..(s + 1) * bs]);
        }
    };
    let sol = gmres(unknowns, &mut apply, &mut precond, &rhs, opts.tol, opts.restart, opts.max_iter);
    if !sol.converged {
        return Err(Error::SolveFailed(format!(
            "GMRES stopped at relative residual {:.3e} after {} iterations",
            sol.relative_residual, sol.iterations
        )));
    }
    let mut x = sol.x;
    let tr = sys.trace(&x);
    x.iter_mut().for_each(|v| *v /= tr);

    let mut correction: f64 = 0.0;
    for s in 0..sys.lay.sectors() {
        let blk = &mut x[s * bs..(s + 1) * bs];
        for j in 0..n {
            for i in 0..=j {
                let (a, b) = (blk[i + n * j], blk[j + n * i]);
                let h = (a + b.conj()) * 0.5;
                correction = correction.max((a - h).norm());
                blk[i + n * j] = h;
                blk[j + n * i] = h.conj();
            }
        }
    }
    let mut ax = vec![ZERO; unknowns];
    sys.apply(&x, &mut ax);
    let residual = (ax.iter().map(|z| z.norm_sqr()).sum::<f64>() / x.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt();

    // trace lost through the Fock edge, and weight in the top third of the levels
    let trace_leak = sys.trace(&ax).norm();
    let mut tail_population = 0.0;
    for s in 0..sys.lay.sectors() {
        tail_population += (2 * n / 3..n).map(|i| x[s * bs + i + n * i].re).sum::<f64>();
    }
    let sqrt = |k: usize| (k as f64).sqrt();
    let mut mom = OracleMoments::default();
    let mut b1 = ZERO;
    let mut b2 = ZERO;
    let mut bdb = 0.0;
    let mut populations = vec![0.0; sys.lay.sectors()];
    let mut edge: f64 = 0.0;
    for np in 0..sys.lay.pp {
        for nm in 0..sys.lay.pm {
            let s = sys.lay.sector(np, nm);
            let blk = &x[s * bs..(s + 1) * bs];
            let p: f64 = (0..n).map(|i| blk[i + n * i].re).sum();
            populations[s] = p;
            if p > 0.0 {
                edge = edge.max(blk[(n - 1) + n * (n - 1)].re);
            }
            let tb: C64 = (0..n - 1).map(|i| blk[(i + 1) + n * i] * sqrt(i + 1)).sum();
            let tb2: C64 = (0..n.saturating_sub(2)).map(|i| blk[(i + 2) + n * i] * sqrt((i + 1) * (i + 2))).sum();
            let tn: f64 = (0..n).map(|i| blk[i + n * i].re * i as f64).sum();
            let beta = sys.mu[s];
            let bn = tb + beta * p;
            let b2n = tb2 + beta * tb * 2.0 + beta * beta * p;
            let nn = tn + 2.0 * (beta.conj() * tb).re + beta.norm_sqr() * p;
            let (fp, fm) = (np as f64, nm as f64);
            mom.n_plus += fp * p;
            mom.n_minus += fm * p;
            mom.n_plus_sq += fp * fp * p;
            mom.n_minus_sq += fm * fm * p;
            mom.n_plus_n_minus += fp * fm * p;
            let (xs, xts) = (std::f64::consts::SQRT_2 * bn.re, std::f64::consts::SQRT_2 * bn.im);
            mom.n_plus_x += fp * xs;
            mom.n_minus_x += fm * xs;
            mom.n_plus_xt += fp * xts;
            mom.n_minus_xt += fm * xts;
            b1 += bn;
            b2 += b2n;
            bdb += nn;
        }
    }
    mom.x = std::f64::consts::SQRT_2 * b1.re;
    mom.xt = std::f64::consts::SQRT_2 * b1.im;
    mom.x2 = bdb + 0.5 + b2.re;
    mom.xt2 = bdb + 0.5 - b2.re;
    mom.xxt_sym = 2.0 * b2.im;
    mom.var_x = mom.x2 - mom.x * mom.x;
    mom.var_xt = mom.xt2 - mom.xt * mom.xt;
    mom.phonons = bdb;
    Ok(OracleSolution {
        truncation: *trunc,
        moments: mom,
        populations,
        residual,
        iterations: sol.iterations,
        edge_population: edge,
        hermitization_correction: correction,
        trace_leak,
        tail_population,
    })
}

/// Smallest polariton cutoff whose truncated geometric distribution
/// reproduces `⟨N⟩` and `⟨N²⟩` of the thermal state to relative `tol`.
pub fn polariton_cutoff(n_bar: f64, tol: f64) -> usize {
    if n_bar == 0.0 {
        return 1;
    }
    let r = n_bar / (1.0 + n_bar);
    let exact = (n_bar, n_bar * (1.0 + 2.0 * n_bar));
    let mut p = 2;
    loop {
        let (mut z, mut m1, mut m2) = (0.0, 0.0, 0.0);
        let mut w = 1.0;
        for k in 0..p {
            z += w;
            m1 += k as f64 * w;
            m2 += (k * k) as f64 * w;
            w *= r;
        }
        let (m1, m2) = (m1 / z, m2 / z);
        if ((m1 - exact.0) / exact.0).abs() <= tol && ((m2 - exact.1) / exact.1).abs() <= tol {
            return p;
        }
        p += 1;
    }
}
