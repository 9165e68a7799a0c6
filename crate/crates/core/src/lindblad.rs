//! Liouvillians, steady states and time evolution.
//!
//! Vectorization is column stacking: `vec(ρ)[i + j·D] = ρ_ij`, so
//! `vec(A ρ B) = (Bᵀ ⊗ A) vec(ρ)` with the left Kronecker factor outermost.
//! The generator is
//!
//! ```text
//! L = −i (I ⊗ H − Hᵀ ⊗ I)
//!     + Σ_c γ_c ( conj(O_c) ⊗ O_c − ½ I ⊗ O_c†O_c − ½ (O_c†O_c)ᵀ ⊗ I )
//! ```
//!
//! where every [`Dissipator`] contributes a down channel `O` at `rate_down`
//! and an up channel `O†` at `rate_up`.
//!
//! When `H` and every jump operator respect a labelling of basis states
//! (commute with a conserved number, or shift it uniformly), the steady state
//! is block diagonal in the label. [`build_liouvillian_sectored`] keeps only
//! the matrix units `|i⟩⟨j|` with equal labels and builds the restricted
//! generator directly, never forming the full `D² × D²` matrix.

use std::collections::HashSet;

use faer::prelude::*;
use faer::Mat;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::effective::bose;
use crate::error::{Error, Result};
use crate::hilbert::{annihilation, embed, pauli_ops, DensityMatrix, LinearOperator, ModeSignature, POSITIVITY_TOL};
use crate::rabi::DressedSpectrum;
use crate::sparse::SparseMatrix;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dissipator {
    pub collapse_op: LinearOperator,
    pub rate_down: f64,
    pub rate_up: f64,
}

impl Dissipator {
    pub fn new(collapse_op: LinearOperator, rate_down: f64, rate_up: f64) -> Result<Self> {
        for (name, v) in [("rate_down", rate_down), ("rate_up", rate_up)] {
            if !(v >= 0.0) {
                return Err(Error::NegativeRate { name, value: v });
            }
        }
        Ok(Self {
            collapse_op,
            rate_down,
            rate_up,
        })
    }

    /// `κ(1 + n̄) D[O] + κ n̄ D[O†]`.
    pub fn thermal(collapse_op: LinearOperator, kappa: f64, n_bar: f64) -> Result<Self> {
        if !(n_bar >= 0.0) {
            return Err(Error::NegativeRate {
                name: "n_bar",
                value: n_bar,
            });
        }
        Self::new(collapse_op, kappa * (1.0 + n_bar), kappa * n_bar)
    }

    /// `(rate, jump operator)` pairs with zero-rate channels dropped.
    pub fn channels(&self) -> Vec<(f64, LinearOperator)> {
        let mut out = Vec::with_capacity(2);
        if self.rate_down > 0.0 {
            out.push((self.rate_down, self.collapse_op.clone()));
        }
        if self.rate_up > 0.0 {
            out.push((self.rate_up, self.collapse_op.dagger()));
        }
        out
    }
}

/// Index layout of a vectorized density matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum LiouvilleBasis {
    /// All `D²` matrix units, column stacked.
    Full,
    /// Only `|i⟩⟨j|` with `labels[i] == labels[j]`; within a label block the
    /// units are column stacked over the block's states in ascending order.
    Sectored(SectorLayout),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectorLayout {
    /// Block id of every basis state (dense ids in order of first appearance).
    block: Vec<usize>,
    /// Position of every state inside its block.
    local: Vec<usize>,
    /// States of every block in ascending order.
    members: Vec<Vec<usize>>,
    /// First vectorized index of every block.
    offset: Vec<usize>,
}

impl SectorLayout {
    pub fn new(labels: &[usize]) -> Self {
        let mut id_of = std::collections::BTreeMap::new();
        let mut block = Vec::with_capacity(labels.len());
        let mut local = Vec::with_capacity(labels.len());
        let mut members: Vec<Vec<usize>> = Vec::new();
        for (i, &l) in labels.iter().enumerate() {
            let next = id_of.len();
            let b = *id_of.entry(l).or_insert(next);
            if b == members.len() {
                members.push(Vec::new());
            }
            local.push(members[b].len());
            members[b].push(i);
            block.push(b);
        }
        let mut offset = Vec::with_capacity(members.len());
        let mut acc = 0;
        for m in &members {
            offset.push(acc);
            acc += m.len() * m.len();
        }
        Self {
            block,
            local,
            members,
            offset,
        }
    }

    pub fn unknowns(&self) -> usize {
        self.members.iter().map(|m| m.len() * m.len()).sum()
    }

    pub fn index(&self, i: usize, j: usize) -> Option<usize> {
        let b = self.block[i];
        (self.block[j] == b).then(|| self.offset[b] + self.local[i] + self.local[j] * self.members[b].len())
    }

    fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.members
            .iter()
            .flat_map(|m| m.iter().flat_map(move |&j| m.iter().map(move |&i| (i, j))))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Liouvillian {
    pub signature: ModeSignature,
    pub superop: SparseMatrix,
    pub basis: LiouvilleBasis,
}

fn check_rates_and_signatures(h: &LinearOperator, dissipators: &[Dissipator]) -> Result<()> {
    for d in dissipators {
        if d.collapse_op.signature() != h.signature() {
            return Err(Error::SignatureMismatch {
                left: h.signature().dims().to_vec(),
                right: d.collapse_op.signature().dims().to_vec(),
            });
        }
        for (name, v) in [("rate_down", d.rate_down), ("rate_up", d.rate_up)] {
            if !(v >= 0.0) {
                return Err(Error::NegativeRate { name, value: v });
            }
        }
    }
    Ok(())
}

/// `−i(I ⊗ H − Hᵀ ⊗ I)`.
pub fn commutator_superop(h: &LinearOperator) -> SparseMatrix {
    let id = SparseMatrix::identity(h.dim());
    id.kron(h.matrix())
        .sub(&h.matrix().transpose().kron(&id))
        .scale(C64::new(0.0, -1.0))
}

/// Full `D² × D²` generator.
pub fn build_liouvillian(h: &LinearOperator, dissipators: &[Dissipator]) -> Result<Liouvillian> {
    check_rates_and_signatures(h, dissipators)?;
    let id = SparseMatrix::identity(h.dim());
    let mut l = commutator_superop(h);
    for d in dissipators {
        for (rate, o) in d.channels() {
            let o = o.matrix();
            let odo = o.adjoint().matmul(o);
            let term = o
                .conj()
                .kron(o)
                .sub(&id.kron(&odo).scale(C64::new(0.5, 0.0)))
                .sub(&odo.transpose().kron(&id).scale(C64::new(0.5, 0.0)));
            l = l.add(&term.scale(C64::new(rate, 0.0)));
        }
    }
    Ok(Liouvillian {
        signature: h.signature().clone(),
        superop: l,
        basis: LiouvilleBasis::Full,
    })
}

/// Generator restricted to the label-diagonal matrix units. Fails with
/// [`Error::NotInvariant`] if any term maps a kept unit outside the sector.
pub fn build_liouvillian_sectored(
    h: &LinearOperator,
    dissipators: &[Dissipator],
    labels: &[usize],
) -> Result<Liouvillian> {
    check_rates_and_signatures(h, dissipators)?;
    if labels.len() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            found: labels.len(),
        });
    }
    let layout = SectorLayout::new(labels);
    let n = layout.unknowns();

    // column access to H, O and O†O through transposed CSR copies
    let h_t = h.matrix().transpose();
    struct Channel {
        rate: f64,
        o_t: SparseMatrix,
        odo: SparseMatrix,
        odo_t: SparseMatrix,
    }
    let channels: Vec<Channel> = dissipators
        .iter()
        .flat_map(|d| d.channels())
        .map(|(rate, o)| {
            let o = o.matrix().clone();
            let odo = o.adjoint().matmul(&o);
            Channel {
                rate,
                o_t: o.transpose(),
                odo_t: odo.transpose(),
                odo,
            }
        })
        .collect();

    let mut triplets: Vec<(usize, usize, C64)> = Vec::new();
    let mut push = |row: Option<usize>, col: usize, v: C64| -> Result<()> {
        match row {
            Some(r) => {
                triplets.push((r, col, v));
                Ok(())
            }
            None if v == ZERO => Ok(()),
            None => Err(Error::NotInvariant),
        }
    };
    let mi = C64::new(0.0, -1.0);
    for (k, l) in layout.pairs() {
        let col = layout.index(k, l).expect("pair in sector");
        // −i H E_kl: column k of H into rows (i, l)
        for (i, v) in h_t.row(k) {
            push(layout.index(i, l), col, mi * v)?;
        }
        // +i E_kl H: row l of H into (k, j)
        for (j, v) in h.matrix().row(l) {
            push(layout.index(k, j), col, -mi * v)?;
        }
        for c in &channels {
            let r = C64::new(c.rate, 0.0);
            // O E_kl O†: O_ik conj(O_jl) E_ij
            for (i, a) in c.o_t.row(k) {
                for (j, b) in c.o_t.row(l) {
                    push(layout.index(i, j), col, r * a * b.conj())?;
                }
            }
            let half = r * 0.5;
            for (i, v) in c.odo_t.row(k) {
                push(layout.index(i, l), col, -half * v)?;
            }
            for (j, v) in c.odo.row(l) {
                push(layout.index(k, j), col, -half * v)?;
            }
        }
    }
    Ok(Liouvillian {
        signature: h.signature().clone(),
        superop: SparseMatrix::from_triplets(n, n, triplets),
        basis: LiouvilleBasis::Sectored(layout),
    })
}

impl Liouvillian {
    pub fn dim(&self) -> usize {
        self.signature.total()
    }

    pub fn unknowns(&self) -> usize {
        self.superop.nrows()
    }

    fn index(&self, i: usize, j: usize) -> Option<usize> {
        match &self.basis {
            LiouvilleBasis::Full => Some(i + j * self.dim()),
            LiouvilleBasis::Sectored(s) => s.index(i, j),
        }
    }

    /// Vectorizes `ρ` in this generator's basis. Entries outside the sector
    /// are dropped.
    pub fn vectorize(&self, rho: &SparseMatrix) -> Vec<C64> {
        let mut v = vec![ZERO; self.unknowns()];
        for (i, j, x) in rho.iter() {
            if let Some(k) = self.index(i, j) {
                v[k] = x;
            }
        }
        v
    }

    pub fn unvectorize(&self, v: &[C64]) -> SparseMatrix {
        let d = self.dim();
        let triplets: Vec<(usize, usize, C64)> = match &self.basis {
            LiouvilleBasis::Full => (0..d * d).map(|k| (k % d, k / d, v[k])).collect(),
            LiouvilleBasis::Sectored(s) => s.pairs().map(|(i, j)| (i, j, v[s.index(i, j).unwrap()])).collect(),
        };
        SparseMatrix::from_triplets(d, d, triplets)
    }

    /// Row vector `t` with `t · vec(ρ) = tr ρ`.
    pub fn trace_row(&self) -> Vec<(usize, C64)> {
        (0..self.dim()).filter_map(|i| self.index(i, i).map(|k| (k, ONE))).collect()
    }

    /// Largest `|tᵀ L|` entry; zero for a trace-preserving generator.
    pub fn trace_preservation_residual(&self) -> f64 {
        let mut acc = vec![ZERO; self.unknowns()];
        for (k, _) in self.trace_row() {
            for (col, v) in self.superop.row(k) {
                acc[col] += v;
            }
        }
        acc.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        let mut out = vec![ZERO; v.len()];
        self.superop.matvec(v, &mut out);
        out
    }

    /// Dense eigenvalues; only for small generators.
    pub fn eigenvalues(&self, max_unknowns: usize) -> Option<Vec<C64>> {
        if self.unknowns() > max_unknowns {
            return None;
        }
        let mut ev = self.superop.to_dense().eigenvalues().ok()?;
        ev.sort_by(|a, b| b.re.total_cmp(&a.re));
        Some(ev)
    }

    /// Modulus of the second eigenvalue closest to zero.
    pub fn spectral_gap(&self, max_unknowns: usize) -> Option<f64> {
        let mut ev: Vec<f64> = self.eigenvalues(max_unknowns)?.iter().map(|z| z.norm()).collect();
        ev.sort_by(f64::total_cmp);
        ev.get(1).copied()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteadyStateOptions {
    /// Maximum accepted `‖L vec(ρ)‖₂`.
    pub tol: f64,
    /// Upper bound on vectorized unknowns.
    pub max_unknowns: usize,
    /// Compute the spectral gap when the generator has at most this many unknowns.
    pub gap_below: usize,
}

impl Default for SteadyStateOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_unknowns: 4_000_000,
            gap_below: 400,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SteadyStateResult {
    pub rho: DensityMatrix,
    /// `‖L vec(ρ)‖₂` after Hermitization.
    pub residual: f64,
    pub gap_estimate: Option<f64>,
    /// Largest `|ρ − ρ†|` entry removed by Hermitization.
    pub hermitization_correction: f64,
    /// Smallest eigenvalue of the Hermitized state, if blocks were small enough.
    pub min_eigenvalue: Option<f64>,
    /// Threshold below which negative eigenvalues are attributed to round-off.
    pub positivity_tol: f64,
    pub unknowns: usize,
}

/// Solves `L vec(ρ) = 0`, `tr ρ = 1` by overwriting the equation of the
/// `ρ₀₀` unknown with the trace row and factorizing with a sparse LU.
pub fn steady_state(l: &Liouvillian, opts: &SteadyStateOptions) -> Result<SteadyStateResult> {
    let n = l.unknowns();
    if n > opts.max_unknowns {
        return Err(Error::MemoryCapExceeded {
            required: n,
            cap: opts.max_unknowns,
        });
    }
    let pivot = l.index(0, 0).expect("(0,0) is always kept");
    let mut triplets: Vec<faer::sparse::Triplet<usize, usize, C64>> = l
        .superop
        .iter()
        .filter(|&(i, _, _)| i != pivot)
        .map(|(i, j, v)| faer::sparse::Triplet::new(i, j, v))
        .collect();
    triplets.extend(l.trace_row().into_iter().map(|(k, v)| faer::sparse::Triplet::new(pivot, k, v)));
    let a = faer::sparse::SparseColMat::<usize, C64>::try_new_from_triplets(n, n, &triplets)
        .map_err(|e| Error::SolveFailed(format!("{e:?}")))?;
    let gap = || l.spectral_gap(opts.gap_below);
    let lu = match a.sp_lu() {
        Ok(lu) => lu,
        Err(_) => {
            return Err(Error::NonUniqueSteadyState {
                residual: f64::INFINITY,
                gap: gap(),
            })
        }
    };
    let mut rhs = Mat::<C64>::zeros(n, 1);
    rhs[(pivot, 0)] = ONE;
    let x = lu.solve(&rhs);
    let v: Vec<C64> = (0..n).map(|i| x[(i, 0)]).collect();
    if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonUniqueSteadyState {
            residual: f64::INFINITY,
            gap: gap(),
        });
    }
    let raw = l.unvectorize(&v);
    let herm = raw.add(&raw.adjoint()).scale(C64::new(0.5, 0.0));
    let correction = raw.max_abs_diff(&herm);
    let hv = l.vectorize(&herm);
    let residual = l.apply(&hv).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if !(residual <= opts.tol) {
        return Err(Error::NonUniqueSteadyState {
            residual,
            gap: gap(),
        });
    }
    let rho = DensityMatrix::from_matrix(l.signature.clone(), herm)?;
    let min_eigenvalue = rho.min_eigenvalue(2048);
    Ok(SteadyStateResult {
        rho,
        residual,
        gap_estimate: if n <= opts.gap_below { gap() } else { None },
        hermitization_correction: correction,
        min_eigenvalue,
        positivity_tol: POSITIVITY_TOL,
        unknowns: n,
    })
}

/// Outcome of a restarted GMRES solve.
#[derive(Clone, Debug, PartialEq)]
pub struct KrylovSolution {
    pub x: Vec<C64>,
    /// `‖b − A x‖₂ / ‖b‖₂` at exit.
    pub relative_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Right-preconditioned restarted GMRES for `A x = b`. `apply(v, out)` writes
/// `A v`; `precond(v, out)` writes an approximation of `A⁻¹ v`.
pub fn gmres(
    n: usize,
    apply: &mut dyn FnMut(&[C64], &mut [C64]),
    precond: &mut dyn FnMut(&[C64], &mut [C64]),
    b: &[C64],
    tol: f64,
    restart: usize,
    max_iter: usize,
) -> KrylovSolution {
    let b_norm = norm(b).max(f64::MIN_POSITIVE);
    let mut x = vec![ZERO; n];
    let mut r = b.to_vec();
    let mut w = vec![ZERO; n];
    let mut z = vec![ZERO; n];
    let mut iterations = 0;
    let mut rel = norm(&r) / b_norm;
    while rel > tol && iterations < max_iter {
        let beta = norm(&r);
        let mut basis: Vec<Vec<C64>> = vec![r.iter().map(|v| v / beta).collect()];
        let mut h: Vec<Vec<C64>> = Vec::new();
        let (mut cs, mut sn): (Vec<C64>, Vec<C64>) = (Vec::new(), Vec::new());
        let mut g = vec![C64::new(beta, 0.0)];
        let mut zs: Vec<Vec<C64>> = Vec::new();
        for j in 0..restart {
            precond(&basis[j], &mut z);
            apply(&z, &mut w);
            zs.push(z.clone());
            iterations += 1;
            let mut col = vec![ZERO; j + 2];
            // modified Gram-Schmidt with one reorthogonalization pass
            for _ in 0..2 {
                for (i, v) in basis.iter().enumerate() {
                    let c = dot(v, &w);
                    col[i] += c;
                    w.iter_mut().zip(v).for_each(|(a, b)| *a -= c * b);
                }
            }
            let wn = norm(&w);
            col[j + 1] = C64::new(wn, 0.0);
            for i in 0..j {
                let t = cs[i].conj() * col[i] + sn[i].conj() * col[i + 1];
                col[i + 1] = -sn[i] * col[i] + cs[i] * col[i + 1];
                col[i] = t;
            }
            let (a, bb) = (col[j], col[j + 1]);
            let den = (a.norm_sqr() + bb.norm_sqr()).sqrt();
            let (c, s) = if den == 0.0 {
                (ONE, ZERO)
            } else {
                (a / den, bb / den)
            };
            col[j] = c.conj() * a + s.conj() * bb;
            col[j + 1] = ZERO;
            g.push(-s * g[j]);
            g[j] = c.conj() * g[j];
            cs.push(c);
            sn.push(s);
            h.push(col);
            rel = g[j + 1].norm() / b_norm;
            if rel <= tol || wn == 0.0 || iterations >= max_iter {
                break;
            }
            basis.push(w.iter().map(|v| v / wn).collect());
        }
        // back substitution on the triangular Hessenberg factor
        let m = h.len();
        let mut y = vec![ZERO; m];
        for i in (0..m).rev() {
            let mut acc = g[i];
            for k in i + 1..m {
                acc -= h[k][i] * y[k];
            }
            y[i] = acc / h[i][i];
        }
        for (k, zk) in zs.iter().enumerate() {
            x.iter_mut().zip(zk).for_each(|(a, b)| *a += y[k] * b);
        }
        apply(&x, &mut w);
        r.iter_mut().zip(b).zip(&w).for_each(|((ri, bi), wi)| *ri = bi - wi);
        rel = norm(&r) / b_norm;
        if m == 0 {
            break;
        }
    }
    KrylovSolution {
        x,
        relative_residual: rel,
        iterations,
        converged: rel <= tol,
    }
}

/// Flat bath inputs for the dressed-state master equation: `κⱼ = 2π dⱼ λⱼ²`
/// is taken as frequency independent.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DressedBath {
    pub kappa1: f64,
    pub kappa2: f64,
    pub t1: f64,
    pub t2: f64,
}

/// Transitions closer than this (relative to the largest level spacing) are
/// treated as unresolved.
pub const TRANSITION_RESOLUTION: f64 = 1e-9;

/// Matrix elements below this squared modulus are treated as selection-rule zeros.
pub const FORBIDDEN_BELOW: f64 = 1e-20;

/// Eigenstates of the light-matter Hamiltonian plus the two bath coupling
/// operators, all in the bare basis.
#[derive(Clone, Debug, PartialEq)]
pub struct DressedStates {
    pub signature: ModeSignature,
    pub energies: Vec<f64>,
    pub vectors: Vec<Vec<C64>>,
    pub cavity_coupling: LinearOperator,
    pub matter_coupling: LinearOperator,
}

impl DressedStates {
    /// Rabi spectrum with `C₁ = a + a†` and `C₂ = σ₊ + σ₋`.
    pub fn from_rabi(spec: &DressedSpectrum) -> Result<Self> {
        let sig = spec.signature();
        let a = embed(&annihilation(spec.n_fock)?, 0, &sig)?;
        let (_, sp, sm) = pauli_ops();
        let sx = embed(&sp.add(&sm)?, 1, &sig)?;
        Ok(Self {
            energies: spec.energies.clone(),
            vectors: spec.states.clone(),
            cavity_coupling: a.add(&a.dagger())?,
            matter_coupling: sx,
            signature: sig,
        })
    }
}

/// Where the jump operators `|j⟩⟨k|` live.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DressedRepresentation {
    /// Signature `[K]` spanned by the retained eigenstates.
    Projected,
    /// The bare light-matter space, `|j⟩⟨k|` built from the eigenvectors.
    Bare,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DressedTransition {
    pub lower: usize,
    pub upper: usize,
    /// 1 for the cavity bath, 2 for the matter bath.
    pub channel: u8,
    pub frequency: f64,
    /// `κᵢ |⟨lower|Cᵢ|upper⟩|²`.
    pub gamma: f64,
    pub n_bar: f64,
}

pub struct DressedMasterEquation {
    pub transitions: Vec<DressedTransition>,
    pub dissipators: Vec<Dissipator>,
}

impl DressedMasterEquation {
    /// Total downward rate `lower ← upper` summed over channels, without the thermal factor.
    pub fn gamma(&self, lower: usize, upper: usize) -> f64 {
        self.transitions
            .iter()
            .filter(|t| t.lower == lower && t.upper == upper)
            .map(|t| t.gamma)
            .sum()
    }
}

/// One dissipator per allowed transition `j < k` and channel. Rates are
/// `Γᵢ^{jk} = κᵢ |⟨j|Cᵢ|k⟩|²`, scaled by `1 + n̄(Δ_kj, Tᵢ)` downwards and
/// `n̄(Δ_kj, Tᵢ)` upwards. Selection-rule zeros are dropped.
pub fn dressed_master_equation(
    states: &DressedStates,
    bath: &DressedBath,
    representation: DressedRepresentation,
) -> Result<DressedMasterEquation> {
    for (name, v) in [("kappa1", bath.kappa1), ("kappa2", bath.kappa2), ("t1", bath.t1), ("t2", bath.t2)] {
        if !(v >= 0.0) {
            return Err(Error::NegativeRate { name, value: v });
        }
    }
    let k = states.energies.len();
    let span = states.energies[k - 1] - states.energies[0];
    let res = TRANSITION_RESOLUTION * span.abs().max(1.0);
    let (sig, d) = match representation {
        DressedRepresentation::Projected => (ModeSignature::single(k)?, k),
        DressedRepresentation::Bare => (states.signature.clone(), states.signature.total()),
    };
    let jump = |lower: usize, upper: usize| -> Result<LinearOperator> {
        let m = match representation {
            DressedRepresentation::Projected => SparseMatrix::from_triplets(k, k, [(lower, upper, ONE)]),
            DressedRepresentation::Bare => {
                let (l, u) = (&states.vectors[lower], &states.vectors[upper]);
                let trip = l.iter().enumerate().filter(|(_, x)| x.norm() > 1e-14).flat_map(|(i, &x)| {
                    u.iter()
                        .enumerate()
                        .filter(|(_, y)| y.norm() > 1e-14)
                        .map(move |(j, &y)| (i, j, x * y.conj()))
                });
                SparseMatrix::from_triplets(d, d, trip)
            }
        };
        LinearOperator::new(sig.clone(), m)
    };
    let mut transitions = Vec::new();
    let mut dissipators = Vec::new();
    for upper in 1..k {
        for lower in 0..upper {
            let delta = states.energies[upper] - states.energies[lower];
            if delta.abs() < res {
                return Err(Error::DegenerateTransition { lower, upper, delta });
            }
            for (channel, kappa, t, op) in [
                (1u8, bath.kappa1, bath.t1, &states.cavity_coupling),
                (2u8, bath.kappa2, bath.t2, &states.matter_coupling),
            ] {
                let m2 = op.matrix_element(&states.vectors[lower], &states.vectors[upper]).norm_sqr();
                if m2 < FORBIDDEN_BELOW || kappa == 0.0 {
                    continue;
                }
                let gamma = kappa * m2;
                let n = bose(delta, t);
                transitions.push(DressedTransition {
                    lower,
                    upper,
                    channel,
                    frequency: delta,
                    gamma,
                    n_bar: n,
                });
                dissipators.push(Dissipator::new(jump(lower, upper)?, gamma * (1.0 + n), gamma * n)?);
            }
        }
    }
    Ok(DressedMasterEquation {
        transitions,
        dissipators,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolutionOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_initial: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for EvolutionOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-10,
            h_initial: 1e-3,
            h_min: 1e-12,
            h_max: f64::INFINITY,
            max_steps: 10_000_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// `expectations[o][t]` for observable `o` at `times[t]`.
    pub expectations: Vec<Vec<C64>>,
    /// Trace and purity at each recorded time.
    pub trace: Vec<f64>,
    pub purity: Vec<f64>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub final_state: Vec<C64>,
}

/// Time-dependent generator `L(t) = L₀ + f(t) L₁`.
pub struct TimeDependentLiouvillian<'a> {
    pub l0: Liouvillian,
    pub l1: Option<SparseMatrix>,
    pub modulation: Box<dyn Fn(f64) -> f64 + Sync + 'a>,
}

impl<'a> TimeDependentLiouvillian<'a> {
    /// `L₀` from `h0` and the dissipators, `L₁ = −i[h1, ·]`.
    pub fn new(
        h0: &LinearOperator,
        h1: Option<&LinearOperator>,
        modulation: impl Fn(f64) -> f64 + Sync + 'a,
        dissipators: &[Dissipator],
    ) -> Result<Self> {
        Ok(Self {
            l0: build_liouvillian(h0, dissipators)?,
            l1: h1.map(commutator_superop),
            modulation: Box::new(modulation),
        })
    }

    fn rhs(&self, t: f64, y: &[C64], out: &mut [C64]) {
        self.l0.superop.matvec(y, out);
        if let Some(l1) = &self.l1 {
            let f = (self.modulation)(t);
            if f != 0.0 {
                l1.matvec_acc(C64::new(f, 0.0), y, out);
            }
        }
    }
}

// Dormand–Prince 5(4) tableau
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrates the vectorized master equation with adaptive Dormand–Prince
/// 5(4) steps, landing exactly on every time in `t_grid` (ascending, first
/// entry is the initial time) and recording `tr(ρ O)` for each observable.
pub fn time_evolve(
    gen: &TimeDependentLiouvillian<'_>,
    rho0: &DensityMatrix,
    t_grid: &[f64],
    observables: &[LinearOperator],
    opts: &EvolutionOptions,
) -> Result<Trajectory> {
    let l = &gen.l0;
    if rho0.signature() != &l.signature {
        return Err(Error::SignatureMismatch {
            left: l.signature.dims().to_vec(),
            right: rho0.signature().dims().to_vec(),
        });
    }
    let n = l.unknowns();
    let mut y = l.vectorize(rho0.matrix());
    let mut k: Vec<Vec<C64>> = vec![vec![ZERO; n]; 7];
    let mut tmp = vec![ZERO; n];
    let mut y5 = vec![ZERO; n];

    let mut traj = Trajectory {
        times: Vec::with_capacity(t_grid.len()),
        expectations: vec![Vec::with_capacity(t_grid.len()); observables.len()],
        trace: Vec::with_capacity(t_grid.len()),
        purity: Vec::with_capacity(t_grid.len()),
        accepted_steps: 0,
        rejected_steps: 0,
        final_state: Vec::new(),
    };
    let record = |traj: &mut Trajectory, t: f64, y: &[C64]| {
        let rho = l.unvectorize(y);
        traj.times.push(t);
        for (slot, o) in observables.iter().enumerate() {
            traj.expectations[slot].push(o.matrix().trace_product(&rho));
        }
        traj.trace.push(rho.trace().re);
        traj.purity.push(rho.trace_product(&rho).re);
    };

    let Some(&t_start) = t_grid.first() else {
        traj.final_state = y;
        return Ok(traj);
    };
    let mut t = t_start;
    record(&mut traj, t, &y);
    let mut h = opts.h_initial;
    let mut have_k0 = false;
    for &target in &t_grid[1..] {
        while t < target {
            if traj.accepted_steps + traj.rejected_steps >= opts.max_steps {
                return Err(Error::BudgetExceeded {
                    steps: opts.max_steps,
                    t,
                });
            }
            let remaining = target - t;
            let hit = h >= remaining;
            let step = if hit { remaining } else { h.min(opts.h_max) };
            if !have_k0 {
                gen.rhs(t, &y, &mut k[0]);
                have_k0 = true;
            }
            for s in 1..7 {
                for i in 0..n {
                    let mut acc = y[i];
                    for (r, kr) in k.iter().enumerate().take(s) {
                        let a = A[s][r];
                        if a != 0.0 {
                            acc += kr[i] * (a * step);
                        }
                    }
                    tmp[i] = acc;
                }
                let (head, tail) = k.split_at_mut(s);
                let _ = head;
                gen.rhs(t + C[s] * step, &tmp, &mut tail[0]);
            }
            let mut err: f64 = 0.0;
            for i in 0..n {
                let mut s5 = y[i];
                let mut e = ZERO;
                for s in 0..7 {
                    s5 += k[s][i] * (B5[s] * step);
                    e += k[s][i] * ((B5[s] - B4[s]) * step);
                }
                y5[i] = s5;
                let scale = opts.atol + opts.rtol * y[i].norm().max(s5.norm());
                err = err.max(e.norm() / scale);
            }
            if err <= 1.0 {
                t = if hit { target } else { t + step };
                std::mem::swap(&mut y, &mut y5);
                // first-same-as-last: stage 7 was evaluated at the accepted point
                k.swap(0, 6);
                traj.accepted_steps += 1;
            } else {
                traj.rejected_steps += 1;
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if err <= 1.0 && hit {
                // keep the pre-clamp step length for the next interval
                h = h.max(step * factor);
            } else {
                h = step * factor;
            }
            if h < opts.h_min {
                return Err(Error::StepSizeUnderflow { t, h });
            }
        }
        record(&mut traj, t, &y);
    }
    traj.final_state = y;
    Ok(traj)
}

/// Mean of `values` over the last `periods` whole periods of length `period`,
/// using trapezoidal weights on the recorded `times`.
pub fn period_average(times: &[f64], values: &[C64], period: f64, periods: usize) -> Option<C64> {
    let t_end = *times.last()?;
    let t_start = t_end - period * periods as f64;
    if times[0] > t_start + 1e-12 * period {
        return None;
    }
    let mut acc = ZERO;
    let mut span = 0.0;
    for w in 0..times.len().saturating_sub(1) {
        let (t0, t1) = (times[w], times[w + 1]);
        if t1 <= t_start + 1e-12 * period {
            continue;
        }
        let dt = t1 - t0;
        acc += (values[w] + values[w + 1]) * (0.5 * dt);
        span += dt;
    }
    (span > 0.0).then(|| acc / span)
}

/// Polariton-number labels `(n₊, n₋)` flattened as `n₊·d₋ + n₋` for the
/// effective `(plus, minus, mechanics)` signature.
pub fn polariton_labels(sig: &ModeSignature) -> Vec<usize> {
    let d = sig.dims();
    (0..sig.total())
        .map(|i| {
            let digits = sig.digits_of(i);
            digits[0] * d[1] + digits[1]
        })
        .collect()
}

/// Set of distinct labels; handy for reports.
pub fn label_count(labels: &[usize]) -> usize {
    labels.iter().collect::<HashSet<_>>().len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{annihilation, embed, expectation, number};

    fn decay(dim: usize, kappa: f64, n_bar: f64) -> (LinearOperator, Vec<Dissipator>) {
        let a = annihilation(dim).unwrap();
        let h = LinearOperator::zeros(a.signature());
        (h, vec![Dissipator::thermal(a, kappa, n_bar).unwrap()])
    }

    #[test]
    fn pure_decay_to_vacuum() {
        let (h, d) = decay(2, 1.0, 0.0);
        let l = build_liouvillian(&h, &d).unwrap();
        let ss = steady_state(&l, &SteadyStateOptions::default()).unwrap();
        assert!((ss.rho.matrix().get(0, 0) - ONE).norm() < 1e-12);
        assert!(ss.rho.matrix().get(1, 1).norm() < 1e-12);
        assert!(ss.gap_estimate.unwrap() > 0.0);
    }

    #[test]
    fn thermal_fixed_point() {
        let (h, d) = decay(20, 0.7, 0.5);
        let l = build_liouvillian(&h, &d).unwrap();
        let ss = steady_state(&l, &SteadyStateOptions::default()).unwrap();
        let n = expectation(&ss.rho, &number(20).unwrap()).unwrap().re;
        assert!((n - 0.5).abs() < 1e-6, "{n}");
        assert!(ss.rho.check().is_valid());
    }

    #[test]
    fn negative_rate_rejected() {
        let a = annihilation(3).unwrap();
        assert!(matches!(Dissipator::new(a, -1.0, 0.0), Err(Error::NegativeRate { .. })));
    }

    #[test]
    fn sectored_matches_full_on_block_structure() {
        let sig = ModeSignature::new(vec![3, 4]).unwrap();
        let a = embed(&annihilation(3).unwrap(), 0, &sig).unwrap();
        let b = embed(&annihilation(4).unwrap(), 1, &sig).unwrap();
        let na = a.dagger().mul(&a).unwrap();
        let h = na
            .scale(1.3)
            .add(&b.dagger().mul(&b).unwrap().scale(0.4))
            .unwrap()
            .add(&na.mul(&b.add(&b.dagger()).unwrap()).unwrap().scale(0.2))
            .unwrap();
        let diss = vec![
            Dissipator::thermal(a.clone(), 0.3, 0.2).unwrap(),
            Dissipator::thermal(b.clone(), 0.5, 0.1).unwrap(),
        ];
        let labels: Vec<usize> = (0..sig.total()).map(|i| sig.digits_of(i)[0]).collect();
        let full = build_liouvillian(&h, &diss).unwrap();
        let sect = build_liouvillian_sectored(&h, &diss, &labels).unwrap();
        assert!(sect.trace_preservation_residual() < 1e-12);
        let opts = SteadyStateOptions::default();
        let r_full = steady_state(&full, &opts).unwrap();
        let r_sect = steady_state(&sect, &opts).unwrap();
        assert!(r_full.rho.matrix().max_abs_diff(r_sect.rho.matrix()) < 1e-10);

        // a coherent drive on `a` breaks the label structure
        let drive = h.add(&a.add(&a.dagger()).unwrap().scale(0.1)).unwrap();
        assert_eq!(
            build_liouvillian_sectored(&drive, &diss, &labels).unwrap_err(),
            Error::NotInvariant
        );
    }

    #[test]
    fn memory_cap() {
        let (h, d) = decay(10, 1.0, 0.0);
        let l = build_liouvillian(&h, &d).unwrap();
        let opts = SteadyStateOptions {
            max_unknowns: 50,
            ..Default::default()
        };
        assert!(matches!(
            steady_state(&l, &opts),
            Err(Error::MemoryCapExceeded { required: 100, cap: 50 })
        ));
    }

    #[test]
    fn non_unique_steady_state_detected() {
        // two decoupled qubits without dissipation: every diagonal state is stationary
        let h = LinearOperator::new(
            ModeSignature::single(2).unwrap(),
            SparseMatrix::from_diagonal(&[ZERO, ONE]),
        )
        .unwrap();
        let l = build_liouvillian(&h, &[]).unwrap();
        assert!(matches!(
            steady_state(&l, &SteadyStateOptions::default()),
            Err(Error::NonUniqueSteadyState { .. })
        ));
    }

    #[test]
    fn period_average_of_cosine() {
        let period = 2.0;
        let times: Vec<f64> = (0..=400).map(|i| i as f64 * 0.01).collect();
        let values: Vec<C64> = times
            .iter()
            .map(|t| C64::new((std::f64::consts::PI * t).cos() + 0.5, 0.0))
            .collect();
        let avg = period_average(&times, &values, period, 1).unwrap();
        assert!((avg.re - 0.5).abs() < 1e-4);
    }
}
