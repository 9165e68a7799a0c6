//! Truncated Fock-space operator algebra.
//!
//! Basis conventions used across the crate:
//!
//! * bosonic modes use the Fock basis in ascending order, `|0⟩, |1⟩, …, |d-1⟩`;
//! * a two-level system is ordered `(g, e)`, so index 0 is the ground state;
//! * in a multi-mode [`ModeSignature`] slot 0 is the leftmost tensor factor,
//!   i.e. the slowest-varying digit of the composite index.
//!
//! Operators never re-truncate themselves. `a a†` on a truncated mode is not
//! `a† a + 1` in the top level; whoever picks the truncation owns that check.

use faer::Side;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Local dimensions of each subsystem, slot 0 leftmost.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModeSignature {
    dims: Vec<usize>,
}

impl ModeSignature {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidDimension {
                dim: 0,
                reason: "a signature needs at least one slot",
            });
        }
        if let Some(&d) = dims.iter().find(|&&d| d == 0) {
            return Err(Error::InvalidDimension {
                dim: d,
                reason: "every local dimension must be at least 1",
            });
        }
        Ok(Self { dims })
    }

    pub fn single(dim: usize) -> Result<Self> {
        Self::new(vec![dim])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn slots(&self) -> usize {
        self.dims.len()
    }

    pub fn total(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn tensor(&self, other: &Self) -> Self {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        Self { dims }
    }

    /// Composite index of a product basis state.
    pub fn index_of(&self, digits: &[usize]) -> usize {
        assert_eq!(digits.len(), self.dims.len());
        digits
            .iter()
            .zip(&self.dims)
            .fold(0, |acc, (&d, &n)| acc * n + d)
    }

    /// Inverse of [`index_of`](Self::index_of).
    pub fn digits_of(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        for (slot, &n) in self.dims.iter().enumerate().rev() {
            out[slot] = index % n;
            index /= n;
        }
        out
    }
}

/// Sparse operator on the space described by `signature`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearOperator {
    signature: ModeSignature,
    matrix: SparseMatrix,
}

impl LinearOperator {
    pub fn new(signature: ModeSignature, matrix: SparseMatrix) -> Result<Self> {
        let n = signature.total();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: matrix.nrows().max(matrix.ncols()),
            });
        }
        Ok(Self { signature, matrix })
    }

    pub fn identity(signature: &ModeSignature) -> Self {
        Self {
            matrix: SparseMatrix::identity(signature.total()),
            signature: signature.clone(),
        }
    }

    pub fn zeros(signature: &ModeSignature) -> Self {
        let n = signature.total();
        Self {
            matrix: SparseMatrix::zeros(n, n),
            signature: signature.clone(),
        }
    }

    pub fn signature(&self) -> &ModeSignature {
        &self.signature
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.signature.total()
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.matrix.get(i, j)
    }

    pub fn dagger(&self) -> Self {
        Self {
            signature: self.signature.clone(),
            matrix: self.matrix.adjoint(),
        }
    }

    pub fn tensor(&self, other: &Self) -> Self {
        Self {
            signature: self.signature.tensor(&other.signature),
            matrix: self.matrix.kron(&other.matrix),
        }
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.signature != other.signature {
            return Err(Error::SignatureMismatch {
                left: self.signature.dims.clone(),
                right: other.signature.dims.clone(),
            });
        }
        Ok(())
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self {
            signature: self.signature.clone(),
            matrix: self.matrix.matmul(&other.matrix),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self {
            signature: self.signature.clone(),
            matrix: self.matrix.add(&other.matrix),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self {
            signature: self.signature.clone(),
            matrix: self.matrix.sub(&other.matrix),
        })
    }

    pub fn scale(&self, s: f64) -> Self {
        self.scale_c(C64::new(s, 0.0))
    }

    pub fn scale_c(&self, s: C64) -> Self {
        Self {
            signature: self.signature.clone(),
            matrix: self.matrix.scale(s),
        }
    }

    /// `[self, other]`.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.mul(other)?.sub(&other.mul(self)?)
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        self.matrix.max_abs_diff(&self.matrix.adjoint())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_deviation() <= tol
    }

    /// `self |psi⟩`.
    pub fn apply(&self, psi: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.dim()];
        self.matrix.matvec(psi, &mut out);
        out
    }

    /// `⟨left| self |right⟩`.
    pub fn matrix_element(&self, left: &[C64], right: &[C64]) -> C64 {
        let v = self.apply(right);
        left.iter().zip(&v).map(|(l, r)| l.conj() * r).sum()
    }
}

/// Bosonic annihilation operator on a `dim`-level truncated mode.
pub fn annihilation(dim: usize) -> Result<LinearOperator> {
    if dim < 2 {
        return Err(Error::InvalidDimension {
            dim,
            reason: "a truncated mode needs at least two levels",
        });
    }
    let matrix = SparseMatrix::from_triplets(
        dim,
        dim,
        (1..dim).map(|n| (n - 1, n, C64::new((n as f64).sqrt(), 0.0))),
    );
    LinearOperator::new(ModeSignature::single(dim)?, matrix)
}

/// `a† a` on a `dim`-level mode.
pub fn number(dim: usize) -> Result<LinearOperator> {
    let diag: Vec<C64> = (0..dim).map(|n| C64::new(n as f64, 0.0)).collect();
    LinearOperator::new(ModeSignature::single(dim)?, SparseMatrix::from_diagonal(&diag))
}

/// `(σ_z, σ₊, σ₋)` in the `(g, e)` basis: `σ_z|e⟩ = |e⟩`, `σ₊|g⟩ = |e⟩`.
pub fn pauli_ops() -> (LinearOperator, LinearOperator, LinearOperator) {
    let sig = ModeSignature { dims: vec![2] };
    let sz = SparseMatrix::from_diagonal(&[-ONE, ONE]);
    let sp = SparseMatrix::from_triplets(2, 2, [(1, 0, ONE)]);
    let sm = SparseMatrix::from_triplets(2, 2, [(0, 1, ONE)]);
    (
        LinearOperator { signature: sig.clone(), matrix: sz },
        LinearOperator { signature: sig.clone(), matrix: sp },
        LinearOperator { signature: sig, matrix: sm },
    )
}

/// Places a single-slot operator into `slot` of `signature`, identity elsewhere.
pub fn embed(op: &LinearOperator, slot: usize, signature: &ModeSignature) -> Result<LinearOperator> {
    if slot >= signature.slots() {
        return Err(Error::SlotOutOfRange {
            slot,
            len: signature.slots(),
        });
    }
    let local = signature.dims[slot];
    if op.dim() != local {
        return Err(Error::DimensionMismatch {
            expected: local,
            found: op.dim(),
        });
    }
    let left: usize = signature.dims[..slot].iter().product();
    let right: usize = signature.dims[slot + 1..].iter().product();
    let matrix = SparseMatrix::identity(left)
        .kron(&op.matrix)
        .kron(&SparseMatrix::identity(right));
    LinearOperator::new(signature.clone(), matrix)
}

/// Density operator. Stored sparse so block-structured steady states of large
/// spaces stay cheap.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrix {
    signature: ModeSignature,
    matrix: SparseMatrix,
}

/// Tolerances a [`DensityMatrix`] is checked against.
pub const HERMITICITY_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
pub const POSITIVITY_TOL: f64 = 1e-8;

/// Outcome of [`DensityMatrix::check`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DensityCheck {
    pub hermiticity_deviation: f64,
    pub trace_error: f64,
    /// `None` when some block was too large to diagonalize densely.
    pub min_eigenvalue: Option<f64>,
}

impl DensityCheck {
    pub fn is_valid(&self) -> bool {
        self.hermiticity_deviation <= HERMITICITY_TOL
            && self.trace_error <= TRACE_TOL
            && self.min_eigenvalue.is_none_or(|e| e >= -POSITIVITY_TOL)
    }
}

impl DensityMatrix {
    /// Wraps a matrix without checking the density-matrix invariants; see [`check`](Self::check).
    pub fn from_matrix(signature: ModeSignature, matrix: SparseMatrix) -> Result<Self> {
        let n = signature.total();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: matrix.nrows(),
            });
        }
        Ok(Self { signature, matrix })
    }

    pub fn pure(signature: ModeSignature, psi: &[C64]) -> Result<Self> {
        if psi.len() != signature.total() {
            return Err(Error::DimensionMismatch {
                expected: signature.total(),
                found: psi.len(),
            });
        }
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        let nz: Vec<(usize, C64)> = psi
            .iter()
            .copied()
            .enumerate()
            .filter(|(_, z)| z.norm() > 0.0)
            .collect();
        let matrix = SparseMatrix::from_triplets(
            psi.len(),
            psi.len(),
            nz.iter()
                .flat_map(|&(i, a)| nz.iter().map(move |&(j, b)| (i, j, a * b.conj() / norm))),
        );
        Ok(Self { signature, matrix })
    }

    /// Bose-thermal state of a single truncated mode, renormalized on the truncation.
    pub fn thermal(dim: usize, n_bar: f64) -> Result<Self> {
        let sig = ModeSignature::single(dim)?;
        let mut p: Vec<f64> = if n_bar == 0.0 {
            let mut v = vec![0.0; dim];
            v[0] = 1.0;
            v
        } else {
            let r = n_bar / (1.0 + n_bar);
            (0..dim).map(|n| r.powi(n as i32)).collect()
        };
        let z: f64 = p.iter().sum();
        p.iter_mut().for_each(|x| *x /= z);
        let diag: Vec<C64> = p.into_iter().map(|x| C64::new(x, 0.0)).collect();
        Ok(Self {
            signature: sig,
            matrix: SparseMatrix::from_diagonal(&diag),
        })
    }

    pub fn tensor(&self, other: &Self) -> Self {
        Self {
            signature: self.signature.tensor(&other.signature),
            matrix: self.matrix.kron(&other.matrix),
        }
    }

    pub fn signature(&self) -> &ModeSignature {
        &self.signature
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn purity(&self) -> f64 {
        self.matrix.trace_product(&self.matrix).re
    }

    /// `(ρ + ρ†)/2`.
    pub fn hermitized(&self) -> Self {
        Self {
            signature: self.signature.clone(),
            matrix: self
                .matrix
                .add(&self.matrix.adjoint())
                .scale(C64::new(0.5, 0.0)),
        }
    }

    /// Smallest eigenvalue, computed block by block over the connected
    /// components of the sparsity pattern. Blocks above `max_block` are skipped
    /// and the result is `None`.
    pub fn min_eigenvalue(&self, max_block: usize) -> Option<f64> {
        let mut min = f64::INFINITY;
        for block in self.matrix.connected_components() {
            if block.len() > max_block {
                return None;
            }
            let mut pos = std::collections::HashMap::with_capacity(block.len());
            for (k, &i) in block.iter().enumerate() {
                pos.insert(i, k);
            }
            let mut m = faer::Mat::<C64>::zeros(block.len(), block.len());
            for (k, &i) in block.iter().enumerate() {
                for (j, v) in self.matrix.row(i) {
                    m[(k, pos[&j])] = v;
                }
            }
            let eig = m.self_adjoint_eigenvalues(Side::Lower).ok()?;
            min = min.min(eig[0]);
        }
        Some(min)
    }

    pub fn check(&self) -> DensityCheck {
        DensityCheck {
            hermiticity_deviation: self.matrix.max_abs_diff(&self.matrix.adjoint()),
            trace_error: (self.trace() - ONE).norm(),
            min_eigenvalue: self.min_eigenvalue(2048),
        }
    }
}

/// `tr(ρ O)`. The imaginary part is kept; for Hermitian `O` callers may assert it is small.
pub fn expectation(rho: &DensityMatrix, op: &LinearOperator) -> Result<C64> {
    if rho.signature != op.signature {
        return Err(Error::SignatureMismatch {
            left: rho.signature.dims.clone(),
            right: op.signature.dims.clone(),
        });
    }
    Ok(rho.matrix.trace_product(&op.matrix))
}
