//! Lowest eigenpairs of Hermitian operators.
//!
//! Two solvers are offered. The dense path hands the whole matrix to faer's
//! self-adjoint decomposition. The sparse path runs block subspace iteration
//! on `(H - σ)^{-1}` with a sparse LU factorization and Rayleigh-Ritz
//! extraction, re-shifting once the leading Ritz value has settled.

use faer::prelude::*;
use faer::{Mat, Side};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::LinearOperator;
use crate::sparse::SparseMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EigenSolver {
    Dense,
    ShiftInvert,
    /// Dense up to [`DENSE_LIMIT`], shift-invert above.
    Auto,
}

pub const DENSE_LIMIT: usize = 800;

/// Phase convention applied to every returned eigenvector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseConvention {
    /// The largest-magnitude amplitude is made real and positive. Amplitudes
    /// within a relative 1e-9 of the maximum count as ties; the lowest index wins.
    LargestAmplitudeRealPositive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Eigenpairs {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<C64>>,
    pub solver: EigenSolver,
    pub phase: PhaseConvention,
}

const HERMITIAN_TOL: f64 = 1e-12;

pub fn lowest_eigenpairs(h: &LinearOperator, k: usize, solver: EigenSolver) -> Result<Eigenpairs> {
    let n = h.dim();
    if k == 0 || k > n {
        return Err(Error::InvalidDimension {
            dim: k,
            reason: "requested eigenpair count must be in 1..=dim",
        });
    }
    let deviation = h.hermiticity_deviation();
    let scale = h.matrix().max_abs().max(1.0);
    if deviation > HERMITIAN_TOL * scale {
        return Err(Error::NotHermitian { deviation });
    }
    let chosen = match solver {
        EigenSolver::Auto if n <= DENSE_LIMIT => EigenSolver::Dense,
        EigenSolver::Auto => EigenSolver::ShiftInvert,
        s => s,
    };
    let (values, mut vectors) = match chosen {
        EigenSolver::Dense => dense(h.matrix(), k)?,
        _ => shift_invert(h.matrix(), k)?,
    };
    vectors.iter_mut().for_each(|v| fix_phase(v));
    Ok(Eigenpairs {
        values,
        vectors,
        solver: chosen,
        phase: PhaseConvention::LargestAmplitudeRealPositive,
    })
}

/// Normalizes and rotates `v` so its largest amplitude is real positive.
pub fn fix_phase(v: &mut [C64]) {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    let pivot = v
        .iter()
        .position(|z| z.norm() >= max * (1.0 - 1e-9))
        .unwrap_or(0);
    let rot = v[pivot].conj() / v[pivot].norm() / norm;
    v.iter_mut().for_each(|z| *z *= rot);
    v[pivot] = C64::new(v[pivot].re, 0.0);
}

fn dense(h: &SparseMatrix, k: usize) -> Result<(Vec<f64>, Vec<Vec<C64>>)> {
    let m = h.to_dense();
    let evd = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::EigenNonConvergence(format!("{e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let values = (0..k).map(|i| s[i].re).collect();
    let vectors = (0..k)
        .map(|j| (0..m.nrows()).map(|i| u[(i, j)]).collect())
        .collect();
    Ok((values, vectors))
}

fn gershgorin_lower(h: &SparseMatrix) -> f64 {
    (0..h.nrows())
        .map(|i| {
            let mut diag = 0.0;
            let mut off = 0.0;
            for (j, v) in h.row(i) {
                if i == j {
                    diag = v.re;
                } else {
                    off += v.norm();
                }
            }
            diag - off
        })
        .fold(f64::INFINITY, f64::min)
}

fn orthonormalize(v: &mut Mat<C64>) {
    let (n, m) = (v.nrows(), v.ncols());
    // two passes of modified Gram-Schmidt
    for _ in 0..2 {
        for j in 0..m {
            for i in 0..j {
                let mut dot = C64::new(0.0, 0.0);
                for r in 0..n {
                    dot += v[(r, i)].conj() * v[(r, j)];
                }
                for r in 0..n {
                    let vi = v[(r, i)];
                    v[(r, j)] -= dot * vi;
                }
            }
            let norm = (0..n).map(|r| v[(r, j)].norm_sqr()).sum::<f64>().sqrt();
            for r in 0..n {
                v[(r, j)] /= norm;
            }
        }
    }
}

fn apply(h: &SparseMatrix, v: &Mat<C64>) -> Mat<C64> {
    let (n, m) = (v.nrows(), v.ncols());
    let mut out = Mat::<C64>::zeros(n, m);
    let mut x = vec![C64::new(0.0, 0.0); n];
    let mut y = vec![C64::new(0.0, 0.0); n];
    for j in 0..m {
        for r in 0..n {
            x[r] = v[(r, j)];
        }
        h.matvec(&x, &mut y);
        for r in 0..n {
            out[(r, j)] = y[r];
        }
    }
    out
}

fn shift_invert(h: &SparseMatrix, k: usize) -> Result<(Vec<f64>, Vec<Vec<C64>>)> {
    let n = h.nrows();
    let m = (k + 6).min(n);
    let tol = 1e-12 * h.max_abs().max(1.0);
    let max_iter = 3000;

    // deterministic start block
    let mut v = Mat::<C64>::from_fn(n, m, |r, c| {
        let x = ((r + 1) * (c + 3)) as f64;
        C64::new((0.37 * x).sin() + 0.1, (0.11 * x).cos() * 0.5)
    });
    orthonormalize(&mut v);

    let factor = |sigma: f64| -> Result<_> {
        let shifted = h.sub(&SparseMatrix::identity(n).scale(C64::new(sigma, 0.0)));
        shifted
            .to_faer_csc()?
            .sp_lu()
            .map_err(|e| Error::EigenNonConvergence(format!("sparse LU failed: {e:?}")))
    };
    let mut sigma = gershgorin_lower(h) - 1e-3 * h.max_abs().max(1.0);
    let mut lu = factor(sigma)?;
    let mut reshifted = false;

    for _ in 0..max_iter {
        let mut w = lu.solve(&v);
        orthonormalize(&mut w);
        let hw = apply(h, &w);
        let t = w.adjoint() * &hw;
        let t = Mat::<C64>::from_fn(m, m, |i, j| (t[(i, j)] + t[(j, i)].conj()) * 0.5);
        let evd = t
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::EigenNonConvergence(format!("{e:?}")))?;
        let theta: Vec<f64> = (0..m).map(|i| evd.S().column_vector()[i].re).collect();
        v = &w * evd.U();
        let hv = &hw * evd.U();
        let worst = (0..k)
            .map(|j| {
                (0..n)
                    .map(|r| (hv[(r, j)] - v[(r, j)] * theta[j]).norm_sqr())
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max);
        if worst < tol {
            let vectors = (0..k).map(|j| (0..n).map(|r| v[(r, j)]).collect()).collect();
            return Ok((theta[..k].to_vec(), vectors));
        }
        if !reshifted && worst < 1e-4 && m > 1 {
            let gap = (theta[1] - theta[0]).max(1e-6);
            sigma = theta[0] - gap;
            lu = factor(sigma)?;
            reshifted = true;
        }
    }
    Err(Error::EigenNonConvergence(format!(
        "shift-invert subspace iteration did not reach {tol:.1e} in {max_iter} sweeps"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::ModeSignature;

    fn chain(n: usize) -> LinearOperator {
        let t = (0..n).flat_map(|i| {
            let mut v = vec![(i, i, C64::new((i as f64).sqrt(), 0.0))];
            if i + 1 < n {
                v.push((i, i + 1, C64::new(0.3, 0.2)));
                v.push((i + 1, i, C64::new(0.3, -0.2)));
            }
            v
        });
        LinearOperator::new(
            ModeSignature::single(n).unwrap(),
            SparseMatrix::from_triplets(n, n, t),
        )
        .unwrap()
    }

    #[test]
    fn dense_and_shift_invert_agree() {
        let h = chain(120);
        let d = lowest_eigenpairs(&h, 4, EigenSolver::Dense).unwrap();
        let s = lowest_eigenpairs(&h, 4, EigenSolver::ShiftInvert).unwrap();
        for j in 0..4 {
            assert!((d.values[j] - s.values[j]).abs() < 1e-9);
            let diff = d.vectors[j]
                .iter()
                .zip(&s.vectors[j])
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            assert!(diff < 1e-9, "vector {j} differs by {diff}");
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = SparseMatrix::from_triplets(2, 2, [(0, 1, C64::new(1.0, 0.0))]);
        let h = LinearOperator::new(ModeSignature::single(2).unwrap(), m).unwrap();
        assert!(matches!(
            lowest_eigenpairs(&h, 1, EigenSolver::Dense),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn phase_fix_picks_lowest_index_on_ties() {
        let mut v = vec![C64::new(0.0, 0.5), C64::new(0.0, -0.5)];
        v.iter_mut().for_each(|z| *z *= 2f64.sqrt());
        fix_phase(&mut v);
        assert!((v[0] - C64::new(2f64.sqrt() / 2.0, 0.0)).norm() < 1e-15);
        assert_eq!(v[0].im, 0.0);
        assert!((v[1] + C64::new(2f64.sqrt() / 2.0, 0.0)).norm() < 1e-15);
    }
}
