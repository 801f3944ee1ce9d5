//! Symmetric eigenvalues by cyclic Jacobi, plus Hermitian eigenvalues and
//! singular values of complex matrices through the real 2d x 2d embedding
//! `[[X, -Y], [Y, X]]` of `A = X + iY`. The embedding is multiplicative and
//! maps adjoints to transposes, so the spectrum of a Hermitian `A` (and the
//! singular values of any `A`) appear in the embedding with multiplicity two.
//!
//! Dimensions in this crate stay small (experiments run at dim <= 16), where
//! Jacobi is simple, robust, and accurate to a few ulps.

use num_traits::{Float, Zero};

use crate::linalg::matrix::Matrix;
use crate::scalar::{RealScalar, Scalar, ScalarKind};

const MAX_SWEEPS: usize = 100;

/// Eigenvalues of a real symmetric matrix, sorted descending.
///
/// Symmetry of the input is the caller's responsibility.
pub(crate) fn symmetric_eigenvalues<R: RealScalar>(m: &Matrix<R>) -> Vec<R> {
    let n = m.dim();
    let mut a: Vec<R> = m.entries().to_vec();
    jacobi(n, &mut a);
    let mut eigs: Vec<R> = (0..n).map(|i| a[i * n + i]).collect();
    eigs.sort_by(|x, y| y.partial_cmp(x).expect("finite eigenvalues"));
    eigs
}

fn jacobi<R: RealScalar>(n: usize, a: &mut [R]) {
    let idx = |i: usize, j: usize| i * n + j;
    let two = R::of(2.0);
    for _sweep in 0..MAX_SWEEPS {
        let mut off_sq = R::zero();
        let mut diag_sq = R::zero();
        for i in 0..n {
            diag_sq = diag_sq + a[idx(i, i)] * a[idx(i, i)];
            for j in (i + 1)..n {
                off_sq = off_sq + a[idx(i, j)] * a[idx(i, j)];
            }
        }
        let fro = (diag_sq + two * off_sq).sqrt();
        if off_sq.sqrt() <= fro * R::epsilon() * R::of(n as f64) {
            return;
        }
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                let apq = a[idx(p, q)];
                let app = a[idx(p, p)];
                let aqq = a[idx(q, q)];
                if apq.abs() <= R::epsilon() * (app.abs() + aqq.abs() + apq.abs()) {
                    continue;
                }
                let theta = (aqq - app) / (two * apq);
                // tan of the rotation angle; large theta falls back to the
                // first-order formula to avoid overflow in theta^2.
                let t = if theta.abs() > R::of(1e12) {
                    (two * theta).recip()
                } else {
                    let root = (theta * theta + R::one()).sqrt();
                    if theta >= R::zero() {
                        (theta + root).recip()
                    } else {
                        -((root - theta).recip())
                    }
                };
                let c = (t * t + R::one()).sqrt().recip();
                let s = t * c;
                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let arp = a[idx(r, p)];
                    let arq = a[idx(r, q)];
                    let new_rp = c * arp - s * arq;
                    let new_rq = s * arp + c * arq;
                    a[idx(r, p)] = new_rp;
                    a[idx(p, r)] = new_rp;
                    a[idx(r, q)] = new_rq;
                    a[idx(q, r)] = new_rq;
                }
                a[idx(p, p)] = app - t * apq;
                a[idx(q, q)] = aqq + t * apq;
                a[idx(p, q)] = R::zero();
                a[idx(q, p)] = R::zero();
            }
        }
    }
}

/// Real part of a matrix, entrywise.
fn re_part<T: Scalar>(a: &Matrix<T>) -> Matrix<T::Real> {
    let n = a.dim();
    let mut out = Matrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            out.set(i, j, a.get(i, j).re());
        }
    }
    out
}

/// The real representation `[[X, -Y], [Y, X]]` of `A = X + iY`.
fn real_embedding<T: Scalar>(a: &Matrix<T>) -> Matrix<T::Real> {
    let n = a.dim();
    let mut out = Matrix::zeros(2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = a.get(i, j);
            out.set(i, j, z.re());
            out.set(i, j + n, -z.im());
            out.set(i + n, j, z.im());
            out.set(i + n, j + n, z.re());
        }
    }
    out
}

/// Eigenvalues of a Hermitian (or real symmetric) matrix, sorted descending.
pub fn hermitian_eigenvalues<T: Scalar>(a: &Matrix<T>) -> Vec<T::Real> {
    match T::KIND {
        ScalarKind::Real => symmetric_eigenvalues(&re_part(a)),
        ScalarKind::Complex => {
            // Doubled spectrum: after sorting, pairs are adjacent.
            let all = symmetric_eigenvalues(&real_embedding(a));
            all.into_iter().step_by(2).collect()
        }
    }
}

/// Singular values, sorted descending, computed from the Gram matrix.
pub fn singular_values<T: Scalar>(a: &Matrix<T>) -> Vec<T::Real> {
    let sq_to_sv = |eigs: Vec<T::Real>| {
        eigs.into_iter()
            .map(|e| if e > T::Real::zero() { e.sqrt() } else { T::Real::zero() })
            .collect::<Vec<_>>()
    };
    match T::KIND {
        ScalarKind::Real => {
            let m = re_part(a);
            let gram = m.transpose().matmul(&m).expect("same dim");
            sq_to_sv(symmetric_eigenvalues(&gram))
        }
        ScalarKind::Complex => {
            let e = real_embedding(a);
            let gram = e.transpose().matmul(&e).expect("same dim");
            let all = sq_to_sv(symmetric_eigenvalues(&gram));
            all.into_iter().step_by(2).collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn diagonal_eigenvalues() {
        let m = Matrix::diagonal(&[3.0, -1.0, 2.0]);
        let eigs = hermitian_eigenvalues(&m);
        assert_eq!(eigs, vec![3.0, 2.0, -1.0]);
    }

    #[test]
    fn known_2x2_symmetric() {
        // [[2, 1], [1, 2]] has eigenvalues 3 and 1.
        let m = Matrix::new(2, vec![2.0, 1.0, 1.0, 2.0]).unwrap();
        let eigs = hermitian_eigenvalues(&m);
        assert!((eigs[0] - 3.0).abs() < 1e-14);
        assert!((eigs[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn trace_and_frobenius_invariants() {
        // Random-ish fixed symmetric 5x5: eigenvalue sums must match the
        // trace and the squared Frobenius norm.
        let mut m = Matrix::<f64>::zeros(5);
        let mut v = 0.37;
        for i in 0..5 {
            for j in i..5 {
                v = (v * 997.0 + 0.123).fract() - 0.5;
                m.set(i, j, v);
                m.set(j, i, v);
            }
        }
        let eigs = hermitian_eigenvalues(&m);
        let sum: f64 = eigs.iter().sum();
        let sq: f64 = eigs.iter().map(|e| e * e).sum();
        assert!((sum - m.trace()).abs() < 1e-12);
        assert!((sq - m.frobenius_norm().powi(2)).abs() < 1e-12);
    }

    #[test]
    fn hermitian_complex_pauli_y() {
        // [[0, -i], [i, 0]] has eigenvalues +1 and -1.
        let m = Matrix::new(2, vec![c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)]).unwrap();
        let eigs = hermitian_eigenvalues(&m);
        assert!((eigs[0] - 1.0).abs() < 1e-14);
        assert!((eigs[1] + 1.0).abs() < 1e-14);
    }

    #[test]
    fn singular_values_of_diagonal() {
        let m = Matrix::diagonal(&[3.0, -4.0]);
        let sv = singular_values(&m);
        assert!((sv[0] - 4.0).abs() < 1e-13);
        assert!((sv[1] - 3.0).abs() < 1e-13);
    }

    #[test]
    fn singular_values_complex_scaling() {
        // Multiplying by a unit phase leaves singular values unchanged.
        let m = Matrix::new(2, vec![c(1.0, 1.0), c(0.0, 2.0), c(-1.0, 0.5), c(0.3, 0.0)]).unwrap();
        let phase = c(0.6, 0.8);
        let rotated = m.scale(phase);
        let a = singular_values(&m);
        let b = singular_values(&rotated);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn f32_path_works() {
        let m = Matrix::<f32>::diagonal(&[2.0f32, -5.0]);
        let sv = singular_values(&m);
        assert!((sv[0] - 5.0).abs() < 1e-5);
    }
}
