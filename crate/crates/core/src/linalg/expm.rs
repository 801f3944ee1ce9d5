//! Matrix exponential by scaling and squaring with a diagonal Pade(13) core
//! (Higham 2005, "The scaling and squaring method for the matrix exponential
//! revisited"). The argument is pre-scaled by a power of two so that its
//! 1-norm is at most 0.5, well inside the order-13 accuracy region; the
//! result is then squared back.

use num_traits::{Float, ToPrimitive};

use crate::error::{Error, Result};
use crate::linalg::matrix::Matrix;
use crate::scalar::{RealScalar, Scalar};

/// Coefficients of the [13/13] diagonal Pade approximant to exp; all are
/// exactly representable in f64.
const PADE13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

/// Target 1-norm after scaling.
const SCALING_TARGET: f64 = 0.5;

/// Computes `exp(scale * a)`.
pub fn matrix_exp<T: Scalar>(a: &Matrix<T>, scale: T::Real) -> Result<Matrix<T>> {
    if !Float::is_finite(scale) {
        return Err(Error::NonFinite {
            context: "matrix_exp scale",
        });
    }
    let scaled = a.scale(T::from_real(scale));
    let norm = scaled.induced_one_norm();
    let target = T::Real::of(SCALING_TARGET);
    let squarings: u32 = if norm <= target {
        0
    } else {
        let k = (norm / target).log2().ceil();
        k.to_f64().expect("finite") as u32
    };
    let shrink = T::Real::of(2.0).powi(-(squarings as i32));
    let b = scaled.scale(T::from_real(shrink));

    let (u, v) = pade13(&b)?;
    let numer = v.add(&u)?;
    let denom = v.sub(&u)?;
    let mut r = solve_matrix(denom, numer)?;
    for _ in 0..squarings {
        r = r.matmul(&r)?;
    }
    if !r.is_finite() {
        return Err(Error::NonFinite {
            context: "matrix_exp result",
        });
    }
    Ok(r)
}

fn pade13<T: Scalar>(a: &Matrix<T>) -> Result<(Matrix<T>, Matrix<T>)> {
    let b: Vec<T> = PADE13.iter().map(|&c| T::from_f64(c)).collect();
    let id = Matrix::identity(a.dim());
    let a2 = a.matmul(a)?;
    let a4 = a2.matmul(&a2)?;
    let a6 = a4.matmul(&a2)?;

    // U = A [ A6 (b13 A6 + b11 A4 + b9 A2) + b7 A6 + b5 A4 + b3 A2 + b1 I ]
    let w1 = a6
        .scale(b[13])
        .add(&a4.scale(b[11]))?
        .add(&a2.scale(b[9]))?;
    let w2 = a6
        .scale(b[7])
        .add(&a4.scale(b[5]))?
        .add(&a2.scale(b[3]))?
        .add(&id.scale(b[1]))?;
    let u = a.matmul(&a6.matmul(&w1)?.add(&w2)?)?;

    // V = A6 (b12 A6 + b10 A4 + b8 A2) + b6 A6 + b4 A4 + b2 A2 + b0 I
    let z1 = a6
        .scale(b[12])
        .add(&a4.scale(b[10]))?
        .add(&a2.scale(b[8]))?;
    let z2 = a6
        .scale(b[6])
        .add(&a4.scale(b[4]))?
        .add(&a2.scale(b[2]))?
        .add(&id.scale(b[0]))?;
    let v = a6.matmul(&z1)?.add(&z2)?;
    Ok((u, v))
}

/// Solves `A X = B` by LU with partial pivoting; `A` and `B` are consumed.
pub(crate) fn solve_matrix<T: Scalar>(mut a: Matrix<T>, mut b: Matrix<T>) -> Result<Matrix<T>> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            context: "solve_matrix",
            expected: a.dim(),
            found: b.dim(),
        });
    }
    let n = a.dim();
    let tiny = a.max_abs() * T::Real::epsilon() * T::Real::of((16 * n) as f64);

    for col in 0..n {
        let mut pivot_row = col;
        let mut pivot_mod = a.get(col, col).modulus();
        for r in (col + 1)..n {
            let m = a.get(r, col).modulus();
            if m > pivot_mod {
                pivot_mod = m;
                pivot_row = r;
            }
        }
        if pivot_mod <= tiny {
            return Err(Error::SingularSystem {
                context: "solve_matrix pivot",
            });
        }
        if pivot_row != col {
            for j in 0..n {
                let x = a.get(col, j);
                a.set(col, j, a.get(pivot_row, j));
                a.set(pivot_row, j, x);
                let y = b.get(col, j);
                b.set(col, j, b.get(pivot_row, j));
                b.set(pivot_row, j, y);
            }
        }
        let inv = T::one() / a.get(col, col);
        for r in (col + 1)..n {
            let factor = a.get(r, col) * inv;
            if factor == T::zero() {
                continue;
            }
            for j in col..n {
                let v = a.get(r, j) - factor * a.get(col, j);
                a.set(r, j, v);
            }
            for j in 0..n {
                let v = b.get(r, j) - factor * b.get(col, j);
                b.set(r, j, v);
            }
        }
    }

    // Back substitution.
    for col in (0..n).rev() {
        let inv = T::one() / a.get(col, col);
        for j in 0..n {
            let v = b.get(col, j) * inv;
            b.set(col, j, v);
        }
        for r in 0..col {
            let factor = a.get(r, col);
            if factor == T::zero() {
                continue;
            }
            for j in 0..n {
                let v = b.get(r, j) - factor * b.get(col, j);
                b.set(r, j, v);
            }
        }
    }
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_scale_gives_identity_exactly() {
        let a = Matrix::new(2, vec![3.1, -2.7, 0.4, 8.9]).unwrap();
        let e = matrix_exp(&a, 0.0).unwrap();
        assert_eq!(e, Matrix::identity(2));
    }

    #[test]
    fn diagonal_case() {
        let a = Matrix::diagonal(&[-1.0, -2.0]);
        let e = matrix_exp(&a, 1.0).unwrap();
        assert!((e.get(0, 0) - (-1.0f64).exp()).abs() < 1e-15);
        assert!((e.get(1, 1) - (-2.0f64).exp()).abs() < 1e-15);
        assert!(e.get(0, 1).abs() < 1e-16);
        assert!(e.get(1, 0).abs() < 1e-16);
    }

    #[test]
    fn nilpotent_series_terminates() {
        // exp(t [[0,1],[0,0]]) = [[1,t],[0,1]]
        let a = Matrix::new(2, vec![0.0, 1.0, 0.0, 0.0]).unwrap();
        for &t in &[0.25, 1.0, 1.7, -3.2] {
            let e = matrix_exp(&a, t).unwrap();
            assert!((e.get(0, 0) - 1.0).abs() < 1e-14);
            assert!((e.get(0, 1) - t).abs() < 1e-14);
            assert!(e.get(1, 0).abs() < 1e-14);
            assert!((e.get(1, 1) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_non_finite_scale() {
        let a = Matrix::<f64>::identity(2);
        assert!(matrix_exp(&a, f64::NAN).is_err());
    }

    #[test]
    fn solve_recovers_inverse_product() {
        let a = Matrix::new(2, vec![4.0, 1.0, 2.0, 3.0]).unwrap();
        let b = Matrix::new(2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let x = solve_matrix(a.clone(), b).unwrap();
        let id = a.matmul(&x).unwrap();
        assert!(id.sub(&Matrix::identity(2)).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn solve_rejects_singular() {
        let a = Matrix::new(2, vec![1.0, 2.0, 2.0, 4.0]).unwrap();
        let b = Matrix::identity(2);
        assert!(matches!(
            solve_matrix(a, b),
            Err(Error::SingularSystem { .. })
        ));
    }

    #[test]
    fn complex_exponential_of_skew() {
        // exp(i * theta * diag(1, -1)) rotates phases.
        use num_complex::Complex64;
        let theta = 0.7f64;
        let a = Matrix::new(
            2,
            vec![
                Complex64::new(0.0, 1.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, -1.0),
            ],
        )
        .unwrap();
        let e = matrix_exp(&a, theta).unwrap();
        assert!((e.get(0, 0) - Complex64::new(theta.cos(), theta.sin())).norm() < 1e-14);
        assert!((e.get(1, 1) - Complex64::new(theta.cos(), -theta.sin())).norm() < 1e-14);
    }
}
