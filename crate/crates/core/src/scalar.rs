//! Scalar abstraction over real and complex floating-point entries.
//!
//! All dense linear algebra in this crate is generic over [`Scalar`], which is
//! implemented for `f32`, `f64`, `Complex<f32>` and `Complex<f64>`. The
//! crate root exports concrete aliases (`Operator`, `ComplexOperator`, ...)
//! so experiment code never has to spell the generics out.

use std::fmt::{Debug, Display};
use std::ops::Neg;

use num_complex::Complex;
use num_traits::{Float, FromPrimitive, Num, NumAssign, ToPrimitive};

/// Whether a scalar type carries an imaginary part.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalarKind {
    Real,
    Complex,
}

/// Real floating-point base field: `f32` or `f64`. Every real scalar is also
/// a [`Scalar`] whose `Real` type is itself.
pub trait RealScalar: Scalar<Real = Self> + Float + FromPrimitive + ToPrimitive {
    /// Lossy conversion from `f64` (exact for `f64`, rounded for `f32`).
    fn of(value: f64) -> Self {
        FromPrimitive::from_f64(value).expect("finite f64 converts to any real scalar")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("real scalar converts to f64")
    }
}

impl RealScalar for f32 {}
impl RealScalar for f64 {}

/// Matrix and vector entries: real or complex floating point.
pub trait Scalar:
    Copy + Debug + Display + Send + Sync + 'static + Num + NumAssign + Neg<Output = Self>
{
    type Real: RealScalar;

    const KIND: ScalarKind;

    fn from_real(re: Self::Real) -> Self;

    /// Build from real and imaginary parts. Real scalar types require
    /// `im == 0`.
    fn from_parts(re: Self::Real, im: Self::Real) -> Self;

    fn from_f64(value: f64) -> Self {
        Self::from_real(Self::Real::of(value))
    }

    fn re(self) -> Self::Real;

    fn im(self) -> Self::Real;

    fn conj(self) -> Self;

    /// |z|.
    fn modulus(self) -> Self::Real;

    /// |z|^2, without the square root.
    fn modulus_sq(self) -> Self::Real;

    fn scale_by(self, factor: Self::Real) -> Self {
        self * Self::from_real(factor)
    }

    fn is_finite(self) -> bool;
}

macro_rules! impl_real_scalar {
    ($ty:ty) => {
        impl Scalar for $ty {
            type Real = $ty;

            const KIND: ScalarKind = ScalarKind::Real;

            fn from_real(re: Self::Real) -> Self {
                re
            }

            fn from_parts(re: Self::Real, im: Self::Real) -> Self {
                debug_assert!(im == 0.0, "real scalar with nonzero imaginary part");
                let _ = im;
                re
            }

            fn re(self) -> Self::Real {
                self
            }

            fn im(self) -> Self::Real {
                0.0
            }

            fn conj(self) -> Self {
                self
            }

            fn modulus(self) -> Self::Real {
                self.abs()
            }

            fn modulus_sq(self) -> Self::Real {
                self * self
            }

            fn is_finite(self) -> bool {
                <$ty>::is_finite(self)
            }
        }
    };
}

impl_real_scalar!(f32);
impl_real_scalar!(f64);

impl<R: RealScalar> Scalar for Complex<R> {
    type Real = R;

    const KIND: ScalarKind = ScalarKind::Complex;

    fn from_real(re: Self::Real) -> Self {
        Complex::new(re, R::zero())
    }

    fn from_parts(re: Self::Real, im: Self::Real) -> Self {
        Complex::new(re, im)
    }

    fn re(self) -> Self::Real {
        self.re
    }

    fn im(self) -> Self::Real {
        self.im
    }

    fn conj(self) -> Self {
        Complex::conj(&self)
    }

    fn modulus(self) -> Self::Real {
        self.norm()
    }

    fn modulus_sq(self) -> Self::Real {
        self.norm_sqr()
    }

    fn is_finite(self) -> bool {
        Float::is_finite(self.re) && Float::is_finite(self.im)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn kinds() {
        assert_eq!(f64::KIND, ScalarKind::Real);
        assert_eq!(Complex64::KIND, ScalarKind::Complex);
    }

    #[test]
    fn complex_modulus() {
        let z = Complex64::new(3.0, 4.0);
        assert_eq!(z.modulus(), 5.0);
        assert_eq!(z.modulus_sq(), 25.0);
        assert_eq!(z.conj(), Complex64::new(3.0, -4.0));
    }

    #[test]
    fn real_roundtrip() {
        assert_eq!(f32::of(0.5), 0.5f32);
        assert_eq!(<f64 as Scalar>::from_f64(2.0), 2.0);
    }
}
