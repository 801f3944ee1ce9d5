//! lp norm contexts.
//!
//! Vector norms are exact for every p in [1, inf]. Induced operator norms are
//! exact for p in {1, 2, inf} (column sums, largest singular value, row sums);
//! for any other exponent the induced norm is NP-hard in general, so it is
//! reported as a certified lower bound obtained from sampled unit vectors
//! refined by dual-exponent power ascent. A lower bound is exactly what the
//! bound-falsification experiments need: it can refute an inequality but
//! never spuriously confirm one.

use num_traits::{Float, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::eig::singular_values;
use crate::linalg::matrix::{Matrix, Vector};
use crate::scalar::{RealScalar, Scalar, ScalarKind};

/// Selects which lp norm is in force on the coordinate space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormContext {
    p: f64,
}

impl NormContext {
    /// `p` must satisfy `p >= 1`; `f64::INFINITY` selects the max norm.
    pub fn new(p: f64) -> Result<Self> {
        if p.is_nan() || p < 1.0 {
            return Err(Error::InvalidNormExponent { p });
        }
        Ok(Self { p })
    }

    pub fn l1() -> Self {
        Self { p: 1.0 }
    }

    pub fn l2() -> Self {
        Self { p: 2.0 }
    }

    pub fn linf() -> Self {
        Self { p: f64::INFINITY }
    }

    pub fn exponent(&self) -> f64 {
        self.p
    }

    pub fn is_infinite(&self) -> bool {
        self.p.is_infinite()
    }

    /// Exact induced operator norms exist for p in {1, 2, inf}.
    pub fn has_exact_operator_norm(&self) -> bool {
        self.p == 1.0 || self.p == 2.0 || self.p.is_infinite()
    }

    /// Holder-conjugate exponent q with 1/p + 1/q = 1.
    fn dual_exponent(&self) -> f64 {
        if self.p.is_infinite() {
            1.0
        } else if self.p == 1.0 {
            f64::INFINITY
        } else {
            self.p / (self.p - 1.0)
        }
    }
}

impl Default for NormContext {
    fn default() -> Self {
        Self::l2()
    }
}

/// Exact lp norm of a vector; p = inf gives the max modulus.
pub fn vector_norm<T: Scalar>(x: &Vector<T>, ctx: &NormContext) -> T::Real {
    let p = ctx.exponent();
    if p.is_infinite() {
        return x.max_abs();
    }
    if p == 1.0 {
        return x
            .entries()
            .iter()
            .map(|e| e.modulus())
            .fold(T::Real::zero(), |a, b| a + b);
    }
    if p == 2.0 {
        return x
            .entries()
            .iter()
            .map(|e| e.modulus_sq())
            .fold(T::Real::zero(), |a, b| a + b)
            .sqrt();
    }
    let pr = T::Real::of(p);
    let sum = x
        .entries()
        .iter()
        .map(|e| e.modulus().powf(pr))
        .fold(T::Real::zero(), |a, b| a + b);
    sum.powf(pr.recip())
}

/// How an operator norm value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Certainty {
    Exact,
    LowerBound,
}

/// Parameters for the sampled-ascent lower bound.
#[derive(Debug, Clone, Copy)]
pub struct EstimateParams {
    /// Random unit starting vectors (the coordinate basis is always added).
    pub random_starts: usize,
    /// Power-like ascent steps per start.
    pub ascent_steps: usize,
    pub seed: u64,
}

impl Default for EstimateParams {
    fn default() -> Self {
        Self {
            random_starts: 64,
            ascent_steps: 50,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum NormMode {
    Exact,
    Estimate(EstimateParams),
}

/// An induced-norm value together with its certainty tag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorNorm<R> {
    pub value: R,
    pub certainty: Certainty,
}

/// Induced lp -> lp operator norm.
///
/// Exact mode requires p in {1, 2, inf}; any p accepts estimate mode, whose
/// result is a certified lower bound (the max of `|A x|_p` over explicitly
/// evaluated unit vectors).
pub fn operator_norm<T: Scalar>(
    a: &Matrix<T>,
    ctx: &NormContext,
    mode: NormMode,
) -> Result<OperatorNorm<T::Real>> {
    match mode {
        NormMode::Exact => {
            let p = ctx.exponent();
            let value = if p == 1.0 {
                a.induced_one_norm()
            } else if p.is_infinite() {
                a.induced_inf_norm()
            } else if p == 2.0 {
                singular_values(a)[0]
            } else {
                return Err(Error::ExactNormUnavailable { p });
            };
            Ok(OperatorNorm {
                value,
                certainty: Certainty::Exact,
            })
        }
        NormMode::Estimate(params) => Ok(OperatorNorm {
            value: ascent_lower_bound(a, ctx, &params),
            certainty: Certainty::LowerBound,
        }),
    }
}

/// Trace norm: sum of singular values.
pub fn trace_norm<T: Scalar>(a: &Matrix<T>) -> T::Real {
    singular_values(a)
        .into_iter()
        .fold(T::Real::zero(), |acc, s| acc + s)
}

/// Duality map for lp ascent: componentwise `y_i |y_i|^(p-2)` for finite
/// p > 1, the sign vector for p = 1, and the signed argmax coordinate for
/// p = inf. Zero input maps to zero.
fn holder_map<T: Scalar>(y: &Vector<T>, p: f64) -> Vector<T> {
    let n = y.dim();
    let mut out = Vector::zeros(n);
    if p.is_infinite() {
        let mut arg = 0;
        let mut best = T::Real::zero();
        for i in 0..n {
            let m = y.get(i).modulus();
            if m > best {
                best = m;
                arg = i;
            }
        }
        if best > T::Real::zero() {
            out.set(arg, y.get(arg).scale_by(best.recip()));
        }
        return out;
    }
    if p == 1.0 {
        for i in 0..n {
            let z = y.get(i);
            let m = z.modulus();
            if m > T::Real::zero() {
                out.set(i, z.scale_by(m.recip()));
            }
        }
        return out;
    }
    let expo = T::Real::of(p - 2.0);
    for i in 0..n {
        let z = y.get(i);
        let m = z.modulus();
        if m > T::Real::zero() {
            out.set(i, z.scale_by(m.powf(expo)));
        }
    }
    out
}

fn ascent_lower_bound<T: Scalar>(
    a: &Matrix<T>,
    ctx: &NormContext,
    params: &EstimateParams,
) -> T::Real {
    let n = a.dim();
    let p = ctx.exponent();
    let q = ctx.dual_exponent();
    let adj = a.adjoint();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    let mut starts: Vec<Vector<T>> = (0..n).map(|i| Vector::basis(n, i)).collect();
    for _ in 0..params.random_starts {
        let mut v = Vector::zeros(n);
        for i in 0..n {
            let re: f64 = rng.sample(StandardNormal);
            let entry = match T::KIND {
                ScalarKind::Real => T::from_real(T::Real::of(re)),
                ScalarKind::Complex => {
                    let im: f64 = rng.sample(StandardNormal);
                    T::from_parts(T::Real::of(re), T::Real::of(im))
                }
            };
            v.set(i, entry);
        }
        starts.push(v);
    }

    let mut best = T::Real::zero();
    for start in starts {
        let nrm = vector_norm(&start, ctx);
        if nrm == T::Real::zero() {
            continue;
        }
        let mut x = start.scale(T::from_real(nrm.recip()));
        for _ in 0..=params.ascent_steps {
            let y = a.matvec(&x).expect("dims match");
            let val = vector_norm(&y, ctx);
            if val > best {
                best = val;
            }
            if val == T::Real::zero() {
                break;
            }
            let g = holder_map(&y, p);
            let z = adj.matvec(&g).expect("dims match");
            let candidate = holder_map(&z, q);
            let cn = vector_norm(&candidate, ctx);
            if cn == T::Real::zero() {
                break;
            }
            x = candidate.scale(T::from_real(cn.recip()));
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vector_norm_examples() {
        let x = Vector::new(vec![3.0, 4.0]).unwrap();
        assert_eq!(vector_norm(&x, &NormContext::l2()), 5.0);
        let y = Vector::new(vec![1.0, 1.0, 1.0]).unwrap();
        assert_eq!(vector_norm(&y, &NormContext::l1()), 3.0);
        let z = Vector::new(vec![1.0, -2.0]).unwrap();
        assert_eq!(vector_norm(&z, &NormContext::linf()), 2.0);
    }

    #[test]
    fn rejects_bad_exponent() {
        assert!(NormContext::new(0.5).is_err());
        assert!(NormContext::new(f64::NAN).is_err());
        assert!(NormContext::new(1.0).is_ok());
        assert!(NormContext::new(f64::INFINITY).is_ok());
    }

    #[test]
    fn exact_spectral_norm_of_diagonal() {
        let a = Matrix::diagonal(&[3.0, -4.0]);
        let n = operator_norm(&a, &NormContext::l2(), NormMode::Exact).unwrap();
        assert!((n.value - 4.0).abs() < 1e-13);
        assert_eq!(n.certainty, Certainty::Exact);
    }

    #[test]
    fn exact_inf_norm_is_max_row_sum() {
        let a = Matrix::new(2, vec![1.0, 1.0, 0.0, 1.0]).unwrap();
        let n = operator_norm(&a, &NormContext::linf(), NormMode::Exact).unwrap();
        assert_eq!(n.value, 2.0);
    }

    #[test]
    fn exact_mode_rejects_general_p() {
        let a = Matrix::<f64>::identity(2);
        let ctx = NormContext::new(1.5).unwrap();
        assert!(matches!(
            operator_norm(&a, &ctx, NormMode::Exact),
            Err(Error::ExactNormUnavailable { .. })
        ));
    }

    #[test]
    fn estimate_is_lower_bound_and_tight_for_identity() {
        let a = Matrix::<f64>::identity(4);
        let ctx = NormContext::new(1.5).unwrap();
        let n = operator_norm(&a, &ctx, NormMode::Estimate(EstimateParams::default())).unwrap();
        assert_eq!(n.certainty, Certainty::LowerBound);
        assert!((n.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn estimate_beats_plain_sampling() {
        // Deterministic 5x5 test matrix; the ascent must dominate a raw
        // sample max over 10^4 unit vectors.
        let mut entries = Vec::new();
        let mut v = 0.17f64;
        for _ in 0..25 {
            v = (v * 913.0 + 0.31).fract() - 0.5;
            entries.push(v * 4.0);
        }
        let a = Matrix::new(5, entries).unwrap();
        let ctx = NormContext::new(1.5).unwrap();
        let est = operator_norm(&a, &ctx, NormMode::Estimate(EstimateParams::default()))
            .unwrap()
            .value;

        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut sampled = 0.0f64;
        for _ in 0..10_000 {
            let mut x = Vector::zeros(5);
            for i in 0..5 {
                let g: f64 = rng.sample(StandardNormal);
                x.set(i, g);
            }
            let nrm = vector_norm(&x, &ctx);
            if nrm == 0.0 {
                continue;
            }
            let y = a.matvec(&x.scale(1.0 / nrm)).unwrap();
            sampled = sampled.max(vector_norm(&y, &ctx));
        }
        assert!(
            est >= sampled - 1e-12,
            "ascent {est} below sampled max {sampled}"
        );
    }

    #[test]
    fn trace_norm_of_diagonal() {
        let a = Matrix::diagonal(&[1.0, -2.0, 0.5]);
        assert!((trace_norm(&a) - 3.5).abs() < 1e-12);
    }

    #[test]
    fn estimate_seed_is_deterministic() {
        let a = Matrix::new(3, vec![0.3, 1.0, -0.2, 0.0, 0.7, 0.9, 1.1, -0.4, 0.2]).unwrap();
        let ctx = NormContext::new(2.5).unwrap();
        let p = EstimateParams {
            random_starts: 16,
            ascent_steps: 20,
            seed: 7,
        };
        let a1 = operator_norm(&a, &ctx, NormMode::Estimate(p)).unwrap();
        let a2 = operator_norm(&a, &ctx, NormMode::Estimate(p)).unwrap();
        assert_eq!(a1.value, a2.value);
    }
}
