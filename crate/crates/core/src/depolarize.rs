//! The d-dimensional quantum depolarizing channel, random channel
//! compositions, their closed-form scalar coefficients, and the almost-sure
//! limit channel.
//!
//! The channel `D_lambda rho = (1 - lambda) rho + (lambda / d) I` is affine
//! with the stated constant term (inputs are restricted to trace-one states,
//! where the affine form and the conventional `tr(rho)`-weighted linear form
//! agree). Channel action is stored and applied as the two scalar
//! coefficients, which is O(d^2) per application; a d^2 x d^2 superoperator
//! view of the linear extension is exposed read-only.
//!
//! A composition `D_{xi_1/n} ... D_{xi_n/n}` applied to `rho` equals
//! `rho * prod_k (1 - xi_k/n) + (I/d) * sum_k (xi_k/n) prod_{i<k} (1 - xi_i/n)`;
//! [`compose_random`] applies the channels one at a time while
//! [`closed_form`] evaluates the displayed coefficients directly, giving two
//! independent evaluation routes. As `n` grows the coefficients converge
//! almost surely to `exp(-E xi)` and `1 - exp(-E xi)`, so the compositions
//! converge to the depolarizing channel with `lambda = 1 - exp(-E xi)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigenvalues, trace_norm, Matrix};
use crate::scalar::Scalar;
use crate::seeding::sub_seed;
use crate::{Complex64, ComplexOperator};

/// Hermiticity / trace tolerance for density matrices.
pub const STATE_TOL: f64 = 1e-12;
/// Eigenvalue floor: positive semidefinite up to rounding.
pub const EIGENVALUE_FLOOR: f64 = -1e-10;

/// Upper end of the admissible depolarizing-parameter range,
/// `1 + 1/(d^2 - 1)`.
pub fn lambda_upper_limit(dim: usize) -> f64 {
    let d2 = (dim * dim) as f64;
    1.0 + 1.0 / (d2 - 1.0)
}

/// A d x d density matrix: Hermitian, unit trace, positive semidefinite
/// (all up to documented tolerances).
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    rho: ComplexOperator,
}

impl DensityMatrix {
    pub fn new(rho: ComplexOperator) -> Result<Self> {
        let d = rho.dim();
        for i in 0..d {
            for j in 0..d {
                let gap = (rho.get(i, j) - rho.get(j, i).conj()).modulus();
                if gap > STATE_TOL {
                    return Err(Error::InvalidParameter {
                        name: "rho",
                        message: format!("not Hermitian: entry ({i},{j}) deviates by {gap:.3e}"),
                    });
                }
            }
        }
        let trace = rho.trace();
        if (trace - Complex64::new(1.0, 0.0)).modulus() > STATE_TOL {
            return Err(Error::InvalidParameter {
                name: "rho",
                message: format!("trace is {trace}, expected 1"),
            });
        }
        let min_eig = hermitian_eigenvalues(&rho)
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        if min_eig < EIGENVALUE_FLOOR {
            return Err(Error::InvalidParameter {
                name: "rho",
                message: format!("not positive semidefinite: min eigenvalue {min_eig:.3e}"),
            });
        }
        Ok(Self { rho })
    }

    /// Internal constructor for channel outputs, which preserve the
    /// invariants analytically; skips the eigenvalue check.
    pub(crate) fn new_unchecked(rho: ComplexOperator) -> Self {
        Self { rho }
    }

    /// Diagonal state from a probability vector.
    pub fn from_probabilities(probs: &[f64]) -> Result<Self> {
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidParameter {
                name: "probs",
                message: "probabilities must be finite and nonnegative".into(),
            });
        }
        let entries: Vec<Complex64> = probs.iter().map(|&p| Complex64::new(p, 0.0)).collect();
        Self::new(Matrix::diagonal(&entries))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        let p = Complex64::new(1.0 / dim as f64, 0.0);
        let probs = vec![p; dim];
        Self {
            rho: Matrix::diagonal(&probs),
        }
    }

    /// Rank-one projector onto a (normalized) state vector.
    pub fn pure_state(amplitudes: &[Complex64]) -> Result<Self> {
        let d = amplitudes.len();
        if d == 0 {
            return Err(Error::EmptyInput {
                context: "state amplitudes",
            });
        }
        let norm_sq: f64 = amplitudes.iter().map(|a| a.modulus_sq()).sum();
        if norm_sq == 0.0 {
            return Err(Error::InvalidParameter {
                name: "amplitudes",
                message: "state vector must be nonzero".into(),
            });
        }
        let inv = Complex64::new(1.0 / norm_sq, 0.0);
        let mut rho = Matrix::zeros(d);
        for i in 0..d {
            for j in 0..d {
                rho.set(i, j, amplitudes[i] * amplitudes[j].conj() * inv);
            }
        }
        Self::new(rho)
    }

    pub fn dim(&self) -> usize {
        self.rho.dim()
    }

    pub fn matrix(&self) -> &ComplexOperator {
        &self.rho
    }

    pub fn trace(&self) -> Complex64 {
        self.rho.trace()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.rho)
    }
}

/// Depolarizing parameter `lambda` in `[0, 1 + 1/(d^2-1))`.
///
/// The open lower end of the theoretical range is closed here: `lambda = 0`
/// (the identity channel) is accepted as a degenerate case for testing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepolarizingParam {
    lambda: f64,
    dim: usize,
}

impl DepolarizingParam {
    pub fn new(lambda: f64, dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidParameter {
                name: "d",
                message: format!("channel dimension must be at least 2, got {dim}"),
            });
        }
        let upper = lambda_upper_limit(dim);
        if !lambda.is_finite() || lambda < 0.0 || lambda >= upper {
            return Err(Error::InvalidParameter {
                name: "lambda",
                message: format!("lambda = {lambda} outside [0, {upper})"),
            });
        }
        Ok(Self { lambda, dim })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Read-only superoperator view of the linear extension
    /// `rho -> (1 - lambda) rho + (lambda/d) tr(rho) I` on row-major
    /// vectorized states: `(1 - lambda) I_{d^2} + (lambda/d) |vec I><vec I|`.
    pub fn superoperator(&self) -> ComplexOperator {
        let d = self.dim;
        let mut s = Matrix::zeros(d * d);
        let keep = Complex64::new(1.0 - self.lambda, 0.0);
        let mix = Complex64::new(self.lambda / d as f64, 0.0);
        // (1 - lambda) on the diagonal.
        for a in 0..d * d {
            s.set(a, a, keep);
        }
        // (lambda/d) between diagonal positions of rho: vec(I) outer vec(I).
        for i in 0..d {
            for k in 0..d {
                let row = i * d + i;
                let col = k * d + k;
                let cur = s.get(row, col);
                s.set(row, col, cur + mix);
            }
        }
        s
    }
}

/// `D_lambda rho = (1 - lambda) rho + (lambda/d) I`; trace and Hermiticity
/// are preserved.
pub fn apply_channel(param: &DepolarizingParam, rho: &DensityMatrix) -> Result<DensityMatrix> {
    if rho.dim() != param.dim() {
        return Err(Error::DimensionMismatch {
            context: "apply_channel",
            expected: param.dim(),
            found: rho.dim(),
        });
    }
    Ok(DensityMatrix::new_unchecked(affine_step(
        rho.matrix(),
        param.lambda(),
    )))
}

fn affine_step(rho: &ComplexOperator, lambda: f64) -> ComplexOperator {
    let d = rho.dim();
    let keep = Complex64::new(1.0 - lambda, 0.0);
    let mix = lambda / d as f64;
    let mut out = rho.scale(keep);
    for i in 0..d {
        let v = out.get(i, i) + Complex64::new(mix, 0.0);
        out.set(i, i, v);
    }
    out
}

/// Law of the i.i.d. channel parameters `xi_k` on `(0, 1 + 1/(d^2-1))`.
///
/// `Constant(0)` is accepted as a degenerate closure case (the identity
/// channel), mirroring `lambda = 0` in [`DepolarizingParam`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum XiLaw {
    Constant(f64),
    Uniform { lo: f64, hi: f64 },
}

impl XiLaw {
    pub fn mean(&self) -> f64 {
        match self {
            XiLaw::Constant(c) => *c,
            XiLaw::Uniform { lo, hi } => 0.5 * (lo + hi),
        }
    }
}

/// Seeded, prefix-stable i.i.d. stream of channel parameters.
#[derive(Debug, Clone)]
pub struct XiStream {
    law: XiLaw,
    dim: usize,
    master_seed: u64,
    cache: Vec<f64>,
}

impl XiStream {
    pub fn new(law: XiLaw, dim: usize, master_seed: u64) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidParameter {
                name: "d",
                message: format!("channel dimension must be at least 2, got {dim}"),
            });
        }
        let upper = lambda_upper_limit(dim);
        match law {
            XiLaw::Constant(c) => {
                if !c.is_finite() || c < 0.0 || c >= upper {
                    return Err(Error::InvalidParameter {
                        name: "xi",
                        message: format!("constant {c} outside [0, {upper})"),
                    });
                }
            }
            XiLaw::Uniform { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo < hi && hi <= upper) {
                    return Err(Error::InvalidParameter {
                        name: "xi",
                        message: format!("uniform bounds ({lo}, {hi}) invalid for limit {upper}"),
                    });
                }
            }
        }
        Ok(Self {
            law,
            dim,
            master_seed,
            cache: Vec::new(),
        })
    }

    pub fn law(&self) -> &XiLaw {
        &self.law
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mean(&self) -> f64 {
        self.law.mean()
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    fn value_at(&self, index: usize) -> f64 {
        match self.law {
            XiLaw::Constant(c) => c,
            XiLaw::Uniform { lo, hi } => {
                let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(self.master_seed, index as u64));
                // Resample the measure-zero left endpoint to stay inside the
                // open interval.
                loop {
                    let v: f64 = rng.gen_range(lo..hi);
                    if v > lo {
                        return v;
                    }
                }
            }
        }
    }

    pub fn fill_to(&mut self, n: usize) {
        while self.cache.len() < n {
            let index = self.cache.len() + 1;
            let v = self.value_at(index);
            self.cache.push(v);
        }
    }

    /// `xi_index` (1-based), filling the cache as needed.
    pub fn value(&mut self, index: usize) -> Result<f64> {
        if index == 0 {
            return Err(Error::InvalidParameter {
                name: "index",
                message: "stream indices are 1-based".into(),
            });
        }
        self.fill_to(index);
        Ok(self.cache[index - 1])
    }
}

/// Sequential composition `D_{xi_1/n} ... D_{xi_n/n} rho`, rightmost factor
/// acting first; one affine update per factor.
pub fn compose_random(xi: &mut XiStream, n: usize, rho: &DensityMatrix) -> Result<DensityMatrix> {
    if n == 0 {
        return Err(Error::InvalidParameter {
            name: "n",
            message: "composition length must be at least 1".into(),
        });
    }
    if rho.dim() != xi.dim() {
        return Err(Error::DimensionMismatch {
            context: "compose_random",
            expected: xi.dim(),
            found: rho.dim(),
        });
    }
    xi.fill_to(n);
    let nf = n as f64;
    let mut out = rho.matrix().clone();
    for k in (1..=n).rev() {
        let lambda = xi.value(k)? / nf;
        out = affine_step(&out, lambda);
    }
    Ok(DensityMatrix::new_unchecked(out))
}

/// The two scalar coefficients of the composition:
/// `(prod_k (1 - xi_k/n), sum_k (xi_k/n) prod_{i<k} (1 - xi_i/n))`.
/// The sum is accumulated in compensated arithmetic so the telescoping
/// identity `product + sum = 1` survives large `n`.
pub fn closed_form_coefficients(xi: &mut XiStream, n: usize) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::InvalidParameter {
            name: "n",
            message: "composition length must be at least 1".into(),
        });
    }
    xi.fill_to(n);
    let nf = n as f64;
    let mut prefix = 1.0f64;
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for k in 1..=n {
        let c = xi.value(k)? / nf;
        // Kahan step for sum += c * prefix.
        let term = c * prefix - comp;
        let next = sum + term;
        comp = (next - sum) - term;
        sum = next;
        prefix *= 1.0 - c;
    }
    Ok((prefix, sum))
}

/// Evaluates the displayed closed form
/// `rho prod_k (1 - xi_k/n) + (I/d) sum_k (xi_k/n) prod_{i<k} (1 - xi_i/n)`.
pub fn closed_form(xi: &mut XiStream, n: usize, rho: &DensityMatrix) -> Result<DensityMatrix> {
    if rho.dim() != xi.dim() {
        return Err(Error::DimensionMismatch {
            context: "closed_form",
            expected: xi.dim(),
            found: rho.dim(),
        });
    }
    let (product, sum) = closed_form_coefficients(xi, n)?;
    let d = rho.dim();
    let mut out = rho.matrix().scale(Complex64::new(product, 0.0));
    let mix = sum / d as f64;
    for i in 0..d {
        let v = out.get(i, i) + Complex64::new(mix, 0.0);
        out.set(i, i, v);
    }
    Ok(DensityMatrix::new_unchecked(out))
}

/// The almost-sure limit channel `D_{1 - exp(-mean_xi)}` applied to `rho`.
/// The limit parameter always lies in `[0, 1)`, inside the admissible range
/// regardless of how large `mean_xi` is.
pub fn limit_channel(mean_xi: f64, rho: &DensityMatrix) -> Result<DensityMatrix> {
    if !mean_xi.is_finite() || mean_xi < 0.0 {
        return Err(Error::InvalidParameter {
            name: "mean_xi",
            message: format!("mean must be finite and nonnegative, got {mean_xi}"),
        });
    }
    let lambda = -(-mean_xi).exp_m1();
    let param = DepolarizingParam::new(lambda, rho.dim())?;
    apply_channel(&param, rho)
}

/// Per-`n` distances between the random composition and the limit channel,
/// along with the scalar coefficient errors.
#[derive(Debug, Clone, Copy)]
pub struct ConvergenceRow {
    pub n: usize,
    /// `|prod_k (1 - xi_k/n) - exp(-E xi)|`.
    pub coeff_product_error: f64,
    /// `|sum-coefficient - (1 - exp(-E xi))|`.
    pub coeff_sum_error: f64,
    pub max_entry_distance: f64,
    pub trace_distance: f64,
}

/// Runs the composition along a single stream path for each `n` (shared
/// prefix = one sample path) and measures convergence to the limit channel.
pub fn convergence_experiment(
    xi: &mut XiStream,
    rho: &DensityMatrix,
    n_list: &[usize],
) -> Result<Vec<ConvergenceRow>> {
    if n_list.is_empty() {
        return Err(Error::EmptyInput { context: "n_list" });
    }
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter {
            name: "n_list",
            message: "n_list must be strictly increasing".into(),
        });
    }
    let mean = xi.mean();
    let limit = limit_channel(mean, rho)?;
    let target_product = (-mean).exp();
    let target_sum = -(-mean).exp_m1();

    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let composed = compose_random(xi, n, rho)?;
        let (product, sum) = closed_form_coefficients(xi, n)?;
        let diff = composed.matrix().sub(limit.matrix())?;
        rows.push(ConvergenceRow {
            n,
            coeff_product_error: (product - target_product).abs(),
            coeff_sum_error: (sum - target_sum).abs(),
            max_entry_distance: diff.max_abs(),
            trace_distance: trace_norm(&diff),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn qubit_state() -> DensityMatrix {
        // A generic qubit state with off-diagonal coherence.
        let rho = Matrix::new(
            2,
            vec![c(0.7, 0.0), c(0.2, 0.1), c(0.2, -0.1), c(0.3, 0.0)],
        )
        .unwrap();
        DensityMatrix::new(rho).unwrap()
    }

    #[test]
    fn density_matrix_validation() {
        // Not Hermitian.
        let bad = Matrix::new(2, vec![c(0.5, 0.0), c(0.1, 0.0), c(0.3, 0.0), c(0.5, 0.0)]);
        assert!(DensityMatrix::new(bad.unwrap()).is_err());
        // Wrong trace.
        let bad = Matrix::new(2, vec![c(0.9, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.3, 0.0)]);
        assert!(DensityMatrix::new(bad.unwrap()).is_err());
        // Negative eigenvalue.
        let bad = Matrix::new(2, vec![c(1.2, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-0.2, 0.0)]);
        assert!(DensityMatrix::new(bad.unwrap()).is_err());
        // Valid state.
        assert!(DensityMatrix::new(qubit_state().matrix().clone()).is_ok());
    }

    #[test]
    fn lambda_range_enforced() {
        assert!(DepolarizingParam::new(0.0, 2).is_ok());
        assert!(DepolarizingParam::new(1.0, 2).is_ok());
        let upper = lambda_upper_limit(2);
        assert!((upper - 4.0 / 3.0).abs() < 1e-15);
        assert!(DepolarizingParam::new(upper, 2).is_err());
        assert!(DepolarizingParam::new(-0.1, 2).is_err());
        assert!(DepolarizingParam::new(0.5, 1).is_err());
    }

    #[test]
    fn identity_and_fully_mixing_channels() {
        let rho = qubit_state();
        let id = DepolarizingParam::new(0.0, 2).unwrap();
        let out = apply_channel(&id, &rho).unwrap();
        assert_eq!(out.matrix(), rho.matrix());

        let mix = DepolarizingParam::new(1.0, 2).unwrap();
        let out = apply_channel(&mix, &rho).unwrap();
        let want = DensityMatrix::maximally_mixed(2);
        assert!(out.matrix().sub(want.matrix()).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn half_depolarized_basis_state() {
        let rho = DensityMatrix::from_probabilities(&[1.0, 0.0]).unwrap();
        let param = DepolarizingParam::new(0.5, 2).unwrap();
        let out = apply_channel(&param, &rho).unwrap();
        assert!((out.matrix().get(0, 0) - c(0.75, 0.0)).modulus() < 1e-15);
        assert!((out.matrix().get(1, 1) - c(0.25, 0.0)).modulus() < 1e-15);
    }

    #[test]
    fn composition_preserves_trace_and_hermiticity() {
        let rho = qubit_state();
        let mut xi = XiStream::new(XiLaw::Uniform { lo: 0.0, hi: 1.0 }, 2, 99).unwrap();
        let out = compose_random(&mut xi, 257, &rho).unwrap();
        assert!((out.trace() - c(1.0, 0.0)).modulus() < 1e-13);
        let m = out.matrix();
        for i in 0..2 {
            for j in 0..2 {
                assert!((m.get(i, j) - m.get(j, i).conj()).modulus() < 1e-15);
            }
        }
        // Still a valid state.
        assert!(DensityMatrix::new(m.clone()).is_ok());
    }

    #[test]
    fn single_factor_composition_is_apply_channel() {
        let rho = qubit_state();
        let mut xi = XiStream::new(XiLaw::Constant(0.8), 2, 1).unwrap();
        let composed = compose_random(&mut xi, 1, &rho).unwrap();
        let param = DepolarizingParam::new(0.8, 2).unwrap();
        let direct = apply_channel(&param, &rho).unwrap();
        assert!(composed.matrix().sub(direct.matrix()).unwrap().max_abs() < 1e-16);
        // Closed form agrees too.
        let mut xi2 = XiStream::new(XiLaw::Constant(0.8), 2, 1).unwrap();
        let cf = closed_form(&mut xi2, 1, &rho).unwrap();
        assert!(cf.matrix().sub(direct.matrix()).unwrap().max_abs() < 1e-16);
    }

    #[test]
    fn degenerate_zero_stream_is_identity() {
        let rho = qubit_state();
        let mut xi = XiStream::new(XiLaw::Constant(0.0), 2, 1).unwrap();
        let out = compose_random(&mut xi, 64, &rho).unwrap();
        assert_eq!(out.matrix(), rho.matrix());
    }

    #[test]
    fn closed_form_matches_composition() {
        let rho = qubit_state();
        let mut a = XiStream::new(XiLaw::Uniform { lo: 0.0, hi: 1.2 }, 2, 7).unwrap();
        let mut b = a.clone();
        for n in [1usize, 5, 50] {
            let composed = compose_random(&mut a, n, &rho).unwrap();
            let closed = closed_form(&mut b, n, &rho).unwrap();
            let gap = composed.matrix().sub(closed.matrix()).unwrap().max_abs();
            assert!(gap < 1e-13, "n = {n}: gap {gap:.3e}");
        }
    }

    #[test]
    fn coefficients_sum_to_one() {
        for n in [1usize, 10, 100, 1000] {
            let mut xi = XiStream::new(XiLaw::Uniform { lo: 0.0, hi: 1.0 }, 2, 123).unwrap();
            let (product, sum) = closed_form_coefficients(&mut xi, n).unwrap();
            assert!(
                (product + sum - 1.0).abs() < 1e-14,
                "n = {n}: identity residual {}",
                (product + sum - 1.0).abs()
            );
        }
    }

    #[test]
    fn limit_channel_examples() {
        let rho = DensityMatrix::from_probabilities(&[1.0, 0.0]).unwrap();
        // mean = ln 2 gives lambda* = 1/2.
        let out = limit_channel(std::f64::consts::LN_2, &rho).unwrap();
        assert!((out.matrix().get(0, 0) - c(0.75, 0.0)).modulus() < 1e-15);
        // mean = 1: diag((1 + e^-1)/2, (1 - e^-1)/2).
        let out = limit_channel(1.0, &rho).unwrap();
        let e1 = (-1.0f64).exp();
        assert!((out.matrix().get(0, 0) - c((1.0 + e1) / 2.0, 0.0)).modulus() < 1e-15);
        assert!((out.matrix().get(1, 1) - c((1.0 - e1) / 2.0, 0.0)).modulus() < 1e-15);
        // mean -> 0: the state is unchanged in the limit.
        let near = limit_channel(1e-12, &qubit_state()).unwrap();
        assert!(near.matrix().sub(qubit_state().matrix()).unwrap().max_abs() < 1e-11);
    }

    #[test]
    fn superoperator_matches_channel_on_states() {
        let rho = qubit_state();
        let param = DepolarizingParam::new(0.37, 2).unwrap();
        let s = param.superoperator();
        let d = rho.dim();
        // vec(rho), row-major.
        let mut vec_rho = crate::ComplexVector::zeros(d * d);
        for i in 0..d {
            for j in 0..d {
                vec_rho.set(i * d + j, rho.matrix().get(i, j));
            }
        }
        let out_vec = s.matvec(&vec_rho).unwrap();
        let direct = apply_channel(&param, &rho).unwrap();
        for i in 0..d {
            for j in 0..d {
                let gap = (out_vec.get(i * d + j) - direct.matrix().get(i, j)).modulus();
                assert!(gap < 1e-15);
            }
        }
    }

    #[test]
    fn constant_stream_product_error_shrinks_like_one_over_n() {
        // |(1 - 1/n)^n - e^-1| is asymptotically e^-1 / (2n).
        let target = (-1.0f64).exp();
        let mut prev = f64::INFINITY;
        for &n in &[100usize, 10_000, 1_000_000] {
            let mut xi = XiStream::new(XiLaw::Constant(1.0), 2, 3).unwrap();
            let (product, _) = closed_form_coefficients(&mut xi, n).unwrap();
            let err = (product - target).abs();
            assert!(err < prev, "error should decrease: {err} at n = {n}");
            assert!(
                err < 1.2 * target / (2.0 * n as f64),
                "error {err} above asymptotic bound at n = {n}"
            );
            prev = err;
        }
    }

    #[test]
    fn uniform_stream_convergence_at_fixed_seed() {
        let rho = qubit_state();
        let mut xi = XiStream::new(XiLaw::Uniform { lo: 0.0, hi: 1.0 }, 2, 2024).unwrap();
        let rows = convergence_experiment(&mut xi, &rho, &[100, 10_000, 100_000]).unwrap();
        let last = rows.last().unwrap();
        assert!(last.coeff_product_error <= 1e-2);
        assert!(last.coeff_sum_error <= 1e-2);
        assert!(last.trace_distance <= 1e-2);
    }

    #[test]
    fn single_n_distance_is_nonzero() {
        // n = 1 with xi_1 = E xi: D_xi rho differs from D_{1-exp(-xi)} rho.
        let rho = DensityMatrix::from_probabilities(&[1.0, 0.0]).unwrap();
        let mut xi = XiStream::new(XiLaw::Constant(0.5), 2, 5).unwrap();
        let rows = convergence_experiment(&mut xi, &rho, &[1]).unwrap();
        assert!(rows[0].trace_distance > 1e-3);
    }

    #[test]
    fn prefix_stability_of_xi_stream() {
        let mut a = XiStream::new(XiLaw::Uniform { lo: 0.1, hi: 0.9 }, 2, 77).unwrap();
        let first: Vec<f64> = (1..=10).map(|i| a.value(i).unwrap()).collect();
        a.fill_to(1000);
        let again: Vec<f64> = (1..=10).map(|i| a.value(i).unwrap()).collect();
        assert_eq!(first, again);
        let upper = lambda_upper_limit(2);
        for i in 1..=1000 {
            let v = a.value(i).unwrap();
            assert!(v > 0.0 && v < upper);
        }
    }

    #[test]
    fn coefficient_error_decreases_along_quadrupling_path() {
        // Single-path almost-sure convergence: compare errors at n = 4^k.
        let mut inversions = 0;
        let mut prev = f64::INFINITY;
        for k in 3..=8 {
            let n = 4usize.pow(k);
            let mut xi = XiStream::new(XiLaw::Uniform { lo: 0.0, hi: 1.0 }, 2, 314).unwrap();
            let (product, _) = closed_form_coefficients(&mut xi, n).unwrap();
            let err = (product - (-0.5f64).exp()).abs();
            if err >= prev {
                inversions += 1;
            }
            prev = err;
        }
        assert!(inversions <= 1, "{inversions} inversions along the path");
    }
}
