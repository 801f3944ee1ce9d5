//! Triangular products of random semigroups, Chernoff approximants, and
//! sup-over-time convergence experiments.
//!
//! The central objects are the random product
//! `exp(-L1 t/n) exp(-L2 t/n) ... exp(-Ln t/n)` along one sample path and its
//! deterministic counterpart `F(t/n)^n` with `F(s) = E exp(-L s)`. Both are
//! compared against `exp(-L0 t)` uniformly over a time grid; reusing a single
//! stream across every `n` is what makes the experiment a per-path
//! (almost-sure style) statement rather than an in-distribution one.

use std::collections::HashMap;

use crate::ensemble::{GeneratorEnsemble, GeneratorStream};
use crate::error::{Error, Result};
use crate::linalg::{matrix_exp, operator_norm, vector_norm, NormMode};
use crate::stats::{log_log_fit, SlopeFit};
use crate::{Operator, RealVector};

/// Strictly increasing times in `[0, T]` containing both endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    points: Vec<f64>,
}

impl TimeGrid {
    /// `points` must be finite, strictly increasing, and start at 0. The
    /// degenerate single-point grid `{0}` is accepted for testing.
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyInput {
                context: "time grid",
            });
        }
        if points.iter().any(|t| !t.is_finite()) {
            return Err(Error::NonFinite {
                context: "time grid",
            });
        }
        if points[0] != 0.0 {
            return Err(Error::InvalidParameter {
                name: "grid",
                message: "time grid must start at 0".into(),
            });
        }
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter {
                name: "grid",
                message: "time grid must be strictly increasing".into(),
            });
        }
        Ok(Self { points })
    }

    /// Uniform grid of `count >= 2` points on `[0, horizon]`.
    pub fn uniform(horizon: f64, count: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidParameter {
                name: "T",
                message: format!("horizon must be positive, got {horizon}"),
            });
        }
        if count < 2 {
            return Err(Error::InvalidParameter {
                name: "grid_points",
                message: "uniform grid needs at least 2 points".into(),
            });
        }
        let step = horizon / (count - 1) as f64;
        let mut points: Vec<f64> = (0..count).map(|k| k as f64 * step).collect();
        // Pin the right endpoint exactly.
        points[count - 1] = horizon;
        Self::new(points)
    }

    pub fn horizon(&self) -> f64 {
        *self.points.last().expect("nonempty")
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }
}

/// Per-`n` record of `|(product - exp(-L0 t)) x|` over the grid.
#[derive(Debug, Clone)]
pub struct TrajectoryError {
    pub n: usize,
    pub per_time: Vec<(f64, f64)>,
    pub sup_error: f64,
}

/// Exponential factors for one product, deduplicated per discrete outcome.
pub(crate) struct ProductFactors {
    exps: Vec<Operator>,
    /// For each position `i` (0-based), the index into `exps`.
    outcome: Vec<usize>,
}

impl ProductFactors {
    pub(crate) fn factor(&self, position: usize) -> &Operator {
        &self.exps[self.outcome[position]]
    }

    pub(crate) fn len(&self) -> usize {
        self.outcome.len()
    }
}

/// Builds the factors `exp(-L_i step)` for `i = 1..=n`. Discrete laws share
/// one exponential per support point, which collapses the cost of a product
/// from `n` matrix exponentials to `|support|`.
pub(crate) fn product_factors(
    stream: &mut GeneratorStream,
    n: usize,
    step: f64,
) -> Result<ProductFactors> {
    stream.fill_to(n)?;
    if stream.ensemble().is_discrete() {
        let support = stream.ensemble().support_generators()?;
        let mut exps = Vec::with_capacity(support.len());
        for (_, gen) in &support {
            exps.push(matrix_exp(gen, -step)?);
        }
        let outcome = (1..=n)
            .map(|i| stream.support_index(i).expect("discrete stream"))
            .collect();
        Ok(ProductFactors { exps, outcome })
    } else {
        let mut exps = Vec::with_capacity(n);
        for i in 1..=n {
            let l = stream.get(i).expect("filled").clone();
            exps.push(matrix_exp(&l, -step)?);
        }
        Ok(ProductFactors {
            exps,
            outcome: (0..n).collect(),
        })
    }
}

fn validate_product_args(n: usize, t: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter {
            name: "n",
            message: "product length must be at least 1".into(),
        });
    }
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "t",
            message: format!("time must be finite and nonnegative, got {t}"),
        });
    }
    Ok(())
}

/// Product `exp(-L_1 s) exp(-L_2 s) ... exp(-L_n s)` with explicit step `s`,
/// multiplied left to right in index order.
pub(crate) fn product_with_step(
    stream: &mut GeneratorStream,
    n: usize,
    step: f64,
) -> Result<Operator> {
    let factors = product_factors(stream, n, step)?;
    let mut acc = factors.factor(0).clone();
    for i in 1..factors.len() {
        acc = acc.matmul(factors.factor(i))?;
    }
    Ok(acc)
}

/// Action `exp(-L_1 s) ... exp(-L_n s) x` computed by sequential matvec
/// (cost n dim^2 instead of n dim^3); the rightmost factor acts first.
pub(crate) fn product_apply_with_step(
    stream: &mut GeneratorStream,
    n: usize,
    step: f64,
    x: &RealVector,
) -> Result<RealVector> {
    let factors = product_factors(stream, n, step)?;
    let mut v = x.clone();
    for i in (0..factors.len()).rev() {
        v = factors.factor(i).matvec(&v)?;
    }
    Ok(v)
}

/// The triangular random product `exp(-L1 t/n) ... exp(-Ln t/n)`.
pub fn random_product(stream: &mut GeneratorStream, n: usize, t: f64) -> Result<Operator> {
    validate_product_args(n, t)?;
    product_with_step(stream, n, t / n as f64)
}

/// Action of [`random_product`] on a vector without forming the full matrix.
pub fn random_product_apply(
    stream: &mut GeneratorStream,
    n: usize,
    t: f64,
    x: &RealVector,
) -> Result<RealVector> {
    validate_product_args(n, t)?;
    product_apply_with_step(stream, n, t / n as f64, x)
}

/// Chernoff approximant `(E exp(-L t/n))^n` for finite-support laws.
pub fn chernoff_power(e: &GeneratorEnsemble, n: usize, t: f64) -> Result<Operator> {
    validate_product_args(n, t)?;
    let f = e.exact_expected_semigroup(t / n as f64)?;
    Ok(f.pow(n))
}

/// One `(t, n)` evaluation of the growth condition `|F(t)^n| <= M exp(gamma n t)`.
#[derive(Debug, Clone, Copy)]
pub struct GrowthMargin {
    pub t: f64,
    pub n: usize,
    pub observed_log_norm: f64,
    pub allowed_log: f64,
    /// `observed_log_norm - allowed_log`; nonpositive means the bound holds.
    pub margin: f64,
}

/// Finite-difference probe of `F'(0) y = -L0 y` at one step size.
#[derive(Debug, Clone, Copy)]
pub struct DerivativeProbe {
    pub h: f64,
    /// Max over basis vectors of `|(F(h) y - y)/h + L0 y|_2`.
    pub max_deviation: f64,
}

/// Report for the three Chernoff-type conditions: `F(0) = I`, powers bounded
/// by `M exp(gamma n t)`, and `F'(0) = -L0` on a basis.
#[derive(Debug, Clone)]
pub struct ChernoffConditions {
    /// `|F(0) - I|_max`; exactly zero is expected.
    pub identity_error: f64,
    pub growth: Vec<GrowthMargin>,
    pub derivative: Vec<DerivativeProbe>,
}

impl ChernoffConditions {
    pub fn worst_growth_margin(&self) -> f64 {
        self.growth
            .iter()
            .map(|g| g.margin)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Smallest finite-difference deviation achieved over the step list.
    pub fn best_derivative_deviation(&self) -> f64 {
        self.derivative
            .iter()
            .map(|d| d.max_deviation)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Checks the Chernoff conditions with `K = M`, `a = gamma` over the grid and
/// product lengths `1, 2, 4, ..., <= n_max`.
///
/// Requires a discrete ensemble and an exact-norm context (p in {1, 2, inf}).
pub fn chernoff_conditions(
    e: &GeneratorEnsemble,
    grid: &TimeGrid,
    n_max: usize,
) -> Result<ChernoffConditions> {
    if !e.norm_ctx().has_exact_operator_norm() {
        return Err(Error::ExactNormUnavailable {
            p: e.norm_ctx().exponent(),
        });
    }
    let identity_error = e
        .exact_expected_semigroup(0.0)?
        .sub(&Operator::identity(e.dim()))?
        .max_abs();

    let gamma = e.gamma();
    let log_m = e.growth_constant().ln();
    let mut growth = Vec::new();
    let mut n = 1usize;
    let mut n_values = Vec::new();
    while n <= n_max.max(1) {
        n_values.push(n);
        n = n.saturating_mul(2);
    }
    for &t in grid.points() {
        let f = e.exact_expected_semigroup(t)?;
        for &n in &n_values {
            let norm = operator_norm(&f.pow(n), e.norm_ctx(), NormMode::Exact)?.value;
            let observed_log_norm = norm.ln();
            let allowed_log = log_m + gamma * (n as f64) * t;
            growth.push(GrowthMargin {
                t,
                n,
                observed_log_norm,
                allowed_log,
                margin: observed_log_norm - allowed_log,
            });
        }
    }

    let dim = e.dim();
    let h_list = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6];
    let mut derivative = Vec::new();
    for &h in &h_list {
        let f = e.exact_expected_semigroup(h)?;
        let mut worst = 0.0f64;
        for j in 0..dim {
            let y = RealVector::basis(dim, j);
            let fy = f.matvec(&y)?;
            let quotient = fy.sub(&y)?.scale(1.0 / h);
            let target = e.base().matvec(&y)?;
            let dev = vector_norm(&quotient.add(&target)?, e.norm_ctx());
            worst = worst.max(dev);
        }
        derivative.push(DerivativeProbe {
            h,
            max_deviation: worst,
        });
    }

    Ok(ChernoffConditions {
        identity_error,
        growth,
        derivative,
    })
}

fn validate_n_list(n_list: &[usize]) -> Result<()> {
    if n_list.is_empty() {
        return Err(Error::EmptyInput { context: "n_list" });
    }
    if n_list[0] == 0 {
        return Err(Error::InvalidParameter {
            name: "n_list",
            message: "product lengths must be at least 1".into(),
        });
    }
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter {
            name: "n_list",
            message: "n_list must be strictly increasing".into(),
        });
    }
    Ok(())
}

/// Default product lengths: powers of two `2^2 .. 2^12`.
pub fn default_n_list() -> Vec<usize> {
    (2..=12).map(|k| 1usize << k).collect()
}

/// Sup-over-grid error of the random product against `exp(-L0 t)` on a single
/// sample path, for each `n` in an increasing list. The same stream is reused
/// across all `n`, so the `n`-indexed products share one path.
pub fn slln_experiment(
    stream: &mut GeneratorStream,
    x: &RealVector,
    grid: &TimeGrid,
    n_list: &[usize],
) -> Result<Vec<TrajectoryError>> {
    validate_n_list(n_list)?;
    if x.dim() != stream.ensemble().dim() {
        return Err(Error::DimensionMismatch {
            context: "slln_experiment vector",
            expected: stream.ensemble().dim(),
            found: x.dim(),
        });
    }
    let ctx = *stream.ensemble().norm_ctx();
    let base = stream.ensemble().base().clone();
    stream.fill_to(*n_list.last().expect("nonempty"))?;

    let reference: Vec<(f64, RealVector)> = grid
        .points()
        .iter()
        .map(|&t| Ok((t, matrix_exp(&base, -t)?.matvec(x)?)))
        .collect::<Result<_>>()?;

    let mut out = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let mut per_time = Vec::with_capacity(reference.len());
        let mut sup = 0.0f64;
        for (t, reference_action) in &reference {
            let v = if *t == 0.0 {
                x.clone()
            } else {
                product_apply_with_step(stream, n, *t / n as f64, x)?
            };
            let err = vector_norm(&v.sub(reference_action)?, &ctx);
            sup = sup.max(err);
            per_time.push((*t, err));
        }
        out.push(TrajectoryError {
            n,
            per_time,
            sup_error: sup,
        });
    }
    Ok(out)
}

/// Chernoff bias experiment: sup-over-grid error of `F(t/n)^n x` against
/// `exp(-L0 t) x` per `n`, plus a log-log slope fit of error against `n`.
#[derive(Debug, Clone)]
pub struct BiasResult {
    pub errors: Vec<TrajectoryError>,
    pub slope: Option<SlopeFit>,
}

pub fn chernoff_bias_experiment(
    e: &GeneratorEnsemble,
    x: &RealVector,
    grid: &TimeGrid,
    n_list: &[usize],
) -> Result<BiasResult> {
    validate_n_list(n_list)?;
    if x.dim() != e.dim() {
        return Err(Error::DimensionMismatch {
            context: "chernoff_bias vector",
            expected: e.dim(),
            found: x.dim(),
        });
    }
    let ctx = *e.norm_ctx();
    let reference: Vec<(f64, RealVector)> = grid
        .points()
        .iter()
        .map(|&t| Ok((t, matrix_exp(e.base(), -t)?.matvec(x)?)))
        .collect::<Result<_>>()?;

    let mut errors = Vec::with_capacity(n_list.len());
    // Cache F(s)^n by (s bits, n); distinct t values share nothing, but the
    // grid frequently contains repeated steps t/n for power-of-two lists.
    let mut power_cache: HashMap<(u64, usize), Operator> = HashMap::new();
    for &n in n_list {
        let mut per_time = Vec::with_capacity(reference.len());
        let mut sup = 0.0f64;
        for (t, reference_action) in &reference {
            let approx = if *t == 0.0 {
                x.clone()
            } else {
                let step = *t / n as f64;
                let key = (step.to_bits(), n);
                let power = match power_cache.get(&key) {
                    Some(p) => p.clone(),
                    None => {
                        let p = e.exact_expected_semigroup(step)?.pow(n);
                        power_cache.insert(key, p.clone());
                        p
                    }
                };
                power.matvec(x)?
            };
            let err = vector_norm(&approx.sub(reference_action)?, &ctx);
            sup = sup.max(err);
            per_time.push((*t, err));
        }
        errors.push(TrajectoryError {
            n,
            per_time,
            sup_error: sup,
        });
    }
    let pairs: Vec<(f64, f64)> = errors
        .iter()
        .map(|e| (e.n as f64, e.sup_error))
        .collect();
    Ok(BiasResult {
        slope: log_log_fit(&pairs),
        errors,
    })
}
