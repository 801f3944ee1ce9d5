//! The product-minus-mean decomposition and its quantitative audits.
//!
//! Write `E = E exp(-L s)` and `Delta_i(s) = exp(-L_i s) - E`. Expanding the
//! product `prod_i (E + Delta_i(s))` by subsets gives the decomposition
//!
//! ```text
//! exp(-L_1 s) ... exp(-L_n s) = sum_{P subset of [n]} F_{n,P}(s),
//! F_{n,P}(s) = E^{i1-1} Delta_{i1}(s) E^{i2-i1-1} ... Delta_{ik}(s) E^{n-ik}
//! ```
//!
//! for `P = {i1 < ... < ik}`, with `F_{n,empty} = E^n`. Grouping the nonempty
//! subsets by their largest element `k` yields martingale increments
//! `d_{n,k}(t) = sum_{max P = k} F_{n,P}(t/n) x` whose partial sums form the
//! product-minus-mean martingale `mu_n(t)`.
//!
//! This module evaluates all of these objects two ways where feasible (direct
//! subset enumeration against a factored form), checks the vanishing of
//! conditional expectations exactly on finite supports, audits the norm
//! bounds `|E| <= M e^{gamma s}`, `|Delta_i(s)| <= 2 gamma s e^{gamma s}`,
//! `|F_{n,P}(s)| <= (2 gamma s)^k e^{n gamma s}`, and
//! `|d_{n,k}(t)| <= (2 gamma t / n) e^{3 gamma t} |x|`, and runs Monte Carlo
//! probes of the Burkholder moment inequality and the tail decay.
//!
//! The `(2 gamma s)^k e^{n gamma s}` and `(2 gamma t/n) e^{3 gamma t}` bounds
//! carry no factor of M, so they are asserted only for M = 1 ensembles; for
//! M > 1 the same margins are reported as data without a pass/fail verdict.

use crate::ensemble::{GeneratorEnsemble, GeneratorStream};
use crate::error::{Error, Result};
use crate::linalg::{matrix_exp, operator_norm, vector_norm, NormContext, NormMode};
use crate::seeding::sub_seed;
use crate::semigroup::product_with_step;
use crate::stats::{log_log_fit, SlopeFit};
use crate::{Operator, RealVector};

/// Largest `n` for which `2^n`-term subset enumerations are allowed.
pub const MAX_ENUMERATION_N: usize = 12;
/// Work cap (assembled operator products) for the conditional-expectation
/// enumeration.
const MAX_CONDITIONAL_PRODUCTS: usize = 1 << 22;

/// Sorted set of distinct indices in `[1, n]`, possibly empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexSet {
    n: usize,
    indices: Vec<usize>,
}

impl IndexSet {
    pub fn new(n: usize, mut indices: Vec<usize>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter {
                name: "n",
                message: "index range must be at least 1".into(),
            });
        }
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter {
                name: "indices",
                message: "indices must be distinct".into(),
            });
        }
        if indices.iter().any(|&i| i == 0 || i > n) {
            return Err(Error::InvalidParameter {
                name: "indices",
                message: format!("indices must lie in 1..={n}"),
            });
        }
        Ok(Self { n, indices })
    }

    pub fn empty(n: usize) -> Self {
        Self {
            n,
            indices: Vec::new(),
        }
    }

    /// Subset of `[1, n]` from the low `n` bits of `mask`.
    pub fn from_bitmask(n: usize, mask: u32) -> Self {
        let indices = (1..=n).filter(|i| mask >> (i - 1) & 1 == 1).collect();
        Self { n, indices }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn cardinality(&self) -> usize {
        self.indices.len()
    }

    pub fn max_index(&self) -> Option<usize> {
        self.indices.last().copied()
    }
}

/// One decomposition term together with the bound it must satisfy.
#[derive(Debug, Clone)]
pub struct DecompositionTerm {
    pub index_set: IndexSet,
    /// Step argument `s` of the term.
    pub step: f64,
    pub value: Operator,
    /// `(2 gamma s)^k e^{n gamma s}` with `k = |P|`.
    pub bound: f64,
}

/// The bound `(2 gamma s)^k e^{n gamma s}`.
pub fn term_bound(gamma: f64, n: usize, k: usize, s: f64) -> f64 {
    (2.0 * gamma * s).powi(k as i32) * (n as f64 * gamma * s).exp()
}

/// Precomputed data for decomposition work at fixed `(n, s)` on one sample
/// path: powers of `E exp(-L s)` and the per-index semigroup factors.
pub struct Decomposition {
    n: usize,
    step: f64,
    gamma: f64,
    norm_ctx: NormContext,
    expected_pow: Vec<Operator>,
    /// Per support point: `exp(-(L0 + B_j) s)`.
    support_exp: Vec<Operator>,
    /// Per support point: `Delta^{(j)}(s) = support_exp[j] - E`.
    support_delta: Vec<Operator>,
    /// Outcome drawn at each index `1..=n`.
    outcomes: Vec<usize>,
}

impl Decomposition {
    /// Requires a discrete ensemble (exact expectations). Cost: one matrix
    /// exponential per support point plus `n` products for the power table.
    pub fn new(stream: &mut GeneratorStream, n: usize, s: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter {
                name: "n",
                message: "need n >= 1".into(),
            });
        }
        if !(s.is_finite() && s >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "s",
                message: format!("step must be finite and nonnegative, got {s}"),
            });
        }
        let ensemble = stream.ensemble().clone();
        let expected = ensemble.exact_expected_semigroup(s)?;
        let support = ensemble.support_generators()?;
        stream.fill_to(n)?;

        let mut support_exp = Vec::with_capacity(support.len());
        let mut support_delta = Vec::with_capacity(support.len());
        for (_, gen) in &support {
            let e = matrix_exp(gen, -s)?;
            support_delta.push(e.sub(&expected)?);
            support_exp.push(e);
        }

        let mut expected_pow = Vec::with_capacity(n + 1);
        expected_pow.push(Operator::identity(ensemble.dim()));
        for k in 1..=n {
            expected_pow.push(expected_pow[k - 1].matmul(&expected)?);
        }

        let outcomes = (1..=n)
            .map(|i| {
                stream
                    .support_index(i)
                    .expect("discrete stream samples carry support indices")
            })
            .collect();

        Ok(Self {
            n,
            step: s,
            gamma: ensemble.gamma(),
            norm_ctx: *ensemble.norm_ctx(),
            expected_pow,
            support_exp,
            support_delta,
            outcomes,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn expected(&self) -> &Operator {
        &self.expected_pow[1]
    }

    pub fn expected_power(&self, k: usize) -> &Operator {
        &self.expected_pow[k]
    }

    /// `Delta_i(s)` for the sampled outcome at index `i` (1-based).
    pub fn delta(&self, index: usize) -> &Operator {
        &self.support_delta[self.outcomes[index - 1]]
    }

    fn factor_exp(&self, index: usize) -> &Operator {
        &self.support_exp[self.outcomes[index - 1]]
    }

    /// The interleaved product `F_{n,P}(s)` for this path.
    pub fn f_value(&self, set: &IndexSet) -> Result<Operator> {
        if set.n() != self.n {
            return Err(Error::DimensionMismatch {
                context: "index set range",
                expected: self.n,
                found: set.n(),
            });
        }
        let mut acc: Option<Operator> = None;
        let mut prev = 0usize;
        let absorb = |acc: Option<Operator>, m: &Operator| -> Result<Option<Operator>> {
            Ok(Some(match acc {
                None => m.clone(),
                Some(a) => a.matmul(m)?,
            }))
        };
        for &i in set.indices() {
            let gap = i - prev - 1;
            if gap > 0 {
                acc = absorb(acc, &self.expected_pow[gap])?;
            }
            acc = absorb(acc, self.delta(i))?;
            prev = i;
        }
        let tail = self.n - prev;
        if tail > 0 || acc.is_none() {
            acc = absorb(acc, &self.expected_pow[tail])?;
        }
        Ok(acc.expect("at least one factor"))
    }

    /// Direct product `exp(-L_1 s) ... exp(-L_n s)` from the cached factors.
    pub fn product(&self) -> Result<Operator> {
        let mut acc = self.factor_exp(1).clone();
        for i in 2..=self.n {
            acc = acc.matmul(self.factor_exp(i))?;
        }
        Ok(acc)
    }
}

/// `Delta_i(s) = exp(-L_i s) - E exp(-L s)` on the stream's path.
pub fn delta(stream: &mut GeneratorStream, index: usize, s: f64) -> Result<Operator> {
    let expected = stream.ensemble().exact_expected_semigroup(s)?;
    let l = stream.sample(index)?.clone();
    matrix_exp(&l, -s)?.sub(&expected)
}

/// `F_{n,P}(s)` together with its `(2 gamma s)^k e^{n gamma s}` bound.
pub fn f_term(stream: &mut GeneratorStream, set: &IndexSet, s: f64) -> Result<DecompositionTerm> {
    let d = Decomposition::new(stream, set.n(), s)?;
    let value = d.f_value(set)?;
    let bound = term_bound(d.gamma, set.n(), set.cardinality(), s);
    Ok(DecompositionTerm {
        index_set: set.clone(),
        step: s,
        value,
        bound,
    })
}

/// Residual `| prod_i exp(-L_i s) - sum_{P subset [n]} F_{n,P}(s) |` on the
/// stream's path, in the ensemble norm. Enumerates all `2^n` subsets, so
/// `n <= 12`.
pub fn decomposition_identity_check(
    stream: &mut GeneratorStream,
    n: usize,
    s: f64,
) -> Result<f64> {
    if n > MAX_ENUMERATION_N {
        return Err(Error::TooLarge {
            what: "decomposition subset enumeration",
            requested: n,
            limit: MAX_ENUMERATION_N,
        });
    }
    let d = Decomposition::new(stream, n, s)?;
    let direct = d.product()?;
    let mut sum = Operator::zeros(direct.dim());
    for mask in 0..(1u32 << n) {
        let set = IndexSet::from_bitmask(n, mask);
        sum = sum.add(&d.f_value(&set)?)?;
    }
    let ctx = d.norm_ctx;
    let diff = direct.sub(&sum)?;
    Ok(norm_in_ctx(&diff, &ctx)?)
}

fn norm_in_ctx(m: &Operator, ctx: &NormContext) -> Result<f64> {
    let mode = if ctx.has_exact_operator_norm() {
        NormMode::Exact
    } else {
        NormMode::Estimate(Default::default())
    };
    Ok(operator_norm(m, ctx, mode)?.value)
}

/// Martingale increment `d_{n,k}(t) = sum_{max P = k} F_{n,P}(t/n) x`,
/// evaluated in the factored form
/// `exp(-L_1 t/n) ... exp(-L_{k-1} t/n) Delta_k(t/n) E^{n-k} x`
/// (every `P` with `max P = k` splits as `P' u {k}`, and the sum of the
/// interleaved prefixes over `P' subset [k-1]` is exactly the product of the
/// first `k-1` factors). Cost is O(n) matrix-vector products, which is what
/// makes the Burkholder and tail probes feasible at n in the hundreds.
pub fn increment(
    stream: &mut GeneratorStream,
    n: usize,
    k: usize,
    t: f64,
    x: &RealVector,
) -> Result<RealVector> {
    check_increment_args(stream, n, k, x)?;
    let s = t / n as f64;
    let ensemble = stream.ensemble().clone();
    let expected = ensemble.exact_expected_semigroup(s)?;
    let support = ensemble.support_generators()?;
    stream.fill_to(n)?;
    let support_exp: Vec<Operator> = support
        .iter()
        .map(|(_, gen)| matrix_exp(gen, -s))
        .collect::<Result<_>>()?;

    // E^{n-k} x
    let mut v = x.clone();
    for _ in 0..(n - k) {
        v = expected.matvec(&v)?;
    }
    // Delta_k v
    let ek = &support_exp[stream.support_index(k).expect("discrete")];
    v = ek.matvec(&v)?.sub(&expected.matvec(&v)?)?;
    // Prefix factors, rightmost first.
    for i in (1..k).rev() {
        let e = &support_exp[stream.support_index(i).expect("discrete")];
        v = e.matvec(&v)?;
    }
    Ok(v)
}

/// As [`increment`], by direct enumeration of the `2^{k-1}` subsets of
/// `[k-1]`; the independent evaluation route, restricted to `n <= 12`.
pub fn increment_direct(
    stream: &mut GeneratorStream,
    n: usize,
    k: usize,
    t: f64,
    x: &RealVector,
) -> Result<RealVector> {
    check_increment_args(stream, n, k, x)?;
    if n > MAX_ENUMERATION_N {
        return Err(Error::TooLarge {
            what: "increment subset enumeration",
            requested: n,
            limit: MAX_ENUMERATION_N,
        });
    }
    let s = t / n as f64;
    let d = Decomposition::new(stream, n, s)?;
    let mut acc = RealVector::zeros(x.dim());
    for mask in 0..(1u32 << (k - 1)) {
        let mut indices: Vec<usize> = (1..k).filter(|i| mask >> (i - 1) & 1 == 1).collect();
        indices.push(k);
        let set = IndexSet::new(n, indices)?;
        acc = acc.add(&d.f_value(&set)?.matvec(x)?)?;
    }
    Ok(acc)
}

fn check_increment_args(
    stream: &GeneratorStream,
    n: usize,
    k: usize,
    x: &RealVector,
) -> Result<()> {
    if n == 0 || k == 0 || k > n {
        return Err(Error::InvalidParameter {
            name: "k",
            message: format!("need 1 <= k <= n, got k = {k}, n = {n}"),
        });
    }
    if x.dim() != stream.ensemble().dim() {
        return Err(Error::DimensionMismatch {
            context: "increment vector",
            expected: stream.ensemble().dim(),
            found: x.dim(),
        });
    }
    Ok(())
}

/// Exact conditional expectation of the (operator-valued) increment: for
/// every assignment of support outcomes to `L_1, ..., L_{k-1}`, averages
/// `sum_{max P = k} F_{n,P}(t/n)` over the outcome of `L_k` with the support
/// weights, and returns the maximal operator norm. A zero value (up to
/// rounding) is the martingale property; the cancellation happens at the
/// rightmost `Delta` factor, whose weighted mean is the centered zero.
///
/// The increment is evaluated by the definitional subset enumeration, so the
/// check does not assume the factored form. Requires support size <= 8,
/// `k <= n <= 8`, and an exact-norm context.
pub fn martingale_property_check(
    e: &GeneratorEnsemble,
    n: usize,
    k: usize,
    t: f64,
) -> Result<f64> {
    if n == 0 || k == 0 || k > n || n > 8 {
        return Err(Error::InvalidParameter {
            name: "k",
            message: format!("need 1 <= k <= n <= 8, got k = {k}, n = {n}"),
        });
    }
    if !e.norm_ctx().has_exact_operator_norm() {
        return Err(Error::ExactNormUnavailable {
            p: e.norm_ctx().exponent(),
        });
    }
    let support = e.support_generators()?;
    let m = support.len();
    if m > 8 {
        return Err(Error::TooLarge {
            what: "martingale check support",
            requested: m,
            limit: 8,
        });
    }
    let assignments = m.checked_pow((k - 1) as u32).ok_or(Error::TooLarge {
        what: "martingale conditional-expectation enumeration",
        requested: usize::MAX,
        limit: MAX_CONDITIONAL_PRODUCTS,
    })?;
    let products = assignments
        .saturating_mul(m)
        .saturating_mul(1 << (k - 1))
        .saturating_mul(n);
    if products > MAX_CONDITIONAL_PRODUCTS {
        return Err(Error::TooLarge {
            what: "martingale conditional-expectation enumeration",
            requested: products,
            limit: MAX_CONDITIONAL_PRODUCTS,
        });
    }

    let s = t / n as f64;
    let expected = e.exact_expected_semigroup(s)?;
    let dim = e.dim();
    let mut expected_pow = vec![Operator::identity(dim)];
    for i in 1..=n {
        expected_pow.push(expected_pow[i - 1].matmul(&expected)?);
    }
    let deltas: Vec<Operator> = support
        .iter()
        .map(|(_, gen)| Ok(matrix_exp(gen, -s)?.sub(&expected)?))
        .collect::<Result<_>>()?;
    let weights: Vec<f64> = support.iter().map(|(w, _)| *w).collect();

    // F_{n, P' u {k}} with explicit outcomes per position.
    let f_with_outcomes = |mask: u32, outcome_of: &dyn Fn(usize) -> usize| -> Result<Operator> {
        let mut acc: Option<Operator> = None;
        let mut prev = 0usize;
        let mut positions: Vec<usize> = (1..k).filter(|i| mask >> (i - 1) & 1 == 1).collect();
        positions.push(k);
        for i in positions {
            let gap = i - prev - 1;
            let d = &deltas[outcome_of(i)];
            let with_gap = if gap > 0 {
                match acc {
                    None => expected_pow[gap].clone(),
                    Some(a) => a.matmul(&expected_pow[gap])?,
                }
            } else {
                match acc {
                    None => Operator::identity(dim),
                    Some(a) => a,
                }
            };
            acc = Some(with_gap.matmul(d)?);
            prev = i;
        }
        let tail = n - prev;
        let done = acc.expect("position k always present");
        Ok(if tail > 0 {
            done.matmul(&expected_pow[tail])?
        } else {
            done
        })
    };

    let mut worst = 0.0f64;
    let mut digits = vec![0usize; k.saturating_sub(1)];
    loop {
        let mut conditional = Operator::zeros(dim);
        for (j, w) in weights.iter().enumerate() {
            let assignment = digits.clone();
            let outcome_of = move |i: usize| if i == k { j } else { assignment[i - 1] };
            let mut dval = Operator::zeros(dim);
            for mask in 0..(1u32 << (k - 1)) {
                dval = dval.add(&f_with_outcomes(mask, &outcome_of)?)?;
            }
            conditional = conditional.add(&dval.scale(*w))?;
        }
        let norm = operator_norm(&conditional, e.norm_ctx(), NormMode::Exact)?.value;
        worst = worst.max(norm);

        // Advance the mixed-radix assignment counter.
        let mut pos = 0;
        loop {
            if pos == digits.len() {
                return Ok(worst);
            }
            digits[pos] += 1;
            if digits[pos] < m {
                break;
            }
            digits[pos] = 0;
            pos += 1;
        }
    }
}

/// One audited case of the term bound.
#[derive(Debug, Clone)]
pub struct TermBoundRow {
    pub n: usize,
    pub k: usize,
    pub s: f64,
    pub observed: f64,
    pub bound: f64,
    pub margin: f64,
}

/// Audit row for `|E exp(-L s)| <= M e^{gamma s}`.
#[derive(Debug, Clone, Copy)]
pub struct ExpectedNormRow {
    pub s: f64,
    pub observed: f64,
    pub bound: f64,
    pub margin: f64,
}

/// Audit row for `|Delta_i(s)| <= 2 gamma s e^{gamma s}` (per support point).
#[derive(Debug, Clone, Copy)]
pub struct DeltaNormRow {
    pub support_index: usize,
    pub s: f64,
    pub observed: f64,
    pub bound: f64,
    pub margin: f64,
}

/// Informational row for the intermediate step `|exp(-L s) - I| <= gamma s
/// e^{gamma s}`, whose constant ignores `|L|`; margins are recorded as data,
/// never asserted (the displayed Delta bound is what the audits enforce).
#[derive(Debug, Clone, Copy)]
pub struct SemigroupGapRow {
    pub support_index: usize,
    pub s: f64,
    pub observed: f64,
    pub stated_bound: f64,
    pub margin: f64,
}

#[derive(Debug, Clone)]
pub struct LemmaCase {
    pub n: usize,
    pub indices: Vec<usize>,
    pub s: f64,
}

/// Full audit report of the term/expected/delta bounds.
#[derive(Debug, Clone)]
pub struct BoundAuditReport {
    /// True when the ensemble has `M = 1`, i.e. when the M-free bounds are
    /// asserted rather than merely recorded.
    pub asserted: bool,
    pub term_rows: Vec<TermBoundRow>,
    pub expected_rows: Vec<ExpectedNormRow>,
    pub delta_rows: Vec<DeltaNormRow>,
    pub gap_rows: Vec<SemigroupGapRow>,
}

/// Rounding slack applied when counting violations.
pub const VIOLATION_SLACK: f64 = 1e-12;

impl BoundAuditReport {
    pub fn worst_term_margin(&self) -> f64 {
        self.term_rows
            .iter()
            .map(|r| r.margin)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Violations of the asserted inequalities (term, expected, delta rows).
    pub fn violations(&self) -> usize {
        let term = self
            .term_rows
            .iter()
            .filter(|r| r.margin > VIOLATION_SLACK)
            .count();
        let e = self
            .expected_rows
            .iter()
            .filter(|r| r.margin > VIOLATION_SLACK)
            .count();
        let d = self
            .delta_rows
            .iter()
            .filter(|r| r.margin > VIOLATION_SLACK)
            .count();
        term + e + d
    }
}

/// Audits `|F_{n,P}(s)|` against `(2 gamma s)^k e^{n gamma s}` for each case,
/// and separately audits the expected-norm and delta-norm bounds (with the
/// ensemble's own `M`) at each distinct `s`. Requires an exact-norm context.
pub fn lemma_bound_check(
    stream: &mut GeneratorStream,
    cases: &[LemmaCase],
) -> Result<BoundAuditReport> {
    let ensemble = stream.ensemble().clone();
    if !ensemble.norm_ctx().has_exact_operator_norm() {
        return Err(Error::ExactNormUnavailable {
            p: ensemble.norm_ctx().exponent(),
        });
    }
    let gamma = ensemble.gamma();
    let m_const = ensemble.growth_constant();
    let ctx = *ensemble.norm_ctx();

    let mut term_rows = Vec::with_capacity(cases.len());
    let mut expected_rows = Vec::new();
    let mut delta_rows = Vec::new();
    let mut gap_rows = Vec::new();
    let mut seen_steps: Vec<f64> = Vec::new();

    for case in cases {
        let set = IndexSet::new(case.n, case.indices.clone())?;
        let d = Decomposition::new(stream, case.n, case.s)?;
        let value = d.f_value(&set)?;
        let observed = operator_norm(&value, &ctx, NormMode::Exact)?.value;
        let bound = term_bound(gamma, case.n, set.cardinality(), case.s);
        term_rows.push(TermBoundRow {
            n: case.n,
            k: set.cardinality(),
            s: case.s,
            observed,
            bound,
            margin: observed - bound,
        });

        if seen_steps.iter().any(|&s| s == case.s) {
            continue;
        }
        seen_steps.push(case.s);
        let s = case.s;
        let e_norm = operator_norm(d.expected(), &ctx, NormMode::Exact)?.value;
        let e_bound = m_const * (gamma * s).exp();
        expected_rows.push(ExpectedNormRow {
            s,
            observed: e_norm,
            bound: e_bound,
            margin: e_norm - e_bound,
        });
        let identity = Operator::identity(ensemble.dim());
        for (j, (_, gen)) in ensemble.support_generators()?.iter().enumerate() {
            let exp_j = matrix_exp(gen, -s)?;
            let delta_j = exp_j.sub(d.expected())?;
            let observed = operator_norm(&delta_j, &ctx, NormMode::Exact)?.value;
            let bound = 2.0 * gamma * s * (gamma * s).exp();
            delta_rows.push(DeltaNormRow {
                support_index: j,
                s,
                observed,
                bound,
                margin: observed - bound,
            });
            let gap = operator_norm(&exp_j.sub(&identity)?, &ctx, NormMode::Exact)?.value;
            let stated = gamma * s * (gamma * s).exp();
            gap_rows.push(SemigroupGapRow {
                support_index: j,
                s,
                observed: gap,
                stated_bound: stated,
                margin: gap - stated,
            });
        }
    }

    Ok(BoundAuditReport {
        asserted: m_const == 1.0,
        term_rows,
        expected_rows,
        delta_rows,
        gap_rows,
    })
}

/// Margin `|d_{n,k}(t)| - (2 gamma t / n) e^{3 gamma t} |x|` (nonpositive
/// means the increment bound holds); factored evaluation.
pub fn increment_bound_check(
    stream: &mut GeneratorStream,
    n: usize,
    k: usize,
    t: f64,
    x: &RealVector,
) -> Result<f64> {
    let ctx = *stream.ensemble().norm_ctx();
    let gamma = stream.ensemble().gamma();
    let d = increment(stream, n, k, t, x)?;
    let observed = vector_norm(&d, &ctx);
    let bound = (2.0 * gamma * t / n as f64) * (3.0 * gamma * t).exp() * vector_norm(x, &ctx);
    Ok(observed - bound)
}

/// `mu_n(t) x = (product - E product) x` along one explicit outcome path.
fn mu_on_path(
    support_exp: &[Operator],
    outcomes: &[usize],
    chernoff_action: &RealVector,
    x: &RealVector,
) -> Result<RealVector> {
    let mut v = x.clone();
    for &o in outcomes.iter().rev() {
        v = support_exp[o].matvec(&v)?;
    }
    v.sub(chernoff_action)
}

/// Row of the Burkholder probe table.
#[derive(Debug, Clone, Copy)]
pub struct BurkholderRow {
    pub n: usize,
    /// Monte Carlo mean of `|mu_n|^r`.
    pub lhs: f64,
    /// Monte Carlo mean of `(sum_k |d_{n,k}|^p)^{r/p}`.
    pub rhs: f64,
    /// `lhs / rhs`; `None` when both sides vanish.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct BurkholderProbe {
    pub p: f64,
    /// `r = 2p / (p - 1)`, derived, never supplied.
    pub r: f64,
    pub t: f64,
    pub trials: usize,
    pub rows: Vec<BurkholderRow>,
}

impl BurkholderProbe {
    /// Max ratio divided by min ratio across rows where both sides are
    /// nonzero; `None` when every row is degenerate.
    pub fn ratio_spread(&self) -> Option<f64> {
        let ratios: Vec<f64> = self.rows.iter().filter_map(|r| r.ratio).collect();
        if ratios.is_empty() {
            return None;
        }
        let max = ratios.iter().cloned().fold(f64::MIN, f64::max);
        let min = ratios.iter().cloned().fold(f64::MAX, f64::min);
        Some(max / min)
    }
}

fn smoothness_exponent(p: f64) -> Result<f64> {
    if !(p > 1.0 && p <= 2.0) {
        return Err(Error::InvalidParameter {
            name: "p",
            message: format!("smoothness exponent must lie in (1, 2], got {p}"),
        });
    }
    Ok(2.0 * p / (p - 1.0))
}

/// Monte Carlo probe of the moment inequality
/// `E |mu_n|^r <= C E (sum_k |d_{n,k}|^p)^{r/p}` with `r = 2p/(p-1)`:
/// reports both sides and their ratio per `n`. The check is boundedness of
/// the ratio across `n` (existence of the constant), not a specific value.
pub fn burkholder_probe(
    e: &GeneratorEnsemble,
    x: &RealVector,
    t: f64,
    n_list: &[usize],
    trials: usize,
    p: f64,
    seed: u64,
) -> Result<BurkholderProbe> {
    let r = smoothness_exponent(p)?;
    if n_list.is_empty() {
        return Err(Error::EmptyInput { context: "n_list" });
    }
    if trials == 0 {
        return Err(Error::InvalidParameter {
            name: "trials",
            message: "need at least one trial".into(),
        });
    }
    let vec_ctx = NormContext::new(p)?;
    let support = e.support_generators()?;

    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        if n == 0 {
            return Err(Error::InvalidParameter {
                name: "n_list",
                message: "product lengths must be at least 1".into(),
            });
        }
        let s = t / n as f64;
        let expected = e.exact_expected_semigroup(s)?;
        let support_exp: Vec<Operator> = support
            .iter()
            .map(|(_, gen)| matrix_exp(gen, -s))
            .collect::<Result<_>>()?;

        // W[k] = E^{n-k} x for k = 0..=n (W[n] = x, W[0] = E^n x).
        let mut w = vec![RealVector::zeros(x.dim()); n + 1];
        w[n] = x.clone();
        for k in (0..n).rev() {
            w[k] = expected.matvec(&w[k + 1])?;
        }

        let mut lhs_acc = 0.0f64;
        let mut rhs_acc = 0.0f64;
        for trial in 0..trials {
            let trial_seed = sub_seed(seed, trial as u64);
            let outcomes: Vec<usize> = (1..=n)
                .map(|i| e.outcome_index_at(trial_seed, i))
                .collect::<Result<_>>()?;

            let mut mu = RealVector::zeros(x.dim());
            let mut sum_p = 0.0f64;
            for k in 1..=n {
                // z = Delta_k E^{n-k} x, using E W[k] = W[k-1].
                let mut z = support_exp[outcomes[k - 1]]
                    .matvec(&w[k])?
                    .sub(&w[k - 1])?;
                for i in (1..k).rev() {
                    z = support_exp[outcomes[i - 1]].matvec(&z)?;
                }
                sum_p += vector_norm(&z, &vec_ctx).powf(p);
                mu = mu.add(&z)?;
            }
            lhs_acc += vector_norm(&mu, &vec_ctx).powf(r);
            rhs_acc += sum_p.powf(r / p);
        }
        let lhs = lhs_acc / trials as f64;
        let rhs = rhs_acc / trials as f64;
        let ratio = if rhs > 0.0 { Some(lhs / rhs) } else { None };
        rows.push(BurkholderRow { n, lhs, rhs, ratio });
    }
    Ok(BurkholderProbe {
        p,
        r,
        t,
        trials,
        rows,
    })
}

/// Row of the tail probe table.
#[derive(Debug, Clone, Copy)]
pub struct TailRow {
    pub n: usize,
    pub exceedances: usize,
    pub frequency: f64,
    /// `(|x|^r / eps^r) n^{-2} (2 gamma t)^r e^{3 r gamma t}` - the shape of
    /// the Markov bound, stated up to the moment-inequality constant.
    pub markov_bound: f64,
}

#[derive(Debug, Clone)]
pub struct TailProbe {
    pub epsilon: f64,
    pub r: f64,
    pub t: f64,
    pub trials: usize,
    pub rows: Vec<TailRow>,
    /// Log-log fit of frequency against n over rows with nonzero frequency.
    pub slope: Option<SlopeFit>,
}

/// Empirical exceedance frequencies `P(|mu_n(t)| > eps)` per `n`, against the
/// `n^{-2}`-shaped Markov bound.
pub fn tail_probe(
    e: &GeneratorEnsemble,
    x: &RealVector,
    t: f64,
    n_list: &[usize],
    epsilon: f64,
    trials: usize,
    p: f64,
    seed: u64,
) -> Result<TailProbe> {
    let r = smoothness_exponent(p)?;
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::InvalidParameter {
            name: "epsilon",
            message: format!("threshold must be positive, got {epsilon}"),
        });
    }
    if trials == 0 {
        return Err(Error::InvalidParameter {
            name: "trials",
            message: "need at least one trial".into(),
        });
    }
    let vec_ctx = NormContext::new(p)?;
    let support = e.support_generators()?;
    let gamma = e.gamma();
    let x_norm = vector_norm(x, &vec_ctx);

    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        if n == 0 {
            return Err(Error::InvalidParameter {
                name: "n_list",
                message: "product lengths must be at least 1".into(),
            });
        }
        let s = t / n as f64;
        let expected = e.exact_expected_semigroup(s)?;
        let support_exp: Vec<Operator> = support
            .iter()
            .map(|(_, gen)| matrix_exp(gen, -s))
            .collect::<Result<_>>()?;
        let chernoff_action = expected.pow(n).matvec(x)?;

        let mut exceedances = 0usize;
        for trial in 0..trials {
            let trial_seed = sub_seed(seed, trial as u64);
            let outcomes: Vec<usize> = (1..=n)
                .map(|i| e.outcome_index_at(trial_seed, i))
                .collect::<Result<_>>()?;
            let mu = mu_on_path(&support_exp, &outcomes, &chernoff_action, x)?;
            if vector_norm(&mu, &vec_ctx) > epsilon {
                exceedances += 1;
            }
        }
        let frequency = exceedances as f64 / trials as f64;
        let markov_bound = (x_norm / epsilon).powf(r)
            * (n as f64).powi(-2)
            * (2.0 * gamma * t).powf(r)
            * (3.0 * r * gamma * t).exp();
        rows.push(TailRow {
            n,
            exceedances,
            frequency,
            markov_bound,
        });
    }
    let pairs: Vec<(f64, f64)> = rows
        .iter()
        .filter(|row| row.frequency > 0.0)
        .map(|row| (row.n as f64, row.frequency))
        .collect();
    Ok(TailProbe {
        epsilon,
        r,
        t,
        trials,
        slope: log_log_fit(&pairs),
        rows,
    })
}

/// `(product - chernoff_power) x` on the stream path: the martingale value
/// the increments must reconstruct.
pub fn product_minus_mean(
    stream: &mut GeneratorStream,
    n: usize,
    t: f64,
    x: &RealVector,
) -> Result<RealVector> {
    if n == 0 {
        return Err(Error::InvalidParameter {
            name: "n",
            message: "need n >= 1".into(),
        });
    }
    let s = t / n as f64;
    let expected = stream.ensemble().exact_expected_semigroup(s)?;
    let direct = product_with_step(stream, n, s)?.matvec(x)?;
    direct.sub(&expected.pow(n).matvec(x)?)
}
