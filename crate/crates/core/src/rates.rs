//! Rate witnesses and the combinators that produce them.
//!
//! A rate of convergence for a sequence `(α_n) → 0` is an index-valued
//! function `φ` with `α_n ≤ ε` for every `n ≥ φ(ε)`. A rate of
//! divergence for `Σ α_i = ∞` is `r(N, x)` with
//! `Σ_{i=N}^{r(N,x)} α_i ≥ x` and `r(N, x) ≥ N`.
//!
//! All index arithmetic saturates at [`Index::MAX`]; the certification
//! layer treats saturated rates as exceeding any horizon.

use alloc::sync::Arc;

use crate::math;
use crate::{tol, Index, IndexFn, RealFn};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RateError {
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("target {target} not bracketed within the expansion budget")]
    BracketExhausted { target: f64 },
    #[error("bisection failed to reach value tolerance for target {target}")]
    BisectionStalled { target: f64 },
}

/// Ceil to an index, saturating: nonpositive values map to 0 and
/// anything at or beyond `Index::MAX` (including overflowed floats)
/// maps to `Index::MAX`.
pub fn ceil_index(x: f64) -> Index {
    if x.is_nan() {
        return Index::MAX;
    }
    if x <= 0.0 {
        return 0;
    }
    if x >= Index::MAX as f64 {
        return Index::MAX;
    }
    math::ceil(x) as Index
}

/// Witness `φ : (0, ∞) → ℕ` that a sequence stays at or below ε from
/// index `φ(ε)` on.
#[derive(Clone)]
pub struct RateOfConvergence {
    phi: IndexFn,
}

impl RateOfConvergence {
    pub fn new(phi: impl Fn(f64) -> Index + Send + Sync + 'static) -> Self {
        RateOfConvergence { phi: Arc::new(phi) }
    }

    pub fn at(&self, eps: f64) -> Index {
        assert!(eps > 0.0, "rate of convergence evaluated at eps = {eps}");
        (self.phi)(eps)
    }
}

/// Witness `r : ℕ × (0, ∞) → ℕ` that partial sums starting at `N`
/// accumulate at least `x` by index `r(N, x)`.
///
/// Evaluation clamps to `max(N, …)`, so the convention `r(N, x) ≥ N`
/// holds for every witness regardless of how it was built.
#[derive(Clone)]
pub struct RateOfDivergence {
    r: Arc<dyn Fn(Index, f64) -> Index + Send + Sync>,
}

impl RateOfDivergence {
    pub fn new(r: impl Fn(Index, f64) -> Index + Send + Sync + 'static) -> Self {
        RateOfDivergence { r: Arc::new(r) }
    }

    pub fn at(&self, start: Index, amount: f64) -> Index {
        assert!(amount > 0.0, "rate of divergence evaluated at x = {amount}");
        (self.r)(start, amount).max(start)
    }

    /// Converts a single-argument divergence witness
    /// `f` with `Σ_{i=0}^{f(x)} α_i ≥ x` into the two-argument form,
    /// assuming every term is bounded by `alpha_bound`:
    /// `r(N, x) = max(N, f(x + alpha_bound · N))`.
    pub fn from_partial_sum_rate(
        f: impl Fn(f64) -> Index + Send + Sync + 'static,
        alpha_bound: f64,
    ) -> Self {
        RateOfDivergence {
            r: Arc::new(move |start, amount| f(amount + alpha_bound * start as f64).max(start)),
        }
    }
}

/// Witness for the descent property behind the main combinator: from
/// index `start(ε)` on, while the sequence sits above ε, each step
/// decreases it by at least `α_n · gain(ε)`.
#[derive(Clone)]
pub struct DescentWitness {
    pub start: IndexFn,
    pub gain: RealFn,
}

impl DescentWitness {
    pub fn new(
        start: impl Fn(f64) -> Index + Send + Sync + 'static,
        gain: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        DescentWitness {
            start: Arc::new(start),
            gain: Arc::new(gain),
        }
    }
}

/// The central combinator: a sequence bounded by `bound` that satisfies
/// the descent property converges with rate
/// `ε ↦ r(start(ε), bound / gain(ε)) + 1`.
///
/// Panics if the witness gain is nonpositive at the requested ε.
pub fn from_descent(
    bound: f64,
    divergence: &RateOfDivergence,
    witness: &DescentWitness,
) -> RateOfConvergence {
    assert!(bound > 0.0, "descent combinator needs a positive bound, got {bound}");
    let r = divergence.clone();
    let start = witness.start.clone();
    let gain = witness.gain.clone();
    RateOfConvergence::new(move |eps| {
        let g = gain(eps);
        assert!(g > 0.0, "descent gain must be positive, got {g} at eps = {eps}");
        r.at(start(eps), bound / g).saturating_add(1)
    })
}

/// The sharper rate available when the sequence contracts linearly:
/// `θ_n ≤ bound · (1/(1+αc))^n` yields `ε ↦ ⌈log(bound/ε) / log(1+αc)⌉`
/// (clamped below at 0).
pub fn linear_rate(bound: f64, alpha: f64, c: f64) -> RateOfConvergence {
    assert!(bound > 0.0 && alpha > 0.0 && c > 0.0);
    let base = math::ln(1.0 + alpha * c);
    RateOfConvergence::new(move |eps| {
        if eps >= bound {
            0
        } else {
            ceil_index(math::ln(bound / eps) / base)
        }
    })
}

/// Inverts a strictly decreasing continuous `f : (0,∞) → (0,∞)` with
/// `f(ε) → ∞` as `ε → 0`: returns ε with
/// `|f(ε) − target| ≤ 1e−10 · (1 + |target|)`.
///
/// Bracketing starts on `[2^−40, 2^40]` and doubles the exponents at
/// most 20 times; an unbracketable target is reported, never clamped.
pub fn invert_decreasing(f: &dyn Fn(f64) -> f64, target: f64) -> Result<f64, RateError> {
    if !(target > 0.0) {
        return Err(RateError::NonPositive {
            name: "target",
            value: target,
        });
    }
    let value_tol = tol::INVERSE_VALUE * (1.0 + math::abs(target));

    let mut lo = math::pow2(-40);
    let mut hi = math::pow2(40);
    let mut budget = 20;
    // f is decreasing: f(lo) should sit above the target.
    while f(lo) < target {
        lo *= lo; // doubles the (negative) exponent
        budget -= 1;
        if budget == 0 || lo == 0.0 {
            return Err(RateError::BracketExhausted { target });
        }
    }
    while f(hi) > target {
        hi *= hi;
        budget -= 1;
        if budget == 0 || !hi.is_finite() {
            return Err(RateError::BracketExhausted { target });
        }
    }

    // Geometric bisection: the bracket spans many orders of magnitude.
    for _ in 0..2000 {
        let mid = math::sqrt(lo * hi);
        let fm = f(mid);
        if math::abs(fm - target) <= value_tol {
            return Ok(mid);
        }
        if fm > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * mid {
            // Continuity forces f(mid) → target as the bracket collapses;
            // reaching this point means f is not continuous near the root.
            break;
        }
    }
    Err(RateError::BisectionStalled { target })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    /// Direct-summation oracle for the divergence contract.
    fn sum_range(alpha: &dyn Fn(Index) -> f64, from: Index, to: Index) -> f64 {
        if to < from {
            return 0.0;
        }
        (from..=to).map(alpha).sum()
    }

    #[test]
    fn from_partial_sum_rate_constant_sequence() {
        // α_i ≡ 1, f(x) = ⌈max(x−1, 0)⌉.
        let alpha = |_: Index| 1.0;
        let f = |x: f64| ceil_index((x - 1.0).max(0.0));
        let r = RateOfDivergence::from_partial_sum_rate(f, 1.0);

        assert_eq!(r.at(0, 10.0), 9);
        assert!(sum_range(&alpha, 0, 9) >= 10.0);

        assert_eq!(r.at(5, 2.0), 6);
        assert!(sum_range(&alpha, 5, 6) >= 2.0);
    }

    #[test]
    fn divergence_never_below_start() {
        // Tiny x would give f(x + N) < N for a lazy f; the evaluation
        // clamp keeps the convention r(N, x) ≥ N intact.
        let f = |_: f64| 0;
        let r = RateOfDivergence::from_partial_sum_rate(f, 0.0);
        assert_eq!(r.at(17, 1e-9), 17);
    }

    #[test]
    fn divergence_contract_harmonic() {
        // α_i = 1/(i+1), f(x) = ⌈e^x⌉, bound 1. The converted witness
        // grows like e^(x+N), so the summation oracle keeps x + N small.
        let alpha = |i: Index| 1.0 / (i as f64 + 1.0);
        let f = |x: f64| ceil_index(math::exp(x));
        let r = RateOfDivergence::from_partial_sum_rate(f, 1.0);
        let mut rng = crate::sampling::Rng::new(3);
        for _ in 0..200 {
            let start = rng.below(8);
            let amount = rng.uniform(1e-6, 5.0);
            let end = r.at(start, amount);
            assert!(end >= start);
            assert!(
                sum_range(&alpha, start, end) >= amount - tol::DIVERGENCE_SUM,
                "start={start} amount={amount} end={end}"
            );
        }
    }

    #[test]
    fn descent_combinator_hand_values() {
        let r = RateOfDivergence::new(|n, x| n + ceil_index(x));
        // start ≡ 0, gain = identity: Ψ(0.1) = r(0, 1/0.1) + 1 = 11.
        let w = DescentWitness::new(|_| 0, |e| e);
        let rate = from_descent(1.0, &r, &w);
        assert_eq!(rate.at(0.1), 11);
        // start ≡ 5, gain ≡ 1: Ψ(ε) = r(5, 1) + 1 = 7 for every ε.
        let w = DescentWitness::new(|_| 5, |_| 1.0);
        let rate = from_descent(1.0, &r, &w);
        assert_eq!(rate.at(0.5), 7);
        assert_eq!(rate.at(1e-6), 7);
    }

    #[test]
    fn descent_combinator_certifies_synthetic_sequence() {
        // θ_{n+1} = max(0, θ_n − α_n · gain(ε̄)): the descent property
        // holds at ε̄ by construction, so θ_n ≤ ε̄ from Ψ(ε̄) on.
        let mut rng = crate::sampling::Rng::new(9);
        for _ in 0..50 {
            let k = rng.uniform(0.5, 4.0);
            let theta0 = k * rng.uniform(0.1, 0.99);
            let lo = rng.uniform(0.1, 0.5);
            let alphas: Vec<f64> = (0..4000).map(|_| rng.uniform(lo, 1.0)).collect();
            let r = RateOfDivergence::new(move |n, x| n.saturating_add(ceil_index(x / lo)));
            let eps_bar = rng.uniform(1e-3, 0.2);
            let gain_value = rng.uniform(0.05, 0.5);
            let w = DescentWitness::new(|_| 0, move |_| gain_value);
            let rate = from_descent(k, &r, &w);

            let mut theta = theta0;
            let mut seq = Vec::with_capacity(alphas.len() + 1);
            seq.push(theta);
            for a in &alphas {
                theta = (theta - a * gain_value).max(0.0);
                seq.push(theta);
            }
            let psi = rate.at(eps_bar);
            assert!((psi as usize) < seq.len(), "rate exceeded test horizon");
            for value in &seq[psi as usize..] {
                assert!(*value <= eps_bar + 1e-15);
            }
        }
    }

    #[test]
    fn linear_rate_hand_values() {
        let rate = linear_rate(1.0, 1.0, 1.0);
        assert_eq!(rate.at(2.0_f64.powi(-10)), 10);
        assert_eq!(rate.at(1.0), 0);
        assert_eq!(rate.at(2.0), 0);
    }

    #[test]
    fn linear_rate_improves_on_descent_rate() {
        // Against r(N,x) = N + ⌈x⌉ (valid for α ≡ 1), the descent
        // combinator gives ⌈1/ε⌉ + 1 = 1025 at ε = 2^−10 while the
        // linear analysis gives 10.
        let r = RateOfDivergence::new(|n, x| n + ceil_index(x));
        let w = DescentWitness::new(|_| 0, |e| e);
        let coarse = from_descent(1.0, &r, &w);
        let fine = linear_rate(1.0, 1.0, 1.0);
        let eps = 2.0_f64.powi(-10);
        assert_eq!(coarse.at(eps), 1025);
        assert!(fine.at(eps) < coarse.at(eps));
    }

    #[test]
    fn invert_decreasing_reciprocal() {
        let f = |e: f64| 1.0 / e;
        let inv = invert_decreasing(&f, 10.0).unwrap();
        assert!((inv - 0.1).abs() <= 1e-9);
    }

    #[test]
    fn invert_decreasing_strength_envelope_shape() {
        // f(ε) = K/ψ(ε) with ψ = id, K = 1: f⁻¹(4) = 1/4.
        let f = |e: f64| 1.0 / e;
        let inv = invert_decreasing(&f, 4.0).unwrap();
        assert!((inv - 0.25).abs() <= 1e-9);
    }

    #[test]
    fn invert_decreasing_fixed_point() {
        let f = |e: f64| 3.0 - math::ln(e); // strictly decreasing
        let target = f(1.0);
        let inv = invert_decreasing(&f, target).unwrap();
        assert!((inv - 1.0).abs() <= 1e-8);
    }

    #[test]
    fn invert_decreasing_round_trip() {
        let f = |e: f64| 2.0 / math::sqrt(e);
        let mut rng = crate::sampling::Rng::new(11);
        for _ in 0..200 {
            let target = rng.uniform(0.01, 1e4);
            let inv = invert_decreasing(&f, target).unwrap();
            assert!((f(inv) - target).abs() <= tol::INVERSE_VALUE * (1.0 + target));
        }
    }

    #[test]
    fn invert_decreasing_reports_unreachable_target() {
        // inf f = 1, so targets at or below 1 are out of range.
        let f = |e: f64| 1.0 + 1.0 / e;
        assert!(matches!(
            invert_decreasing(&f, 0.5),
            Err(RateError::BracketExhausted { .. })
        ));
        assert!(matches!(
            invert_decreasing(&f, -1.0),
            Err(RateError::NonPositive { .. })
        ));
    }

    #[test]
    fn ceil_index_saturates() {
        assert_eq!(ceil_index(-3.0), 0);
        assert_eq!(ceil_index(0.0), 0);
        assert_eq!(ceil_index(2.1), 3);
        assert_eq!(ceil_index(f64::INFINITY), Index::MAX);
        assert_eq!(ceil_index(1e300), Index::MAX);
    }
}
