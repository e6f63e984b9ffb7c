//! Set-valued operators through canonical selections, the accretivity
//! modulus toolkit, Hausdorff predicates over finite point sets, and
//! uniform approximation of operator sequences.
//!
//! Iteration engines only ever consume one chosen element of `Ax`, so
//! an [`Operator`] is a deterministic selection plus metadata; genuine
//! set-valuedness is exercised through optional finite enumerations on
//! test instances.

use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::math;
use crate::rates::RateOfConvergence;
use crate::sampling::Rng;
use crate::space::{LpSpace, SpaceError, Vector};
use crate::{tol, Index, RealFn};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OperatorError {
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("empty point set")]
    EmptySet,
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("point sits at the declared zero; a positive radius is required")]
    AtZero,
    #[error("radius {radius} outside the admissible interval (0, {bound}]")]
    RadiusOutOfRange { radius: f64, bound: f64 },
    #[error("selection at the declared zero has norm {0}, expected 0")]
    ZeroNotZero(f64),
    #[error("lambda = {0} outside [0, 0.5]")]
    InvalidLambda(f64),
    #[error("diagonal entry {index} is {value}, expected positive")]
    InvalidDiagonal { index: usize, value: f64 },
}

type SelectFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
type MembersFn = Arc<dyn Fn(&[f64]) -> Vec<Vector> + Send + Sync>;
type ResolventFn = Arc<dyn Fn(&[f64], f64) -> Vec<f64> + Send + Sync>;
type IndexedSelectFn = Arc<dyn Fn(Index, &[f64]) -> Vec<f64> + Send + Sync>;
type IndexedResolventFn = Arc<dyn Fn(Index, &[f64], f64) -> Vec<f64> + Send + Sync>;

/// An operator with a canonical selection `select(x) ∈ Ax`, a declared
/// zero `q` with `0 ∈ Aq`, and optional metadata used by the engines
/// and the verification sweeps.
#[derive(Clone)]
pub struct Operator {
    space: LpSpace,
    select: SelectFn,
    members: Option<MembersFn>,
    zero: Vector,
    lipschitz: Option<f64>,
    /// Supremum of `‖w‖` over the sampled range of `I − A`; a strict
    /// range bound `K₀` must exceed it.
    range_sup: Option<f64>,
    resolvent: Option<ResolventFn>,
}

impl Operator {
    pub fn new(
        space: LpSpace,
        zero: Vector,
        select: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Result<Self, OperatorError> {
        let op = Operator {
            space,
            select: Arc::new(select),
            members: None,
            zero,
            lipschitz: None,
            range_sup: None,
            resolvent: None,
        };
        let at_zero = op.space.norm(&op.select(op.zero.as_slice()))?;
        if at_zero > tol::IDENTITY_ABS {
            return Err(OperatorError::ZeroNotZero(at_zero));
        }
        Ok(op)
    }

    pub fn with_members(
        mut self,
        members: impl Fn(&[f64]) -> Vec<Vector> + Send + Sync + 'static,
    ) -> Self {
        self.members = Some(Arc::new(members));
        self
    }

    pub fn with_lipschitz(mut self, l: f64) -> Self {
        self.lipschitz = Some(l);
        self
    }

    pub fn with_range_sup(mut self, sup: f64) -> Self {
        self.range_sup = Some(sup);
        self
    }

    /// Installs a closed-form solver for `z + α·A(z) = x`. The implicit
    /// engines use it instead of fixed-point iteration when present.
    pub fn with_resolvent(
        mut self,
        resolvent: impl Fn(&[f64], f64) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        self.resolvent = Some(Arc::new(resolvent));
        self
    }

    pub fn space(&self) -> &LpSpace {
        &self.space
    }

    pub fn zero(&self) -> &Vector {
        &self.zero
    }

    pub fn select(&self, x: &[f64]) -> Vec<f64> {
        (self.select)(x)
    }

    pub fn members(&self, x: &[f64]) -> Option<Vec<Vector>> {
        self.members.as_ref().map(|m| m(x))
    }

    /// Checks the enumeration invariant at a point: the canonical
    /// selection must appear among the enumerated members. `None` when
    /// the operator carries no enumeration.
    pub fn selection_is_member(&self, x: &[f64]) -> Option<bool> {
        let members = self.members.as_ref()?(x);
        let sel = self.select(x);
        Some(members.iter().any(|m| {
            m.as_slice().len() == sel.len()
                && m.as_slice()
                    .iter()
                    .zip(&sel)
                    .all(|(a, b)| math::abs(a - b) <= tol::IDENTITY_ABS)
        }))
    }

    pub fn lipschitz(&self) -> Option<f64> {
        self.lipschitz
    }

    pub fn range_sup(&self) -> Option<f64> {
        self.range_sup
    }

    pub fn resolvent(&self, x: &[f64], alpha: f64) -> Option<Vec<f64>> {
        self.resolvent.as_ref().map(|r| r(x, alpha))
    }

    /// The translation `A(x) = x − q`.
    pub fn shift(space: LpSpace, q: Vector) -> Result<Self, OperatorError> {
        let qn = space.norm(q.as_slice())?;
        let q_res = q.clone();
        let q_sel = q.clone();
        Ok(Self::new(space, q, move |x| {
            x.iter().zip(q_sel.as_slice()).map(|(a, b)| a - b).collect()
        })?
        .with_lipschitz(1.0)
        // (I − A)x = q for every x.
        .with_range_sup(qn)
        .with_resolvent(move |x, alpha| {
            x.iter()
                .zip(q_res.as_slice())
                .map(|(xi, qi)| (xi + alpha * qi) / (1.0 + alpha))
                .collect()
        }))
    }

    /// `A(x) = D(x − q)` for a positive diagonal `D`.
    pub fn diagonal(space: LpSpace, q: Vector, diag: Vec<f64>) -> Result<Self, OperatorError> {
        if diag.len() != space.dim() {
            return Err(SpaceError::DimensionMismatch {
                expected: space.dim(),
                got: diag.len(),
            }
            .into());
        }
        for (i, d) in diag.iter().enumerate() {
            if !(*d > 0.0) || !d.is_finite() {
                return Err(OperatorError::InvalidDiagonal { index: i, value: *d });
            }
        }
        let l = diag.iter().cloned().fold(0.0, f64::max);
        let q_sel = q.clone();
        let d_sel = diag.clone();
        let q_res = q.clone();
        let d_res = diag;
        Ok(Self::new(space, q, move |x| {
            x.iter()
                .zip(q_sel.as_slice())
                .zip(&d_sel)
                .map(|((xi, qi), di)| di * (xi - qi))
                .collect()
        })?
        .with_lipschitz(l)
        .with_resolvent(move |x, alpha| {
            x.iter()
                .zip(q_res.as_slice())
                .zip(&d_res)
                .map(|((xi, qi), di)| (xi + alpha * di * qi) / (1.0 + alpha * di))
                .collect()
        }))
    }

    /// `A(x) = x − q + λ·s(x − q)` with `s` the componentwise tanh
    /// sigmoid (bounded by 1, 1-Lipschitz) and `λ ∈ [0, 0.5]`.
    ///
    /// Accretive at zero in every `ℓ_p` instance: the sigmoid acts with
    /// the sign of its argument, so the pairing against `J(x−q)` only
    /// gains over the plain shift.
    pub fn bounded_perturbation(
        space: LpSpace,
        q: Vector,
        lambda: f64,
    ) -> Result<Self, OperatorError> {
        if !(0.0..=0.5).contains(&lambda) {
            return Err(OperatorError::InvalidLambda(lambda));
        }
        let qn = space.norm(q.as_slice())?;
        // ‖s(w)‖_p ≤ dim^(1/p) since each component is bounded by 1.
        let sig_sup = math::powf(space.dim() as f64, 1.0 / space.p());
        let q_sel = q.clone();
        Ok(Self::new(space, q, move |x| {
            x.iter()
                .zip(q_sel.as_slice())
                .map(|(xi, qi)| {
                    let w = xi - qi;
                    w + lambda * math::tanh(w)
                })
                .collect()
        })?
        .with_lipschitz(1.0 + lambda)
        .with_range_sup(qn + lambda * sig_sup))
    }
}

impl core::fmt::Debug for Operator {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("Operator")
            .field("space", &self.space)
            .field("zero", &self.zero)
            .field("lipschitz", &self.lipschitz)
            .field("range_sup", &self.range_sup)
            .field("has_resolvent", &self.resolvent.is_some())
            .finish()
    }
}

/// Where an accretivity modulus came from; the ψ route keeps its
/// strength function around for the sharper rate and the envelope.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThetaProvenance {
    FromPsi,
    FromPhi,
    Direct,
}

/// A modulus of uniform accretivity at zero: `theta(K, ε)` is the
/// amount by which `⟨u, J(x−q)⟩` stays above zero whenever
/// `‖x−q‖ ∈ [ε, K]`.
#[derive(Clone)]
pub struct AccretivityModulus {
    theta: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
    provenance: ThetaProvenance,
    psi: Option<RealFn>,
}

impl AccretivityModulus {
    /// From a strength function ψ: `theta(K, ε) = ψ(ε)·ε`, independent
    /// of `K`.
    pub fn from_psi(psi: RealFn) -> Self {
        let p = psi.clone();
        AccretivityModulus {
            theta: Arc::new(move |_k, eps| p(eps) * eps),
            provenance: ThetaProvenance::FromPsi,
            psi: Some(psi),
        }
    }

    /// From a pointwise lower bound ϕ: `theta(K, ε)` is the infimum of
    /// ϕ over `[ε, max(ε, K)]`, computed to relative accuracy 1e−6.
    pub fn from_phi(phi: RealFn) -> Self {
        AccretivityModulus {
            theta: Arc::new(move |k, eps| phi_infimum(phi.as_ref(), k, eps)),
            provenance: ThetaProvenance::FromPhi,
            psi: None,
        }
    }

    /// A modulus supplied directly as a function of `(K, ε)`.
    pub fn direct(theta: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        AccretivityModulus {
            theta: Arc::new(theta),
            provenance: ThetaProvenance::Direct,
            psi: None,
        }
    }

    pub fn eval(&self, k: f64, eps: f64) -> f64 {
        (self.theta)(k, eps)
    }

    pub fn provenance(&self) -> ThetaProvenance {
        self.provenance
    }

    pub fn psi(&self) -> Option<&RealFn> {
        self.psi.as_ref()
    }
}

/// Infimum of `phi` over `[eps, max(eps, k)]`: a 4096-point grid plus
/// one golden-section refinement around the grid minimizer. `phi` is
/// only assumed continuous, so no derivative information is used.
pub fn phi_infimum(phi: &(dyn Fn(f64) -> f64 + Send + Sync), k: f64, eps: f64) -> f64 {
    let hi = if k > eps { k } else { eps };
    if hi <= eps {
        return phi(eps);
    }
    let n = tol::INFIMUM_GRID;
    let step = (hi - eps) / n as f64;
    let mut best = phi(eps);
    let mut best_i = 0usize;
    for i in 1..=n {
        let t = if i == n { hi } else { eps + step * i as f64 };
        let v = phi(t);
        if v < best {
            best = v;
            best_i = i;
        }
    }
    // Golden-section refinement on the bracket around the grid minimizer.
    let mut a = eps + step * best_i.saturating_sub(1) as f64;
    let mut b = (eps + step * (best_i + 1) as f64).min(hi);
    let inv_phi = (math::sqrt(5.0) - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = phi(x1);
    let mut f2 = phi(x2);
    while b - a > tol::INFIMUM_REL * (hi - eps).max(f64::MIN_POSITIVE) {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = phi(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = phi(x2);
        }
        if f1 < best {
            best = f1;
        }
        if f2 < best {
            best = f2;
        }
    }
    best
}

/// One sampled failure of the accretivity inequality.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct AccretivityViolation {
    pub x: Vec<f64>,
    pub radius: f64,
    /// `⟨select(x), J(x−q)⟩` at the sample.
    pub pairing: f64,
    /// `theta(K, ‖x−q‖)`, what the pairing had to reach.
    pub required: f64,
}

/// Outcome of a sampled accretivity sweep.
#[derive(Debug, Clone, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct AccretivityReport {
    pub samples: usize,
    pub violations: Vec<AccretivityViolation>,
}

impl AccretivityReport {
    pub fn consistent(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Evaluates the accretivity inequality at one point: `None` when the
/// point falls outside the admissible annulus `‖x−q‖ ∈ [eps_min, k]`
/// (the sample is skipped), otherwise a violation record if
/// `⟨select(x), J(x−q)⟩ < theta(K, ‖x−q‖) − 1e−9`.
pub fn accretivity_violation_at(
    op: &Operator,
    theta: &AccretivityModulus,
    k: f64,
    eps_min: f64,
    x: &[f64],
) -> Result<Option<AccretivityViolation>, OperatorError> {
    let space = op.space();
    let w: Vec<f64> = x
        .iter()
        .zip(op.zero().as_slice())
        .map(|(a, b)| a - b)
        .collect();
    let radius = space.norm(&w)?;
    if radius < eps_min || radius > k {
        return Ok(None);
    }
    let j = space.duality_map(&w)?;
    let u = op.select(x);
    let pairing = space.dual_pair(&u, j.as_slice())?;
    let required = theta.eval(k, radius);
    if pairing < required - tol::IDENTITY_ABS {
        Ok(Some(AccretivityViolation {
            x: x.to_vec(),
            radius,
            pairing,
            required,
        }))
    } else {
        Ok(None)
    }
}

/// Samples points with `‖x−q‖ ∈ [eps_min, k]` across log-spaced radii
/// and random directions, and checks the declared modulus at each. An
/// empty violation list means the modulus is consistent on samples.
pub fn verify_accretivity_at_zero(
    op: &Operator,
    theta: &AccretivityModulus,
    k: f64,
    eps_min: f64,
    samples: usize,
    rng: &mut Rng,
) -> Result<AccretivityReport, OperatorError> {
    if !(k > 0.0) {
        return Err(OperatorError::NonPositive { name: "k", value: k });
    }
    if !(eps_min > 0.0) || eps_min > k {
        return Err(OperatorError::NonPositive {
            name: "eps_min",
            value: eps_min,
        });
    }
    let space = op.space();
    let q = op.zero();
    let log_lo = math::ln(eps_min);
    let log_hi = math::ln(k);
    let mut report = AccretivityReport {
        samples,
        violations: Vec::new(),
    };
    for i in 0..samples {
        // Stratified radii over the annulus, endpoints included.
        let t = if samples > 1 {
            i as f64 / (samples - 1) as f64
        } else {
            1.0
        };
        let radius = math::exp(log_lo + t * (log_hi - log_lo));
        let dir = rng.direction(space.dim());
        let dn = space.norm(&dir)?;
        let x: Vec<f64> = dir
            .iter()
            .zip(q.as_slice())
            .map(|(d, qi)| qi + d * radius / dn)
            .collect();
        if let Some(v) = accretivity_violation_at(op, theta, k, eps_min, &x)? {
            report.violations.push(v);
        }
    }
    Ok(report)
}

/// The quantitative pseudocontraction property of `I − A` at a point:
/// with `u = x − select(x)` and `j = J(x−q)`, checks
/// `⟨u − q, j⟩ ≤ ‖x−q‖² − theta(K, ‖x−q‖) + 1e−9`.
///
/// Implied by the accretivity inequality at the same point.
pub fn pseudo_contraction_check(
    op: &Operator,
    theta: &AccretivityModulus,
    k: f64,
    x: &[f64],
) -> Result<bool, OperatorError> {
    let space = op.space();
    let w: Vec<f64> = x
        .iter()
        .zip(op.zero().as_slice())
        .map(|(a, b)| a - b)
        .collect();
    let radius = space.norm(&w)?;
    if radius == 0.0 {
        return Err(OperatorError::AtZero);
    }
    if radius > k {
        return Err(OperatorError::RadiusOutOfRange { radius, bound: k });
    }
    let j = space.duality_map(&w)?;
    let a = op.select(x);
    let u: Vec<f64> = x.iter().zip(&a).map(|(xi, ai)| xi - ai).collect();
    let u_minus_q: Vec<f64> = u
        .iter()
        .zip(op.zero().as_slice())
        .map(|(ui, qi)| ui - qi)
        .collect();
    let lhs = space.dual_pair(&u_minus_q, j.as_slice())?;
    let rhs = radius * radius - theta.eval(k, radius);
    Ok(lhs <= rhs + tol::IDENTITY_ABS)
}

/// Exact Hausdorff distance between nonempty finite point sets, by the
/// double loop over both directed sup–inf distances.
pub fn hausdorff_distance(
    space: &LpSpace,
    p: &[Vector],
    q: &[Vector],
) -> Result<f64, OperatorError> {
    if p.is_empty() || q.is_empty() {
        return Err(OperatorError::EmptySet);
    }
    let directed = |from: &[Vector], to: &[Vector]| -> Result<f64, OperatorError> {
        let mut worst = 0.0_f64;
        for u in from {
            let mut best = f64::INFINITY;
            for v in to {
                let d = space.norm(u.sub(v).as_slice())?;
                if d < best {
                    best = d;
                }
            }
            if best > worst {
                worst = best;
            }
        }
        Ok(worst)
    };
    Ok(directed(p, q)?.max(directed(q, p)?))
}

/// The one-sided covering predicate: every point of `p` has a point of
/// `q` within distance `a`. Exact evaluation of the quantifiers over
/// the finite sets.
pub fn covers_within(
    space: &LpSpace,
    p: &[Vector],
    q: &[Vector],
    a: f64,
) -> Result<bool, OperatorError> {
    if p.is_empty() || q.is_empty() {
        return Err(OperatorError::EmptySet);
    }
    'outer: for u in p {
        for v in q {
            if space.norm(u.sub(v).as_slice())? <= a {
                continue 'outer;
            }
        }
        return Ok(false);
    }
    Ok(true)
}

/// A modulus of uniform continuity for an operator:
/// `‖x − y‖ ≤ varpi(ε)` forces every element of `Ax` to be ε-covered
/// by `Ay`.
#[derive(Clone)]
pub struct ContinuityModulus {
    varpi: RealFn,
}

impl ContinuityModulus {
    pub fn new(varpi: RealFn) -> Self {
        ContinuityModulus { varpi }
    }

    pub fn from_fn(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        ContinuityModulus {
            varpi: Arc::new(f),
        }
    }

    pub fn eval(&self, eps: f64) -> f64 {
        (self.varpi)(eps)
    }
}

/// A sequence of operators `A_n` approximating a base operator, with
/// the witnesses needed by the approximating-implicit rates:
/// `h_rate` certifies `h_n → 0`, and `xi_star` is a nondecreasing
/// majorant for the growth function ξ in
/// `H(A_n x, A x) ≤ h_n · ξ(‖x‖)`.
#[derive(Clone)]
pub struct ApproximationFamily {
    select: IndexedSelectFn,
    resolvent: Option<IndexedResolventFn>,
    lipschitz: Option<f64>,
    h_rate: RateOfConvergence,
    h_seq: Arc<dyn Fn(Index) -> f64 + Send + Sync>,
    xi_star: RealFn,
    /// Declared strict bound `K₂` on every partial sum `Σ α_i h_i`.
    partial_sum_bound: Option<f64>,
}

impl ApproximationFamily {
    pub fn new(
        select: impl Fn(Index, &[f64]) -> Vec<f64> + Send + Sync + 'static,
        h_seq: impl Fn(Index) -> f64 + Send + Sync + 'static,
        h_rate: RateOfConvergence,
        xi_star: RealFn,
    ) -> Self {
        ApproximationFamily {
            select: Arc::new(select),
            resolvent: None,
            lipschitz: None,
            h_rate,
            h_seq: Arc::new(h_seq),
            xi_star,
            partial_sum_bound: None,
        }
    }

    /// The perturbed family `A_n(x) = A(x) + h_n·b`. Inherits the base
    /// resolvent when present (`z + αA_n(z) = x` reduces to the base
    /// equation at `x − α·h_n·b`), and satisfies
    /// `H(A_n x, A x) = h_n‖b‖`, so `ξ* ≡ ‖b‖`.
    pub fn perturbed(
        base: &Operator,
        direction: Vector,
        h_seq: impl Fn(Index) -> f64 + Send + Sync + 'static,
        h_rate: RateOfConvergence,
    ) -> Result<Self, OperatorError> {
        let b_norm = base.space().norm(direction.as_slice())?;
        let h = Arc::new(h_seq);
        let sel_base = base.clone();
        let sel_dir = direction.clone();
        let sel_h = h.clone();
        let select = move |n: Index, x: &[f64]| -> Vec<f64> {
            let hn = sel_h(n);
            let mut u = sel_base.select(x);
            for (ui, bi) in u.iter_mut().zip(sel_dir.as_slice()) {
                *ui += hn * bi;
            }
            u
        };
        let resolvent = base.resolvent.clone().map(|res| {
            let dir = direction.clone();
            let h = h.clone();
            let f: IndexedResolventFn = Arc::new(move |n: Index, x: &[f64], alpha: f64| {
                let hn = h(n);
                let shifted: Vec<f64> = x
                    .iter()
                    .zip(dir.as_slice())
                    .map(|(xi, bi)| xi - alpha * hn * bi)
                    .collect();
                res(&shifted, alpha)
            });
            f
        });
        Ok(ApproximationFamily {
            select: Arc::new(select),
            resolvent,
            lipschitz: base.lipschitz(),
            h_rate,
            h_seq: h,
            xi_star: Arc::new(move |_| b_norm),
            partial_sum_bound: None,
        })
    }

    pub fn with_partial_sum_bound(mut self, k2: f64) -> Self {
        self.partial_sum_bound = Some(k2);
        self
    }

    /// Replaces the majorant ξ*. The caller owns soundness: the new
    /// function must still dominate the growth of the approximation
    /// defect for every level.
    pub fn with_xi_star(mut self, xi_star: RealFn) -> Self {
        self.xi_star = xi_star;
        self
    }

    pub fn select(&self, n: Index, x: &[f64]) -> Vec<f64> {
        (self.select)(n, x)
    }

    pub fn resolvent(&self, n: Index, x: &[f64], alpha: f64) -> Option<Vec<f64>> {
        self.resolvent.as_ref().map(|r| r(n, x, alpha))
    }

    pub fn lipschitz(&self) -> Option<f64> {
        self.lipschitz
    }

    pub fn h(&self, n: Index) -> f64 {
        (self.h_seq)(n)
    }

    pub fn h_rate(&self) -> &RateOfConvergence {
        &self.h_rate
    }

    pub fn xi_star(&self, level: f64) -> f64 {
        (self.xi_star)(level)
    }

    pub fn partial_sum_bound(&self) -> Option<f64> {
        self.partial_sum_bound
    }

    /// The rate of uniform approximation
    /// `μ_L(ε) = h_rate(2ε / (3·ξ*(L)))`: from index `μ_L(ε)` on, every
    /// element of `A_n x` is ε-covered by `Ax` whenever `‖x‖ ≤ L`.
    pub fn uniform_approximation_rate(&self, level: f64, eps: f64) -> Result<Index, OperatorError> {
        let xs = self.xi_star(level);
        if !(xs > 0.0) {
            return Err(OperatorError::NonPositive {
                name: "xi_star",
                value: xs,
            });
        }
        if !(eps > 0.0) {
            return Err(OperatorError::NonPositive { name: "eps", value: eps });
        }
        Ok(self.h_rate.at(2.0 * eps / (3.0 * xs)))
    }
}
