//! Scenario configuration: the JSON schema and its validation into
//! ready-to-run core objects.

use std::sync::Arc;

use accretia_core::operators::{AccretivityModulus, ApproximationFamily, ContinuityModulus, Operator};
use accretia_core::rates::{ceil_index, RateOfConvergence, RateOfDivergence};
use accretia_core::schemes::ScalarSchedule;
use accretia_core::space::{LpSpace, SmoothnessModulus, Vector};
use accretia_core::{Index, RealFn};
use serde::Deserialize;

use crate::expr::{self, Expr, ExprError};

/// Margin applied when a strict bound is derived from the data instead
/// of being declared in the config.
pub const STRICT_MARGIN: f64 = 1.0 + 1e-6;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("field `{field}`: {source}")]
    Expr {
        field: &'static str,
        #[source]
        source: ExprError,
    },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Space(#[from] accretia_core::space::SpaceError),
    #[error(transparent)]
    Operator(#[from] accretia_core::operators::OperatorError),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Theorem {
    Thm42,
    Rem43,
    Cor44,
    Thm55,
    Thm56,
    Thm64,
    Thm73,
}

impl Theorem {
    pub fn id(self) -> &'static str {
        match self {
            Theorem::Thm42 => "thm42",
            Theorem::Rem43 => "rem43",
            Theorem::Cor44 => "cor44",
            Theorem::Thm55 => "thm55",
            Theorem::Thm56 => "thm56",
            Theorem::Thm64 => "thm64",
            Theorem::Thm73 => "thm73",
        }
    }

    pub fn display(self) -> &'static str {
        match self {
            Theorem::Thm42 => "Thm 4.2",
            Theorem::Rem43 => "Remark 4.3",
            Theorem::Cor44 => "Cor 4.4",
            Theorem::Thm55 => "Thm 5.5",
            Theorem::Thm56 => "Thm 5.6",
            Theorem::Thm64 => "Thm 6.4",
            Theorem::Thm73 => "Thm 7.3",
        }
    }

    pub fn is_implicit(self) -> bool {
        matches!(
            self,
            Theorem::Thm42 | Theorem::Rem43 | Theorem::Cor44 | Theorem::Thm55 | Theorem::Thm56
        )
    }

    pub fn uses_approximation(self) -> bool {
        matches!(self, Theorem::Thm55 | Theorem::Thm56)
    }

    pub fn is_ishikawa(self) -> bool {
        matches!(self, Theorem::Thm64 | Theorem::Thm73)
    }

    fn default_horizon(self) -> Index {
        if self.is_ishikawa() {
            100_000
        } else {
            10_000
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub id: String,
    pub theorem: Theorem,
    pub space: SpaceConfig,
    pub operator: OperatorConfig,
    #[serde(default)]
    pub operator2: Option<OperatorConfig>,
    #[serde(default)]
    pub approximation: Option<ApproxConfig>,
    pub schedule: ScheduleConfig,
    pub start: Vec<f64>,
    pub theta: ThetaConfig,
    #[serde(default)]
    pub varpi: Option<String>,
    #[serde(default)]
    pub bounds: BoundsConfig,
    #[serde(default)]
    pub horizon: Option<Index>,
    #[serde(default)]
    pub eps_grid: Option<Vec<f64>>,
    /// Replaces the theorem rate with an arbitrary expression in `t`;
    /// exists for negative controls and experiments.
    #[serde(default)]
    pub rate_override: Option<String>,
    #[serde(default)]
    pub output_dir: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceConfig {
    pub dim: usize,
    pub p: f64,
    #[serde(default)]
    pub tau: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OperatorConfig {
    /// `A(x) = x − q`
    Shift { q: Vec<f64> },
    /// `A(x) = D(x − q)` with a positive diagonal.
    DiagonalLinear { q: Vec<f64>, diag: Vec<f64> },
    /// `A(x) = x − q + λ·s(x − q)` with the componentwise sigmoid.
    BoundedPerturbation { q: Vec<f64>, lambda: f64 },
}

impl OperatorConfig {
    pub fn q(&self) -> &[f64] {
        match self {
            OperatorConfig::Shift { q } => q,
            OperatorConfig::DiagonalLinear { q, .. } => q,
            OperatorConfig::BoundedPerturbation { q, .. } => q,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApproxConfig {
    /// Perturbation sizes `h_n` as an expression in `t` (= n).
    pub h: String,
    /// A rate of convergence for `h_n → 0`, an expression in `t` (= ε)
    /// whose value is ceiled to an index.
    pub h_rate: String,
    /// Fixed perturbation direction `b`: `A_n(x) = A(x) + h_n·b`.
    pub direction: Vec<f64>,
    /// Optional majorant ξ* override (expression in `t`); defaults to
    /// the constant `‖b‖`.
    #[serde(default)]
    pub xi_star: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub alpha: ScheduleKind,
    #[serde(default)]
    pub beta: Option<ScheduleKind>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ScheduleKind {
    Constant { value: f64 },
    Harmonic,
    ShiftedHarmonic { shift: f64 },
}

impl ScheduleKind {
    pub fn describe(&self) -> String {
        match self {
            ScheduleKind::Constant { value } => format!("constant {value}"),
            ScheduleKind::Harmonic => "harmonic".to_string(),
            ScheduleKind::ShiftedHarmonic { shift } => format!("1/(n+{shift})"),
        }
    }

    fn validate(&self) -> Result<(), ConfigError> {
        match self {
            ScheduleKind::Constant { value } => {
                if !(*value >= 0.0) || !value.is_finite() {
                    return Err(invalid(format!("constant schedule value {value} invalid")));
                }
            }
            ScheduleKind::Harmonic => {}
            ScheduleKind::ShiftedHarmonic { shift } => {
                if !(*shift >= 1.0) || !shift.is_finite() {
                    return Err(invalid(format!(
                        "shifted-harmonic shift {shift} invalid; need shift >= 1"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn term(&self, n: Index) -> f64 {
        match self {
            ScheduleKind::Constant { value } => *value,
            ScheduleKind::Harmonic => 1.0 / (n as f64 + 1.0),
            ScheduleKind::ShiftedHarmonic { shift } => 1.0 / (n as f64 + shift),
        }
    }

    /// Supremum of the terms (attained at n = 0 for every built-in).
    pub fn sup(&self) -> f64 {
        self.term(0)
    }

    /// Divergence witness for the series of this schedule. The constant
    /// schedule has the exact direct witness; the harmonic family goes
    /// through the partial-sum conversion with its natural bound.
    fn divergence(&self) -> Result<RateOfDivergence, ConfigError> {
        match self {
            ScheduleKind::Constant { value } => {
                if *value <= 0.0 {
                    return Err(invalid("constant schedule with value 0 does not diverge"));
                }
                let c = *value;
                Ok(RateOfDivergence::new(move |n, x| {
                    n.saturating_add(ceil_index(x / c))
                }))
            }
            ScheduleKind::Harmonic => Ok(RateOfDivergence::from_partial_sum_rate(
                |x| ceil_index(x.exp()),
                1.0,
            )),
            ScheduleKind::ShiftedHarmonic { shift } => {
                let c = *shift;
                Ok(RateOfDivergence::from_partial_sum_rate(
                    move |x| ceil_index(c * x.exp()),
                    1.0 / c,
                ))
            }
        }
    }

    /// Rate of convergence of the terms to zero, when they converge.
    fn term_rate(&self) -> Option<RateOfConvergence> {
        match self {
            ScheduleKind::Constant { .. } => None,
            ScheduleKind::Harmonic => Some(RateOfConvergence::new(|e| {
                ceil_index((1.0 / e - 1.0).max(0.0))
            })),
            ScheduleKind::ShiftedHarmonic { shift } => {
                let c = *shift;
                Some(RateOfConvergence::new(move |e| {
                    ceil_index((1.0 / e - c).max(0.0))
                }))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsConfig {
    #[serde(default)]
    pub k: Option<f64>,
    #[serde(default)]
    pub k_prime: Option<f64>,
    #[serde(default)]
    pub k0: Option<f64>,
    #[serde(default)]
    pub k1: Option<f64>,
    #[serde(default)]
    pub k2: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ThetaConfig {
    /// Strength-function route: `theta(K, ε) = ψ(ε)·ε`.
    Psi { expr: String },
    /// Lower-bound route: `theta(K, ε) = inf ϕ над [ε, max(ε, K)]`.
    Phi { expr: String },
    /// Direct two-argument modulus in `k` and `t`.
    Direct { expr: String },
}

/// Everything a run needs, built and cross-checked from a config.
pub struct BuiltScenario {
    pub id: String,
    pub theorem: Theorem,
    pub space: LpSpace,
    pub operator: Operator,
    pub operator2: Option<Operator>,
    pub family: Option<ApproximationFamily>,
    pub schedule: ScalarSchedule,
    pub alpha_kind: ScheduleKind,
    pub beta_kind: Option<ScheduleKind>,
    pub start: Vector,
    pub theta: AccretivityModulus,
    pub varpi: Option<ContinuityModulus>,
    pub tau: Option<SmoothnessModulus>,
    pub horizon: Index,
    pub eps_grid: Vec<f64>,
    pub rate_override: Option<RateOfConvergence>,
    pub bounds: ResolvedBounds,
    pub output_dir: Option<String>,
}

/// The effective bounds a run uses: declared values taken verbatim,
/// derived values carrying the strict margin.
#[derive(Debug, Clone, Copy, Default)]
pub struct ResolvedBounds {
    /// Strict bound on all residuals (implicit schemes); `K` in the
    /// simple and approximating rates.
    pub k: Option<f64>,
    /// Strict bound on `‖q‖` (approximating scheme).
    pub k_prime: Option<f64>,
    /// Theorem-specific `K₀` (range bound or initial-residual bound).
    pub k0: Option<f64>,
    /// Theorem-specific `K₁`.
    pub k1: Option<f64>,
    /// Strict bound on partial sums `Σ α_i h_i`.
    pub k2: Option<f64>,
    /// `‖x₀ − q‖` as computed, for the precondition checks.
    pub initial_residual: f64,
    /// `‖q‖` as computed.
    pub zero_norm: f64,
}

fn parse_expr(field: &'static str, src: &str) -> Result<Expr, ConfigError> {
    expr::parse(src).map_err(|source| ConfigError::Expr { field, source })
}

fn parse_real_fn(field: &'static str, src: &str) -> Result<RealFn, ConfigError> {
    Ok(parse_expr(field, src)?.into_real_fn())
}

pub fn default_eps_grid() -> Vec<f64> {
    (1..=10).map(|k| 2.0_f64.powi(-k)).collect()
}

impl ScenarioConfig {
    pub fn from_json(src: &str) -> Result<Self, ConfigError> {
        Ok(serde_json::from_str(src)?)
    }

    fn build_operator(
        &self,
        spec: &OperatorConfig,
        space: &LpSpace,
    ) -> Result<Operator, ConfigError> {
        let q = Vector::new(spec.q().to_vec())?;
        if q.dim() != space.dim() {
            return Err(invalid(format!(
                "operator zero has dimension {}, space has {}",
                q.dim(),
                space.dim()
            )));
        }
        let op = match spec {
            OperatorConfig::Shift { .. } => Operator::shift(space.clone(), q)?,
            OperatorConfig::DiagonalLinear { diag, .. } => {
                Operator::diagonal(space.clone(), q, diag.clone())?
            }
            OperatorConfig::BoundedPerturbation { lambda, .. } => {
                Operator::bounded_perturbation(space.clone(), q, *lambda)?
            }
        };
        Ok(op)
    }

    fn build_theta(&self) -> Result<AccretivityModulus, ConfigError> {
        match &self.theta {
            ThetaConfig::Psi { expr } => Ok(AccretivityModulus::from_psi(parse_real_fn("theta.expr", expr)?)),
            ThetaConfig::Phi { expr } => Ok(AccretivityModulus::from_phi(parse_real_fn("theta.expr", expr)?)),
            ThetaConfig::Direct { expr } => {
                let ast = expr::parse_with_k(expr)
                    .map_err(|source| ConfigError::Expr { field: "theta.expr", source })?;
                Ok(AccretivityModulus::direct(move |k, t| ast.eval2(t, k)))
            }
        }
    }

    fn build_schedule(&self) -> Result<(ScalarSchedule, ScheduleKind, Option<ScheduleKind>), ConfigError> {
        self.schedule.alpha.validate()?;
        let alpha_kind = self.schedule.alpha.clone();
        let divergence = alpha_kind.divergence()?;
        let a = alpha_kind.clone();
        let mut schedule = ScalarSchedule::new(move |n| a.term(n), divergence);

        let beta_kind = self.schedule.beta.clone();
        if let Some(bk) = &beta_kind {
            bk.validate()?;
            let b = bk.clone();
            schedule = schedule.with_beta(move |n| b.term(n));
        }

        // Joint rate for max(α_n, β_n) → 0: the pointwise max of the
        // per-schedule witnesses.
        let alpha_rate = alpha_kind.term_rate();
        let beta_rate = beta_kind.as_ref().map(|b| b.term_rate());
        let joint = match (alpha_rate, beta_rate) {
            (Some(ar), None) => Some(ar),
            (Some(ar), Some(Some(br))) => Some(RateOfConvergence::new(move |e| {
                ar.at(e).max(br.at(e))
            })),
            _ => None,
        };
        if let Some(j) = joint {
            schedule = schedule.with_joint_rate(j);
        }
        Ok((schedule, alpha_kind, beta_kind))
    }

    fn build_family(
        &self,
        base: &Operator,
    ) -> Result<Option<ApproximationFamily>, ConfigError> {
        let Some(approx) = &self.approximation else {
            return Ok(None);
        };
        let h_ast = parse_expr("approximation.h", &approx.h)?;
        let h_rate_ast = parse_expr("approximation.h_rate", &approx.h_rate)?;
        let direction = Vector::new(approx.direction.clone())?;
        if direction.dim() != base.space().dim() {
            return Err(invalid("approximation direction dimension mismatch"));
        }
        let h_rate = RateOfConvergence::new(move |e| ceil_index(h_rate_ast.eval(e)));
        let direction_norm = base.space().norm(direction.as_slice())?;
        let mut family = ApproximationFamily::perturbed(
            base,
            direction,
            move |n| h_ast.eval(n as f64),
            h_rate,
        )?;
        if let Some(xi) = &approx.xi_star {
            let xi_fn = parse_real_fn("approximation.xi_star", xi)?;
            // ξ* must majorise the perturbation growth (constant ‖b‖
            // for this family) and be nondecreasing.
            let mut prev = f64::NEG_INFINITY;
            for i in 1..=64 {
                let level = i as f64 * 0.25;
                let v = xi_fn(level);
                if v < direction_norm - 1e-12 {
                    return Err(invalid(format!(
                        "xi_star({level}) = {v} underestimates the perturbation norm {direction_norm}"
                    )));
                }
                if v < prev - 1e-12 {
                    return Err(invalid(format!("xi_star must be nondecreasing; drops at {level}")));
                }
                prev = v;
            }
            family = family.with_xi_star(xi_fn);
        }
        if let Some(k2) = self.bounds.k2 {
            family = family.with_partial_sum_bound(k2);
        }
        Ok(Some(family))
    }

    /// Validates the config and builds the runnable scenario.
    pub fn build(&self) -> Result<BuiltScenario, ConfigError> {
        if self.id.is_empty() {
            return Err(invalid("scenario id must be nonempty"));
        }
        let mut space = LpSpace::new(self.space.dim, self.space.p)?;
        let tau = match &self.space.tau {
            Some(src) => Some(SmoothnessModulus::new(parse_real_fn("space.tau", src)?)),
            None => None,
        };
        if let Some(t) = &tau {
            space = space.clone().with_smoothness(t.clone());
        }

        let operator = self.build_operator(&self.operator, &space)?;
        let operator2 = match &self.operator2 {
            Some(spec) => Some(self.build_operator(spec, &space)?),
            None => None,
        };
        let theta = self.build_theta()?;
        let (schedule, alpha_kind, beta_kind) = self.build_schedule()?;
        let family = self.build_family(&operator)?;

        let start = Vector::new(self.start.clone())?;
        if start.dim() != space.dim() {
            return Err(invalid(format!(
                "start vector has dimension {}, space has {}",
                start.dim(),
                space.dim()
            )));
        }

        let varpi = match &self.varpi {
            Some(src) => Some(ContinuityModulus::new(parse_real_fn("varpi", src)?)),
            None => None,
        };

        let rate_override = match &self.rate_override {
            Some(src) => {
                let ast = parse_expr("rate_override", src)?;
                Some(RateOfConvergence::new(move |e| ceil_index(ast.eval(e))))
            }
            None => None,
        };

        // Arity and hypothesis checks per theorem.
        match self.theorem {
            Theorem::Rem43 | Theorem::Cor44 => {
                if !matches!(self.theta, ThetaConfig::Psi { .. }) {
                    return Err(invalid(format!(
                        "{} needs a psi-provenance theta",
                        self.theorem.id()
                    )));
                }
            }
            Theorem::Thm55 | Theorem::Thm56 => {
                if family.is_none() {
                    return Err(invalid(format!(
                        "{} needs an approximation section",
                        self.theorem.id()
                    )));
                }
            }
            Theorem::Thm64 => {
                if varpi.is_none() {
                    return Err(invalid("thm64 needs a varpi modulus"));
                }
            }
            Theorem::Thm73 => {
                if operator2.is_none() {
                    return Err(invalid("thm73 needs a second operator"));
                }
                if tau.is_none() {
                    return Err(invalid("thm73 needs a smoothness modulus tau"));
                }
            }
            Theorem::Thm42 => {}
        }
        if self.theorem.is_ishikawa() {
            if beta_kind.is_none() {
                return Err(invalid(format!("{} needs a beta schedule", self.theorem.id())));
            }
            if schedule.joint_rate.is_none() {
                return Err(invalid(
                    "ishikawa schemes need schedules whose terms converge to zero",
                ));
            }
            let cap = if self.theorem == Theorem::Thm64 { 0.5 } else { 1.0 };
            let sup = alpha_kind
                .sup()
                .max(beta_kind.as_ref().map(|b| b.sup()).unwrap_or(0.0));
            if sup >= cap {
                return Err(invalid(format!(
                    "{} needs coefficients in [0, {cap}); schedule supremum is {sup}",
                    self.theorem.id()
                )));
            }
        }

        // Effective bounds: declared verbatim, derived with the margin.
        let initial_residual = space.norm(start.sub(operator.zero()).as_slice())?;
        let zero_norm = space.norm(operator.zero().as_slice())?;
        let mut bounds = ResolvedBounds {
            initial_residual,
            zero_norm,
            ..ResolvedBounds::default()
        };
        match self.theorem {
            Theorem::Thm42 | Theorem::Rem43 | Theorem::Cor44 => {
                bounds.k = Some(match self.bounds.k {
                    Some(k) => k,
                    None => initial_residual * STRICT_MARGIN,
                });
            }
            Theorem::Thm55 => {
                let k = self
                    .bounds
                    .k
                    .ok_or_else(|| invalid("thm55 needs an explicit bound k on all residuals"))?;
                bounds.k = Some(k);
                bounds.k_prime = Some(match self.bounds.k_prime {
                    Some(v) => v,
                    None => zero_norm * STRICT_MARGIN,
                });
            }
            Theorem::Thm56 => {
                bounds.k0 = Some(match self.bounds.k0 {
                    Some(v) => v,
                    None => initial_residual * STRICT_MARGIN,
                });
                bounds.k1 = Some(match self.bounds.k1 {
                    Some(v) => v,
                    None => zero_norm * STRICT_MARGIN,
                });
                bounds.k2 = Some(
                    self.bounds
                        .k2
                        .ok_or_else(|| invalid("thm56 needs an explicit bound k2 on the summed perturbations"))?,
                );
            }
            Theorem::Thm64 | Theorem::Thm73 => {
                let range_sup = match (&operator2, operator.range_sup()) {
                    (Some(op2), Some(r1)) => op2.range_sup().map(|r2| r1.max(r2)),
                    (None, r1) => r1,
                    _ => None,
                };
                bounds.k0 = Some(match self.bounds.k0 {
                    Some(v) => v,
                    None => {
                        range_sup.ok_or_else(|| {
                            invalid("no range bound available; declare bounds.k0 explicitly")
                        })? * STRICT_MARGIN
                    }
                });
                bounds.k1 = Some(match self.bounds.k1 {
                    Some(v) => v,
                    None => initial_residual * STRICT_MARGIN,
                });
            }
        }

        let eps_grid = match &self.eps_grid {
            Some(grid) => {
                if grid.is_empty() || grid.iter().any(|e| !(*e > 0.0)) {
                    return Err(invalid("eps_grid must be nonempty and positive"));
                }
                grid.clone()
            }
            None => default_eps_grid(),
        };
        let horizon = self.horizon.unwrap_or_else(|| self.theorem.default_horizon());
        if horizon == 0 {
            return Err(invalid("horizon must be at least 1"));
        }

        Ok(BuiltScenario {
            id: self.id.clone(),
            theorem: self.theorem,
            space,
            operator,
            operator2,
            family,
            schedule,
            alpha_kind,
            beta_kind,
            start,
            theta,
            varpi,
            tau,
            horizon,
            eps_grid,
            rate_override,
            bounds,
            output_dir: self.output_dir.clone(),
        })
    }
}

/// Builds the partial-sum function `n ↦ Σ_{i<n} α_i` with a cache, used
/// by the envelope reporting.
pub fn cached_partial_sums(kind: &ScheduleKind, horizon: Index) -> Arc<dyn Fn(Index) -> f64 + Send + Sync> {
    let mut sums = Vec::with_capacity(horizon as usize + 2);
    sums.push(0.0);
    let mut acc = 0.0;
    for n in 0..=horizon {
        acc += kind.term(n);
        sums.push(acc);
    }
    Arc::new(move |n| {
        let idx = (n as usize).min(sums.len() - 1);
        sums[idx]
    })
}
