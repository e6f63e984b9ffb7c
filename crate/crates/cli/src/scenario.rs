//! End-to-end scenario execution: hypothesis verification, engine run,
//! rate construction, certification, report assembly.

use std::time::{SystemTime, UNIX_EPOCH};

use accretia_core::certify::{certify, CertificationReport};
use accretia_core::operators::{
    verify_accretivity_at_zero, AccretivityViolation, Operator,
};
use accretia_core::rates::RateOfConvergence;
use accretia_core::sampling::Rng;
use accretia_core::schemes::{
    self, envelope_bound, envelope_threshold, ishikawa_gap_violation, run_implicit_approx,
    run_implicit_simple, run_ishikawa, IterationTrace, SchemeError,
};
use accretia_core::space::{validate_smoothness, SmoothnessViolation};
use accretia_core::Index;
use serde::Serialize;

use crate::config::{cached_partial_sums, BuiltScenario, ConfigError, ScenarioConfig, Theorem};

/// Samples drawn by each hypothesis-verification sweep.
pub const SWEEP_SAMPLES: usize = 10_000;
/// Random (start, amount) probes of the divergence witness.
const DIVERGENCE_PROBES: usize = 200;
/// Cap on stored example violations per sweep.
const MAX_EXAMPLES: usize = 8;

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Scheme(#[from] SchemeError),
}

impl ScenarioError {
    /// Process exit code this error maps to: 2 for config/schema
    /// problems, 3 for solver failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            ScenarioError::Config(_) => 2,
            ScenarioError::Scheme(_) => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOverrides {
    pub horizon: Option<Index>,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ThetaSweep {
    pub samples: usize,
    pub violation_count: usize,
    pub examples: Vec<AccretivityViolation>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TauSweep {
    pub samples: usize,
    pub violation_count: usize,
    pub examples: Vec<SmoothnessViolation>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VarpiViolation {
    pub eps: f64,
    pub distance: f64,
    pub defect: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VarpiSweep {
    pub samples: usize,
    pub violation_count: usize,
    pub examples: Vec<VarpiViolation>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScheduleChecks {
    pub coefficients_ok: bool,
    pub divergence_probes: usize,
    pub divergence_ok: bool,
    /// Joint-rate contract over the whole horizon; `None` when the
    /// scheme has no joint rate.
    pub joint_rate_ok: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundChecks {
    /// Strict initial-data inequalities (‖x₀−q‖, ‖q‖ against their
    /// declared bounds).
    pub preconditions_ok: bool,
    /// Residuals against the governing bound over the whole trace.
    pub trace_bound: Option<ValueCheck>,
    /// Range samples ‖(I−A)x‖ against K₀ (explicit schemes).
    pub range_bound: Option<ValueCheck>,
    /// Per-step inner/outer gap against `3(α+β)K` (explicit schemes).
    pub step_gap_ok: Option<bool>,
    /// Partial sums `Σ α_i h_i` against K₂ (summed variant).
    pub partial_sums: Option<ValueCheck>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ValueCheck {
    pub bound: f64,
    pub max_observed: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub passed: bool,
    pub theta: ThetaSweep,
    pub tau: Option<TauSweep>,
    pub varpi: Option<VarpiSweep>,
    pub schedule: ScheduleChecks,
    pub bounds: BoundChecks,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnvelopeEntry {
    pub n: Index,
    pub residual: f64,
    pub envelope: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnvelopeReport {
    /// The scan-derived index from which the envelope applies.
    pub threshold: Index,
    pub checked_from: Index,
    pub checked_to: Index,
    pub violation_count: usize,
    pub violations: Vec<EnvelopeEntry>,
    /// max over n of residual/envelope; at most 1 when the bound holds.
    pub max_ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioReport {
    pub schema: &'static str,
    pub scenario_id: String,
    pub theorem: &'static str,
    pub horizon: Index,
    pub seed: u64,
    pub eps_grid: Vec<f64>,
    /// The bound `K` the rate formula uses (derived where applicable).
    pub rate_bound: Option<f64>,
    pub verification: VerificationReport,
    pub certification: Option<CertificationReport>,
    pub envelope: Option<EnvelopeReport>,
    /// Single timestamp metadata field; everything else is a pure
    /// function of the inputs.
    pub generated_at_unix: u64,
}

pub struct ScenarioOutcome {
    pub report: ScenarioReport,
    pub trace: Option<IterationTrace>,
    pub built: BuiltScenario,
}

impl ScenarioOutcome {
    /// 0 when verification passed and no ε failed; 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if !self.report.verification.passed {
            return 1;
        }
        match &self.report.certification {
            Some(cert) if !cert.all_non_failed() => 1,
            _ => 0,
        }
    }
}

fn now_unix() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn theta_sweep(built: &BuiltScenario, k: f64, rng: &mut Rng) -> Result<ThetaSweep, ScenarioError> {
    let eps_min = built
        .eps_grid
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
        .min(k / 2.0);
    let mut report = verify_accretivity_at_zero(
        &built.operator,
        &built.theta,
        k,
        eps_min,
        SWEEP_SAMPLES,
        rng,
    )
    .map_err(|e| ScenarioError::Config(ConfigError::Operator(e)))?;
    let count = report.violations.len();
    report.violations.truncate(MAX_EXAMPLES);
    Ok(ThetaSweep {
        samples: report.samples,
        violation_count: count,
        examples: report.violations,
    })
}

fn tau_sweep(built: &BuiltScenario, rng: &mut Rng) -> Option<TauSweep> {
    let tau = built.tau.as_ref()?;
    let mut violations = validate_smoothness(&built.space, tau, SWEEP_SAMPLES, rng);
    let count = violations.len();
    violations.truncate(MAX_EXAMPLES);
    Some(TauSweep {
        samples: SWEEP_SAMPLES,
        violation_count: count,
        examples: violations,
    })
}

/// Samples the uniform-continuity contract of ϖ on pairs around the
/// operating region: ‖x−y‖ ≤ ϖ(ε) must force the selected values within
/// ε of each other (the canonical selection realises the covering).
fn varpi_sweep(built: &BuiltScenario, radius: f64, rng: &mut Rng) -> Option<VarpiSweep> {
    let varpi = built.varpi.as_ref()?;
    let space = &built.space;
    let dim = space.dim();
    let q = built.operator.zero();
    let mut violations = Vec::new();
    let mut count = 0usize;
    for i in 0..SWEEP_SAMPLES {
        let eps = built.eps_grid[i % built.eps_grid.len()];
        let delta = varpi.eval(eps);
        if !(delta > 0.0) {
            count += 1;
            if violations.len() < MAX_EXAMPLES {
                violations.push(VarpiViolation {
                    eps,
                    distance: 0.0,
                    defect: f64::INFINITY,
                });
            }
            continue;
        }
        let dir = rng.direction(dim);
        let dn = space.norm(&dir).expect("dims fixed");
        let r = rng.uniform(0.0, radius);
        let x: Vec<f64> = dir
            .iter()
            .zip(q.as_slice())
            .map(|(d, qi)| qi + d * r / dn)
            .collect();
        let pert = rng.direction(dim);
        let pn = space.norm(&pert).expect("dims fixed");
        let pr = rng.uniform(0.0, delta);
        let y: Vec<f64> = x.iter().zip(&pert).map(|(a, b)| a + b * pr / pn).collect();
        let ax = built.operator.select(&x);
        let ay = built.operator.select(&y);
        let diff: Vec<f64> = ax.iter().zip(&ay).map(|(a, b)| a - b).collect();
        let dist = space.norm(&diff).expect("dims fixed");
        if dist > eps + 1e-9 {
            count += 1;
            if violations.len() < MAX_EXAMPLES {
                violations.push(VarpiViolation {
                    eps,
                    distance: space
                        .norm(&x.iter().zip(&y).map(|(a, b)| a - b).collect::<Vec<f64>>())
                        .expect("dims fixed"),
                    defect: dist - eps,
                });
            }
        }
    }
    Some(VarpiSweep {
        samples: SWEEP_SAMPLES,
        violation_count: count,
        examples: violations,
    })
}

/// Spot-checks the divergence witness against direct summation. Draw
/// sizes shrink until the witnessed window is small enough to sum.
fn divergence_probe(built: &BuiltScenario, rng: &mut Rng) -> (usize, bool) {
    const SUM_CAP: Index = 4_000_000;
    let schedule = &built.schedule;
    let mut ok = true;
    let mut used = 0usize;
    for i in 0..DIVERGENCE_PROBES {
        // Small starts keep the exponential-witness windows summable;
        // larger ones exercise the direct witnesses.
        let start = if i % 2 == 0 { rng.below(12) } else { rng.below(1000) };
        let mut amount = rng.uniform(1e-6, 10.0);
        let mut end = schedule.divergence.at(start, amount);
        let mut attempts = 0;
        while end.saturating_sub(start) > SUM_CAP && attempts < 12 {
            amount /= 4.0;
            end = schedule.divergence.at(start, amount);
            attempts += 1;
        }
        if end.saturating_sub(start) > SUM_CAP {
            continue;
        }
        used += 1;
        let sum: f64 = (start..=end).map(|i| schedule.alpha(i)).sum();
        if sum < amount - 1e-12 {
            ok = false;
        }
    }
    (used, ok)
}

/// Full-horizon check of the joint-rate contract for max(α, β).
fn joint_rate_check(built: &BuiltScenario) -> Option<bool> {
    let rate = built.schedule.joint_rate.as_ref()?;
    let mut ok = true;
    for &eps in &built.eps_grid {
        let from = rate.at(eps);
        if from > built.horizon {
            continue;
        }
        for n in from..=built.horizon {
            let a = built.schedule.alpha(n);
            let b = built.schedule.beta(n).unwrap_or(0.0);
            if a.max(b) > eps + 1e-12 {
                ok = false;
                break;
            }
        }
    }
    Some(ok)
}

struct RateData {
    rate: RateOfConvergence,
    rate_bound: Option<f64>,
}

fn build_rate(built: &BuiltScenario) -> RateData {
    if let Some(rate) = &built.rate_override {
        return RateData {
            rate: rate.clone(),
            rate_bound: None,
        };
    }
    let r = &built.schedule.divergence;
    match built.theorem {
        Theorem::Thm42 => {
            let k = built.bounds.k.expect("resolved for implicit theorems");
            RateData {
                rate: schemes::implicit_rate(&built.theta, r, k),
                rate_bound: Some(k),
            }
        }
        Theorem::Rem43 | Theorem::Cor44 => {
            let k = built.bounds.k.expect("resolved for implicit theorems");
            let rate = schemes::implicit_rate_psi(&built.theta, r, k)
                .expect("psi provenance enforced at validation");
            RateData {
                rate,
                rate_bound: Some(k),
            }
        }
        Theorem::Thm55 => {
            let k = built.bounds.k.expect("resolved");
            let k_prime = built.bounds.k_prime.expect("resolved");
            let family = built.family.as_ref().expect("validated");
            RateData {
                rate: schemes::approx_implicit_rate(&built.theta, family, r, k, k_prime),
                rate_bound: Some(k),
            }
        }
        Theorem::Thm56 => {
            let family = built.family.as_ref().expect("validated");
            let (rate, k) = schemes::approx_implicit_rate_bounded_sum(
                &built.theta,
                family,
                r,
                built.bounds.k0.expect("resolved"),
                built.bounds.k1.expect("resolved"),
                built.bounds.k2.expect("resolved"),
            );
            RateData {
                rate,
                rate_bound: Some(k),
            }
        }
        Theorem::Thm64 => {
            let joint = built.schedule.joint_rate.as_ref().expect("validated");
            let (rate, k) = schemes::ishikawa_rate_continuity(
                &built.theta,
                built.varpi.as_ref().expect("validated"),
                joint,
                r,
                built.bounds.k0.expect("resolved"),
                built.bounds.k1.expect("resolved"),
            );
            RateData {
                rate,
                rate_bound: Some(k),
            }
        }
        Theorem::Thm73 => {
            let joint = built.schedule.joint_rate.as_ref().expect("validated");
            let (rate, k) = schemes::ishikawa_rate_smooth(
                &built.theta,
                built.tau.as_ref().expect("validated"),
                joint,
                r,
                built.bounds.k0.expect("resolved"),
                built.bounds.k1.expect("resolved"),
            );
            RateData {
                rate,
                rate_bound: Some(k),
            }
        }
    }
}

fn run_engine(built: &BuiltScenario, horizon: Index) -> Result<IterationTrace, SchemeError> {
    match built.theorem {
        Theorem::Thm42 | Theorem::Rem43 | Theorem::Cor44 => {
            run_implicit_simple(&built.operator, &built.schedule, &built.start, horizon)
        }
        Theorem::Thm55 | Theorem::Thm56 => run_implicit_approx(
            built.family.as_ref().expect("validated"),
            &built.space,
            built.operator.zero(),
            &built.schedule,
            &built.start,
            horizon,
        ),
        Theorem::Thm64 => run_ishikawa(
            &built.operator,
            &built.operator,
            &built.schedule,
            &built.start,
            horizon,
        ),
        Theorem::Thm73 => run_ishikawa(
            &built.operator,
            built.operator2.as_ref().expect("validated"),
            &built.schedule,
            &built.start,
            horizon,
        ),
    }
}

fn precondition_checks(built: &BuiltScenario) -> bool {
    let b = &built.bounds;
    let mut ok = true;
    match built.theorem {
        Theorem::Thm42 | Theorem::Rem43 | Theorem::Cor44 | Theorem::Thm55 => {
            if let Some(k) = b.k {
                ok &= b.initial_residual < k;
            }
            if let Some(kp) = b.k_prime {
                ok &= b.zero_norm < kp;
            }
        }
        Theorem::Thm56 => {
            ok &= b.initial_residual < b.k0.unwrap_or(f64::INFINITY);
            ok &= b.zero_norm < b.k1.unwrap_or(f64::INFINITY);
        }
        Theorem::Thm64 | Theorem::Thm73 => {
            ok &= b.initial_residual < b.k1.unwrap_or(f64::INFINITY);
        }
    }
    ok
}

/// Samples `‖(I−A)x‖` at trace points and random points of the
/// operating ball; the declared K₀ must strictly dominate every draw.
fn range_check(
    built: &BuiltScenario,
    trace: &IterationTrace,
    k0: f64,
    ball: f64,
    rng: &mut Rng,
) -> ValueCheck {
    let space = &built.space;
    let q = built.operator.zero();
    let ops: Vec<&Operator> = match &built.operator2 {
        Some(op2) => vec![&built.operator, op2],
        None => vec![&built.operator],
    };
    let mut max_observed = 0.0_f64;
    let mut probe = |x: &[f64]| {
        for op in &ops {
            let a = op.select(x);
            let w: Vec<f64> = x.iter().zip(&a).map(|(xi, ai)| xi - ai).collect();
            if let Ok(n) = space.norm(&w) {
                if n > max_observed {
                    max_observed = n;
                }
            }
        }
    };
    for x in trace.xs.iter().take(2000) {
        probe(x.as_slice());
    }
    if let Some(ys) = &trace.ys {
        for y in ys.iter().take(2000) {
            probe(y.as_slice());
        }
    }
    for _ in 0..2000 {
        let dir = rng.direction(space.dim());
        let dn = space.norm(&dir).expect("dims fixed");
        let r = rng.uniform(0.0, ball);
        let x: Vec<f64> = dir
            .iter()
            .zip(q.as_slice())
            .map(|(d, qi)| qi + d * r / dn)
            .collect();
        probe(&x);
    }
    ValueCheck {
        bound: k0,
        max_observed,
        ok: max_observed < k0,
    }
}

fn envelope_report(built: &BuiltScenario, trace: &IterationTrace) -> Option<EnvelopeReport> {
    if built.theorem != Theorem::Cor44 {
        return None;
    }
    let psi = built.theta.psi()?.clone();
    let k = built.bounds.k?;
    let sums = cached_partial_sums(&built.alpha_kind, built.horizon);
    let threshold = envelope_threshold(&psi, k, sums.as_ref(), built.horizon)?;
    let from = threshold + 1;
    let mut violations = Vec::new();
    let mut count = 0usize;
    let mut max_ratio = 0.0_f64;
    for n in from..=trace.horizon {
        let s = sums(n);
        if !(s > 0.0) {
            continue;
        }
        let env = match envelope_bound(&psi, k, s) {
            Ok(v) => v,
            Err(_) => continue,
        };
        let residual = trace.residuals[n as usize];
        let ratio = residual / env;
        if ratio > max_ratio {
            max_ratio = ratio;
        }
        if residual >= env + 1e-9 {
            count += 1;
            if violations.len() < MAX_EXAMPLES {
                violations.push(EnvelopeEntry {
                    n,
                    residual,
                    envelope: env,
                });
            }
        }
    }
    Some(EnvelopeReport {
        threshold,
        checked_from: from,
        checked_to: trace.horizon,
        violation_count: count,
        violations,
        max_ratio,
    })
}

/// Runs one scenario end to end. Hypothesis verification happens before
/// the iteration; a scenario whose declared moduli fail their sweeps is
/// rejected without running (trace absent, exit code 1).
pub fn run_scenario(
    config: &ScenarioConfig,
    overrides: &RunOverrides,
) -> Result<ScenarioOutcome, ScenarioError> {
    let mut built = config.build()?;
    if let Some(h) = overrides.horizon {
        built.horizon = h;
    }
    let mut rng = Rng::new(overrides.seed);

    // The bound entering the accretivity sweep: the one the rate uses.
    let declared = schemes::BoundSet {
        k: built.bounds.k,
        k_prime: built.bounds.k_prime,
        k0: built.bounds.k0,
        k1: built.bounds.k1,
        k2: built.bounds.k2,
    };
    let sweep_bound = match built.theorem {
        Theorem::Thm42 | Theorem::Rem43 | Theorem::Cor44 | Theorem::Thm55 => {
            declared.k.expect("resolved")
        }
        Theorem::Thm56 => declared
            .summed_k(built.family.as_ref().expect("validated"))
            .expect("resolved"),
        Theorem::Thm64 | Theorem::Thm73 => declared.ishikawa_k().expect("resolved"),
    };

    let theta = theta_sweep(&built, sweep_bound, &mut rng)?;
    let tau = tau_sweep(&built, &mut rng);
    let varpi = varpi_sweep(&built, sweep_bound, &mut rng);
    let (probes, divergence_ok) = divergence_probe(&built, &mut rng);
    let joint_rate_ok = joint_rate_check(&built);
    let preconditions_ok = precondition_checks(&built);

    let hypotheses_ok = theta.violation_count == 0
        && tau.as_ref().map_or(true, |t| t.violation_count == 0)
        && varpi.as_ref().map_or(true, |v| v.violation_count == 0)
        && divergence_ok
        && joint_rate_ok.unwrap_or(true)
        && preconditions_ok;

    // A wrong modulus rejects the scenario before iteration starts.
    if !hypotheses_ok {
        let verification = VerificationReport {
            passed: false,
            theta,
            tau,
            varpi,
            schedule: ScheduleChecks {
                coefficients_ok: true,
                divergence_probes: probes,
                divergence_ok,
                joint_rate_ok,
            },
            bounds: BoundChecks {
                preconditions_ok,
                trace_bound: None,
                range_bound: None,
                step_gap_ok: None,
                partial_sums: None,
            },
        };
        let report = ScenarioReport {
            schema: "accretia.report/1",
            scenario_id: built.id.clone(),
            theorem: built.theorem.id(),
            horizon: built.horizon,
            seed: overrides.seed,
            eps_grid: built.eps_grid.clone(),
            rate_bound: None,
            verification,
            certification: None,
            envelope: None,
            generated_at_unix: now_unix(),
        };
        return Ok(ScenarioOutcome {
            report,
            trace: None,
            built,
        });
    }

    let trace = run_engine(&built, built.horizon)?;

    // Post-run bound checks.
    let governing_bound = match built.theorem {
        Theorem::Thm42 | Theorem::Rem43 | Theorem::Cor44 | Theorem::Thm55 => built.bounds.k,
        Theorem::Thm56 | Theorem::Thm64 | Theorem::Thm73 => Some(sweep_bound),
    };
    let trace_bound = governing_bound.map(|bound| {
        let max_observed = trace.residuals.iter().cloned().fold(0.0, f64::max);
        ValueCheck {
            bound,
            max_observed,
            ok: max_observed < bound + 1e-9,
        }
    });
    let range_bound = if built.theorem.is_ishikawa() {
        built
            .bounds
            .k0
            .map(|k0| range_check(&built, &trace, k0, sweep_bound, &mut rng))
    } else {
        None
    };
    let step_gap_ok = if built.theorem.is_ishikawa() {
        Some(
            ishikawa_gap_violation(&built.space, &trace, &built.schedule, sweep_bound)?.is_none(),
        )
    } else {
        None
    };
    let partial_sums = match (built.theorem, &built.family) {
        (Theorem::Thm56, Some(family)) => built.bounds.k2.map(|k2| {
            let mut acc = 0.0_f64;
            let mut max_observed = 0.0_f64;
            for n in 0..=built.horizon {
                acc += built.schedule.alpha(n) * family.h(n);
                if acc > max_observed {
                    max_observed = acc;
                }
            }
            ValueCheck {
                bound: k2,
                max_observed,
                ok: max_observed < k2,
            }
        }),
        _ => None,
    };

    let bounds_ok = trace_bound.map_or(true, |c| c.ok)
        && range_bound.map_or(true, |c| c.ok)
        && step_gap_ok.unwrap_or(true)
        && partial_sums.map_or(true, |c| c.ok);

    let verification = VerificationReport {
        passed: bounds_ok,
        theta,
        tau,
        varpi,
        schedule: ScheduleChecks {
            coefficients_ok: true,
            divergence_probes: probes,
            divergence_ok,
            joint_rate_ok,
        },
        bounds: BoundChecks {
            preconditions_ok,
            trace_bound,
            range_bound,
            step_gap_ok,
            partial_sums,
        },
    };

    let rate_data = build_rate(&built);
    let certification = certify(&built.id, &trace, &rate_data.rate, &built.eps_grid);
    let envelope = envelope_report(&built, &trace);

    let report = ScenarioReport {
        schema: "accretia.report/1",
        scenario_id: built.id.clone(),
        theorem: built.theorem.id(),
        horizon: built.horizon,
        seed: overrides.seed,
        eps_grid: built.eps_grid.clone(),
        rate_bound: rate_data.rate_bound,
        verification,
        certification: Some(certification),
        envelope,
        generated_at_unix: now_unix(),
    };
    Ok(ScenarioOutcome {
        report,
        trace: Some(trace),
        built,
    })
}

/// The rate the scenario certifies against, exposed for the rate-table
/// command and the test suites.
pub fn scenario_rate(built: &BuiltScenario) -> RateOfConvergence {
    build_rate(built).rate
}
