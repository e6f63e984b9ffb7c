//! Certification of theoretical rates against observed residuals.
//!
//! For each ε on a grid, the harness evaluates the rate Φ(ε) and checks
//! that every residual in the window `[Φ(ε), horizon]` sits at or below
//! ε (plus the crate-wide floating slack). A window that starts beyond
//! the horizon is reported as *vacuous* rather than passed — several of
//! the bundled rates are astronomically conservative and claiming a
//! pass there would be dishonest.

use alloc::string::String;
use alloc::vec::Vec;

use crate::rates::RateOfConvergence;
use crate::schemes::IterationTrace;
use crate::{tol, Index};

/// Cap on stored counterexamples per ε; the total count is reported.
const MAX_COUNTEREXAMPLES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum CertStatus {
    /// The whole window `[Φ(ε), horizon]` sits at or below ε.
    Certified,
    /// `Φ(ε) > horizon`: the claim is untested at this horizon.
    Vacuous,
    /// Some residual in the window exceeds ε.
    Failed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Counterexample {
    pub n: Index,
    pub residual: f64,
}

/// Per-ε verdict.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct EpsVerdict {
    pub eps: f64,
    pub phi: Index,
    pub status: CertStatus,
    /// Least index from which residuals stay at or below ε, if any.
    pub first_entry: Option<Index>,
    /// `Φ(ε) / first_entry` when the verdict is certified and the first
    /// entry is positive; ≥ 1 whenever the rate is honest.
    pub slack_ratio: Option<f64>,
    pub counterexample_count: u64,
    pub counterexamples: Vec<Counterexample>,
}

#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct CertificationReport {
    pub scenario_id: String,
    pub horizon: Index,
    pub entries: Vec<EpsVerdict>,
}

impl CertificationReport {
    pub fn failed_count(&self) -> usize {
        self.entries
            .iter()
            .filter(|e| e.status == CertStatus::Failed)
            .count()
    }

    pub fn all_non_failed(&self) -> bool {
        self.failed_count() == 0
    }

    pub fn entry(&self, eps: f64) -> Option<&EpsVerdict> {
        self.entries.iter().find(|e| e.eps == eps)
    }
}

/// Least `n₀` such that every residual from `n₀` through the horizon
/// stays at or below ε (with the floating slack); `None` when even the
/// final residual exceeds ε. A dip below ε followed by a rise does not
/// count — the scan returns the last *stable* entry.
pub fn first_stable_entry(trace: &IterationTrace, eps: f64) -> Option<Index> {
    let bound = eps + tol::EPS_COMPARISON;
    let mut entry: usize = 0;
    for (n, r) in trace.residuals.iter().enumerate() {
        if *r > bound {
            entry = n + 1;
        }
    }
    if entry >= trace.residuals.len() {
        None
    } else {
        Some(entry as Index)
    }
}

/// Compares a rate against a trace on an ε grid. Pure in its inputs:
/// identical (trace, rate, grid) give identical reports.
pub fn certify(
    scenario_id: &str,
    trace: &IterationTrace,
    rate: &RateOfConvergence,
    eps_grid: &[f64],
) -> CertificationReport {
    let horizon = trace.horizon;
    let entries = eps_grid
        .iter()
        .map(|&eps| {
            let phi = rate.at(eps);
            let first_entry = first_stable_entry(trace, eps);
            if phi > horizon {
                return EpsVerdict {
                    eps,
                    phi,
                    status: CertStatus::Vacuous,
                    first_entry,
                    slack_ratio: None,
                    counterexample_count: 0,
                    counterexamples: Vec::new(),
                };
            }
            let bound = eps + tol::EPS_COMPARISON;
            let mut counterexamples = Vec::new();
            let mut count = 0u64;
            for n in phi..=horizon {
                let r = trace.residuals[n as usize];
                if r > bound {
                    count += 1;
                    if counterexamples.len() < MAX_COUNTEREXAMPLES {
                        counterexamples.push(Counterexample { n, residual: r });
                    }
                }
            }
            let status = if count == 0 {
                CertStatus::Certified
            } else {
                CertStatus::Failed
            };
            let slack_ratio = match (status, first_entry) {
                (CertStatus::Certified, Some(fe)) if fe > 0 => Some(phi as f64 / fe as f64),
                _ => None,
            };
            EpsVerdict {
                eps,
                phi,
                status,
                first_entry,
                slack_ratio,
                counterexample_count: count,
                counterexamples,
            }
        })
        .collect();
    CertificationReport {
        scenario_id: String::from(scenario_id),
        horizon,
        entries,
    }
}

/// Dense-grid minimum with no refinement — intentionally a different
/// algorithm from the infimum search it cross-checks.
pub fn grid_minimum(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, points: usize) -> f64 {
    assert!(points >= 2 && hi >= lo);
    let mut best = f(lo);
    let step = (hi - lo) / (points - 1) as f64;
    for i in 1..points {
        let t = if i == points - 1 { hi } else { lo + step * i as f64 };
        let v = f(t);
        if v < best {
            best = v;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rates::ceil_index;
    use crate::schemes::SchemeTag;
    use crate::space::Vector;
    use alloc::vec;

    fn trace_from_residuals(residuals: Vec<f64>) -> IterationTrace {
        let horizon = (residuals.len() - 1) as Index;
        IterationTrace {
            tag: SchemeTag::ImplicitSimple,
            xs: residuals
                .iter()
                .map(|r| Vector::new(vec![*r]).unwrap())
                .collect(),
            ys: None,
            us: None,
            vs: None,
            residuals,
            horizon,
        }
    }

    fn dyadic_residuals(n: usize) -> Vec<f64> {
        (0..=n).map(|i| 2.0_f64.powi(-(i as i32))).collect()
    }

    #[test]
    fn certifies_geometric_decay() {
        let trace = trace_from_residuals(dyadic_residuals(64));
        // Valid rate for 2^−n decay: ⌈log2(1/ε)⌉.
        let rate = RateOfConvergence::new(|e| ceil_index(-e.log2()));
        let grid: Vec<f64> = (1..=6).map(|k| 2.0_f64.powi(-k)).collect();
        let report = certify("geometric", &trace, &rate, &grid);
        assert!(report.all_non_failed());
        for entry in &report.entries {
            assert_eq!(entry.status, CertStatus::Certified);
            assert!(entry.counterexamples.is_empty());
        }
    }

    #[test]
    fn zero_rate_fails_with_counterexample_at_origin() {
        let trace = trace_from_residuals(dyadic_residuals(32));
        let rate = RateOfConvergence::new(|_| 0);
        let report = certify("broken", &trace, &rate, &[0.5]);
        let entry = &report.entries[0];
        assert_eq!(entry.status, CertStatus::Failed);
        assert_eq!(entry.counterexamples[0].n, 0);
        assert_eq!(entry.counterexamples[0].residual, 1.0);
    }

    #[test]
    fn epsilon_above_initial_residual_certifies_with_entry_zero() {
        let trace = trace_from_residuals(dyadic_residuals(8));
        let rate = RateOfConvergence::new(|_| 0);
        let report = certify("easy", &trace, &rate, &[2.0]);
        let entry = &report.entries[0];
        assert_eq!(entry.status, CertStatus::Certified);
        assert_eq!(entry.first_entry, Some(0));
        assert_eq!(entry.slack_ratio, None);
    }

    #[test]
    fn rate_beyond_horizon_is_vacuous() {
        let trace = trace_from_residuals(dyadic_residuals(8));
        let rate = RateOfConvergence::new(|_| 1_000_000);
        let report = certify("conservative", &trace, &rate, &[0.25]);
        assert_eq!(report.entries[0].status, CertStatus::Vacuous);
        // Vacuous is not failed, but it is reported distinctly.
        assert!(report.all_non_failed());
    }

    #[test]
    fn first_stable_entry_hand_values() {
        let trace = trace_from_residuals(dyadic_residuals(16));
        assert_eq!(first_stable_entry(&trace, 2.0_f64.powi(-5)), Some(5));

        let flat = trace_from_residuals(vec![1.0; 10]);
        assert_eq!(first_stable_entry(&flat, 0.5), None);

        // A dip below ε followed by a rise: the scan must return the
        // last stable entry, not the first dip.
        let bumpy = trace_from_residuals(vec![1.0, 0.1, 0.9, 0.1, 0.05, 0.04]);
        assert_eq!(first_stable_entry(&bumpy, 0.2), Some(3));
    }

    #[test]
    fn slack_ratio_at_least_one_for_valid_rates() {
        let trace = trace_from_residuals(dyadic_residuals(64));
        let rate = RateOfConvergence::new(|e| ceil_index(-e.log2()) + 3);
        let grid: Vec<f64> = (1..=6).map(|k| 2.0_f64.powi(-k)).collect();
        let report = certify("slack", &trace, &rate, &grid);
        for entry in &report.entries {
            if let Some(ratio) = entry.slack_ratio {
                assert!(ratio >= 1.0);
            }
        }
    }

    #[test]
    fn report_is_deterministic() {
        let trace = trace_from_residuals(dyadic_residuals(32));
        let rate = RateOfConvergence::new(|e| ceil_index(1.0 / e));
        let grid = [0.5, 0.25, 0.125];
        let a = certify("det", &trace, &rate, &grid);
        let b = certify("det", &trace, &rate, &grid);
        assert_eq!(a.entries.len(), b.entries.len());
        for (x, y) in a.entries.iter().zip(&b.entries) {
            assert_eq!(x.status, y.status);
            assert_eq!(x.phi, y.phi);
            assert_eq!(x.first_entry, y.first_entry);
        }
    }

    #[test]
    fn grid_minimum_hand_values() {
        let v = grid_minimum(&|t| t * t, 0.5, 2.0, 100_000);
        assert!((v - 0.25).abs() <= 1e-5);
        let c = grid_minimum(&|_| 1.0, -3.0, 4.0, 17);
        assert_eq!(c, 1.0);
    }
}
