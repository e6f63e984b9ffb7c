//! Trace CSV and report JSON emission.
//!
//! CSV uses `.` decimals, no thousands separators, and 17 significant
//! digits so doubles round-trip bit-faithfully. Report JSON field order
//! follows the struct declarations, so identical runs serialize
//! byte-identically apart from the single timestamp field.

use std::io::{self, Write};

use accretia_core::schemes::{IterationTrace, ScalarSchedule};

use crate::scenario::ScenarioReport;

/// 17 significant digits, scientific form.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Columns: `n, residual, alpha_n, beta_n` (beta empty when absent).
pub fn write_trace_csv(
    out: &mut dyn Write,
    trace: &IterationTrace,
    schedule: &ScalarSchedule,
) -> io::Result<()> {
    writeln!(out, "n,residual,alpha_n,beta_n")?;
    for (n, residual) in trace.residuals.iter().enumerate() {
        let alpha = schedule.alpha(n as u64);
        let beta = schedule
            .beta(n as u64)
            .map(fmt_f64)
            .unwrap_or_default();
        writeln!(out, "{n},{},{},{beta}", fmt_f64(*residual), fmt_f64(alpha))?;
    }
    Ok(())
}

pub fn write_report_json(out: &mut dyn Write, report: &ScenarioReport) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut *out, report)?;
    writeln!(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f64_formatting_round_trips() {
        for v in [0.1, 1.0 / 3.0, 2.0_f64.powi(-40), 9.869604401089358] {
            let s = fmt_f64(v);
            assert!(!s.contains(','));
            let back: f64 = s.parse().unwrap();
            assert_eq!(back, v, "string {s}");
        }
    }
}
