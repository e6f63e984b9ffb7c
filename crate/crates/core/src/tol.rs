//! The numerical slacks used throughout the crate, in one place.

/// Absolute slack for duality-map and pairing identities.
pub const IDENTITY_ABS: f64 = 1e-9;

/// Relative slack for duality-map and pairing identities, applied as
/// `IDENTITY_REL * (1 + magnitude)`.
pub const IDENTITY_REL: f64 = 1e-9;

/// Slack added to every ε comparison in certification. The theorems are
/// exact-real statements; the harness runs in doubles.
pub const EPS_COMPARISON: f64 = 1e-9;

/// Implicit steps must satisfy their defining equation to this accuracy
/// (scaled by `1 + ‖x‖`). Certification compares residuals against ε as
/// small as 2⁻¹⁰, so solver error has to stay negligible.
pub const STEP_FIDELITY: f64 = 1e-12;

/// Inner iteration cap for the fixed-point implicit-step solver.
pub const STEP_MAX_ITER: u32 = 10_000;

/// Relative accuracy of the grid-plus-refinement infimum used when an
/// accretivity modulus is built from a lower-bound function.
pub const INFIMUM_REL: f64 = 1e-6;

/// Grid size for the infimum search.
pub const INFIMUM_GRID: usize = 4096;

/// Value tolerance for inverting a strictly decreasing function,
/// applied as `INVERSE_VALUE * (1 + |target|)`.
pub const INVERSE_VALUE: f64 = 1e-10;

/// Slack for the divergence-rate contract `Σ α_i ≥ x`.
pub const DIVERGENCE_SUM: f64 = 1e-12;
