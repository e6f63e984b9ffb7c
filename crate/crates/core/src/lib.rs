//! Iterative approximation of the unique zero of uniformly accretive
//! operators on finite-dimensional `ℓ_p` spaces, together with the
//! constructive rates of convergence those schemes admit and a harness
//! that certifies the rates against observed residuals.
//!
//! The crate is organised in five layers:
//!
//! * [`space`] — `ℓ_p^d` instances (`1 < p < ∞`) with exact-formula
//!   duality maps, dual pairings and uniform-smoothness machinery;
//! * [`operators`] — the (possibly set-valued) operator abstraction,
//!   accretivity moduli, Hausdorff predicates and operator-sequence
//!   approximation data;
//! * [`rates`] — rate-of-convergence / rate-of-divergence witnesses and
//!   the combinators that turn descent properties into rates;
//! * [`schemes`] — the iteration engines (simple implicit, implicit with
//!   approximating operators, one- and two-operator Ishikawa) and the
//!   per-theorem rate constructors;
//! * [`certify`] — per-ε comparison of a theoretical rate against the
//!   residuals of a concrete run.
//!
//! Everything here is pure and deterministic: operators are canonical
//! selections, traces are reproducible across runs and threads, and the
//! only randomness (hypothesis-verification sampling) is seeded
//! explicitly through [`sampling::Rng`].
//!
//! The crate is `no_std`-compatible (`alloc` required); enable the
//! `libm` feature when building without `std`.

#![cfg_attr(not(feature = "std"), no_std)]
#![deny(unsafe_code)]

extern crate alloc;

#[cfg(all(not(feature = "std"), not(feature = "libm")))]
compile_error!("accretia-core needs either the `std` or the `libm` feature for float math");

pub mod certify;
mod math;
pub mod operators;
pub mod rates;
pub mod sampling;
pub mod schemes;
pub mod space;
pub mod tol;

use alloc::sync::Arc;

/// Iteration index. Rates saturate at `Index::MAX` instead of
/// overflowing; a saturated value always lands in the "vacuous"
/// certification class.
pub type Index = u64;

/// A positive-real-to-real witness function (moduli, schedules, …).
pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A positive-real-to-index witness function (rates of convergence, …).
pub type IndexFn = Arc<dyn Fn(f64) -> Index + Send + Sync>;

pub use certify::{certify, first_stable_entry, grid_minimum, CertStatus, CertificationReport};
pub use operators::{AccretivityModulus, ApproximationFamily, ContinuityModulus, Operator};
pub use rates::{DescentWitness, RateOfConvergence, RateOfDivergence};
pub use schemes::{IterationTrace, ScalarSchedule, SchemeTag};
pub use space::{LpSpace, SmoothnessModulus, Vector};
