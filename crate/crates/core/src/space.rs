//! Finite-dimensional `ℓ_p` instances, `1 < p < ∞`, with the
//! closed-form normalized duality map, dual pairings, and the
//! uniform-smoothness machinery that feeds the two-operator Ishikawa
//! rate.
//!
//! Restricting to `1 < p < ∞` keeps the duality map single-valued with
//! an exact formula, which is what makes every modulus and pairing in
//! the crate computable.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::sampling::Rng;
use crate::{tol, RealFn};

/// Errors from space-level operations.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpaceError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("exponent p = {0} out of range; need 1 < p < inf")]
    InvalidExponent(f64),
    #[error("dimension must be positive")]
    ZeroDimension,
    #[error("non-finite coordinate at position {0}")]
    NonFinite(usize),
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
}

/// A point of the space: finite coordinates, fixed dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector {
    coords: Vec<f64>,
}

impl Vector {
    /// Validates that every coordinate is finite.
    pub fn new(coords: Vec<f64>) -> Result<Self, SpaceError> {
        if coords.is_empty() {
            return Err(SpaceError::ZeroDimension);
        }
        for (i, c) in coords.iter().enumerate() {
            if !c.is_finite() {
                return Err(SpaceError::NonFinite(i));
            }
        }
        Ok(Vector { coords })
    }

    pub fn zeros(dim: usize) -> Self {
        Vector { coords: vec![0.0; dim] }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn sub(&self, other: &Vector) -> Vector {
        Vector {
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn add(&self, other: &Vector) -> Vector {
        Vector {
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Vector {
        Vector {
            coords: self.coords.iter().map(|a| a * s).collect(),
        }
    }

    /// `a·x + b·y`, the workhorse of the explicit schemes.
    pub fn combine(a: f64, x: &Vector, b: f64, y: &Vector) -> Vector {
        Vector {
            coords: x
                .coords
                .iter()
                .zip(&y.coords)
                .map(|(xi, yi)| a * xi + b * yi)
                .collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.coords.iter().all(|c| c.is_finite())
    }
}

impl From<Vec<f64>> for Vector {
    fn from(coords: Vec<f64>) -> Self {
        Vector { coords }
    }
}

/// An `ℓ_p^d` instance. The optional smoothness modulus is only needed
/// by the smooth-space Ishikawa rate.
#[derive(Clone)]
pub struct LpSpace {
    dim: usize,
    p: f64,
    tau: Option<SmoothnessModulus>,
}

impl core::fmt::Debug for LpSpace {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("LpSpace")
            .field("dim", &self.dim)
            .field("p", &self.p)
            .field("tau", &self.tau.as_ref().map(|_| "<modulus>"))
            .finish()
    }
}

impl LpSpace {
    pub fn new(dim: usize, p: f64) -> Result<Self, SpaceError> {
        if dim == 0 {
            return Err(SpaceError::ZeroDimension);
        }
        if !(p > 1.0) || !p.is_finite() {
            return Err(SpaceError::InvalidExponent(p));
        }
        Ok(LpSpace { dim, p, tau: None })
    }

    pub fn with_smoothness(mut self, tau: SmoothnessModulus) -> Self {
        self.tau = Some(tau);
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// The conjugate exponent `q` with `1/p + 1/q = 1`.
    pub fn dual_exponent(&self) -> f64 {
        self.p / (self.p - 1.0)
    }

    pub fn smoothness(&self) -> Option<&SmoothnessModulus> {
        self.tau.as_ref()
    }

    fn check_dim(&self, x: &[f64]) -> Result<(), SpaceError> {
        if x.len() != self.dim {
            return Err(SpaceError::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// `(Σ |x_i|^p)^(1/p)`. Zero exactly on the zero vector.
    pub fn norm(&self, x: &[f64]) -> Result<f64, SpaceError> {
        self.check_dim(x)?;
        Ok(self.norm_with_exponent(x, self.p))
    }

    /// Norm of a dual-coordinate vector, i.e. the `ℓ_q` norm.
    pub fn dual_norm(&self, j: &[f64]) -> Result<f64, SpaceError> {
        self.check_dim(j)?;
        Ok(self.norm_with_exponent(j, self.dual_exponent()))
    }

    fn norm_with_exponent(&self, x: &[f64], e: f64) -> f64 {
        if e == 2.0 {
            return math::sqrt(x.iter().map(|c| c * c).sum());
        }
        let sum: f64 = x.iter().map(|c| math::powf(math::abs(*c), e)).sum();
        if sum == 0.0 {
            0.0
        } else {
            math::powf(sum, 1.0 / e)
        }
    }

    /// The normalized duality map in dual coordinates:
    /// `j_i = ‖x‖^(2−p) · sign(x_i) · |x_i|^(p−1)`, with `J(0) = 0`.
    ///
    /// The result satisfies `⟨x, j⟩ = ‖x‖² = ‖j‖_q²` up to rounding.
    pub fn duality_map(&self, x: &[f64]) -> Result<Vector, SpaceError> {
        self.check_dim(x)?;
        if self.p == 2.0 {
            // Hilbert case: J is the identity in coordinates.
            return Ok(Vector { coords: x.to_vec() });
        }
        let n = self.norm(x)?;
        if n == 0.0 {
            return Ok(Vector::zeros(self.dim));
        }
        let scale = math::powf(n, 2.0 - self.p);
        let coords = x
            .iter()
            .map(|&c| {
                if c == 0.0 {
                    0.0
                } else {
                    scale * c.signum() * math::powf(math::abs(c), self.p - 1.0)
                }
            })
            .collect();
        Ok(Vector { coords })
    }

    /// Coordinate pairing `⟨y, j⟩ = Σ y_i j_i` of a point against a
    /// dual-coordinate vector. Bilinear; bounded by `‖y‖_p · ‖j‖_q`.
    pub fn dual_pair(&self, y: &[f64], j: &[f64]) -> Result<f64, SpaceError> {
        self.check_dim(y)?;
        self.check_dim(j)?;
        Ok(y.iter().zip(j).map(|(a, b)| a * b).sum())
    }
}

/// Outcome of evaluating the subdifferential inequality
/// `‖x+y‖² ≤ ‖x‖² + 2⟨y, J(x+y)⟩` at a pair of points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubdiffCheck {
    pub holds: bool,
    /// `‖x‖² + 2⟨y, J(x+y)⟩ − ‖x+y‖²`; nonnegative up to rounding.
    pub slack: f64,
}

/// Checks `‖x+y‖² ≤ ‖x‖² + 2⟨y, J(x+y)⟩` with the crate-wide identity
/// slack. Holds for every pair of points in every `ℓ_p` instance.
pub fn subdiff_inequality(space: &LpSpace, x: &[f64], y: &[f64]) -> Result<SubdiffCheck, SpaceError> {
    space.check_dim(x)?;
    space.check_dim(y)?;
    let sum: Vec<f64> = x.iter().zip(y).map(|(a, b)| a + b).collect();
    let j = space.duality_map(&sum)?;
    let lhs = {
        let n = space.norm(&sum)?;
        n * n
    };
    let rhs = {
        let n = space.norm(x)?;
        n * n + 2.0 * space.dual_pair(y, j.as_slice())?
    };
    let slack = rhs - lhs;
    let tol = tol::IDENTITY_ABS + tol::IDENTITY_REL * (1.0 + math::abs(lhs));
    Ok(SubdiffCheck {
        holds: slack >= -tol,
        slack,
    })
}

/// A modulus of uniform smoothness: `δ = tau(ε)` is meant to satisfy
/// `‖x‖ = 1 ∧ ‖y‖ ≤ δ → ‖x+y‖ + ‖x−y‖ ≤ 2 + ε‖y‖`.
///
/// Candidates are validated by sampling ([`validate_smoothness`]), not
/// proved; `tau(ε) = ε` passes for Hilbert instances.
#[derive(Clone)]
pub struct SmoothnessModulus {
    tau: RealFn,
}

impl SmoothnessModulus {
    pub fn new(tau: RealFn) -> Self {
        SmoothnessModulus { tau }
    }

    pub fn from_fn(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        SmoothnessModulus {
            tau: alloc::sync::Arc::new(f),
        }
    }

    pub fn eval(&self, eps: f64) -> f64 {
        (self.tau)(eps)
    }
}

/// One sampled failure of the smoothness inequality.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct SmoothnessViolation {
    pub eps: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// `‖x+y‖ + ‖x−y‖ − (2 + ε‖y‖)`, positive on failure.
    pub excess: f64,
}

/// Samples the defining inequality of a smoothness modulus on random
/// unit vectors `x` and perturbations `‖y‖ ≤ tau(ε)`, over an ε grid.
/// Returns every violation found (empty means consistent on samples).
pub fn validate_smoothness(
    space: &LpSpace,
    tau: &SmoothnessModulus,
    samples: usize,
    rng: &mut Rng,
) -> Vec<SmoothnessViolation> {
    let eps_grid: [f64; 10] = [2.0, 1.0, 0.5, 0.25, 0.125, 0.0625, 0.03125, 0.015625, 1e-3, 1e-4];
    let mut violations = Vec::new();
    for i in 0..samples {
        let eps = eps_grid[i % eps_grid.len()];
        let delta = tau.eval(eps);
        if !(delta > 0.0) {
            violations.push(SmoothnessViolation {
                eps,
                x: Vec::new(),
                y: Vec::new(),
                excess: f64::INFINITY,
            });
            continue;
        }
        let dir = rng.direction(space.dim());
        let n = space.norm(&dir).expect("dimension fixed by construction");
        let x: Vec<f64> = dir.iter().map(|c| c / n).collect();
        let ydir = rng.direction(space.dim());
        let yn = space.norm(&ydir).expect("dimension fixed by construction");
        let r = delta * rng.unit();
        let y: Vec<f64> = ydir.iter().map(|c| c * r / yn).collect();
        let plus: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
        let minus: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
        let lhs = space.norm(&plus).unwrap() + space.norm(&minus).unwrap();
        let rhs = 2.0 + eps * space.norm(&y).unwrap();
        let excess = lhs - rhs;
        if excess > tol::IDENTITY_ABS {
            violations.push(SmoothnessViolation { eps, x, y, excess });
        }
    }
    violations
}

/// Transfers a smoothness modulus into a uniform-continuity modulus for
/// the duality map on the radius-`d` ball:
/// `ε²/(12d) · tau(ε/(2d))` for `ε ∈ (0,2]`, `d ≥ 1`, clamped to `d = 1`
/// below and to `ε = 2` above.
pub fn duality_continuity_modulus(
    tau: &SmoothnessModulus,
    d: f64,
    eps: f64,
) -> Result<f64, SpaceError> {
    if !(d > 0.0) {
        return Err(SpaceError::NonPositive { name: "d", value: d });
    }
    if !(eps > 0.0) {
        return Err(SpaceError::NonPositive { name: "eps", value: eps });
    }
    let d = if d < 1.0 { 1.0 } else { d };
    let eps = if eps > 2.0 { 2.0 } else { eps };
    Ok(eps * eps / (12.0 * d) * tau.eval(eps / (2.0 * d)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::sync::Arc;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()))
    }

    #[test]
    fn euclidean_three_four_five() {
        let space = LpSpace::new(2, 2.0).unwrap();
        assert!(close(space.norm(&[3.0, 4.0]).unwrap(), 5.0));
    }

    #[test]
    fn l4_norm_of_ones() {
        let space = LpSpace::new(2, 4.0).unwrap();
        let expected = 2.0_f64.powf(0.25);
        assert!(close(space.norm(&[1.0, 1.0]).unwrap(), expected));
    }

    #[test]
    fn zero_vector_has_zero_norm() {
        for p in [1.5, 2.0, 3.0, 7.5] {
            let space = LpSpace::new(3, p).unwrap();
            assert_eq!(space.norm(&[0.0, 0.0, 0.0]).unwrap(), 0.0);
        }
    }

    #[test]
    fn norm_rejects_dimension_mismatch() {
        let space = LpSpace::new(2, 2.0).unwrap();
        assert_eq!(
            space.norm(&[1.0]),
            Err(SpaceError::DimensionMismatch { expected: 2, got: 1 })
        );
    }

    #[test]
    fn invalid_exponents_rejected() {
        assert!(LpSpace::new(2, 1.0).is_err());
        assert!(LpSpace::new(2, 0.5).is_err());
        assert!(LpSpace::new(2, f64::INFINITY).is_err());
        assert!(LpSpace::new(0, 2.0).is_err());
    }

    #[test]
    fn duality_map_is_identity_in_hilbert_case() {
        let space = LpSpace::new(2, 2.0).unwrap();
        let j = space.duality_map(&[3.0, 4.0]).unwrap();
        assert_eq!(j.as_slice(), &[3.0, 4.0]);
    }

    #[test]
    fn duality_map_l4_ones() {
        // For p = 4 and x = (1,1): ‖x‖ = 2^(1/4), j_i = ‖x‖^(−2) = 2^(−1/2).
        let space = LpSpace::new(2, 4.0).unwrap();
        let x = [1.0, 1.0];
        let j = space.duality_map(&x).unwrap();
        let expected = 2.0_f64.powf(-0.5);
        for c in j.as_slice() {
            assert!(close(*c, expected));
        }
        // The defining identities ⟨x,j⟩ = ‖x‖² and ‖j‖_q = ‖x‖.
        let n = space.norm(&x).unwrap();
        let pair = space.dual_pair(&x, j.as_slice()).unwrap();
        assert!((pair - n * n).abs() <= 1e-12 * (1.0 + n * n));
        let dn = space.dual_norm(j.as_slice()).unwrap();
        assert!((dn - n).abs() <= 1e-12 * (1.0 + n));
    }

    #[test]
    fn duality_map_of_zero_is_zero() {
        for p in [1.5, 2.0, 4.0] {
            let space = LpSpace::new(3, p).unwrap();
            let j = space.duality_map(&[0.0, 0.0, 0.0]).unwrap();
            assert_eq!(j.as_slice(), &[0.0, 0.0, 0.0]);
        }
    }

    #[test]
    fn dual_pair_orthogonal_coordinates() {
        let space = LpSpace::new(2, 2.0).unwrap();
        assert_eq!(space.dual_pair(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
    }

    #[test]
    fn dual_pair_zero_left_argument() {
        let space = LpSpace::new(2, 3.0).unwrap();
        assert_eq!(space.dual_pair(&[0.0, 0.0], &[2.5, -7.0]).unwrap(), 0.0);
    }

    #[test]
    fn subdiff_inequality_at_origin() {
        let space = LpSpace::new(2, 2.0).unwrap();
        let check = subdiff_inequality(&space, &[0.0, 0.0], &[0.0, 0.0]).unwrap();
        assert!(check.holds);
        assert_eq!(check.slack, 0.0);
    }

    #[test]
    fn subdiff_inequality_hand_case() {
        // dim 1, p = 2, x = 1, y = 1: ‖2‖² = 4 ≤ 1 + 2·1·2 = 5.
        let space = LpSpace::new(1, 2.0).unwrap();
        let check = subdiff_inequality(&space, &[1.0], &[1.0]).unwrap();
        assert!(check.holds);
        assert!(close(check.slack, 1.0));
    }

    #[test]
    fn duality_continuity_modulus_identity_tau() {
        let tau = SmoothnessModulus::from_fn(|e| e);
        // d = 1, ε = 1: 1/12 · τ(1/2) = 1/24.
        let v = duality_continuity_modulus(&tau, 1.0, 1.0).unwrap();
        assert!(close(v, 1.0 / 24.0));
        // d below one clamps to one.
        let v = duality_continuity_modulus(&tau, 0.5, 1.0).unwrap();
        assert!(close(v, 1.0 / 24.0));
        // ε above two clamps to two: 4/12 · τ(1) = 1/3.
        let v = duality_continuity_modulus(&tau, 1.0, 3.0).unwrap();
        assert!(close(v, 1.0 / 3.0));
    }

    #[test]
    fn duality_continuity_modulus_rejects_nonpositive() {
        let tau = SmoothnessModulus::from_fn(|e| e);
        assert!(duality_continuity_modulus(&tau, 0.0, 1.0).is_err());
        assert!(duality_continuity_modulus(&tau, 1.0, 0.0).is_err());
    }

    #[test]
    fn hilbert_tau_passes_smoothness_sweep() {
        let space = LpSpace::new(4, 2.0).unwrap();
        let tau = SmoothnessModulus::from_fn(|e| e);
        let mut rng = Rng::new(1);
        let violations = validate_smoothness(&space, &tau, 2000, &mut rng);
        assert!(violations.is_empty(), "violations: {violations:?}");
    }

    #[test]
    fn oversized_tau_fails_smoothness_sweep() {
        // τ(ε) = 10 admits ‖y‖ up to 10, where the inequality breaks.
        let space = LpSpace::new(2, 2.0).unwrap();
        let tau = SmoothnessModulus::from_fn(|_| 10.0);
        let mut rng = Rng::new(1);
        let violations = validate_smoothness(&space, &tau, 2000, &mut rng);
        assert!(!violations.is_empty());
    }

    #[test]
    fn vector_rejects_non_finite() {
        assert!(Vector::new(alloc::vec![1.0, f64::NAN]).is_err());
        assert!(Vector::new(alloc::vec![f64::INFINITY]).is_err());
        assert!(Vector::new(alloc::vec![]).is_err());
    }

    #[test]
    fn smoothness_modulus_arc_constructor() {
        let tau = SmoothnessModulus::new(Arc::new(|e: f64| e / 2.0));
        assert_eq!(tau.eval(1.0), 0.5);
    }
}
