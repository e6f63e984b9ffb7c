//! Seeded sampling for hypothesis verification.
//!
//! Verification sweeps (accretivity moduli, smoothness moduli, bound
//! consistency) draw their sample points from this generator so that a
//! seed pins the whole sweep. Iteration traces never touch it.

/// SplitMix64. Small, fast, and good enough for stratified verification
/// sampling; not a cryptographic generator.
#[derive(Debug, Clone)]
pub struct Rng {
    state: u64,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    /// Uniform in `[-1, 1)`.
    pub fn symmetric(&mut self) -> f64 {
        2.0 * self.unit() - 1.0
    }

    /// Uniform integer in `[0, bound)`.
    pub fn below(&mut self, bound: u64) -> u64 {
        if bound == 0 {
            return 0;
        }
        self.next_u64() % bound
    }

    /// A random nonzero direction with coordinates in `[-1, 1)`.
    /// Callers rescale to the radius they need in whatever norm applies.
    pub fn direction(&mut self, dim: usize) -> alloc::vec::Vec<f64> {
        loop {
            let v: alloc::vec::Vec<f64> = (0..dim).map(|_| self.symmetric()).collect();
            if v.iter().any(|c| c.abs() > 1e-3) {
                return v;
            }
        }
    }
}
