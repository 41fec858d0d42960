//! Deterministic, splittable RNG for simulation and sampling.
//!
//! Counter-based splitmix64: every draw is `mix64(stream + counter * GOLDEN)`,
//! so child streams can be derived from a parent without consuming its state.
//! Output is stable across platforms and releases, which the reproducibility
//! guarantees elsewhere in the crate rely on. Not cryptographically secure.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// splitmix64 finalizer.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Splittable deterministic RNG.
///
/// `child`/`child_idx` derive independent streams from the parent's seed
/// material alone; the parent's own draw position never leaks into children,
/// so derivation order cannot perturb results.
#[derive(Debug, Clone)]
pub struct SplitRng {
    stream: u64,
    counter: u64,
}

impl SplitRng {
    pub fn new(seed: u64) -> Self {
        Self { stream: mix64(seed.wrapping_add(GOLDEN)), counter: 0 }
    }

    /// Derive a child stream from a string label.
    pub fn child(&self, label: &str) -> Self {
        let mut h = self.stream ^ 0xA076_1D64_78BD_642F;
        for &b in label.as_bytes() {
            h = mix64(h ^ u64::from(b));
        }
        Self { stream: mix64(h), counter: 0 }
    }

    /// Derive a child stream from an index (e.g. per agent, per round).
    pub fn child_idx(&self, idx: u64) -> Self {
        Self { stream: mix64(self.stream ^ mix64(idx.wrapping_add(GOLDEN))), counter: 0 }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(self.stream.wrapping_add(self.counter.wrapping_mul(GOLDEN)))
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[0, n)`.
    pub fn gen_range(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        (self.next_f64() * n as f64) as usize % n
    }

    /// Standard normal via Box-Muller.
    pub fn next_normal(&mut self) -> f64 {
        // +1 keeps u1 strictly positive so ln never sees zero.
        let u1 = ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Index sampled with probability `weights[i] / sum(weights)`.
    ///
    /// Panics if `weights` is empty or sums to zero; callers validate first.
    pub fn weighted_choice(&mut self, weights: &[f64]) -> usize {
        let total: f64 = weights.iter().sum();
        assert!(total > 0.0, "weighted_choice requires positive total weight");
        let mut u = self.next_f64() * total;
        for (i, &w) in weights.iter().enumerate() {
            if u < w {
                return i;
            }
            u -= w;
        }
        weights.len() - 1
    }
}
