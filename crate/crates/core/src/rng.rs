//! Counter-based random numbers.
//!
//! The generator is SplitMix64 used in counter mode: the `i`-th 64-bit word
//! of stream `key` is
//!
//! ```text
//! z  = key + (i + 1) * 0x9E3779B97F4A7C15          (wrapping)
//! z  = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9        (wrapping)
//! z  = (z ^ (z >> 27)) * 0x94D049BB133111EB        (wrapping)
//! out = z ^ (z >> 31)
//! ```
//!
//! Uniform doubles are `(out >> 11) * 2^-53`. Standard normals use
//! Box-Muller on two consecutive uniforms `u1, u2`:
//! `sqrt(-2 ln(1 - u1)) * cos(2π u2)`. Sub-streams (one per trial) use key
//! `mix(seed ^ mix(trial + 1))` where `mix` is the three-line finaliser
//! above applied to its argument. Ports in other languages reproduce every
//! ensemble from these few lines.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finaliser.
pub fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        CounterRng { key: seed, counter: 0 }
    }

    /// Independent stream for trial `trial` of an ensemble seeded by `seed`.
    pub fn for_trial(seed: u64, trial: u64) -> Self {
        CounterRng::new(mix(seed ^ mix(trial.wrapping_add(1))))
    }

    /// The word at an arbitrary position, without advancing.
    pub fn word_at(&self, index: u64) -> u64 {
        mix(self.key.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN)))
    }

    pub fn next_u64(&mut self) -> u64 {
        let w = self.word_at(self.counter);
        self.counter += 1;
        w
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform integer in `lo..=hi`.
    pub fn int_in(&mut self, lo: i64, hi: i64) -> i64 {
        assert!(hi >= lo);
        let span = (hi - lo) as u64 + 1;
        lo + (self.next_u64() % span) as i64
    }

    pub fn normal(&mut self) -> f64 {
        let u1 = self.uniform();
        let u2 = self.uniform();
        (-2.0 * (1.0 - u1).ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}
