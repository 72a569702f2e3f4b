//! Counter-based deterministic random streams.
//!
//! Every coefficient draw is a pure function of `(base seed, replicate id,
//! stream id, counter)`, so replicates can be generated in any order — or in
//! parallel — without changing a single bit of output. The generator is a
//! SplitMix64-style avalanche applied to a keyed counter; it is fast, has no
//! lockup states and is stable across platforms. Not cryptographic.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A keyed counter stream. `new` derives the key from up to three stream
/// identifiers; each call to `next_u64` advances the counter.
#[derive(Clone, Debug)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

impl CounterRng {
    pub fn new(seed: u64, stream: &[u64]) -> Self {
        let mut key = mix64(seed ^ GOLDEN);
        for (i, s) in stream.iter().enumerate() {
            key = mix64(key ^ s.wrapping_mul(GOLDEN.wrapping_add(i as u64 * 2 + 1)));
        }
        Self { key, counter: 0 }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let out = mix64(self.key ^ self.counter.wrapping_mul(GOLDEN));
        self.counter = self.counter.wrapping_add(1);
        out
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `(0, 1]`; safe as a logarithm argument.
    #[inline]
    pub fn next_f64_open(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 1.0) * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal via Box–Muller (two counter slots per draw).
    pub fn next_gaussian(&mut self) -> f64 {
        let u1 = self.next_f64_open();
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Uniform on `[lo, hi)`.
    pub fn next_uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Gamma(shape, 1) by Marsaglia–Tsang squeeze, with the boost
    /// `G(a) = G(a+1) * U^(1/a)` for shape < 1. Rejection only consumes
    /// entropy from this stream, so determinism is preserved.
    pub fn next_gamma(&mut self, shape: f64) -> f64 {
        assert!(shape > 0.0, "gamma shape must be positive");
        if shape < 1.0 {
            let boost = self.next_f64_open().powf(1.0 / shape);
            return self.next_gamma(shape + 1.0) * boost;
        }
        let d = shape - 1.0 / 3.0;
        let c = 1.0 / (9.0 * d).sqrt();
        loop {
            let x = self.next_gaussian();
            let v = (1.0 + c * x).powi(3);
            if v <= 0.0 {
                continue;
            }
            let u = self.next_f64_open();
            if u.ln() < 0.5 * x * x + d - d * v + d * v.ln() {
                return d * v;
            }
        }
    }

    /// Draw from the density proportional to `exp(-|c|^p / p)` (p > 1).
    /// `|c|^p / p` is Gamma(1/p, 1) distributed, so `|c| = (p g)^(1/p)`.
    pub fn next_symmetric_weibull(&mut self, p: f64) -> f64 {
        assert!(p > 1.0, "symmetric-weibull exponent must exceed 1");
        let sign = if self.next_u64() & 1 == 0 { 1.0 } else { -1.0 };
        let g = self.next_gamma(1.0 / p);
        sign * (p * g).powf(1.0 / p)
    }
}
