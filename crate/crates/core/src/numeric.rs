//! Small numeric helpers: compensated summation, seed derivation and
//! mixed-radix indexing over `[R]^n`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Neumaier-compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct Accumulator {
    sum: f64,
    compensation: f64,
}

impl Accumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Compensated sum of an iterator.
pub fn fsum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut acc = Accumulator::new();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

/// Compensated mean; `0.0` for an empty slice.
pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    fsum(values.iter().copied()) / values.len() as f64
}

/// SplitMix64 finalizer.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the seed for trial `index` from a master seed.
///
/// `derive_seed(s, i) = splitmix64(splitmix64(s) ^ i)`. Every Monte-Carlo
/// loop in the crate seeds trial `i` this way, so results do not depend on
/// how trials are scheduled across threads.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master) ^ index)
}

/// The crate-wide deterministic RNG.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `base^exp`, or `None` on overflow.
pub fn checked_pow(base: usize, exp: usize) -> Option<usize> {
    let mut out: usize = 1;
    for _ in 0..exp {
        out = out.checked_mul(base)?;
    }
    Some(out)
}

/// Writes the base-`r` digits of `index` into `digits`, most significant first.
pub fn decode_index(mut index: usize, r: usize, digits: &mut [usize]) {
    for d in digits.iter_mut().rev() {
        *d = index % r;
        index /= r;
    }
}

/// Inverse of [`decode_index`].
pub fn encode_index(digits: &[usize], r: usize) -> usize {
    digits.iter().fold(0, |acc, &d| acc * r + d)
}

/// Number of non-zero digits of `index` in base `r` over `n` positions.
pub fn digit_weight(mut index: usize, r: usize, n: usize) -> usize {
    let mut weight = 0;
    for _ in 0..n {
        if !index.is_multiple_of(r) {
            weight += 1;
        }
        index /= r;
    }
    weight
}

/// Binomial coefficient as a float (exact for the small arguments used here).
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Advances `digits` as a base-`r` odometer (last digit fastest).
/// Returns `false` after wrapping past the final tuple.
pub fn odometer_next(digits: &mut [usize], r: usize) -> bool {
    for d in digits.iter_mut().rev() {
        *d += 1;
        if *d < r {
            return true;
        }
        *d = 0;
    }
    false
}

/// A probability with its standard error (`0` for exact values).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self { value, stderr: 0.0 }
    }

    /// Empirical frequency with binomial standard error `sqrt(p(1-p)/trials)`.
    pub fn binomial(successes: u64, trials: u64) -> Self {
        let p = successes as f64 / trials as f64;
        Self {
            value: p,
            stderr: (p * (1.0 - p) / trials as f64).sqrt(),
        }
    }

    /// `|value - target| <= sigmas * stderr`, with a small absolute floor so
    /// that degenerate zero-variance estimates still compare.
    pub fn within_sigmas(&self, target: f64, sigmas: f64) -> bool {
        (self.value - target).abs() <= sigmas * self.stderr + 1e-12
    }
}
