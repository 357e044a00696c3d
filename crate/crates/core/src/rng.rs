//! Seeded, counter-based random number generation.
//!
//! Everything random in this crate derives from [`CellRng`]: each draw is a
//! pure function of `(seed, stream, row, col)`, so parallel generation over
//! rows is order-independent and a given seed reproduces the same values on
//! any thread count. [`SeqRng`] is a small sequential generator for the few
//! places (shuffles, subsampling) where a stream is more natural than a grid.

/// SplitMix64 finalizer. Good avalanche behavior for hashing small keys.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;
const ROW_SALT: u64 = 0xd1b5_4a32_d192_ed03;
const COL_SALT: u64 = 0x8cb9_2ba7_2f3d_8dd7;

/// Counter-based generator: draws are addressed by `(row, col)` cells.
#[derive(Debug, Clone, Copy)]
pub struct CellRng {
    key: u64,
}

impl CellRng {
    /// Derive a generator from a user seed and a stream tag. Distinct
    /// streams from the same seed are independent for practical purposes.
    pub fn new(seed: u64, stream: u64) -> Self {
        let key = mix64(mix64(seed ^ GOLDEN).wrapping_add(mix64(stream ^ COL_SALT)));
        CellRng { key }
    }

    #[inline]
    pub fn cell_u64(&self, row: u64, col: u64) -> u64 {
        let mut h = self.key ^ row.wrapping_mul(ROW_SALT);
        h = mix64(h);
        h ^= col.wrapping_mul(COL_SALT);
        mix64(h)
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn cell_unit(&self, row: u64, col: u64) -> f64 {
        (self.cell_u64(row, col) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in the open interval `(0, 1)`; safe for inverse transforms.
    #[inline]
    pub fn cell_open(&self, row: u64, col: u64) -> f64 {
        ((self.cell_u64(row, col) >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal via Box-Muller on two derived uniforms.
    #[inline]
    pub fn cell_normal(&self, row: u64, col: u64) -> f64 {
        let u1 = self.cell_open(row, 2 * col);
        let u2 = self.cell_unit(row, 2 * col + 1);
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Standard Cauchy via the tangent transform.
    #[inline]
    pub fn cell_cauchy(&self, row: u64, col: u64) -> f64 {
        (std::f64::consts::PI * (self.cell_open(row, col) - 0.5)).tan()
    }
}

/// Sequential SplitMix64 stream.
#[derive(Debug, Clone)]
pub struct SeqRng {
    state: u64,
}

impl SeqRng {
    pub fn new(seed: u64) -> Self {
        SeqRng {
            state: seed ^ GOLDEN,
        }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix64(self.state)
    }

    #[inline]
    pub fn next_unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[0, bound)` by multiply-shift; bias is negligible for
    /// bounds far below 2^64.
    #[inline]
    pub fn next_below(&mut self, bound: u64) -> u64 {
        ((self.next_u64() as u128 * bound as u128) >> 64) as u64
    }

    /// First `take` elements of a seeded Fisher-Yates shuffle of `0..n`.
    pub fn sample_indices(&mut self, n: usize, take: usize) -> Vec<usize> {
        let take = take.min(n);
        let mut idx: Vec<usize> = (0..n).collect();
        for i in 0..take {
            let j = i + self.next_below((n - i) as u64) as usize;
            idx.swap(i, j);
        }
        idx.truncate(take);
        idx
    }
}
