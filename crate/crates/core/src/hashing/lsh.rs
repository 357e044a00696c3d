//! Multi-table p-stable LSH.
//!
//! Each table hashes a point with `k` functions `h(x) = floor((w.x + b)/t)`,
//! `w` drawn from a p-stable distribution (Gaussian for L2, Cauchy for L1),
//! `b` uniform in `[0, t)`. The `k` integers are mixed into one 64-bit
//! bucket key; mixer collisions only ever add candidates. Tables are a pure
//! function of `(seed, table index)`, so an index built with more tables
//! extends one built with fewer.

use std::collections::HashMap;

use crate::data::{dot_row, Dataset, RowRef};
use crate::error::Error;
use crate::rng::{mix64, CellRng, SeqRng};
use crate::Result;
use rayon::prelude::*;

/// Rows sampled when estimating the automatic bucket width.
const WIDTH_SAMPLE_CAP: usize = 10_000;

const PROJECTION_STREAM: u64 = 0x15a;
const OFFSET_STREAM: u64 = 0x0ff;

/// Bucket width policy for [`lsh_build`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WidthSpec {
    /// Per table: the standard deviation of `w.x` over a seeded sample of
    /// at most 10^4 points, averaged over the table's `k` projections.
    Auto,
    /// The automatic width times a factor. `ScaledAuto(1.0)` equals `Auto`.
    ScaledAuto(f64),
    /// A fixed width shared by every table.
    Fixed(f64),
}

/// Sample `k` projection vectors of dimension `d` from the p-stable family:
/// standard normal entries for `p = 2`, standard Cauchy for `p = 1`.
pub fn sample_pstable_projections(
    d: usize,
    k: usize,
    p: f64,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    if d == 0 || k == 0 {
        return Err(Error::InvalidInput("need d >= 1 and k >= 1".into()));
    }
    let rng = CellRng::new(seed, PROJECTION_STREAM);
    let sample: fn(&CellRng, u64, u64) -> f64 = if p == 2.0 {
        |r, i, j| r.cell_normal(i, j)
    } else if p == 1.0 {
        |r, i, j| r.cell_cauchy(i, j)
    } else {
        return Err(Error::InvalidInput(format!(
            "p-stable sampling supports p in {{1, 2}}, got {p}"
        )));
    };
    Ok((0..k)
        .map(|j| (0..d).map(|c| sample(&rng, j as u64, c as u64)).collect())
        .collect())
}

/// `floor((w.x + b) / t)`; requires `t > 0` and `0 <= b < t`.
pub fn lsh_hash(x: RowRef<'_>, w: &[f64], b: f64, t: f64) -> Result<i64> {
    if !(t > 0.0) {
        return Err(Error::InvalidInput(format!("width t must be > 0, got {t}")));
    }
    if !(0.0..t).contains(&b) {
        return Err(Error::InvalidInput(format!(
            "offset b = {b} must lie in [0, t) with t = {t}"
        )));
    }
    Ok(((dot_row(w, x) + b) / t).floor() as i64)
}

#[derive(Debug, Clone)]
struct LshTable {
    projections: Vec<Vec<f64>>,
    offsets: Vec<f64>,
    width: f64,
    buckets: HashMap<u64, Vec<u32>>,
}

impl LshTable {
    fn key_of(&self, x: RowRef<'_>) -> u64 {
        let ints: Vec<i64> = self
            .projections
            .iter()
            .zip(&self.offsets)
            .map(|(w, &b)| ((dot_row(w, x) + b) / self.width).floor() as i64)
            .collect();
        mix_key(&ints)
    }
}

/// Fixed mixing hash combining the per-function integers into one bucket
/// key. Stable across runs and platforms.
fn mix_key(ints: &[i64]) -> u64 {
    let mut h = 0x243f_6a88_85a3_08d3u64;
    for (lane, &v) in ints.iter().enumerate() {
        h = mix64(h ^ (v as u64).wrapping_add((lane as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)));
    }
    h
}

/// Multi-table LSH index over a dataset.
#[derive(Debug, Clone)]
pub struct LshIndex {
    p: f64,
    bits: usize,
    d: usize,
    n: usize,
    tables: Vec<LshTable>,
}

impl LshIndex {
    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn tables(&self) -> usize {
        self.tables.len()
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Bucket widths per table (useful for reporting the auto choice).
    pub fn widths(&self) -> Vec<f64> {
        self.tables.iter().map(|t| t.width).collect()
    }

    /// Projection vectors of one table, in hash-function order.
    pub fn table_projections(&self, table: usize) -> &[Vec<f64>] {
        &self.tables[table].projections
    }

    /// Offsets of one table, in hash-function order.
    pub fn table_offsets(&self, table: usize) -> &[f64] {
        &self.tables[table].offsets
    }

    pub fn table_width(&self, table: usize) -> f64 {
        self.tables[table].width
    }

    /// Candidates of `q` in a single table's bucket.
    pub fn bucket_of(&self, q: RowRef<'_>, table: usize) -> &[u32] {
        let t = &self.tables[table];
        t.buckets
            .get(&t.key_of(q))
            .map(|v| v.as_slice())
            .unwrap_or(&[])
    }

    /// Union of bucket matches over the first `l` tables, deduplicated and
    /// sorted ascending.
    pub fn candidates_with_tables(&self, q: RowRef<'_>, l: usize) -> Vec<usize> {
        let mut out: Vec<usize> = (0..l.min(self.tables.len()))
            .flat_map(|t| self.bucket_of(q, t).iter().map(|&i| i as usize))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// Union of bucket matches over all tables, deduplicated and sorted.
pub fn lsh_query(index: &LshIndex, q: RowRef<'_>) -> Vec<usize> {
    index.candidates_with_tables(q, index.tables())
}

/// Build an LSH index with `bits` hash functions per table and `tables`
/// tables. Deterministic given the seed; tables extend under a larger
/// `tables` with the same seed.
pub fn lsh_build(
    data: &Dataset,
    bits: usize,
    tables: usize,
    p: f64,
    width: WidthSpec,
    seed: u64,
) -> Result<LshIndex> {
    if bits == 0 || tables == 0 {
        return Err(Error::InvalidInput(
            "need at least one hash function and one table".into(),
        ));
    }
    let n = data.n();
    let d = data.dim();

    let sample_rows: Vec<usize> = if n > WIDTH_SAMPLE_CAP {
        SeqRng::new(seed ^ 0x71d7).sample_indices(n, WIDTH_SAMPLE_CAP)
    } else {
        (0..n).collect()
    };

    let built: Vec<Result<LshTable>> = (0..tables)
        .into_par_iter()
        .map(|ti| {
            let table_seed = mix64(seed ^ (ti as u64).wrapping_mul(0x2545_f491_4f6c_dd1d));
            let projections = sample_pstable_projections(d, bits, p, table_seed)?;
            let tw = match width {
                WidthSpec::Fixed(t) => {
                    if !(t > 0.0) {
                        return Err(Error::InvalidInput(format!("fixed width {t} must be > 0")));
                    }
                    t
                }
                WidthSpec::Auto => auto_width(data, &projections, &sample_rows)?,
                WidthSpec::ScaledAuto(f) => {
                    if !(f > 0.0) {
                        return Err(Error::InvalidInput(format!("width scale {f} must be > 0")));
                    }
                    f * auto_width(data, &projections, &sample_rows)?
                }
            };
            let offset_rng = CellRng::new(table_seed, OFFSET_STREAM);
            let offsets: Vec<f64> = (0..bits)
                .map(|j| offset_rng.cell_unit(0, j as u64) * tw)
                .collect();

            let mut table = LshTable {
                projections,
                offsets,
                width: tw,
                buckets: HashMap::new(),
            };
            let keys: Vec<u64> = (0..n).map(|i| table.key_of(data.row(i))).collect();
            for (i, key) in keys.into_iter().enumerate() {
                table.buckets.entry(key).or_default().push(i as u32);
            }
            Ok(table)
        })
        .collect();

    let mut out = Vec::with_capacity(tables);
    for t in built {
        out.push(t?);
    }
    Ok(LshIndex {
        p,
        bits,
        d,
        n,
        tables: out,
    })
}

/// Mean, over the given projections, of the standard deviation of `w.x`
/// across the sampled rows.
fn auto_width(data: &Dataset, projections: &[Vec<f64>], rows: &[usize]) -> Result<f64> {
    let mut acc = 0.0f64;
    for w in projections {
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for &i in rows {
            let v = dot_row(w, data.row(i));
            sum += v;
            sumsq += v * v;
        }
        let m = rows.len() as f64;
        let mean = sum / m;
        acc += (sumsq / m - mean * mean).max(0.0).sqrt();
    }
    let width = acc / projections.len() as f64;
    if !(width > 0.0) {
        return Err(Error::Degenerate(
            "projected data has zero spread; cannot pick a bucket width".into(),
        ));
    }
    Ok(width)
}
