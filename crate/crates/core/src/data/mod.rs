//! Datasets, `L_p` distances, and brute-force nearest-neighbor ground truth.
//!
//! A [`Dataset`] is an immutable collection of `n` points in `d` dimensions,
//! stored either as a dense row-major matrix or as per-row sorted
//! `(index, value)` lists. Values are 32-bit floats (matching the on-disk
//! formats); all distance arithmetic accumulates in 64-bit.

mod io;

pub use io::{read_dataset, write_dataset, DataFormat};

use crate::error::Error;
use crate::Result;
use rayon::prelude::*;

/// Immutable collection of `n` points of dimensionality `d`.
#[derive(Debug, Clone)]
pub struct Dataset {
    n: usize,
    d: usize,
    storage: Storage,
    id: Option<String>,
}

#[derive(Debug, Clone)]
enum Storage {
    /// Row-major `n * d` values.
    Dense(Vec<f32>),
    /// Per-row strictly increasing `(index, value)` pairs.
    Sparse(Vec<Vec<(u32, f32)>>),
}

/// Borrowed view of one point.
#[derive(Debug, Clone, Copy)]
pub enum RowRef<'a> {
    Dense(&'a [f32]),
    Sparse(&'a [(u32, f32)]),
}

impl Dataset {
    /// Build a dense dataset from `n * d` row-major values.
    pub fn dense(d: usize, values: Vec<f32>) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidInput("d must be >= 1".into()));
        }
        if values.is_empty() || !values.len().is_multiple_of(d) {
            return Err(Error::InvalidInput(format!(
                "value count {} is not a positive multiple of d = {}",
                values.len(),
                d
            )));
        }
        Ok(Dataset {
            n: values.len() / d,
            d,
            storage: Storage::Dense(values),
            id: None,
        })
    }

    /// Build a dense dataset from equal-length rows.
    pub fn from_rows(rows: Vec<Vec<f32>>) -> Result<Self> {
        let d = rows.first().map(|r| r.len()).unwrap_or(0);
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidInput("rows have unequal lengths".into()));
        }
        Dataset::dense(d, rows.concat())
    }

    /// Build a sparse dataset; each row must have strictly increasing
    /// indices below `d`.
    pub fn sparse(d: usize, rows: Vec<Vec<(u32, f32)>>) -> Result<Self> {
        if d == 0 || rows.is_empty() {
            return Err(Error::InvalidInput("need n >= 1 and d >= 1".into()));
        }
        for (i, row) in rows.iter().enumerate() {
            let mut prev: Option<u32> = None;
            for &(j, _) in row {
                if j as usize >= d {
                    return Err(Error::InvalidInput(format!(
                        "row {i}: index {j} out of range for d = {d}"
                    )));
                }
                if let Some(p) = prev {
                    if j <= p {
                        return Err(Error::InvalidInput(format!(
                            "row {i}: indices not strictly increasing ({p} then {j})"
                        )));
                    }
                }
                prev = Some(j);
            }
        }
        Ok(Dataset {
            n: rows.len(),
            d,
            storage: Storage::Sparse(rows),
            id: None,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn id(&self) -> Option<&str> {
        self.id.as_deref()
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = Some(id.into());
        self
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.storage, Storage::Dense(_))
    }

    pub fn row(&self, i: usize) -> RowRef<'_> {
        match &self.storage {
            Storage::Dense(v) => RowRef::Dense(&v[i * self.d..(i + 1) * self.d]),
            Storage::Sparse(rows) => RowRef::Sparse(&rows[i]),
        }
    }

    /// Write row `i` into `buf` as f64 (zero-filled for absent indices).
    pub fn fill_row_f64(&self, i: usize, buf: &mut [f64]) {
        assert_eq!(buf.len(), self.d);
        match self.row(i) {
            RowRef::Dense(vals) => {
                for (b, &v) in buf.iter_mut().zip(vals) {
                    *b = v as f64;
                }
            }
            RowRef::Sparse(pairs) => {
                buf.fill(0.0);
                for &(j, v) in pairs {
                    buf[j as usize] = v as f64;
                }
            }
        }
    }

    /// Fraction of nonzero stored entries.
    pub fn nonzero_fraction(&self) -> f64 {
        let nnz: usize = match &self.storage {
            Storage::Dense(v) => v.iter().filter(|x| **x != 0.0).count(),
            Storage::Sparse(rows) => rows.iter().map(|r| r.len()).sum(),
        };
        nnz as f64 / (self.n * self.d) as f64
    }

    /// Copy of this dataset in dense storage.
    pub fn to_dense(&self) -> Dataset {
        match &self.storage {
            Storage::Dense(_) => self.clone(),
            Storage::Sparse(rows) => {
                let mut values = vec![0.0f32; self.n * self.d];
                for (i, row) in rows.iter().enumerate() {
                    for &(j, v) in row {
                        values[i * self.d + j as usize] = v;
                    }
                }
                Dataset {
                    n: self.n,
                    d: self.d,
                    storage: Storage::Dense(values),
                    id: self.id.clone(),
                }
            }
        }
    }

    /// Copy of this dataset in sparse storage (zeros dropped).
    pub fn to_sparse(&self) -> Dataset {
        match &self.storage {
            Storage::Sparse(_) => self.clone(),
            Storage::Dense(values) => {
                let rows = (0..self.n)
                    .map(|i| {
                        values[i * self.d..(i + 1) * self.d]
                            .iter()
                            .enumerate()
                            .filter(|(_, v)| **v != 0.0)
                            .map(|(j, &v)| (j as u32, v))
                            .collect()
                    })
                    .collect();
                Dataset {
                    n: self.n,
                    d: self.d,
                    storage: Storage::Sparse(rows),
                    id: self.id.clone(),
                }
            }
        }
    }

    /// New dataset holding the selected rows, in order.
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        if indices.is_empty() {
            return Err(Error::InvalidInput("subset needs at least one row".into()));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.n) {
            return Err(Error::InvalidInput(format!(
                "subset index {bad} out of range for n = {}",
                self.n
            )));
        }
        let storage = match &self.storage {
            Storage::Dense(v) => Storage::Dense(
                indices
                    .iter()
                    .flat_map(|&i| v[i * self.d..(i + 1) * self.d].iter().copied())
                    .collect(),
            ),
            Storage::Sparse(rows) => {
                Storage::Sparse(indices.iter().map(|&i| rows[i].clone()).collect())
            }
        };
        Ok(Dataset {
            n: indices.len(),
            d: self.d,
            storage,
            id: self.id.clone(),
        })
    }
}

/// `L_p` distance parameter; `p > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metric {
    p: f64,
}

impl Metric {
    pub fn new(p: f64) -> Result<Self> {
        if !(p > 0.0) || !p.is_finite() {
            return Err(Error::NonpositiveNorm(p));
        }
        Ok(Metric { p })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// `(sum_j |x_j - y_j|^p)^(1/p)` between two rows of equal
    /// dimensionality.
    pub fn distance(&self, x: RowRef<'_>, y: RowRef<'_>) -> f64 {
        finish(self.distance_pow(x, y), self.p)
    }

    /// `sum_j |x_j - y_j|^p` (the p-th power of the distance).
    pub fn distance_pow(&self, x: RowRef<'_>, y: RowRef<'_>) -> f64 {
        row_distance_pow(x, y, self.p)
    }
}

/// `|diff|^p` with fast paths for the common norms.
#[inline]
pub(crate) fn pow_term(diff: f64, p: f64) -> f64 {
    if p == 1.0 {
        diff.abs()
    } else if p == 2.0 {
        diff * diff
    } else {
        diff.abs().powf(p)
    }
}

#[inline]
fn finish(sum_pow: f64, p: f64) -> f64 {
    if p == 1.0 {
        sum_pow
    } else if p == 2.0 {
        sum_pow.sqrt()
    } else {
        sum_pow.powf(1.0 / p)
    }
}

fn row_distance_pow(x: RowRef<'_>, y: RowRef<'_>, p: f64) -> f64 {
    match (x, y) {
        (RowRef::Dense(a), RowRef::Dense(b)) => {
            debug_assert_eq!(a.len(), b.len());
            if p == 1.0 {
                a.iter()
                    .zip(b)
                    .map(|(&u, &v)| (u as f64 - v as f64).abs())
                    .sum()
            } else if p == 2.0 {
                a.iter()
                    .zip(b)
                    .map(|(&u, &v)| {
                        let t = u as f64 - v as f64;
                        t * t
                    })
                    .sum()
            } else {
                a.iter()
                    .zip(b)
                    .map(|(&u, &v)| pow_term(u as f64 - v as f64, p))
                    .sum()
            }
        }
        (RowRef::Sparse(a), RowRef::Sparse(b)) => {
            let mut sum = 0.0;
            let (mut i, mut j) = (0, 0);
            while i < a.len() && j < b.len() {
                let (ia, va) = a[i];
                let (ib, vb) = b[j];
                match ia.cmp(&ib) {
                    std::cmp::Ordering::Less => {
                        sum += pow_term(va as f64, p);
                        i += 1;
                    }
                    std::cmp::Ordering::Greater => {
                        sum += pow_term(vb as f64, p);
                        j += 1;
                    }
                    std::cmp::Ordering::Equal => {
                        sum += pow_term(va as f64 - vb as f64, p);
                        i += 1;
                        j += 1;
                    }
                }
            }
            for &(_, v) in &a[i..] {
                sum += pow_term(v as f64, p);
            }
            for &(_, v) in &b[j..] {
                sum += pow_term(v as f64, p);
            }
            sum
        }
        (RowRef::Dense(a), RowRef::Sparse(b)) | (RowRef::Sparse(b), RowRef::Dense(a)) => {
            let mut sum = 0.0;
            let mut cursor = 0;
            for (j, &v) in a.iter().enumerate() {
                let other = if cursor < b.len() && b[cursor].0 as usize == j {
                    let val = b[cursor].1;
                    cursor += 1;
                    val
                } else {
                    0.0
                };
                sum += pow_term(v as f64 - other as f64, p);
            }
            sum
        }
    }
}

/// Dot product of a dense weight vector with a row.
pub fn dot_row(w: &[f64], row: RowRef<'_>) -> f64 {
    match row {
        RowRef::Dense(vals) => {
            debug_assert_eq!(w.len(), vals.len());
            w.iter().zip(vals).map(|(&a, &b)| a * b as f64).sum()
        }
        RowRef::Sparse(pairs) => pairs.iter().map(|&(j, v)| w[j as usize] * v as f64).sum(),
    }
}

/// `L_p` distance between two plain points.
pub fn lp_distance(x: &[f64], y: &[f64], p: f64) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let metric = Metric::new(p)?;
    let sum: f64 = x.iter().zip(y).map(|(&a, &b)| pow_term(a - b, metric.p)).sum();
    Ok(finish(sum, metric.p))
}

/// Neighbors sorted ascending by distance, ties broken by ascending index.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborList {
    /// `(point index, distance)` pairs.
    pub entries: Vec<(usize, f64)>,
}

impl NeighborList {
    /// Distance of the k-th entry (1-based).
    pub fn kth_distance(&self, k: usize) -> f64 {
        self.entries[k - 1].1
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().map(|e| e.0)
    }
}

/// Exact k nearest neighbors of `q` in `data` under `L_p`.
///
/// Does not exclude `q` itself if it happens to be a database point; callers
/// that query with database members must handle the self-match.
pub fn brute_force_knn(data: &Dataset, q: RowRef<'_>, k: usize, p: f64) -> Result<NeighborList> {
    let metric = Metric::new(p)?;
    if k == 0 || k > data.n() {
        return Err(Error::KOutOfRange { k, n: data.n() });
    }
    if let RowRef::Dense(vals) = q {
        if vals.len() != data.dim() {
            return Err(Error::DimensionMismatch {
                left: vals.len(),
                right: data.dim(),
            });
        }
    }

    let mut scored: Vec<(f64, usize)> = (0..data.n())
        .into_par_iter()
        .map(|i| (metric.distance_pow(data.row(i), q), i))
        .collect();

    let cmp = |a: &(f64, usize), b: &(f64, usize)| {
        a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1))
    };
    if k < scored.len() {
        scored.select_nth_unstable_by(k - 1, cmp);
        scored.truncate(k);
    }
    scored.sort_unstable_by(cmp);

    Ok(NeighborList {
        entries: scored
            .into_iter()
            .map(|(dp, i)| (i, finish(dp, metric.p)))
            .collect(),
    })
}

/// Mean distance from `q` to every database point, and the k-th nearest
/// distance, in one scan. Used by the contrast estimators.
pub(crate) fn mean_and_kth_distance(
    data: &Dataset,
    q: RowRef<'_>,
    k: usize,
    metric: Metric,
    exclude_one_zero: bool,
) -> Result<(f64, f64)> {
    let mut dists: Vec<f64> = (0..data.n())
        .into_par_iter()
        .map(|i| finish(metric.distance_pow(data.row(i), q), metric.p()))
        .collect();
    if exclude_one_zero {
        if let Some(pos) = dists.iter().position(|&d| d == 0.0) {
            dists.swap_remove(pos);
        }
    }
    if k == 0 || k > dists.len() {
        return Err(Error::KOutOfRange { k, n: dists.len() });
    }
    let mean = dists.iter().sum::<f64>() / dists.len() as f64;
    let (_, kth, _) = dists.select_nth_unstable_by(k - 1, |a, b| a.partial_cmp(b).unwrap());
    Ok((mean, *kth))
}
