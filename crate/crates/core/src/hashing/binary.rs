//! Linear binary codes: `bit_j(x) = sgn(w_j . x + b_j)`, with `sgn(0) = 1`.
//!
//! Projections come from PCA (top covariance eigenvectors), from MRC
//! (generalized eigenvectors of the data covariance against the
//! nearest-neighbor displacement covariance `S_NN`), or from random Gaussian
//! directions. Thresholds center every hyperplane on the data mean. Codes
//! are packed 64 bits to a word and ranked by hamming distance.

use crate::data::{dot_row, Dataset, RowRef};
use crate::error::Error;
use crate::linalg::{covariance, gen_eig_topk, mean_vector, sym_eig_topk, Matrix, SymMatrix};
use crate::rng::CellRng;
use crate::Result;
use rayon::prelude::*;

const PCA_COV_SEED: u64 = 0x9ca;
const PAD_STREAM: u64 = 0x9ad;
const RANDOM_PROJ_STREAM: u64 = 0x7a9;

/// How a [`BinaryCodeIndex`] was trained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HashTrainer {
    Pca,
    Mrc,
    Random,
}

impl HashTrainer {
    pub fn as_str(&self) -> &'static str {
        match self {
            HashTrainer::Pca => "pca",
            HashTrainer::Mrc => "mrc",
            HashTrainer::Random => "random",
        }
    }
}

/// Binary-code index: projections, thresholds, and the packed codes of every
/// database point.
#[derive(Debug, Clone)]
pub struct BinaryCodeIndex {
    projections: Matrix,
    thresholds: Vec<f64>,
    codes: Vec<u64>,
    n: usize,
    bits: usize,
    words: usize,
    trainer: HashTrainer,
    /// Columns that had to be filled with random orthonormal directions
    /// because the training matrix ran out of rank.
    pub padded_columns: usize,
}

impl BinaryCodeIndex {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn trainer(&self) -> HashTrainer {
        self.trainer
    }

    pub fn projections(&self) -> &Matrix {
        &self.projections
    }

    /// Encode a point with the trained `(W, b)`; bit 1 means nonnegative.
    pub fn encode(&self, x: RowRef<'_>) -> Vec<u64> {
        let mut words = vec![0u64; self.words];
        for j in 0..self.bits {
            let v = dot_row(self.projections.col(j), x) + self.thresholds[j];
            if v >= 0.0 {
                words[j / 64] |= 1u64 << (j % 64);
            }
        }
        words
    }

    pub fn code_of(&self, i: usize) -> &[u64] {
        &self.codes[i * self.words..(i + 1) * self.words]
    }

    fn hamming_to(&self, code: &[u64], i: usize) -> u32 {
        self.code_of(i)
            .iter()
            .zip(code)
            .map(|(a, b)| (a ^ b).count_ones())
            .sum()
    }
}

fn build_index(
    data: &Dataset,
    projections: Matrix,
    mean: &[f64],
    trainer: HashTrainer,
    padded_columns: usize,
) -> BinaryCodeIndex {
    let bits = projections.cols();
    let words = bits.div_ceil(64);
    let thresholds: Vec<f64> = (0..bits)
        .map(|j| {
            -projections
                .col(j)
                .iter()
                .zip(mean)
                .map(|(w, m)| w * m)
                .sum::<f64>()
        })
        .collect();
    let mut index = BinaryCodeIndex {
        projections,
        thresholds,
        codes: Vec::new(),
        n: data.n(),
        bits,
        words,
        trainer,
        padded_columns,
    };
    let mut codes = vec![0u64; data.n() * words];
    codes
        .par_chunks_mut(words)
        .enumerate()
        .for_each(|(i, out)| {
            out.copy_from_slice(&index.encode(data.row(i)));
        });
    index.codes = codes;
    index
}

/// PCA hashing: projections are the top-k eigenvectors of the centered
/// covariance, thresholds sit at the data mean. If the covariance has rank
/// below `k`, the remaining columns are random orthonormal completions and
/// `padded_columns` records how many.
pub fn train_pca_hash(data: &Dataset, k: usize) -> Result<BinaryCodeIndex> {
    if k == 0 || k > data.dim() {
        return Err(Error::InvalidInput(format!(
            "bits k = {k} outside [1, d = {}]",
            data.dim()
        )));
    }
    let d = data.dim();
    let mean = mean_vector(data);
    let cov = covariance(data, true, None, PCA_COV_SEED)?;
    let (vals, vecs) = sym_eig_topk(&cov, k)?;

    let scale = vals[0].max(0.0);
    let rank = vals
        .iter()
        .take_while(|&&v| v > scale * 1e-10 && v > 0.0)
        .count();
    let mut cols: Vec<Vec<f64>> = (0..rank).map(|j| vecs.col(j).to_vec()).collect();
    if rank < k {
        if rank == 0 {
            return Err(Error::Degenerate(
                "data has zero variance in every direction".into(),
            ));
        }
        pad_orthonormal(&mut cols, k, d);
    }
    Ok(build_index(
        data,
        Matrix::from_cols(d, cols),
        &mean,
        HashTrainer::Pca,
        k - rank,
    ))
}

/// MRC hashing: projections maximize the ratio of data variance to
/// nearest-neighbor displacement variance, via the generalized eigenproblem
/// of the centered covariance against `s_nn` (ridged by
/// `ridge * tr(s_nn)/d`).
pub fn train_mrc_hash(
    data: &Dataset,
    s_nn: &SymMatrix,
    k: usize,
    ridge: f64,
) -> Result<BinaryCodeIndex> {
    if k == 0 || k > data.dim() {
        return Err(Error::InvalidInput(format!(
            "bits k = {k} outside [1, d = {}]",
            data.dim()
        )));
    }
    if s_nn.order() != data.dim() {
        return Err(Error::DimensionMismatch {
            left: s_nn.order(),
            right: data.dim(),
        });
    }
    let mean = mean_vector(data);
    let cov = covariance(data, true, None, PCA_COV_SEED)?;
    let proj = gen_eig_topk(&cov, s_nn, k, ridge)?;
    Ok(build_index(data, proj, &mean, HashTrainer::Mrc, 0))
}

/// Random-projection hashing: seeded Gaussian directions, mean thresholds.
pub fn train_random_hash(data: &Dataset, k: usize, seed: u64) -> Result<BinaryCodeIndex> {
    if k == 0 {
        return Err(Error::InvalidInput("need at least one bit".into()));
    }
    let d = data.dim();
    let rng = CellRng::new(seed, RANDOM_PROJ_STREAM);
    let cols: Vec<Vec<f64>> = (0..k)
        .map(|j| (0..d).map(|c| rng.cell_normal(j as u64, c as u64)).collect())
        .collect();
    let mean = mean_vector(data);
    Ok(build_index(
        data,
        Matrix::from_cols(d, cols),
        &mean,
        HashTrainer::Random,
        0,
    ))
}

/// Extend `cols` to `k` columns with seeded random directions kept
/// orthonormal to everything already present.
fn pad_orthonormal(cols: &mut Vec<Vec<f64>>, k: usize, d: usize) {
    let rng = CellRng::new(0x9ad5eed, PAD_STREAM);
    let mut attempt = 0u64;
    while cols.len() < k {
        let mut v: Vec<f64> = (0..d)
            .map(|c| rng.cell_normal(attempt, c as u64))
            .collect();
        attempt += 1;
        for existing in cols.iter() {
            let dot: f64 = v.iter().zip(existing).map(|(a, b)| a * b).sum();
            for (vi, ei) in v.iter_mut().zip(existing) {
                *vi -= dot * ei;
            }
        }
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-8 {
            continue;
        }
        for x in &mut v {
            *x /= norm;
        }
        cols.push(v);
    }
}

/// The `m` indices with the smallest hamming distance to `q`'s code, ties
/// broken by ascending index.
pub fn hamming_rank(index: &BinaryCodeIndex, q: RowRef<'_>, m: usize) -> Vec<(usize, u32)> {
    assert!(m <= index.n(), "m = {m} exceeds n = {}", index.n());
    let code = index.encode(q);
    let mut scored: Vec<(usize, u32)> = (0..index.n())
        .map(|i| (i, index.hamming_to(&code, i)))
        .collect();
    scored.sort_unstable_by(|a, b| a.1.cmp(&b.1).then(a.0.cmp(&b.0)));
    scored.truncate(m);
    scored
}

/// All indices within hamming distance `r` of `q`'s code, sorted by
/// `(distance, index)`.
pub fn hamming_within_radius(index: &BinaryCodeIndex, q: RowRef<'_>, r: u32) -> Vec<(usize, u32)> {
    let code = index.encode(q);
    let mut out: Vec<(usize, u32)> = (0..index.n())
        .filter_map(|i| {
            let d = index.hamming_to(&code, i);
            (d <= r).then_some((i, d))
        })
        .collect();
    out.sort_unstable_by(|a, b| a.1.cmp(&b.1).then(a.0.cmp(&b.0)));
    out
}
