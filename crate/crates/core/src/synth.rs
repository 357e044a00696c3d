//! Seeded synthetic dataset generators.
//!
//! Every cell of a generated matrix is a pure function of
//! `(seed, row, column)`, so generation parallelizes over rows without
//! affecting the output. Queries for contrast experiments are conventionally
//! drawn from the same spec with `seed + 1`, making them i.i.d. with the
//! database.

use crate::data::Dataset;
use crate::error::Error;
use crate::linalg::{normal_quantile, SymMatrix};
use crate::rng::CellRng;
use crate::Result;
use rayon::prelude::*;

/// Marginal distribution of nonzero values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ValueDistribution {
    #[default]
    Uniform01,
    Gaussian,
}

impl ValueDistribution {
    pub fn as_str(&self) -> &'static str {
        match self {
            ValueDistribution::Uniform01 => "uniform01",
            ValueDistribution::Gaussian => "gaussian",
        }
    }

    /// Inverse-transform sampler from a uniform(0,1) draw.
    #[inline]
    pub fn sample(&self, u: f64) -> f64 {
        match self {
            ValueDistribution::Uniform01 => u,
            ValueDistribution::Gaussian => normal_quantile(u),
        }
    }
}

impl std::str::FromStr for ValueDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform01" => Ok(ValueDistribution::Uniform01),
            "gaussian" => Ok(ValueDistribution::Gaussian),
            other => Err(Error::InvalidInput(format!(
                "unknown distribution {other:?} (expected uniform01 or gaussian)"
            ))),
        }
    }
}

/// Shape, sparsity, distribution, and seed of a synthetic dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthSpec {
    pub n: usize,
    pub d: usize,
    /// Probability that any coordinate is nonzero; in (0, 1].
    pub s: f64,
    pub distribution: ValueDistribution,
    pub seed: u64,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.d == 0 {
            return Err(Error::InvalidInput("need n >= 1 and d >= 1".into()));
        }
        if !(self.s > 0.0 && self.s <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "sparsity {} outside (0, 1]",
                self.s
            )));
        }
        Ok(())
    }

    /// Same spec with the conventional query seed (`seed + 1`).
    pub fn queries(&self, n: usize) -> SynthSpec {
        SynthSpec {
            n,
            seed: self.seed + 1,
            ..*self
        }
    }
}

const PRESENCE_STREAM: u64 = 0x11;
const VALUE_STREAM: u64 = 0x22;
const BASE_STREAM: u64 = 0x33;
const NOISE_STREAM: u64 = 0x44;

/// Generate i.i.d. data: each coordinate is nonzero with probability `s`,
/// nonzero values drawn from the spec distribution. Stored sparse when
/// `s < 0.5`, dense otherwise.
pub fn gen_sparse_iid(spec: &SynthSpec) -> Result<Dataset> {
    spec.validate()?;
    let presence = CellRng::new(spec.seed, PRESENCE_STREAM);
    let values = CellRng::new(spec.seed, VALUE_STREAM);
    let dist = spec.distribution;

    if spec.s < 0.5 {
        let rows: Vec<Vec<(u32, f32)>> = (0..spec.n)
            .into_par_iter()
            .map(|i| {
                (0..spec.d)
                    .filter(|&j| presence.cell_unit(i as u64, j as u64) < spec.s)
                    .map(|j| {
                        let v = dist.sample(values.cell_open(i as u64, j as u64));
                        (j as u32, v as f32)
                    })
                    .collect()
            })
            .collect();
        Dataset::sparse(spec.d, rows)
    } else {
        let mut flat = vec![0.0f32; spec.n * spec.d];
        flat.par_chunks_mut(spec.d).enumerate().for_each(|(i, row)| {
            for (j, slot) in row.iter_mut().enumerate() {
                if spec.s >= 1.0 || presence.cell_unit(i as u64, j as u64) < spec.s {
                    *slot = dist.sample(values.cell_open(i as u64, j as u64)) as f32;
                }
            }
        });
        Dataset::dense(spec.d, flat)
    }
}

/// Database/query pair whose query-to-nearest-neighbor displacements have a
/// chosen diagonal covariance.
#[derive(Debug)]
pub struct AnisoPairs {
    pub database: Dataset,
    pub queries: Dataset,
    /// Fraction of probed queries whose nearest neighbor is not the paired
    /// base point (estimated on a subsample).
    pub nn_mismatch: f64,
    /// Set when `nn_mismatch > 0.2`: the noise overwhelms point spacing and
    /// the displacement covariance no longer reflects `noise_cov_diag`.
    pub noise_warning: bool,
}

/// Queries probed when estimating the nearest-neighbor mismatch fraction.
const MISMATCH_PROBES: usize = 200;

/// Standard-normal base points plus per-query noise with the given diagonal
/// covariance: query `i` is `base_i + eps_i`, `eps_i ~ N(0, diag)`.
pub fn gen_aniso_pairs(
    n: usize,
    d: usize,
    noise_cov_diag: &[f64],
    seed: u64,
) -> Result<AnisoPairs> {
    if d < 2 || n == 0 {
        return Err(Error::InvalidInput("need n >= 1 and d >= 2".into()));
    }
    if noise_cov_diag.len() != d {
        return Err(Error::DimensionMismatch {
            left: noise_cov_diag.len(),
            right: d,
        });
    }
    if noise_cov_diag.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::InvalidInput(
            "noise covariance diagonal must be positive".into(),
        ));
    }
    let noise_std: Vec<f64> = noise_cov_diag.iter().map(|v| v.sqrt()).collect();
    let base_rng = CellRng::new(seed, BASE_STREAM);
    let noise_rng = CellRng::new(seed, NOISE_STREAM);

    let mut base = vec![0.0f32; n * d];
    let mut noisy = vec![0.0f32; n * d];
    base.par_chunks_mut(d)
        .zip(noisy.par_chunks_mut(d))
        .enumerate()
        .for_each(|(i, (brow, qrow))| {
            for j in 0..d {
                let b = base_rng.cell_normal(i as u64, j as u64);
                let e = noise_rng.cell_normal(i as u64, j as u64) * noise_std[j];
                brow[j] = b as f32;
                qrow[j] = (b + e) as f32;
            }
        });
    let database = Dataset::dense(d, base)?;
    let queries = Dataset::dense(d, noisy)?;

    // Probe a subsample of queries: is the paired base point still the NN?
    let probes: Vec<usize> = if n <= MISMATCH_PROBES {
        (0..n).collect()
    } else {
        let stride = n / MISMATCH_PROBES;
        (0..MISMATCH_PROBES).map(|t| t * stride).collect()
    };
    let mismatches: usize = probes
        .par_iter()
        .map(|&qi| {
            let nn = crate::data::brute_force_knn(&database, queries.row(qi), 1, 2.0)
                .expect("probe knn");
            usize::from(nn.entries[0].0 != qi)
        })
        .sum();
    let nn_mismatch = mismatches as f64 / probes.len() as f64;
    Ok(AnisoPairs {
        database,
        queries,
        nn_mismatch,
        noise_warning: nn_mismatch > 0.2,
    })
}

/// Sample covariance of the paired displacements `q_i - x_i` (construction
/// truth, unlike the brute-force nearest-neighbor estimate in the hashing
/// module).
pub fn pair_displacement_covariance(pairs: &AnisoPairs) -> SymMatrix {
    let d = pairs.database.dim();
    let n = pairs.database.n();
    let mut acc = vec![0.0f64; d * d];
    let mut bx = vec![0.0f64; d];
    let mut qx = vec![0.0f64; d];
    for i in 0..n {
        pairs.database.fill_row_f64(i, &mut bx);
        pairs.queries.fill_row_f64(i, &mut qx);
        for a in 0..d {
            let va = qx[a] - bx[a];
            for b in a..d {
                acc[a * d + b] += va * (qx[b] - bx[b]);
            }
        }
    }
    let inv = 1.0 / n as f64;
    SymMatrix::from_fn(d, |a, b| acc[a * d + b] * inv)
}
