//! Relative contrast: empirical measurement, closed-form prediction, and the
//! normalized variance that connects them.
//!
//! The relative contrast of a dataset for a query is the ratio of the mean
//! query-to-database distance to the query's k-th nearest distance; the
//! dataset-level figure averages both over queries. The predicted form maps a
//! single statistic — the normalized variance `sigma'` of the p-th power
//! distance — through the Gaussian quantile:
//!
//! ```text
//! C_r ~= 1 / [1 + quantile(k/n + cdf(-1/sigma')) * sigma']^(1/p)
//! ```
//!
//! `sigma'` itself can be measured from data pairs, combined from per-dim
//! moments (independent dimensions), taken from the i.i.d. closed form, or
//! from the zero-one-distance closed form for sparse indicator vectors.

use crate::data::{mean_and_kth_distance, Dataset, Metric};
use crate::error::Error;
use crate::linalg::{normal_cdf, normal_quantile};
use crate::moments::MomentSet;
use crate::rng::CellRng;
use crate::Result;
use rayon::prelude::*;

/// Largest number of (point, query) pairs examined by
/// [`empirical_sigma_prime`] before it switches to a seeded subsample.
pub const PAIR_SUBSAMPLE_CAP: usize = 10_000_000;

/// How a contrast value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContrastMode {
    Empirical,
    Predicted,
    Asymptotic,
}

impl ContrastMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ContrastMode::Empirical => "empirical",
            ContrastMode::Predicted => "predicted",
            ContrastMode::Asymptotic => "asymptotic",
        }
    }
}

/// Which estimator combines the per-query ratios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EstimatorMode {
    /// Mean of per-query mean distances over mean of per-query k-th
    /// distances. The headline definition.
    #[default]
    RatioOfMeans,
    /// Mean over queries of the per-query ratio.
    MeanOfRatios,
}

impl EstimatorMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            EstimatorMode::RatioOfMeans => "ratio-of-means",
            EstimatorMode::MeanOfRatios => "mean-of-ratios",
        }
    }
}

/// A contrast value with the inputs that produced it.
#[derive(Debug, Clone)]
pub struct ContrastReport {
    pub mode: ContrastMode,
    /// `None` when the prediction saturated (contrast effectively
    /// unbounded); reports stay finite and machine-readable.
    pub c_r: Option<f64>,
    pub n: usize,
    pub p: f64,
    pub k: usize,
    pub d: Option<usize>,
    pub s: Option<f64>,
    pub sigma_prime: Option<f64>,
    /// Mean over queries of the mean query-to-database distance
    /// (empirical mode only).
    pub d_mean: Option<f64>,
    /// Mean over queries of the k-th nearest distance (empirical mode only).
    pub d_knn: Option<f64>,
    pub queries: Option<usize>,
    pub estimator: Option<EstimatorMode>,
    /// Prediction base collapsed to ~0; contrast effectively unbounded.
    pub saturated: bool,
    /// `sigma' = 0` limit; contrast pinned to 1.
    pub degenerate: bool,
}

impl ContrastReport {
    /// The prediction derivation is exact only for p = 1; other norms carry
    /// an approximation note in the flags.
    pub fn approximate_for_p(&self) -> bool {
        self.mode != ContrastMode::Empirical && self.p != 1.0
    }

    pub fn flags(&self) -> String {
        let mut out: Vec<&str> = Vec::new();
        if self.saturated {
            out.push("saturated");
        }
        if self.degenerate {
            out.push("degenerate");
        }
        if self.approximate_for_p() {
            out.push("approximate_for_p_neq_1");
        }
        out.join(";")
    }

    /// Header for [`ContrastReport::csv_row`].
    pub fn csv_header() -> &'static str {
        "mode,n,d,s,p,k,sigma_prime,c_r,flags"
    }

    pub fn csv_row(&self) -> String {
        let opt_u = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
        let opt_f = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.mode.as_str(),
            self.n,
            opt_u(self.d),
            opt_f(self.s),
            self.p,
            self.k,
            opt_f(self.sigma_prime),
            opt_f(self.c_r),
            self.flags()
        )
    }
}

/// Normalized variance `sigma' = std(R) / mean(R)` of the p-th power
/// distance `R`, tagged with how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizedVariance {
    pub sigma_prime: f64,
    pub source: SigmaSource,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SigmaSource {
    EmpiricalPairs,
    IndependentDims,
    IidClosedForm,
    ZeroOneClosedForm,
}

impl SigmaSource {
    pub fn as_str(&self) -> &'static str {
        match self {
            SigmaSource::EmpiricalPairs => "empirical-pairs",
            SigmaSource::IndependentDims => "independent-dims",
            SigmaSource::IidClosedForm => "iid-closed-form",
            SigmaSource::ZeroOneClosedForm => "l0-closed-form",
        }
    }
}

/// Measure relative contrast on data.
///
/// For every query: the mean distance to all database points and the k-th
/// nearest distance. `exclude_self` drops one zero-distance match per query
/// before either statistic, for callers whose queries are database members.
/// Any remaining zero k-th distance is an error (the query duplicates a
/// database point).
pub fn empirical_contrast(
    data: &Dataset,
    queries: &Dataset,
    p: f64,
    k: usize,
    mode: EstimatorMode,
    exclude_self: bool,
) -> Result<ContrastReport> {
    let metric = Metric::new(p)?;
    if queries.n() == 0 {
        return Err(Error::InvalidInput("query set is empty".into()));
    }
    if data.dim() != queries.dim() {
        return Err(Error::DimensionMismatch {
            left: data.dim(),
            right: queries.dim(),
        });
    }
    if k == 0 || k > data.n() {
        return Err(Error::KOutOfRange { k, n: data.n() });
    }

    let per_query: Vec<Result<(f64, f64)>> = (0..queries.n())
        .into_par_iter()
        .map(|qi| mean_and_kth_distance(data, queries.row(qi), k, metric, exclude_self))
        .collect();

    let mut sum_mean = 0.0;
    let mut sum_kth = 0.0;
    let mut sum_ratio = 0.0;
    for (qi, r) in per_query.into_iter().enumerate() {
        let (mean, kth) = r?;
        if kth == 0.0 {
            return Err(Error::QueryCollision { query: qi });
        }
        sum_mean += mean;
        sum_kth += kth;
        sum_ratio += mean / kth;
    }
    let qn = queries.n() as f64;
    let d_mean = sum_mean / qn;
    let d_knn = sum_kth / qn;
    let c_r = match mode {
        EstimatorMode::RatioOfMeans => d_mean / d_knn,
        EstimatorMode::MeanOfRatios => sum_ratio / qn,
    };

    Ok(ContrastReport {
        mode: ContrastMode::Empirical,
        c_r: Some(c_r),
        n: data.n(),
        p,
        k,
        d: Some(data.dim()),
        s: None,
        sigma_prime: None,
        d_mean: Some(d_mean),
        d_knn: Some(d_knn),
        queries: Some(queries.n()),
        estimator: Some(mode),
        saturated: false,
        degenerate: false,
    })
}

/// `sigma'` measured from the p-th power distances of (point, query) pairs.
///
/// All pairs are used up to [`PAIR_SUBSAMPLE_CAP`]; beyond that a seeded
/// uniform subsample of that many pairs keeps the cost bounded.
pub fn empirical_sigma_prime(
    data: &Dataset,
    queries: &Dataset,
    p: f64,
) -> Result<NormalizedVariance> {
    empirical_sigma_prime_capped(data, queries, p, PAIR_SUBSAMPLE_CAP, 0x51f)
}

pub fn empirical_sigma_prime_capped(
    data: &Dataset,
    queries: &Dataset,
    p: f64,
    cap: usize,
    seed: u64,
) -> Result<NormalizedVariance> {
    let metric = Metric::new(p)?;
    if data.n() < 2 || queries.n() == 0 {
        return Err(Error::InvalidInput(
            "need at least 2 database points and 1 query".into(),
        ));
    }
    if data.dim() != queries.dim() {
        return Err(Error::DimensionMismatch {
            left: data.dim(),
            right: queries.dim(),
        });
    }

    let total = data.n().saturating_mul(queries.n());
    let (sum, sumsq, count) = if total <= cap {
        let per_query: Vec<(f64, f64)> = (0..queries.n())
            .into_par_iter()
            .map(|qi| {
                let q = queries.row(qi);
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in 0..data.n() {
                    let r = metric.distance_pow(data.row(i), q);
                    s += r;
                    s2 += r * r;
                }
                (s, s2)
            })
            .collect();
        let (mut s, mut s2) = (0.0, 0.0);
        for (a, b) in per_query {
            s += a;
            s2 += b;
        }
        (s, s2, total)
    } else {
        let rng = CellRng::new(seed, 0xa17);
        let pairs: Vec<(f64, f64)> = (0..cap)
            .into_par_iter()
            .map(|t| {
                let qi = (rng.cell_u64(t as u64, 0) % queries.n() as u64) as usize;
                let xi = (rng.cell_u64(t as u64, 1) % data.n() as u64) as usize;
                let r = metric.distance_pow(data.row(xi), queries.row(qi));
                (r, r * r)
            })
            .collect();
        let (mut s, mut s2) = (0.0, 0.0);
        for (a, b) in pairs {
            s += a;
            s2 += b;
        }
        (s, s2, cap)
    };

    let mean = sum / count as f64;
    if mean <= 0.0 {
        return Err(Error::Degenerate(
            "all pair distances are zero; sigma' undefined".into(),
        ));
    }
    let var = (sumsq / count as f64 - mean * mean).max(0.0);
    Ok(NormalizedVariance {
        sigma_prime: var.sqrt() / mean,
        source: SigmaSource::EmpiricalPairs,
    })
}

/// Predicted contrast for the k-th nearest neighbor:
/// `1 / [1 + quantile(k/n + cdf(-1/sigma')) * sigma']^(1/p)`.
/// `k = 1` is the plain nearest-neighbor form.
pub fn predicted_contrast(sigma_prime: f64, n: usize, p: f64, k: usize) -> Result<ContrastReport> {
    if !(p > 0.0) || !p.is_finite() {
        return Err(Error::NonpositiveNorm(p));
    }
    if n < 2 {
        return Err(Error::InvalidInput(format!("need n >= 2, got {n}")));
    }
    if k == 0 || k >= n {
        return Err(Error::KOutOfRange { k, n });
    }
    if !(sigma_prime >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "sigma' must be nonnegative, got {sigma_prime}"
        )));
    }

    let report = |c_r, saturated, degenerate| ContrastReport {
        mode: ContrastMode::Predicted,
        c_r,
        n,
        p,
        k,
        d: None,
        s: None,
        sigma_prime: Some(sigma_prime),
        d_mean: None,
        d_knn: None,
        queries: None,
        estimator: None,
        saturated,
        degenerate,
    };

    if sigma_prime == 0.0 {
        // Limit case: distances fully concentrated, contrast pinned at 1.
        return Ok(report(Some(1.0), false, true));
    }
    let u = k as f64 / n as f64 + normal_cdf(-1.0 / sigma_prime);
    if u >= 1.0 {
        return Err(Error::InvalidInput(format!(
            "k/n + cdf(-1/sigma') = {u} must be < 1"
        )));
    }
    let base = 1.0 + normal_quantile(u) * sigma_prime;
    if base <= 1e-12 {
        return Ok(report(None, true, false));
    }
    Ok(report(Some(base.powf(-1.0 / p)), false, false))
}

/// Nearest-neighbor specialization of [`predicted_contrast`] (`k = 1`).
pub fn predicted_contrast_nn(sigma_prime: f64, n: usize, p: f64) -> Result<ContrastReport> {
    predicted_contrast(sigma_prime, n, p, 1)
}

/// Asymptotic contrast for `sigma' -> 0`: the predicted form with the
/// `cdf(-1/sigma')` term dropped.
pub fn asymptotic_contrast(sigma_prime: f64, n: usize, p: f64) -> Result<ContrastReport> {
    if !(p > 0.0) || !p.is_finite() {
        return Err(Error::NonpositiveNorm(p));
    }
    if n < 2 {
        return Err(Error::InvalidInput(format!("need n >= 2, got {n}")));
    }
    if !(sigma_prime >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "sigma' must be nonnegative, got {sigma_prime}"
        )));
    }
    let report = |c_r, saturated, degenerate| ContrastReport {
        mode: ContrastMode::Asymptotic,
        c_r,
        n,
        p,
        k: 1,
        d: None,
        s: None,
        sigma_prime: Some(sigma_prime),
        d_mean: None,
        d_knn: None,
        queries: None,
        estimator: None,
        saturated,
        degenerate,
    };
    if sigma_prime == 0.0 {
        return Ok(report(Some(1.0), false, true));
    }
    let base = 1.0 + normal_quantile(1.0 / n as f64) * sigma_prime;
    if base <= 1e-12 {
        return Ok(report(None, true, false));
    }
    Ok(report(Some(base.powf(-1.0 / p)), false, false))
}

/// `sigma'` for independent (not necessarily identical) dimensions, each
/// with sparsity `s_j` and value moments `m_j`:
///
/// ```text
/// mu_j    = s_j^2 m'_{j,p} + 2 (1 - s_j) s_j m_{j,p}
/// var_j   = s_j^2 m'_{j,2p} + 2 (1 - s_j) s_j m_{j,2p} - mu_j^2
/// sigma'^2 = sum var_j / (sum mu_j)^2
/// ```
pub fn sigma_prime_independent_dims(per_dim: &[(f64, MomentSet)]) -> Result<NormalizedVariance> {
    if per_dim.is_empty() {
        return Err(Error::InvalidInput("need at least one dimension".into()));
    }
    let mut mu_sum = 0.0;
    let mut var_sum = 0.0;
    for (j, &(s, m)) in per_dim.iter().enumerate() {
        if !(s > 0.0 && s <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "dimension {j}: sparsity {s} outside (0, 1]"
            )));
        }
        let mu = s * s * m.mprime_p + 2.0 * (1.0 - s) * s * m.m_p;
        let second = s * s * m.mprime_2p + 2.0 * (1.0 - s) * s * m.m_2p;
        mu_sum += mu;
        var_sum += second - mu * mu;
    }
    if mu_sum <= 0.0 {
        return Err(Error::Degenerate(
            "all per-dimension means are zero".into(),
        ));
    }
    let ratio = var_sum / (mu_sum * mu_sum);
    if ratio < -1e-12 {
        return Err(Error::Numeric(format!(
            "inconsistent moments: negative variance sum {var_sum:e}"
        )));
    }
    Ok(NormalizedVariance {
        sigma_prime: ratio.max(0.0).sqrt(),
        source: SigmaSource::IndependentDims,
    })
}

/// `sigma'` for `d` i.i.d. dimensions with shared sparsity `s`:
///
/// ```text
/// sigma' = d^{-1/2} sqrt( s[(m'_2p - 2 m_2p) s + 2 m_2p]
///                       / (s^2 [(m'_p - 2 m_p) s + 2 m_p]^2) - 1 )
/// ```
pub fn sigma_prime_iid(s: f64, d: usize, m: &MomentSet) -> Result<NormalizedVariance> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::InvalidInput(format!("sparsity {s} outside (0, 1]")));
    }
    if d == 0 {
        return Err(Error::InvalidInput("d must be >= 1".into()));
    }
    let num = s * ((m.mprime_2p - 2.0 * m.m_2p) * s + 2.0 * m.m_2p);
    let den_inner = (m.mprime_p - 2.0 * m.m_p) * s + 2.0 * m.m_p;
    let den = s * s * den_inner * den_inner;
    if den <= 0.0 {
        return Err(Error::Degenerate("zero mean in the i.i.d. form".into()));
    }
    let radicand = num / den - 1.0;
    if radicand < -1e-12 {
        return Err(Error::Numeric(format!(
            "inconsistent moments: radicand {radicand:e}"
        )));
    }
    Ok(NormalizedVariance {
        sigma_prime: radicand.max(0.0).sqrt() / (d as f64).sqrt(),
        source: SigmaSource::IidClosedForm,
    })
}

/// `sigma'` for the zero-one (L0) dissimilarity on s-sparse indicator data:
/// `d^{-1/2} sqrt((1-s)^2 / (1 - (1-s)^2))`. Strictly decreasing in `s`.
pub fn sigma_prime_l0(s: f64, d: usize) -> Result<NormalizedVariance> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidInput(format!(
            "sparsity {s} outside the open interval (0, 1)"
        )));
    }
    if d == 0 {
        return Err(Error::InvalidInput("d must be >= 1".into()));
    }
    let z = (1.0 - s) * (1.0 - s);
    Ok(NormalizedVariance {
        sigma_prime: (z / (1.0 - z)).sqrt() / (d as f64).sqrt(),
        source: SigmaSource::ZeroOneClosedForm,
    })
}
