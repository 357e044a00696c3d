//! Approximate-NN indexes and the recall harness that scores them against
//! brute-force ground truth.
//!
//! Two index families: multi-table p-stable LSH with integer bucket keys
//! ([`lsh`]), and linear binary codes ranked by hamming distance
//! ([`binary`]) trained by PCA, by generalized-eigenvector contrast
//! maximization (MRC), or by random projection.

pub mod binary;
pub mod lsh;

pub use binary::{
    hamming_rank, hamming_within_radius, train_mrc_hash, train_pca_hash, train_random_hash,
    BinaryCodeIndex, HashTrainer,
};
pub use lsh::{lsh_build, lsh_hash, lsh_query, sample_pstable_projections, LshIndex, WidthSpec};

use crate::data::{brute_force_knn, Dataset};
use crate::error::Error;
use crate::linalg::SymMatrix;
use crate::Result;
use rayon::prelude::*;

/// Covariance of query-to-nearest-neighbor displacement vectors, with the
/// nearest neighbor found by brute force.
#[derive(Debug, Clone)]
pub struct SnnEstimate {
    pub matrix: SymMatrix,
    /// Queries that contributed a displacement.
    pub used: usize,
    /// Queries excluded because they coincide with a database point.
    pub excluded: usize,
}

/// Estimate `S_NN = E[(q - nn(q))(q - nn(q))^T]` over the query set.
///
/// Queries at distance exactly zero from a database point are excluded and
/// counted rather than contributing a zero displacement.
pub fn estimate_snn(data: &Dataset, queries: &Dataset, p: f64) -> Result<SnnEstimate> {
    if data.dim() != queries.dim() {
        return Err(Error::DimensionMismatch {
            left: data.dim(),
            right: queries.dim(),
        });
    }
    if queries.n() == 0 {
        return Err(Error::InvalidInput("query set is empty".into()));
    }
    let d = data.dim();

    let displacements: Vec<Option<Vec<f64>>> = (0..queries.n())
        .into_par_iter()
        .map(|qi| {
            let nn = brute_force_knn(data, queries.row(qi), 1, p).expect("k=1 is always valid");
            let (idx, dist) = nn.entries[0];
            if dist == 0.0 {
                return None;
            }
            let mut q = vec![0.0f64; d];
            let mut x = vec![0.0f64; d];
            queries.fill_row_f64(qi, &mut q);
            data.fill_row_f64(idx, &mut x);
            for (a, b) in q.iter_mut().zip(&x) {
                *a -= b;
            }
            Some(q)
        })
        .collect();

    let mut acc = vec![0.0f64; d * d];
    let mut used = 0usize;
    let mut excluded = 0usize;
    for disp in displacements.iter() {
        match disp {
            None => excluded += 1,
            Some(v) => {
                used += 1;
                for a in 0..d {
                    if v[a] == 0.0 {
                        continue;
                    }
                    for b in a..d {
                        acc[a * d + b] += v[a] * v[b];
                    }
                }
            }
        }
    }
    if used == 0 {
        return Err(Error::Degenerate(
            "every query coincides with a database point".into(),
        ));
    }
    let inv = 1.0 / used as f64;
    Ok(SnnEstimate {
        matrix: SymMatrix::from_fn(d, |a, b| acc[a * d + b] * inv),
        used,
        excluded,
    })
}

/// One measured operating point: how many candidates were returned on
/// average, and what fraction of true nearest neighbors they contained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    /// The knob that produced this point (table count, radius, or budget).
    pub control: f64,
    /// Mean candidate-set size across queries.
    pub candidates_returned: f64,
    pub recall: f64,
}

/// Recall curve over an increasing retrieval budget.
#[derive(Debug, Clone)]
pub struct RecallCurve {
    pub method: String,
    pub p: f64,
    pub bits: usize,
    pub seed: u64,
    pub points: Vec<CurvePoint>,
}

impl RecallCurve {
    /// Validate monotonicity: candidates strictly increasing across kept
    /// points and recall nondecreasing. Consecutive points with identical
    /// candidate counts describe the same retrieval set; the later one is
    /// kept.
    pub fn new(
        method: impl Into<String>,
        p: f64,
        bits: usize,
        seed: u64,
        raw: Vec<CurvePoint>,
    ) -> Result<Self> {
        let mut points: Vec<CurvePoint> = Vec::with_capacity(raw.len());
        for pt in raw {
            if let Some(last) = points.last_mut() {
                if pt.candidates_returned < last.candidates_returned
                    || pt.recall < last.recall - 1e-12
                {
                    return Err(Error::InvalidInput(format!(
                        "recall curve not monotone at control {}",
                        pt.control
                    )));
                }
                if pt.candidates_returned == last.candidates_returned {
                    *last = pt;
                    continue;
                }
            }
            points.push(pt);
        }
        Ok(RecallCurve {
            method: method.into(),
            p,
            bits,
            seed,
            points,
        })
    }

    pub fn csv_header() -> &'static str {
        "method,p,bits,tables_or_radius,seed,candidates_returned,recall"
    }

    pub fn csv_rows(&self) -> Vec<String> {
        self.points
            .iter()
            .map(|pt| {
                format!(
                    "{},{},{},{},{},{},{}",
                    self.method,
                    self.p,
                    self.bits,
                    pt.control,
                    self.seed,
                    pt.candidates_returned,
                    pt.recall
                )
            })
            .collect()
    }
}

/// Score candidate sets against per-query true nearest neighbors.
///
/// `recall` is the fraction of queries whose true neighbor appears in their
/// candidate set; `candidates_returned` is the mean set size.
pub fn recall_eval(candidates: &[Vec<usize>], truth: &[usize]) -> Result<CurvePoint> {
    if candidates.is_empty() || candidates.len() != truth.len() {
        return Err(Error::InvalidInput(format!(
            "got {} candidate sets for {} queries",
            candidates.len(),
            truth.len()
        )));
    }
    let hits = candidates
        .iter()
        .zip(truth)
        .filter(|(c, t)| c.contains(t))
        .count();
    let total: usize = candidates.iter().map(|c| c.len()).sum();
    Ok(CurvePoint {
        control: 0.0,
        candidates_returned: total as f64 / candidates.len() as f64,
        recall: hits as f64 / candidates.len() as f64,
    })
}

/// True 1-NN index for every query, by brute force.
pub fn ground_truth_nn(data: &Dataset, queries: &Dataset, p: f64) -> Result<Vec<usize>> {
    (0..queries.n())
        .into_par_iter()
        .map(|qi| Ok(brute_force_knn(data, queries.row(qi), 1, p)?.entries[0].0))
        .collect()
}

/// Recall of an LSH index at each prefix table count in `table_counts`
/// (ascending). Each query accumulates candidates table by table, so point
/// `l` reflects the union over the first `l` tables.
pub fn lsh_recall_at_tables(
    index: &LshIndex,
    queries: &Dataset,
    truth: &[usize],
    table_counts: &[usize],
) -> Result<Vec<CurvePoint>> {
    if queries.n() != truth.len() {
        return Err(Error::InvalidInput(
            "ground truth length does not match query count".into(),
        ));
    }
    if table_counts.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput(
            "table counts must be strictly increasing".into(),
        ));
    }
    if table_counts.last().copied().unwrap_or(0) > index.tables() {
        return Err(Error::InvalidInput(format!(
            "index has only {} tables",
            index.tables()
        )));
    }

    let per_query: Vec<Vec<(usize, bool)>> = (0..queries.n())
        .into_par_iter()
        .map(|qi| {
            let mut seen = std::collections::HashSet::new();
            let mut hit = false;
            let mut out = Vec::with_capacity(table_counts.len());
            let mut next = 0usize;
            for l in 1..=*table_counts.last().unwrap() {
                for &cand in index.bucket_of(queries.row(qi), l - 1) {
                    if seen.insert(cand) && cand as usize == truth[qi] {
                        hit = true;
                    }
                }
                if next < table_counts.len() && table_counts[next] == l {
                    out.push((seen.len(), hit));
                    next += 1;
                }
            }
            out
        })
        .collect();

    Ok(table_counts
        .iter()
        .enumerate()
        .map(|(j, &l)| {
            let mut size_sum = 0usize;
            let mut hits = 0usize;
            for q in &per_query {
                size_sum += q[j].0;
                hits += usize::from(q[j].1);
            }
            CurvePoint {
                control: l as f64,
                candidates_returned: size_sum as f64 / per_query.len() as f64,
                recall: hits as f64 / per_query.len() as f64,
            }
        })
        .collect())
}

/// Recall of hamming ranking at each candidate budget in `budgets`
/// (ascending). One full ranking per query serves every budget.
pub fn hamming_recall_at_budgets(
    index: &BinaryCodeIndex,
    queries: &Dataset,
    truth: &[usize],
    budgets: &[usize],
) -> Result<Vec<CurvePoint>> {
    if queries.n() != truth.len() {
        return Err(Error::InvalidInput(
            "ground truth length does not match query count".into(),
        ));
    }
    if budgets.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput(
            "budgets must be strictly increasing".into(),
        ));
    }
    let max_budget = *budgets.last().unwrap();

    // Rank of the true neighbor per query (position in the hamming order).
    let ranks: Vec<usize> = (0..queries.n())
        .into_par_iter()
        .map(|qi| {
            let ranked = hamming_rank(index, queries.row(qi), index.n());
            ranked
                .iter()
                .position(|&(idx, _)| idx == truth[qi])
                .expect("full ranking contains every index")
        })
        .collect();

    Ok(budgets
        .iter()
        .map(|&b| {
            let b = b.min(max_budget);
            let hits = ranks.iter().filter(|&&r| r < b).count();
            CurvePoint {
                control: b as f64,
                candidates_returned: b.min(index.n()) as f64,
                recall: hits as f64 / ranks.len() as f64,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Metric;

    #[test]
    fn snn_of_unit_displacements() {
        let data = Dataset::from_rows(vec![vec![0.0, 0.0], vec![10.0, 10.0]]).unwrap();
        let queries = Dataset::from_rows(vec![vec![1.0, 0.0], vec![11.0, 10.0]]).unwrap();
        let est = estimate_snn(&data, &queries, 2.0).unwrap();
        assert_eq!(est.used, 2);
        assert_eq!(est.excluded, 0);
        assert!((est.matrix.get(0, 0) - 1.0).abs() < 1e-12);
        assert!(est.matrix.get(0, 1).abs() < 1e-12);
        assert!(est.matrix.get(1, 1).abs() < 1e-12);
    }

    #[test]
    fn snn_excludes_exact_duplicates() {
        let data = Dataset::from_rows(vec![vec![0.0, 0.0], vec![5.0, 5.0]]).unwrap();
        let queries = Dataset::from_rows(vec![vec![0.0, 0.0], vec![5.0, 4.0]]).unwrap();
        let est = estimate_snn(&data, &queries, 2.0).unwrap();
        assert_eq!(est.used, 1);
        assert_eq!(est.excluded, 1);
    }

    #[test]
    fn snn_is_query_order_invariant() {
        let pairs = crate::synth::gen_aniso_pairs(200, 6, &[0.02; 6], 13).unwrap();
        let est = estimate_snn(&pairs.database, &pairs.queries, 2.0).unwrap();
        let rev: Vec<usize> = (0..pairs.queries.n()).rev().collect();
        let reversed = pairs.queries.subset(&rev).unwrap();
        let est2 = estimate_snn(&pairs.database, &reversed, 2.0).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                assert!(
                    (est.matrix.get(i, j) - est2.matrix.get(i, j)).abs() < 1e-12,
                    "({i},{j})"
                );
            }
        }
    }

    #[test]
    fn recall_eval_edge_cases() {
        let truth = vec![3, 7, 9];
        let everything: Vec<Vec<usize>> = vec![(0..10).collect(); 3];
        assert_eq!(recall_eval(&everything, &truth).unwrap().recall, 1.0);
        let nothing: Vec<Vec<usize>> = vec![vec![]; 3];
        assert_eq!(recall_eval(&nothing, &truth).unwrap().recall, 0.0);
        let two_hits = vec![vec![3], vec![1], vec![9, 2]];
        let pt = recall_eval(&two_hits, &truth).unwrap();
        assert!((pt.recall - 2.0 / 3.0).abs() < 1e-12);
        assert!((pt.candidates_returned - 4.0 / 3.0).abs() < 1e-12);
        assert!(recall_eval(&[], &[]).is_err());
    }

    #[test]
    fn recall_curve_collapses_equal_candidate_points() {
        let pts = vec![
            CurvePoint {
                control: 1.0,
                candidates_returned: 5.0,
                recall: 0.5,
            },
            CurvePoint {
                control: 2.0,
                candidates_returned: 5.0,
                recall: 0.5,
            },
            CurvePoint {
                control: 4.0,
                candidates_returned: 9.0,
                recall: 0.8,
            },
        ];
        let curve = RecallCurve::new("lsh", 2.0, 8, 1, pts).unwrap();
        assert_eq!(curve.points.len(), 2);
        assert_eq!(curve.points[0].control, 2.0);
        assert_eq!(curve.csv_rows().len(), 2);
    }

    #[test]
    fn ground_truth_matches_direct_knn() {
        let data = Dataset::from_rows(vec![vec![0.0], vec![4.0], vec![9.0]]).unwrap();
        let queries = Dataset::from_rows(vec![vec![3.0], vec![8.0]]).unwrap();
        assert_eq!(ground_truth_nn(&data, &queries, 1.0).unwrap(), vec![1, 2]);
        let m = Metric::new(1.0).unwrap();
        assert_eq!(m.distance(data.row(1), queries.row(0)), 1.0);
    }
}
