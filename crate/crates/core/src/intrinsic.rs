//! Effective and intrinsic dimensionality.
//!
//! Effective dimensionality counts the principal components needed to keep a
//! variance fraction. Intrinsic dimensionality sweeps a projection dimension
//! `d'`: project onto the top-`d'` PCA directions, combine per-dimension
//! moments of `|x_j - q_j|^p` under the independent-dims rule into a
//! predicted contrast, and report the `d'` whose prediction best matches the
//! contrast measured in the original space, averaged over the norms in
//! `p_list`.

use crate::contrast::{
    empirical_contrast, predicted_contrast, sigma_prime_independent_dims, EstimatorMode,
};
use crate::data::{pow_term, Dataset};
use crate::error::Error;
use crate::linalg::{covariance, mean_vector, project_rows, sym_eig};
use crate::moments::MomentSet;
use crate::rng::SeqRng;
use crate::Result;
use rayon::prelude::*;

const SWEEP_COV_SEED: u64 = 0xd1;
/// Pair budget for the per-dimension moment estimates in the sweep.
const SWEEP_PAIR_CAP: usize = 1_000_000;

/// Smallest number of leading principal components whose variance share
/// reaches `variance_fraction`.
pub fn effective_dimension(data: &Dataset, variance_fraction: f64) -> Result<usize> {
    if !(variance_fraction > 0.0 && variance_fraction <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "variance fraction {variance_fraction} outside (0, 1]"
        )));
    }
    let cov = covariance(data, true, None, SWEEP_COV_SEED)?;
    let (vals, _) = sym_eig(&cov)?;
    effective_dimension_from_spectrum(&vals, variance_fraction)
}

fn effective_dimension_from_spectrum(vals: &[f64], fraction: f64) -> Result<usize> {
    let top = vals.first().copied().unwrap_or(0.0).max(0.0);
    let clamped: Vec<f64> = vals
        .iter()
        .map(|&v| if v > top * 1e-12 { v } else { 0.0 })
        .collect();
    let total: f64 = clamped.iter().sum();
    if total <= 0.0 {
        return Err(Error::Degenerate("data has zero total variance".into()));
    }
    let mut cum = 0.0;
    for (i, &v) in clamped.iter().enumerate() {
        cum += v;
        if cum >= fraction * total - 1e-12 * total {
            return Ok(i + 1);
        }
    }
    Ok(clamped.len())
}

/// One sweep measurement at a `(d', p)` grid point.
#[derive(Debug, Clone, Copy)]
pub struct SweepEntry {
    pub d_prime: usize,
    pub p: f64,
    /// `None` when the prediction saturated at this `d'`.
    pub predicted: Option<f64>,
    pub empirical: f64,
    pub abs_discrepancy: f64,
}

/// Output of the intrinsic-dimension sweep.
#[derive(Debug, Clone)]
pub struct DimReport {
    /// Components for 85% variance.
    pub d_e: usize,
    /// Sweep argmin: projection dimension with the smallest mean
    /// |predicted - empirical| over `p_list`; ties resolve to the smallest.
    pub d_star: usize,
    /// `(d', mean |predicted - empirical| over p)` per grid point.
    pub discrepancy_curve: Vec<(usize, f64)>,
    /// Per-(d', p) detail behind the curve.
    pub entries: Vec<SweepEntry>,
    /// Projected dimensions with zero mean deviation (they contribute
    /// nothing to the combined sigma').
    pub degenerate_dims: usize,
}

/// Sweep grid: every integer up to 64, then geometric 1.25x steps, ending at
/// `d_max`.
pub fn sweep_grid(d_max: usize) -> Vec<usize> {
    let mut grid: Vec<usize> = (1..=d_max.min(64)).collect();
    let mut v = 64f64;
    while (v * 1.25).round() < d_max as f64 {
        v *= 1.25;
        grid.push(v.round() as usize);
    }
    if d_max > 64 {
        grid.push(d_max);
    }
    grid.dedup();
    grid
}

/// Run the contrast sweep (see module docs) and pick `d_star`.
pub fn intrinsic_dimension_by_contrast(
    data: &Dataset,
    queries: &Dataset,
    p_list: &[f64],
    d_max: usize,
) -> Result<DimReport> {
    if p_list.is_empty() {
        return Err(Error::InvalidInput("p_list is empty".into()));
    }
    if d_max == 0 || d_max > data.dim() {
        return Err(Error::InvalidInput(format!(
            "d_max = {d_max} outside [1, d = {}]",
            data.dim()
        )));
    }
    if data.dim() != queries.dim() {
        return Err(Error::DimensionMismatch {
            left: data.dim(),
            right: queries.dim(),
        });
    }

    // PCA basis from the centered covariance; d_e falls out of the spectrum.
    let mean = mean_vector(data);
    let cov = covariance(data, true, None, SWEEP_COV_SEED)?;
    let (vals, vecs) = sym_eig(&cov)?;
    let d_e = effective_dimension_from_spectrum(&vals, 0.85)?;

    // Projected directions with numerically zero variance carry nothing but
    // rounding noise; they are skipped so the combined sigma' (and the
    // discrepancy curve) is exactly flat across them.
    let variance_floor = vals.first().copied().unwrap_or(0.0).max(0.0) * 1e-10;
    let live_dim: Vec<bool> = vals[..d_max].iter().map(|&v| v > variance_floor).collect();

    // Project database and queries onto the top-d_max directions.
    let proj_data = project_rows(data, &vecs, d_max, Some(&mean));
    let proj_queries = project_rows(queries, &vecs, d_max, Some(&mean));

    // Per-dimension pair moments of |x_j - q_j|^p for every p, over all
    // (query, database) pairs up to a seeded row subsample.
    let db_rows: Vec<usize> = {
        let max_rows = (SWEEP_PAIR_CAP / queries.n().max(1)).max(1);
        if data.n() > max_rows {
            SeqRng::new(SWEEP_COV_SEED ^ 0x9a1e5).sample_indices(data.n(), max_rows)
        } else {
            (0..data.n()).collect()
        }
    };
    let pair_count = (db_rows.len() * queries.n()) as f64;

    // moments[pi][j] = (sum |diff|^p, sum |diff|^{2p}) for dimension j.
    let moments: Vec<Vec<(f64, f64)>> = p_list
        .iter()
        .map(|&p| {
            let partials: Vec<Vec<(f64, f64)>> = db_rows
                .par_chunks(256.max(db_rows.len() / (8 * rayon::current_num_threads().max(1)).max(1)))
                .map(|chunk| {
                    let mut acc = vec![(0.0f64, 0.0f64); d_max];
                    for &xi in chunk {
                        let xrow = &proj_data[xi * d_max..(xi + 1) * d_max];
                        for qi in 0..queries.n() {
                            let qrow = &proj_queries[qi * d_max..(qi + 1) * d_max];
                            for j in 0..d_max {
                                let t = pow_term(xrow[j] - qrow[j], p);
                                acc[j].0 += t;
                                acc[j].1 += t * t;
                            }
                        }
                    }
                    acc
                })
                .collect();
            let mut acc = vec![(0.0f64, 0.0f64); d_max];
            for part in partials {
                for (a, b) in acc.iter_mut().zip(part) {
                    a.0 += b.0;
                    a.1 += b.1;
                }
            }
            for (a, &live) in acc.iter_mut().zip(&live_dim) {
                if live {
                    a.0 /= pair_count;
                    a.1 /= pair_count;
                } else {
                    *a = (0.0, 0.0);
                }
            }
            acc
        })
        .collect();

    let degenerate_dims = live_dim.iter().filter(|l| !*l).count();

    // Empirical contrast per p, once, in the original space.
    let empirical: Vec<f64> = p_list
        .iter()
        .map(|&p| {
            Ok(
                empirical_contrast(data, queries, p, 1, EstimatorMode::RatioOfMeans, false)?
                    .c_r
                    .expect("empirical contrast is always finite"),
            )
        })
        .collect::<Result<_>>()?;

    // Sweep d' over the grid.
    let grid = sweep_grid(d_max);
    let mut entries = Vec::with_capacity(grid.len() * p_list.len());
    let mut curve = Vec::with_capacity(grid.len());
    let mut d_star = grid[0];
    let mut best = f64::INFINITY;
    for &d_prime in &grid {
        let mut sum_disc = 0.0f64;
        for (pi, &p) in p_list.iter().enumerate() {
            // Jensen holds for sample moments from common draws, so the
            // MomentSet constructor cannot fail here.
            let per_dim: Vec<(f64, MomentSet)> = moments[pi][..d_prime]
                .iter()
                .map(|&(mu, sec)| Ok((1.0, MomentSet::new(0.0, 0.0, mu, sec)?)))
                .collect::<Result<_>>()?;
            let sigma = sigma_prime_independent_dims(&per_dim)?;
            let report = predicted_contrast(sigma.sigma_prime, data.n(), p, 1)?;
            let (predicted, disc) = match report.c_r {
                Some(c) => (Some(c), (c - empirical[pi]).abs()),
                None => (None, f64::INFINITY),
            };
            entries.push(SweepEntry {
                d_prime,
                p,
                predicted,
                empirical: empirical[pi],
                abs_discrepancy: disc,
            });
            sum_disc += disc;
        }
        let mean_disc = sum_disc / p_list.len() as f64;
        curve.push((d_prime, mean_disc));
        if mean_disc < best {
            best = mean_disc;
            d_star = d_prime;
        }
    }

    Ok(DimReport {
        d_e,
        d_star,
        discrepancy_curve: curve,
        entries,
        degenerate_dims,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::CellRng;
    use crate::synth::{gen_sparse_iid, SynthSpec, ValueDistribution};

    #[test]
    fn single_axis_data_has_effective_dimension_one() {
        let rows: Vec<Vec<f32>> = (0..50).map(|i| vec![i as f32, 0.0, 0.0, 0.0]).collect();
        let data = Dataset::from_rows(rows).unwrap();
        for fraction in [0.1, 0.5, 0.85, 1.0] {
            assert_eq!(effective_dimension(&data, fraction).unwrap(), 1);
        }
    }

    #[test]
    fn isotropic_gaussian_effective_dimension_tracks_fraction() {
        let d = 40;
        let rng = CellRng::new(3, 0);
        let rows: Vec<Vec<f32>> = (0..20_000)
            .map(|i| {
                (0..d)
                    .map(|j| rng.cell_normal(i as u64, j as u64) as f32)
                    .collect()
            })
            .collect();
        let data = Dataset::from_rows(rows).unwrap();
        let de = effective_dimension(&data, 0.85).unwrap();
        assert!(
            (31..=37).contains(&de),
            "flat spectrum should give d_e near 0.85 * d, got {de}"
        );
    }

    #[test]
    fn full_fraction_recovers_rank() {
        let rng = CellRng::new(5, 0);
        let rows: Vec<Vec<f32>> = (0..200)
            .map(|i| {
                let mut r: Vec<f32> = (0..3)
                    .map(|j| rng.cell_normal(i as u64, j as u64) as f32)
                    .collect();
                r.extend([0.0, 0.0, 0.0]);
                r
            })
            .collect();
        let data = Dataset::from_rows(rows).unwrap();
        assert_eq!(effective_dimension(&data, 1.0).unwrap(), 3);
        assert!(effective_dimension(&data, 0.0).is_err());
        assert!(effective_dimension(&data, 1.5).is_err());
    }

    #[test]
    fn sweep_grid_shape() {
        assert_eq!(sweep_grid(5), vec![1, 2, 3, 4, 5]);
        let g = sweep_grid(512);
        assert_eq!(g[..64], (1..=64).collect::<Vec<_>>()[..]);
        assert_eq!(*g.last().unwrap(), 512);
        assert!(g.windows(2).all(|w| w[0] < w[1]), "strictly increasing");
    }

    #[test]
    fn trivial_sweep_with_d_max_one() {
        let data = gen_sparse_iid(&SynthSpec {
            n: 400,
            d: 6,
            s: 1.0,
            distribution: ValueDistribution::Uniform01,
            seed: 1,
        })
        .unwrap();
        let queries = gen_sparse_iid(&SynthSpec {
            n: 20,
            d: 6,
            s: 1.0,
            distribution: ValueDistribution::Uniform01,
            seed: 2,
        })
        .unwrap();
        let report = intrinsic_dimension_by_contrast(&data, &queries, &[1.0], 1).unwrap();
        assert_eq!(report.d_star, 1);
        assert_eq!(report.discrepancy_curve.len(), 1);
        assert!(report.discrepancy_curve[0].1 >= 0.0);
    }

    #[test]
    fn dense_iid_data_is_self_consistent() {
        let d = 48;
        let spec = SynthSpec {
            n: 4_000,
            d,
            s: 1.0,
            distribution: ValueDistribution::Uniform01,
            seed: 7,
        };
        let data = gen_sparse_iid(&spec).unwrap();
        let queries = gen_sparse_iid(&spec.queries(60)).unwrap();
        let report =
            intrinsic_dimension_by_contrast(&data, &queries, &[1.0, 2.0], d).unwrap();
        let lo = (0.6 * d as f64).round() as usize;
        assert!(
            (lo..=d).contains(&report.d_star),
            "d_star {} for iid data of true dimension {d}",
            report.d_star
        );
        // The discrepancy minimum is attained at d_star.
        let at_star = report
            .discrepancy_curve
            .iter()
            .find(|(dp, _)| *dp == report.d_star)
            .unwrap()
            .1;
        assert!(report
            .discrepancy_curve
            .iter()
            .all(|&(_, disc)| disc >= at_star - 1e-15));
    }

    #[test]
    fn d_star_is_scale_invariant() {
        let d = 16;
        let spec = SynthSpec {
            n: 1_500,
            d,
            s: 1.0,
            distribution: ValueDistribution::Uniform01,
            seed: 21,
        };
        let data = gen_sparse_iid(&spec).unwrap();
        let queries = gen_sparse_iid(&spec.queries(40)).unwrap();
        let scale_rows = |ds: &Dataset, c: f32| {
            let mut rows = Vec::with_capacity(ds.n());
            let mut buf = vec![0.0f64; ds.dim()];
            for i in 0..ds.n() {
                ds.fill_row_f64(i, &mut buf);
                rows.push(buf.iter().map(|&v| v as f32 * c).collect::<Vec<f32>>());
            }
            Dataset::from_rows(rows).unwrap()
        };
        let a = intrinsic_dimension_by_contrast(&data, &queries, &[1.0], d).unwrap();
        let b = intrinsic_dimension_by_contrast(
            &scale_rows(&data, 37.0),
            &scale_rows(&queries, 37.0),
            &[1.0],
            d,
        )
        .unwrap();
        assert_eq!(a.d_star, b.d_star);
    }
}
