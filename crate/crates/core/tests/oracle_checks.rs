//! Estimator-vs-oracle checks: every closed form is exercised against an
//! independently coded reference (naive scans, Monte Carlo data, bisection
//! inversions) rather than against itself.

use nndc::contrast::{
    empirical_contrast, empirical_sigma_prime, predicted_contrast, sigma_prime_iid,
    sigma_prime_independent_dims, EstimatorMode,
};
use nndc::data::{Dataset, RowRef};
use nndc::hashing::estimate_snn;
use nndc::linalg::normal_cdf;
use nndc::moments::{uniform_moments, MomentSet};
use nndc::rng::CellRng;
use nndc::synth::{gen_aniso_pairs, gen_sparse_iid, SynthSpec, ValueDistribution};

fn uniform_spec(n: usize, d: usize, s: f64, seed: u64) -> SynthSpec {
    SynthSpec {
        n,
        d,
        s,
        distribution: ValueDistribution::Uniform01,
        seed,
    }
}

/// Naive two-loop reimplementation of the empirical contrast, kept separate
/// from the library path (no shared scan code).
fn naive_contrast(data: &Dataset, queries: &Dataset, p: f64, k: usize) -> f64 {
    let mut buf_x = vec![0.0f64; data.dim()];
    let mut buf_q = vec![0.0f64; data.dim()];
    let mut mean_sum = 0.0;
    let mut kth_sum = 0.0;
    for qi in 0..queries.n() {
        queries.fill_row_f64(qi, &mut buf_q);
        let mut dists = Vec::with_capacity(data.n());
        for xi in 0..data.n() {
            data.fill_row_f64(xi, &mut buf_x);
            let mut acc = 0.0;
            for j in 0..data.dim() {
                acc += (buf_x[j] - buf_q[j]).abs().powf(p);
            }
            dists.push(acc.powf(1.0 / p));
        }
        mean_sum += dists.iter().sum::<f64>() / dists.len() as f64;
        dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
        kth_sum += dists[k - 1];
    }
    mean_sum / kth_sum
}

#[test]
fn empirical_contrast_matches_naive_two_loop_scan() {
    let spec = uniform_spec(10_000, 128, 1.0, 41);
    let data = gen_sparse_iid(&spec).unwrap();
    let queries = gen_sparse_iid(&spec.queries(100)).unwrap();
    let fast = empirical_contrast(&data, &queries, 1.0, 1, EstimatorMode::RatioOfMeans, false)
        .unwrap()
        .c_r
        .unwrap();
    let slow = naive_contrast(&data, &queries, 1.0, 1);
    assert!(
        (fast - slow).abs() <= 1e-9 * slow,
        "library {fast} vs naive {slow}"
    );
}

#[test]
fn one_dimensional_sigma_prime_is_sqrt_half() {
    // var/mean^2 of |U1 - U2| = (1/18)/(1/9) = 1/2.
    let spec = uniform_spec(2_000, 1, 1.0, 5);
    let data = gen_sparse_iid(&spec).unwrap();
    let queries = gen_sparse_iid(&spec.queries(500)).unwrap();
    let got = empirical_sigma_prime(&data, &queries, 1.0)
        .unwrap()
        .sigma_prime;
    let want = 0.5f64.sqrt();
    assert!((got - want).abs() / want < 0.02, "got {got}, want {want}");
}

#[test]
fn iid_sigma_prime_scales_as_inverse_sqrt_dimension() {
    for d in [16usize, 64, 256] {
        let spec = uniform_spec(4_000, d, 1.0, 60 + d as u64);
        let data = gen_sparse_iid(&spec).unwrap();
        let queries = gen_sparse_iid(&spec.queries(100)).unwrap();
        let got = empirical_sigma_prime(&data, &queries, 1.0)
            .unwrap()
            .sigma_prime;
        let want = 0.5f64.sqrt() / (d as f64).sqrt();
        assert!(
            (got - want).abs() / want < 0.05,
            "d={d}: got {got}, want {want}"
        );
    }
}

#[test]
fn independent_dims_formula_predicts_mixed_sparsity_data() {
    // Per-dimension sparsities in [0.3, 1.0]; generate matching data by
    // hand and compare the formula against the measured sigma'.
    let d = 512;
    let n = 4_000;
    let qn = 100;
    let rng = CellRng::new(77, 0);
    let s_j: Vec<f64> = (0..d)
        .map(|j| 0.3 + 0.7 * rng.cell_unit(0, j as u64))
        .collect();

    let gen = |rows: usize, stream: u64| -> Dataset {
        let presence = CellRng::new(101, stream);
        let values = CellRng::new(101, stream + 1);
        let mut flat = vec![0.0f32; rows * d];
        for i in 0..rows {
            for j in 0..d {
                if presence.cell_unit(i as u64, j as u64) < s_j[j] {
                    flat[i * d + j] = values.cell_open(i as u64, j as u64) as f32;
                }
            }
        }
        Dataset::dense(d, flat).unwrap()
    };
    let data = gen(n, 10);
    let queries = gen(qn, 20);

    let m = uniform_moments(1.0).unwrap();
    let per_dim: Vec<(f64, MomentSet)> = s_j.iter().map(|&s| (s, m)).collect();
    let predicted = sigma_prime_independent_dims(&per_dim).unwrap().sigma_prime;
    let measured = empirical_sigma_prime(&data, &queries, 1.0)
        .unwrap()
        .sigma_prime;
    assert!(
        (predicted - measured).abs() / measured < 0.03,
        "formula {predicted} vs measured {measured}"
    );
}

#[test]
fn iid_closed_form_predicts_sparse_data() {
    // Sparse data leaves a large share of var(R) in the query-conditional
    // mean, so this check uses enough queries to pin that component down.
    let d = 1024;
    let spec = uniform_spec(10_000, d, 0.1, 83);
    let data = gen_sparse_iid(&spec).unwrap();
    let queries = gen_sparse_iid(&spec.queries(1_000)).unwrap();
    let m = uniform_moments(1.0).unwrap();
    let predicted = sigma_prime_iid(0.1, d, &m).unwrap().sigma_prime;
    let measured = empirical_sigma_prime(&data, &queries, 1.0)
        .unwrap()
        .sigma_prime;
    assert!(
        (predicted - measured).abs() / measured < 0.05,
        "closed form {predicted} vs measured {measured}"
    );
}

#[test]
fn predicted_contrast_agrees_with_bisection_quantile() {
    // Recompute the frozen spec example through an independent inversion of
    // the CDF, then compare the full pipeline.
    let u = 1e-6 + normal_cdf(-10.0);
    let (mut lo, mut hi) = (-40.0f64, 0.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if normal_cdf(mid) < u {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let oracle_quantile = 0.5 * (lo + hi);
    let oracle = 1.0 / (1.0 + oracle_quantile * 0.1);
    let got = predicted_contrast(0.1, 1_000_000, 1.0, 1)
        .unwrap()
        .c_r
        .unwrap();
    assert!((got - oracle).abs() < 1e-9, "got {got}, oracle {oracle}");
}

#[test]
fn estimated_snn_recovers_isotropic_construction() {
    let d = 24;
    let pairs = gen_aniso_pairs(3_000, d, &vec![0.02; d], 19).unwrap();
    assert!(!pairs.noise_warning);
    let est = estimate_snn(&pairs.database, &pairs.queries, 2.0).unwrap();
    assert_eq!(est.excluded, 0);
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..d {
        for j in 0..d {
            let want = if i == j { 0.02 } else { 0.0 };
            num += (est.matrix.get(i, j) - want).powi(2);
            den += want * want;
        }
    }
    let rel = (num / den).sqrt();
    assert!(rel < 0.10, "relative Frobenius error {rel}");
}

#[test]
fn knn_distances_agree_between_sparse_and_dense_views() {
    let spec = uniform_spec(400, 64, 0.2, 91);
    let sparse = gen_sparse_iid(&spec).unwrap();
    let dense = sparse.to_dense();
    let queries = gen_sparse_iid(&spec.queries(10)).unwrap();
    for qi in 0..queries.n() {
        let a = nndc::brute_force_knn(&sparse, queries.row(qi), 5, 1.0).unwrap();
        let b = nndc::brute_force_knn(&dense, queries.row(qi), 5, 1.0).unwrap();
        for (ea, eb) in a.entries.iter().zip(&b.entries) {
            assert_eq!(ea.0, eb.0);
            assert!((ea.1 - eb.1).abs() <= 1e-9 * eb.1.max(1.0));
        }
    }
}

#[test]
fn query_rows_work_across_storage_kinds() {
    let spec = uniform_spec(50, 16, 0.3, 7);
    let data = gen_sparse_iid(&spec).unwrap();
    let q = [0.5f32; 16];
    let nn = nndc::brute_force_knn(&data, RowRef::Dense(&q), 1, 2.0).unwrap();
    let nn_dense = nndc::brute_force_knn(&data.to_dense(), RowRef::Dense(&q), 1, 2.0).unwrap();
    assert_eq!(nn.entries[0].0, nn_dense.entries[0].0);
}
