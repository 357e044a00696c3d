//! One `run_*` function per subcommand.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::Args;

use nndc::contrast::{
    empirical_contrast, empirical_sigma_prime, predicted_contrast, sigma_prime_iid, ContrastReport,
    EstimatorMode,
};
use nndc::data::{read_dataset, write_dataset, DataFormat, Dataset};
use nndc::hashing::{
    estimate_snn, ground_truth_nn, hamming_recall_at_budgets, lsh_build, lsh_recall_at_tables,
    train_mrc_hash, train_pca_hash, train_random_hash, RecallCurve, WidthSpec,
};
use nndc::intrinsic::intrinsic_dimension_by_contrast;
use nndc::moments::{mc_moments, uniform_moments, MomentSet};
use nndc::rng::SeqRng;
use nndc::synth::{gen_aniso_pairs, gen_sparse_iid, SynthSpec, ValueDistribution};

use crate::config::{
    config_hash, mean_std, parse_f64_grid, parse_usize_grid, write_csv,
};
use crate::CommonArgs;

const MC_MOMENT_SAMPLES: usize = 1_000_000;
const MC_MOMENT_SEED: u64 = 0x3a3;

// ---------------------------------------------------------------------------
// shared plumbing

fn infer_format(path: &Path, flag: Option<&str>) -> Result<DataFormat> {
    if let Some(f) = flag {
        return Ok(f.parse::<DataFormat>()?);
    }
    match path.extension().and_then(|e| e.to_str()) {
        Some("nndc" | "nnd" | "bin") => Ok(DataFormat::DenseBinary),
        Some("txt" | "sparse") => Ok(DataFormat::SparseText),
        Some("csv") => Ok(DataFormat::DenseCsv),
        other => bail!(
            "cannot infer format from extension {other:?} of {}; pass --format",
            path.display()
        ),
    }
}

fn load(path: &Path, flag: Option<&str>) -> Result<Dataset> {
    Ok(read_dataset(path, infer_format(path, flag)?)?)
}

/// Database plus query set, from files or by holding out seeded rows.
fn split_queries(
    data: Dataset,
    queries_path: Option<&Path>,
    queries_format: Option<&str>,
    holdout: usize,
    holdout_seed: u64,
) -> Result<(Dataset, Dataset)> {
    if let Some(qp) = queries_path {
        let queries = load(qp, queries_format)?;
        return Ok((data, queries));
    }
    if holdout == 0 || holdout >= data.n() {
        bail!(
            "holdout {holdout} must be in [1, n) with n = {}; or pass --queries",
            data.n()
        );
    }
    let picked = SeqRng::new(holdout_seed).sample_indices(data.n(), holdout);
    let mut is_query = vec![false; data.n()];
    for &i in &picked {
        is_query[i] = true;
    }
    let rest: Vec<usize> = (0..data.n()).filter(|&i| !is_query[i]).collect();
    Ok((data.subset(&rest)?, data.subset(&picked)?))
}

/// Moments of the value distribution at norm `p`: closed form for
/// uniform(0,1), Monte Carlo otherwise.
fn value_moments(dist: ValueDistribution, p: f64) -> Result<MomentSet> {
    match dist {
        ValueDistribution::Uniform01 => Ok(uniform_moments(p)?),
        other => Ok(mc_moments(
            move |u| other.sample(u),
            p,
            MC_MOMENT_SAMPLES,
            MC_MOMENT_SEED,
        )?
        .set),
    }
}

fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let seeds: Vec<u64> = s
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<u64>()
                .with_context(|| format!("bad seed {t:?}"))
        })
        .collect::<Result<_>>()?;
    if seeds.is_empty() {
        bail!("need at least one seed");
    }
    Ok(seeds)
}

fn fmt_seeds(seeds: &[u64]) -> String {
    seeds
        .iter()
        .map(|s| s.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

// ---------------------------------------------------------------------------
// gen

/// Columns: none (writes a dataset file, not a CSV).
#[derive(Debug, Args)]
pub struct GenArgs {
    /// Number of points.
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    /// Dimensionality.
    #[arg(long, default_value_t = 128)]
    d: usize,
    /// Probability that a coordinate is nonzero, in (0, 1].
    #[arg(long, default_value_t = 1.0)]
    s: f64,
    /// Value distribution: uniform01 or gaussian.
    #[arg(long, default_value = "uniform01")]
    dist: String,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output format: dense-binary, sparse-text, or dense-csv (inferred
    /// from the --out extension when omitted).
    #[arg(long)]
    format: Option<String>,
    #[command(flatten)]
    common: CommonArgs,
}

pub fn run_gen(a: GenArgs) -> Result<()> {
    let out = a
        .common
        .out
        .as_deref()
        .ok_or_else(|| anyhow!("gen requires --out"))?;
    let spec = SynthSpec {
        n: a.n,
        d: a.d,
        s: a.s,
        distribution: a.dist.parse()?,
        seed: a.seed,
    };
    let data = gen_sparse_iid(&spec)?;
    let format = infer_format(out, a.format.as_deref())?;
    write_dataset(&data, out, format)?;
    eprintln!(
        "wrote {} points of dimension {} ({}) to {}",
        data.n(),
        data.dim(),
        format.as_str(),
        out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// contrast

/// Columns: mode,n,d,s,p,k,sigma_prime,c_r,flags — one empirical row (from
/// the data) and one predicted row (from the measured sigma').
#[derive(Debug, Args)]
pub struct ContrastArgs {
    /// Dataset file.
    #[arg(long)]
    data: PathBuf,
    /// Dataset format (inferred from extension when omitted).
    #[arg(long)]
    format: Option<String>,
    /// Query file; when omitted, --holdout rows are split off the dataset.
    #[arg(long)]
    queries: Option<PathBuf>,
    #[arg(long)]
    queries_format: Option<String>,
    /// Rows to hold out as queries when no query file is given.
    #[arg(long, default_value_t = 100)]
    holdout: usize,
    #[arg(long, default_value_t = 1)]
    holdout_seed: u64,
    /// Distance norm p.
    #[arg(long, default_value_t = 1.0)]
    p: f64,
    /// Which nearest neighbor defines the contrast denominator.
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// ratio-of-means (headline definition) or mean-of-ratios.
    #[arg(long, default_value = "ratio-of-means")]
    mode: String,
    /// Drop one zero-distance database match per query (for queries that
    /// are database members).
    #[arg(long, default_value_t = false)]
    exclude_self: bool,
    #[command(flatten)]
    common: CommonArgs,
}

fn parse_mode(s: &str) -> Result<EstimatorMode> {
    match s {
        "ratio-of-means" => Ok(EstimatorMode::RatioOfMeans),
        "mean-of-ratios" => Ok(EstimatorMode::MeanOfRatios),
        other => bail!("unknown mode {other:?} (ratio-of-means or mean-of-ratios)"),
    }
}

pub fn run_contrast(a: ContrastArgs) -> Result<()> {
    let hash = config_hash(&a);
    let mode = parse_mode(&a.mode)?;
    let data = load(&a.data, a.format.as_deref())?;
    let (db, queries) = split_queries(
        data,
        a.queries.as_deref(),
        a.queries_format.as_deref(),
        a.holdout,
        a.holdout_seed,
    )?;

    let mut empirical = empirical_contrast(&db, &queries, a.p, a.k, mode, a.exclude_self)?;
    empirical.s = Some(db.nonzero_fraction());
    let sigma = empirical_sigma_prime(&db, &queries, a.p)?;
    empirical.sigma_prime = Some(sigma.sigma_prime);
    let mut predicted = predicted_contrast(sigma.sigma_prime, db.n(), a.p, a.k)?;
    predicted.d = Some(db.dim());
    predicted.s = empirical.s;

    write_csv(
        a.common.out.as_deref(),
        ContrastReport::csv_header(),
        &hash,
        &[],
        &[empirical.csv_row(), predicted.csv_row()],
    )
}

// ---------------------------------------------------------------------------
// predict-sweep

/// Columns: mode,n,d,s,p,k,sigma_prime,c_r,flags — one predicted row per
/// (sigma', n) grid point, sigma' outer, n inner.
#[derive(Debug, Args)]
pub struct PredictSweepArgs {
    /// sigma' grid: comma list or start:end:step.
    #[arg(long, default_value = "0.02:0.2:0.02")]
    sigma_grid: String,
    /// Database-size grid (comma list).
    #[arg(long, default_value = "100,10000,1000000,100000000")]
    n_grid: String,
    #[arg(long, default_value_t = 1.0)]
    p: f64,
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[command(flatten)]
    common: CommonArgs,
}

pub fn run_predict_sweep(a: PredictSweepArgs) -> Result<()> {
    let hash = config_hash(&a);
    let sigmas = parse_f64_grid(&a.sigma_grid)?;
    let ns = parse_usize_grid(&a.n_grid)?;
    let mut rows = Vec::with_capacity(sigmas.len() * ns.len());
    for &sigma in &sigmas {
        for &n in &ns {
            rows.push(predicted_contrast(sigma, n, a.p, a.k)?.csv_row());
        }
    }
    write_csv(
        a.common.out.as_deref(),
        ContrastReport::csv_header(),
        &hash,
        &[],
        &rows,
    )
}

// ---------------------------------------------------------------------------
// synthetic empirical-vs-predicted sweeps

const SWEEP_CSV_HEADER: &str =
    "n,d,s,p,k,sigma_prime,c_r_pred,c_r_emp_mean,c_r_emp_std,queries,seeds";

struct SweepPoint {
    n: usize,
    d: usize,
    s: f64,
    p: f64,
}

/// Shared engine for dim/sparsity/n/p sweeps: per grid point, predicted
/// contrast from the closed-form sigma' and the mean/std of the empirical
/// contrast over seeds.
fn sweep_rows(
    points: &[SweepPoint],
    dist: ValueDistribution,
    k: usize,
    queries: usize,
    seeds: &[u64],
) -> Result<Vec<String>> {
    let mut rows = Vec::with_capacity(points.len());
    for pt in points {
        let moments = value_moments(dist, pt.p)?;
        let sigma = sigma_prime_iid(pt.s, pt.d, &moments)?.sigma_prime;
        let pred = predicted_contrast(sigma, pt.n, pt.p, k)?;
        let mut empirical = Vec::with_capacity(seeds.len());
        for &seed in seeds {
            let spec = SynthSpec {
                n: pt.n,
                d: pt.d,
                s: pt.s,
                distribution: dist,
                seed,
            };
            let data = gen_sparse_iid(&spec)?;
            let qs = gen_sparse_iid(&spec.queries(queries))?;
            let report = empirical_contrast(&data, &qs, pt.p, k, EstimatorMode::RatioOfMeans, false)?;
            empirical.push(report.c_r.expect("empirical contrast is finite"));
        }
        let (emp_mean, emp_std) = mean_std(&empirical);
        let pred_cell = pred
            .c_r
            .map(|v| v.to_string())
            .unwrap_or_default();
        rows.push(format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            pt.n,
            pt.d,
            pt.s,
            pt.p,
            k,
            sigma,
            pred_cell,
            emp_mean,
            emp_std,
            queries,
            fmt_seeds(seeds)
        ));
    }
    Ok(rows)
}

/// Columns: n,d,s,p,k,sigma_prime,c_r_pred,c_r_emp_mean,c_r_emp_std,queries,seeds.
#[derive(Debug, Args)]
pub struct DimSweepArgs {
    /// Dimensionality grid (comma list).
    #[arg(long, default_value = "16,32,64,128,256,512,1024")]
    d_grid: String,
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    s: f64,
    #[arg(long, default_value_t = 1.0)]
    p: f64,
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, default_value = "uniform01")]
    dist: String,
    #[arg(long, default_value_t = 100)]
    queries: usize,
    /// Comma-separated seeds; empirical results report mean and std.
    #[arg(long, default_value = "1,2,3,4,5")]
    seeds: String,
    #[command(flatten)]
    common: CommonArgs,
}

pub fn run_dim_sweep(a: DimSweepArgs) -> Result<()> {
    let hash = config_hash(&a);
    let dist: ValueDistribution = a.dist.parse()?;
    let seeds = parse_seeds(&a.seeds)?;
    let points: Vec<SweepPoint> = parse_usize_grid(&a.d_grid)?
        .into_iter()
        .map(|d| SweepPoint {
            n: a.n,
            d,
            s: a.s,
            p: a.p,
        })
        .collect();
    let rows = sweep_rows(&points, dist, a.k, a.queries, &seeds)?;
    write_csv(a.common.out.as_deref(), SWEEP_CSV_HEADER, &hash, &[], &rows)
}

/// Columns: n,d,s,p,k,sigma_prime,c_r_pred,c_r_emp_mean,c_r_emp_std,queries,seeds.
#[derive(Debug, Args)]
pub struct SparsitySweepArgs {
    /// Sparsity grid in (0, 1] (comma list or start:end:step).
    #[arg(long, default_value = "0.05,0.1,0.2,0.5,1.0")]
    s_grid: String,
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    #[arg(long, default_value_t = 1024)]
    d: usize,
    #[arg(long, default_value_t = 1.0)]
    p: f64,
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, default_value = "uniform01")]
    dist: String,
    #[arg(long, default_value_t = 100)]
    queries: usize,
    #[arg(long, default_value = "1,2,3,4,5")]
    seeds: String,
    #[command(flatten)]
    common: CommonArgs,
}

pub fn run_sparsity_sweep(a: SparsitySweepArgs) -> Result<()> {
    let hash = config_hash(&a);
    let dist: ValueDistribution = a.dist.parse()?;
    let seeds = parse_seeds(&a.seeds)?;
    let points: Vec<SweepPoint> = parse_f64_grid(&a.s_grid)?
        .into_iter()
        .map(|s| SweepPoint {
            n: a.n,
            d: a.d,
            s,
            p: a.p,
        })
        .collect();
    let rows = sweep_rows(&points, dist, a.k, a.queries, &seeds)?;
    write_csv(a.common.out.as_deref(), SWEEP_CSV_HEADER, &hash, &[], &rows)
}

/// Columns: n,d,s,p,k,sigma_prime,c_r_pred,c_r_emp_mean,c_r_emp_std,queries,seeds.
#[derive(Debug, Args)]
pub struct NSweepArgs {
    /// Database-size grid (comma list).
    #[arg(long, default_value = "1000,10000,100000")]
    n_grid: String,
    #[arg(long, default_value_t = 30)]
    d: usize,
    #[arg(long, default_value_t = 1.0)]
    s: f64,
    #[arg(long, default_value_t = 1.0)]
    p: f64,
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, default_value = "uniform01")]
    dist: String,
    #[arg(long, default_value_t = 100)]
    queries: usize,
    #[arg(long, default_value = "1,2,3,4,5")]
    seeds: String,
    #[command(flatten)]
    common: CommonArgs,
}

pub fn run_n_sweep(a: NSweepArgs) -> Result<()> {
    let hash = config_hash(&a);
    let dist: ValueDistribution = a.dist.parse()?;
    let seeds = parse_seeds(&a.seeds)?;
    let points: Vec<SweepPoint> = parse_usize_grid(&a.n_grid)?
        .into_iter()
        .map(|n| SweepPoint {
            n,
            d: a.d,
            s: a.s,
            p: a.p,
        })
        .collect();
    let rows = sweep_rows(&points, dist, a.k, a.queries, &seeds)?;
    write_csv(a.common.out.as_deref(), SWEEP_CSV_HEADER, &hash, &[], &rows)
}

/// Columns: n,d,s,p,k,sigma_prime,c_r_pred,c_r_emp_mean,c_r_emp_std,queries,seeds.
#[derive(Debug, Args)]
pub struct PSweepArgs {
    /// Norm grid (comma list or start:end:step).
    #[arg(long, default_value = "0.5,1,2,3,4")]
    p_grid: String,
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    #[arg(long, default_value_t = 32)]
    d: usize,
    #[arg(long, default_value_t = 1.0)]
    s: f64,
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, default_value = "uniform01")]
    dist: String,
    #[arg(long, default_value_t = 100)]
    queries: usize,
    #[arg(long, default_value = "1,2,3,4,5")]
    seeds: String,
    #[command(flatten)]
    common: CommonArgs,
}

pub fn run_p_sweep(a: PSweepArgs) -> Result<()> {
    let hash = config_hash(&a);
    let dist: ValueDistribution = a.dist.parse()?;
    let seeds = parse_seeds(&a.seeds)?;
    let points: Vec<SweepPoint> = parse_f64_grid(&a.p_grid)?
        .into_iter()
        .map(|p| SweepPoint {
            n: a.n,
            d: a.d,
            s: a.s,
            p,
        })
        .collect();
    let rows = sweep_rows(&points, dist, a.k, a.queries, &seeds)?;
    write_csv(a.common.out.as_deref(), SWEEP_CSV_HEADER, &hash, &[], &rows)
}

// ---------------------------------------------------------------------------
// intrinsic-dim

/// Columns: kind,d_prime,p,predicted,empirical,abs_discrepancy. Point rows
/// cover the sweep grid; the summary row carries d_star. Comments report
/// the 85%-variance effective dimension.
#[derive(Debug, Args)]
pub struct IntrinsicDimArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    queries: Option<PathBuf>,
    #[arg(long)]
    queries_format: Option<String>,
    #[arg(long, default_value_t = 100)]
    holdout: usize,
    #[arg(long, default_value_t = 1)]
    holdout_seed: u64,
    /// Norms averaged by the discrepancy criterion.
    #[arg(long, default_value = "1,2")]
    p_list: String,
    /// Largest projection dimension to sweep (defaults to d).
    #[arg(long)]
    d_max: Option<usize>,
    #[command(flatten)]
    common: CommonArgs,
}

pub fn run_intrinsic_dim(a: IntrinsicDimArgs) -> Result<()> {
    let hash = config_hash(&a);
    let data = load(&a.data, a.format.as_deref())?;
    let (db, queries) = split_queries(
        data,
        a.queries.as_deref(),
        a.queries_format.as_deref(),
        a.holdout,
        a.holdout_seed,
    )?;
    let p_list = parse_f64_grid(&a.p_list)?;
    let d_max = a.d_max.unwrap_or(db.dim());
    let report = intrinsic_dimension_by_contrast(&db, &queries, &p_list, d_max)?;

    let mut rows: Vec<String> = report
        .entries
        .iter()
        .map(|e| {
            format!(
                "point,{},{},{},{},{}",
                e.d_prime,
                e.p,
                e.predicted.map(|v| v.to_string()).unwrap_or_default(),
                e.empirical,
                e.abs_discrepancy
            )
        })
        .collect();
    let best = report
        .discrepancy_curve
        .iter()
        .find(|(d, _)| *d == report.d_star)
        .map(|(_, disc)| *disc)
        .unwrap_or(f64::NAN);
    rows.push(format!("summary,{},,,,{}", report.d_star, best));

    write_csv(
        a.common.out.as_deref(),
        "kind,d_prime,p,predicted,empirical,abs_discrepancy",
        &hash,
        &[
            format!("d_e={} (85% variance)", report.d_e),
            format!("degenerate_dims={}", report.degenerate_dims),
        ],
        &rows,
    )
}

// ---------------------------------------------------------------------------
// lsh-eval

/// Columns: method,p,bits,tables_or_radius,seed,candidates_returned,recall.
/// Per-seed rows first; then per grid point an aggregate pair of rows with
/// seed=mean and seed=std.
#[derive(Debug, Args)]
pub struct LshEvalArgs {
    /// Dataset file; omit to use synthetic i.i.d. data (--n/--d/--s/--dist).
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    queries: Option<PathBuf>,
    #[arg(long)]
    queries_format: Option<String>,
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    #[arg(long, default_value_t = 128)]
    d: usize,
    #[arg(long, default_value_t = 1.0)]
    s: f64,
    #[arg(long, default_value = "uniform01")]
    dist: String,
    /// Query count for synthetic data or holdout size for file data.
    #[arg(long, default_value_t = 100)]
    query_count: usize,
    /// Distance norm: 1 or 2.
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    /// Hash functions per table.
    #[arg(long, default_value_t = 16)]
    bits: usize,
    /// tables (bucket lookup over l tables) or hamming (ranked binary codes).
    #[arg(long, default_value = "tables")]
    mode: String,
    /// Table counts evaluated as prefixes of one build (ascending).
    #[arg(long, default_value = "1,2,4,8,16,32,64")]
    tables_grid: String,
    /// Candidate budgets for hamming mode (ascending).
    #[arg(long, default_value = "10,50,100,500,1000")]
    budget_grid: String,
    /// Fixed bucket width; default is the per-table automatic width.
    #[arg(long)]
    width: Option<f64>,
    /// Multiplier on the automatic width (ignored when --width is given).
    #[arg(long, default_value_t = 1.0)]
    width_scale: f64,
    #[arg(long, default_value = "1,2,3,4,5")]
    seeds: String,
    #[command(flatten)]
    common: CommonArgs,
}

/// Per-seed curves followed by mean/std aggregate rows per grid point.
fn curve_csv_with_aggregates(curves: &[RecallCurve]) -> Vec<String> {
    let mut rows: Vec<String> = curves.iter().flat_map(|c| c.csv_rows()).collect();
    if curves.len() < 2 {
        return rows;
    }
    let first = &curves[0];
    for (i, pt) in first.points.iter().enumerate() {
        let cands: Vec<f64> = curves
            .iter()
            .filter_map(|c| c.points.get(i).map(|p| p.candidates_returned))
            .collect();
        let recalls: Vec<f64> = curves
            .iter()
            .filter_map(|c| c.points.get(i).map(|p| p.recall))
            .collect();
        if cands.len() != curves.len() {
            continue;
        }
        let (cm, cs) = mean_std(&cands);
        let (rm, rs) = mean_std(&recalls);
        rows.push(format!(
            "{},{},{},{},mean,{},{}",
            first.method, first.p, first.bits, pt.control, cm, rm
        ));
        rows.push(format!(
            "{},{},{},{},std,{},{}",
            first.method, first.p, first.bits, pt.control, cs, rs
        ));
    }
    rows
}

pub fn run_lsh_eval(a: LshEvalArgs) -> Result<()> {
    let hash = config_hash(&a);
    if a.p != 1.0 && a.p != 2.0 {
        bail!("LSH supports p = 1 or p = 2, got {}", a.p);
    }
    let seeds = parse_seeds(&a.seeds)?;
    let dist: ValueDistribution = a.dist.parse()?;
    let width = match a.width {
        Some(w) => WidthSpec::Fixed(w),
        None if a.width_scale == 1.0 => WidthSpec::Auto,
        None => WidthSpec::ScaledAuto(a.width_scale),
    };

    let file_data = match &a.data {
        Some(path) => Some(split_queries(
            load(path, a.format.as_deref())?,
            a.queries.as_deref(),
            a.queries_format.as_deref(),
            a.query_count,
            1,
        )?),
        None => None,
    };

    let mut curves: Vec<RecallCurve> = Vec::with_capacity(seeds.len());
    for &seed in &seeds {
        let (db, queries) = match &file_data {
            Some((db, queries)) => (db.clone(), queries.clone()),
            None => {
                let spec = SynthSpec {
                    n: a.n,
                    d: a.d,
                    s: a.s,
                    distribution: dist,
                    seed,
                };
                (gen_sparse_iid(&spec)?, gen_sparse_iid(&spec.queries(a.query_count))?)
            }
        };
        let truth = ground_truth_nn(&db, &queries, a.p)?;
        let (method, points) = match a.mode.as_str() {
            "tables" => {
                let grid = parse_usize_grid(&a.tables_grid)?;
                let max_l = *grid.iter().max().unwrap();
                let index = lsh_build(&db, a.bits, max_l, a.p, width, seed)?;
                ("lsh", lsh_recall_at_tables(&index, &queries, &truth, &grid)?)
            }
            "hamming" => {
                let grid = parse_usize_grid(&a.budget_grid)?;
                let index = train_random_hash(&db, a.bits, seed)?;
                (
                    "lsh-hamming",
                    hamming_recall_at_budgets(&index, &queries, &truth, &grid)?,
                )
            }
            other => bail!("unknown mode {other:?} (tables or hamming)"),
        };
        curves.push(RecallCurve::new(method, a.p, a.bits, seed, points)?);
    }

    write_csv(
        a.common.out.as_deref(),
        RecallCurve::csv_header(),
        &hash,
        &[],
        &curve_csv_with_aggregates(&curves),
    )
}

// ---------------------------------------------------------------------------
// hash-compare

/// Columns: method,p,bits,tables_or_radius,seed,candidates_returned,recall
/// for methods pca, mrc, and random under hamming ranking; aggregate
/// mean/std rows per (method, budget).
#[derive(Debug, Args)]
pub struct HashCompareArgs {
    /// Dataset file; omit to use synthetic anisotropic pairs.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    format: Option<String>,
    /// Query file (required with --data).
    #[arg(long)]
    queries: Option<PathBuf>,
    #[arg(long)]
    queries_format: Option<String>,
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    #[arg(long, default_value_t = 64)]
    d: usize,
    /// Noise variance on the noisy coordinates (synthetic mode).
    #[arg(long, default_value_t = 1.0)]
    noise_hi: f64,
    /// Noise variance on the quiet coordinates (synthetic mode).
    #[arg(long, default_value_t = 0.01)]
    noise_lo: f64,
    /// How many leading coordinates carry the high noise (default d/2).
    #[arg(long)]
    hi_dims: Option<usize>,
    #[arg(long, default_value_t = 32)]
    bits: usize,
    /// Hamming candidate budgets (ascending).
    #[arg(long, default_value = "100,200,500,1000")]
    budget_grid: String,
    /// Queries used to estimate S_NN.
    #[arg(long, default_value_t = 1000)]
    snn_queries: usize,
    /// Queries used to measure recall (disjoint from the S_NN split).
    #[arg(long, default_value_t = 100)]
    eval_queries: usize,
    /// Ridge factor on S_NN (times tr(S_NN)/d).
    #[arg(long, default_value_t = 1e-6)]
    ridge: f64,
    #[arg(long, default_value = "1,2,3,4,5")]
    seeds: String,
    #[command(flatten)]
    common: CommonArgs,
}

pub fn run_hash_compare(a: HashCompareArgs) -> Result<()> {
    let hash = config_hash(&a);
    let seeds = parse_seeds(&a.seeds)?;
    let budgets = parse_usize_grid(&a.budget_grid)?;
    let p = 2.0;

    let file_data = match &a.data {
        Some(path) => {
            let db = load(path, a.format.as_deref())?;
            let qp = a
                .queries
                .as_deref()
                .ok_or_else(|| anyhow!("--data requires --queries for hash-compare"))?;
            let queries = load(qp, a.queries_format.as_deref())?;
            Some((db, queries))
        }
        None => None,
    };

    let mut comments: Vec<String> = Vec::new();
    let mut per_method: Vec<(&str, Vec<RecallCurve>)> =
        vec![("pca", Vec::new()), ("mrc", Vec::new()), ("random", Vec::new())];

    for &seed in &seeds {
        let (db, queries) = match &file_data {
            Some((db, queries)) => (db.clone(), queries.clone()),
            None => {
                let hi = a.hi_dims.unwrap_or(a.d / 2).min(a.d);
                let mut diag = vec![a.noise_lo; a.d];
                for v in diag.iter_mut().take(hi) {
                    *v = a.noise_hi;
                }
                let pairs = gen_aniso_pairs(a.n, a.d, &diag, seed)?;
                if pairs.noise_warning {
                    comments.push(format!(
                        "seed={seed}: nearest neighbor differs from the paired base point for \
                         {:.1}% of probed queries; S_NN no longer reflects the requested noise",
                        pairs.nn_mismatch * 100.0
                    ));
                }
                (pairs.database, pairs.queries)
            }
        };
        if queries.n() < a.snn_queries + a.eval_queries {
            bail!(
                "need snn_queries + eval_queries = {} queries, have {}",
                a.snn_queries + a.eval_queries,
                queries.n()
            );
        }
        let snn_split = queries.subset(&(0..a.snn_queries).collect::<Vec<_>>())?;
        let eval_split = queries
            .subset(&(a.snn_queries..a.snn_queries + a.eval_queries).collect::<Vec<_>>())?;

        let snn = estimate_snn(&db, &snn_split, p)?;
        if snn.excluded > 0 {
            comments.push(format!(
                "seed={seed}: excluded {} S_NN queries that duplicate database points",
                snn.excluded
            ));
        }
        let truth = ground_truth_nn(&db, &eval_split, p)?;

        let indexes = [
            ("pca", train_pca_hash(&db, a.bits)?),
            ("mrc", train_mrc_hash(&db, &snn.matrix, a.bits, a.ridge)?),
            ("random", train_random_hash(&db, a.bits, seed)?),
        ];
        for (name, index) in &indexes {
            let points = hamming_recall_at_budgets(index, &eval_split, &truth, &budgets)?;
            let curve = RecallCurve::new(*name, p, a.bits, seed, points)?;
            per_method
                .iter_mut()
                .find(|(m, _)| m == name)
                .unwrap()
                .1
                .push(curve);
        }
    }

    let mut rows = Vec::new();
    for (_, curves) in &per_method {
        rows.extend(curve_csv_with_aggregates(curves));
    }
    write_csv(
        a.common.out.as_deref(),
        RecallCurve::csv_header(),
        &hash,
        &comments,
        &rows,
    )
}
