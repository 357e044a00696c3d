//! End-to-end checks of the `nndc` binary: the documented CSV contracts,
//! determinism of reruns, config-file precedence, and exit codes.

use std::path::Path;
use std::process::{Command, Output};

fn nndc(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nndc"))
        .args(args)
        .current_dir(dir)
        .env("NNDC_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn stdout_of(out: &Output) -> String {
    assert!(
        out.status.success(),
        "command failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn contrast_matches_hand_computation() {
    let dir = tempfile::tempdir().unwrap();
    // 1-D points {1, 2, 10} with query 0: mean 13/3, nearest 1.
    std::fs::write(dir.path().join("data.csv"), "1\n2\n10\n").unwrap();
    std::fs::write(dir.path().join("q.csv"), "0\n").unwrap();
    let out = nndc(
        &[
            "contrast",
            "--data",
            "data.csv",
            "--queries",
            "q.csv",
            "--p",
            "1",
        ],
        dir.path(),
    );
    let text = stdout_of(&out);
    let empirical = text
        .lines()
        .find(|l| l.starts_with("empirical"))
        .expect("empirical row");
    let c_r: f64 = empirical.split(',').nth(7).unwrap().parse().unwrap();
    assert!((c_r - 13.0 / 3.0).abs() < 1e-9, "c_r = {c_r}");
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "dim-sweep",
        "--d-grid",
        "8,16",
        "--n",
        "400",
        "--queries",
        "20",
        "--seeds",
        "1,2",
    ];
    let a = stdout_of(&nndc(&args, dir.path()));
    let b = stdout_of(&nndc(&args, dir.path()));
    assert_eq!(a, b);
    assert!(a.starts_with("n,d,s,p,k,sigma_prime,"));
    assert!(a.lines().nth(1).unwrap().starts_with("# config_hash="));
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let run = |threads: &str| -> String {
        let out = Command::new(env!("CARGO_BIN_EXE_nndc"))
            .args([
                "dim-sweep",
                "--d-grid",
                "8,32",
                "--n",
                "1000",
                "--queries",
                "30",
                "--seeds",
                "1,2",
            ])
            .current_dir(dir.path())
            .env("NNDC_THREADS", threads)
            .output()
            .unwrap();
        stdout_of(&out)
    };
    assert_eq!(run("1"), run("4"));
}

#[test]
fn predict_sweep_rows_are_monotone() {
    let dir = tempfile::tempdir().unwrap();
    let out = nndc(
        &[
            "predict-sweep",
            "--sigma-grid",
            "0.02:0.2:0.02",
            "--n-grid",
            "100,10000,1000000,100000000",
            "--p",
            "1",
        ],
        dir.path(),
    );
    let text = stdout_of(&out);
    // Parse rows into (sigma, n, c_r).
    let mut rows: Vec<(f64, f64, f64)> = Vec::new();
    for line in text.lines().skip(2) {
        let cells: Vec<&str> = line.split(',').collect();
        rows.push((
            cells[6].parse().unwrap(),
            cells[1].parse().unwrap(),
            cells[7].parse().unwrap(),
        ));
    }
    assert_eq!(rows.len(), 40);
    // Monotone in n at fixed sigma and in sigma at fixed n.
    for w in rows.chunks(4) {
        for pair in w.windows(2) {
            assert!(pair[1].2 >= pair[0].2, "not monotone in n: {pair:?}");
        }
    }
    for i in 0..4 {
        let col: Vec<f64> = rows.iter().skip(i).step_by(4).map(|r| r.2).collect();
        for pair in col.windows(2) {
            assert!(pair[1] >= pair[0], "not monotone in sigma: {col:?}");
        }
    }
}

#[test]
fn gen_roundtrips_through_all_formats() {
    let dir = tempfile::tempdir().unwrap();
    for (name, fmt) in [
        ("a.nnd", "dense-binary"),
        ("a.txt", "sparse-text"),
        ("a.csv", "dense-csv"),
    ] {
        let out = nndc(
            &[
                "gen", "--n", "50", "--d", "8", "--s", "0.6", "--seed", "3", "--out", name,
                "--format", fmt,
            ],
            dir.path(),
        );
        assert!(out.status.success(), "{fmt}: {:?}", out);
        let contrast = nndc(
            &["contrast", "--data", name, "--format", fmt, "--holdout", "5"],
            dir.path(),
        );
        let text = stdout_of(&contrast);
        assert!(text.contains("empirical,45,8,"), "{fmt}: {text}");
    }
}

#[test]
fn gen_is_deterministic_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["x1.nnd", "x2.nnd"] {
        nndc(
            &["gen", "--n", "100", "--d", "16", "--seed", "9", "--out", name],
            dir.path(),
        );
    }
    let a = std::fs::read(dir.path().join("x1.nnd")).unwrap();
    let b = std::fs::read(dir.path().join("x2.nnd")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn commands_do_not_mutate_inputs() {
    let dir = tempfile::tempdir().unwrap();
    nndc(
        &["gen", "--n", "200", "--d", "6", "--seed", "4", "--out", "in.csv"],
        dir.path(),
    );
    let before = std::fs::read(dir.path().join("in.csv")).unwrap();
    nndc(
        &[
            "contrast", "--data", "in.csv", "--holdout", "20", "--out", "report.csv",
        ],
        dir.path(),
    );
    let after = std::fs::read(dir.path().join("in.csv")).unwrap();
    assert_eq!(before, after);
    assert!(dir.path().join("report.csv").exists());
}

#[test]
fn config_file_entries_lose_to_explicit_flags() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("exp.cfg"), "d-grid=4\nn=300\nqueries=10\nseeds=1\n").unwrap();
    let from_file = stdout_of(&nndc(
        &["dim-sweep", "--config", "exp.cfg"],
        dir.path(),
    ));
    assert!(from_file.lines().nth(2).unwrap().starts_with("300,4,"));
    let overridden = stdout_of(&nndc(
        &["dim-sweep", "--config", "exp.cfg", "--d-grid", "8"],
        dir.path(),
    ));
    assert!(overridden.lines().nth(2).unwrap().starts_with("300,8,"));
}

#[test]
fn exit_codes_distinguish_config_and_data_errors() {
    let dir = tempfile::tempdir().unwrap();
    // Unknown flag: clap's usage error.
    let bad_flag = nndc(&["contrast", "--no-such-flag"], dir.path());
    assert_eq!(bad_flag.status.code(), Some(2));

    // Bad grid value: config error.
    let bad_grid = nndc(
        &["predict-sweep", "--sigma-grid", "zero"],
        dir.path(),
    );
    assert_eq!(bad_grid.status.code(), Some(2));

    // Missing data file: data error.
    let missing = nndc(&["contrast", "--data", "nope.csv"], dir.path());
    assert_eq!(missing.status.code(), Some(3));

    // Malformed file content: data error.
    std::fs::write(dir.path().join("bad.csv"), "1.0,2.0\nnot-a-number\n").unwrap();
    let malformed = nndc(
        &["contrast", "--data", "bad.csv", "--holdout", "1"],
        dir.path(),
    );
    assert_eq!(malformed.status.code(), Some(3));

    // Bad thread cap: config error.
    let bad_threads = Command::new(env!("CARGO_BIN_EXE_nndc"))
        .args(["predict-sweep"])
        .env("NNDC_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(bad_threads.status.code(), Some(2));
}

#[test]
fn lsh_eval_emits_aggregate_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = nndc(
        &[
            "lsh-eval",
            "--n",
            "500",
            "--d",
            "8",
            "--bits",
            "4",
            "--tables-grid",
            "1,2,4",
            "--query-count",
            "20",
            "--seeds",
            "1,2",
        ],
        dir.path(),
    );
    let text = stdout_of(&out);
    assert!(text.starts_with("method,p,bits,tables_or_radius,seed,candidates_returned,recall"));
    let mean_rows = text.lines().filter(|l| l.contains(",mean,")).count();
    let std_rows = text.lines().filter(|l| l.contains(",std,")).count();
    assert!(mean_rows > 0 && mean_rows == std_rows);
}

#[test]
fn hash_compare_reports_all_three_methods() {
    let dir = tempfile::tempdir().unwrap();
    let out = nndc(
        &[
            "hash-compare",
            "--n",
            "800",
            "--d",
            "8",
            "--bits",
            "6",
            "--budget-grid",
            "20,80",
            "--snn-queries",
            "200",
            "--eval-queries",
            "50",
            "--seeds",
            "1",
        ],
        dir.path(),
    );
    let text = stdout_of(&out);
    for method in ["pca", "mrc", "random"] {
        assert!(
            text.lines().any(|l| l.starts_with(&format!("{method},"))),
            "missing {method} rows in {text}"
        );
    }
}

#[test]
fn intrinsic_dim_emits_curve_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    nndc(
        &["gen", "--n", "600", "--d", "12", "--seed", "8", "--out", "d.nnd"],
        dir.path(),
    );
    let out = nndc(
        &[
            "intrinsic-dim",
            "--data",
            "d.nnd",
            "--holdout",
            "40",
            "--p-list",
            "1",
            "--d-max",
            "12",
        ],
        dir.path(),
    );
    let text = stdout_of(&out);
    assert!(text.starts_with("kind,d_prime,p,predicted,empirical,abs_discrepancy"));
    assert!(text.lines().any(|l| l.starts_with("# d_e=")));
    let summary: Vec<&str> = text.lines().filter(|l| l.starts_with("summary,")).collect();
    assert_eq!(summary.len(), 1);
    let point_rows = text.lines().filter(|l| l.starts_with("point,")).count();
    assert_eq!(point_rows, 12);
}
