//! Config-file expansion and CSV plumbing shared by the commands.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

/// Rewrite argv so `--config FILE` injects the file's `key=value` pairs as
/// long flags right after the subcommand. Keys that also appear as explicit
/// flags are not injected, so flags win over the file.
pub fn expand_config_args(argv: Vec<String>) -> Result<Vec<String>> {
    let config_pos = argv.iter().position(|a| a == "--config");
    let path = match config_pos {
        None => {
            // Also accept --config=path.
            match argv.iter().find_map(|a| a.strip_prefix("--config=")) {
                None => return Ok(argv),
                Some(p) => PathBuf::from(p),
            }
        }
        Some(i) => PathBuf::from(
            argv.get(i + 1)
                .context("--config requires a file path")?,
        ),
    };
    let text = std::fs::read_to_string(&path)
        .with_context(|| format!("cannot read config file {}", path.display()))?;

    // Long flags the user passed explicitly (normalized to kebab-case).
    let explicit: Vec<String> = argv
        .iter()
        .skip(2)
        .filter_map(|a| a.strip_prefix("--"))
        .map(|a| a.split('=').next().unwrap_or(a).replace('_', "-"))
        .collect();

    let mut injected: Vec<String> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!(
                "{}:{}: expected key=value, got {line:?}",
                path.display(),
                lineno + 1
            );
        };
        let key = key.trim().replace('_', "-");
        if explicit.contains(&key) {
            continue;
        }
        injected.push(format!("--{key}"));
        injected.push(value.trim().to_string());
    }

    // argv = [prog, subcommand, rest...]; inject right after the subcommand.
    if argv.len() < 2 {
        bail!("--config requires a subcommand");
    }
    let mut out = argv[..2].to_vec();
    out.extend(injected);
    out.extend(argv[2..].iter().cloned());
    Ok(out)
}

/// FNV-1a hash of the resolved configuration's debug form.
pub fn config_hash(cfg: &impl std::fmt::Debug) -> String {
    let text = format!("{cfg:?}");
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in text.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x1_0000_01b3);
    }
    format!("{h:016x}")
}

/// Write a self-describing CSV: header, config-hash comment, then rows, to
/// the path or to stdout.
pub fn write_csv(
    out: Option<&Path>,
    header: &str,
    hash: &str,
    extra_comments: &[String],
    rows: &[String],
) -> Result<()> {
    let mut text = String::new();
    text.push_str(header);
    text.push('\n');
    text.push_str(&format!("# config_hash={hash}\n"));
    for c in extra_comments {
        text.push_str(&format!("# {c}\n"));
    }
    for r in rows {
        text.push_str(r);
        text.push('\n');
    }
    match out {
        Some(path) => {
            let mut f = std::fs::File::create(path)
                .with_context(|| format!("cannot create {}", path.display()))?;
            f.write_all(text.as_bytes())?;
        }
        None => {
            print!("{text}");
        }
    }
    Ok(())
}

/// Comma-separated integer grid, e.g. `16,64,256`.
pub fn parse_usize_grid(s: &str) -> Result<Vec<usize>> {
    let grid: Vec<usize> = s
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .with_context(|| format!("bad integer {t:?} in grid"))
        })
        .collect::<Result<_>>()?;
    if grid.is_empty() {
        bail!("grid is empty");
    }
    Ok(grid)
}

/// Comma list (`0.05,0.2,1.0`) or inclusive range with step
/// (`0.02:0.2:0.02`).
pub fn parse_f64_grid(s: &str) -> Result<Vec<f64>> {
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            bail!("range grid must be start:end:step, got {s:?}");
        }
        let start: f64 = parts[0].trim().parse().context("bad range start")?;
        let end: f64 = parts[1].trim().parse().context("bad range end")?;
        let step: f64 = parts[2].trim().parse().context("bad range step")?;
        if !(step > 0.0) || end < start {
            bail!("range grid needs end >= start and step > 0");
        }
        let mut grid = Vec::new();
        let mut v = start;
        while v <= end + 1e-12 * step {
            grid.push(v);
            v += step;
        }
        return Ok(grid);
    }
    let grid: Vec<f64> = s
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .with_context(|| format!("bad number {t:?} in grid"))
        })
        .collect::<Result<_>>()?;
    if grid.is_empty() {
        bail!("grid is empty");
    }
    Ok(grid)
}

/// Mean and (population) standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}
