//! Market-return datasets: a CSV with a header row and either a `price`
//! column (log returns are computed between consecutive rows) or a
//! `log_return` column (taken as is). Extra columns such as dates are
//! ignored.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};

use qcbm_core::target::{returns_histogram_target, TargetDistribution};

enum SourceColumn {
    Price(usize),
    LogReturn(usize),
}

/// Reads the return series from `path`. Malformed cells are reported
/// with their line number; prices must be positive so the log exists.
pub fn load_returns(path: &Path) -> Result<Vec<f64>> {
    let mut reader = csv::Reader::from_path(path)
        .with_context(|| format!("opening returns file {}", path.display()))?;
    let headers = reader
        .headers()
        .with_context(|| format!("reading the header row of {}", path.display()))?;
    let column = if let Some(i) = headers.iter().position(|h| h.trim() == "log_return") {
        SourceColumn::LogReturn(i)
    } else if let Some(i) = headers.iter().position(|h| h.trim() == "price") {
        SourceColumn::Price(i)
    } else {
        bail!(
            "{}: no usable column; the header must contain `price` or `log_return`, got: {}",
            path.display(),
            headers.iter().collect::<Vec<_>>().join(", ")
        );
    };

    let index = match column {
        SourceColumn::Price(i) | SourceColumn::LogReturn(i) => i,
    };
    let mut values = Vec::new();
    for record in reader.records() {
        let record = record.with_context(|| format!("reading {}", path.display()))?;
        let line = record
            .position()
            .map(|p| p.line())
            .unwrap_or(values.len() as u64 + 2);
        let cell = record.get(index).ok_or_else(|| {
            anyhow!("{}: line {line}: the row is missing its value column", path.display())
        })?;
        let value: f64 = cell.trim().parse().map_err(|_| {
            anyhow!("{}: line {line}: {cell:?} is not a number", path.display())
        })?;
        if !value.is_finite() {
            bail!("{}: line {line}: values must be finite", path.display());
        }
        if matches!(column, SourceColumn::Price(_)) && value <= 0.0 {
            bail!(
                "{}: line {line}: prices must be positive to take logs, got {value}",
                path.display()
            );
        }
        values.push(value);
    }

    match column {
        SourceColumn::LogReturn(_) => {
            if values.is_empty() {
                bail!("{}: needs at least one return row", path.display());
            }
            Ok(values)
        }
        SourceColumn::Price(_) => {
            if values.len() < 2 {
                bail!(
                    "{}: needs at least two price rows to form a return",
                    path.display()
                );
            }
            Ok(values.windows(2).map(|w| (w[1] / w[0]).ln()).collect())
        }
    }
}

/// Loads the series and histograms it into `bins` bins between the
/// requested quantiles.
pub fn csv_returns_target(
    path: &Path,
    bins: usize,
    clip_lo: f64,
    clip_hi: f64,
) -> Result<TargetDistribution> {
    let returns = load_returns(path)?;
    returns_histogram_target(&returns, bins, clip_lo, clip_hi)
        .map_err(|e| anyhow!("building the target histogram from {}: {e}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_csv(lines: &[&str]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        for line in lines {
            writeln!(f, "{line}").unwrap();
        }
        f.flush().unwrap();
        f
    }

    #[test]
    fn price_column_becomes_log_returns() {
        let f = write_csv(&["date,price", "2024-01-01,1.0", "2024-01-02,2.718281828459045"]);
        let r = load_returns(f.path()).unwrap();
        assert_eq!(r.len(), 1);
        assert!((r[0] - 1.0).abs() < 1e-12, "return {}", r[0]);
    }

    #[test]
    fn log_return_column_is_taken_directly() {
        let f = write_csv(&["log_return", "0.01", "-0.02", "0.005"]);
        assert_eq!(load_returns(f.path()).unwrap(), vec![0.01, -0.02, 0.005]);
    }

    #[test]
    fn malformed_cell_reports_its_line() {
        let f = write_csv(&["price", "1.0", "oops", "1.1"]);
        let err = load_returns(f.path()).unwrap_err().to_string();
        assert!(err.contains("line 3"), "{err}");
        assert!(err.contains("oops"), "{err}");
    }

    #[test]
    fn nonpositive_price_reports_its_line() {
        let f = write_csv(&["price", "1.0", "0.0"]);
        let err = load_returns(f.path()).unwrap_err().to_string();
        assert!(err.contains("line 3"), "{err}");
        assert!(err.contains("positive"), "{err}");
    }

    #[test]
    fn too_few_prices_is_an_error() {
        let f = write_csv(&["price", "1.0"]);
        let err = load_returns(f.path()).unwrap_err().to_string();
        assert!(err.contains("two price rows"), "{err}");
    }

    #[test]
    fn missing_columns_are_named() {
        let f = write_csv(&["date,close", "2024-01-01,1.0"]);
        let err = load_returns(f.path()).unwrap_err().to_string();
        assert!(err.contains("price"), "{err}");
        assert!(err.contains("log_return"), "{err}");
    }

    #[test]
    fn constant_prices_give_a_center_point_mass() {
        let f = write_csv(&["price", "3.0", "3.0", "3.0", "3.0"]);
        let t = csv_returns_target(f.path(), 31, 0.01, 0.99).unwrap();
        assert_eq!(t.bin_probs[15], 1.0);
        assert_eq!(t.bin_probs.iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn two_prices_fill_a_single_bin() {
        let f = write_csv(&["price", "1.0", "2.718281828459045"]);
        let t = csv_returns_target(f.path(), 5, 0.0, 1.0).unwrap();
        assert_eq!(t.bin_probs.iter().filter(|&&p| p > 0.0).count(), 1);
        assert!((t.bin_probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn synthetic_normal_returns_recover_the_shape() {
        // 5000 draws from a fixed pseudo-normal series; the histogram
        // should put most mass near the center bins.
        let mut lines = vec!["log_return".to_string()];
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = || {
            // xorshift into two uniforms, Box-Muller into one normal
            let mut x = state;
            x ^= x << 13;
            x ^= x >> 7;
            x ^= x << 17;
            state = x;
            let u1 = ((x >> 11) as f64 / (1u64 << 53) as f64).max(1e-16);
            let mut y = x.wrapping_mul(0x2545f4914f6cdd1d);
            y ^= y >> 33;
            let u2 = (y >> 11) as f64 / (1u64 << 53) as f64;
            (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
        };
        for _ in 0..5000 {
            lines.push(format!("{}", 0.01 * next()));
        }
        let refs: Vec<&str> = lines.iter().map(|s| s.as_str()).collect();
        let f = write_csv(&refs);
        let t = csv_returns_target(f.path(), 11, 0.001, 0.999).unwrap();
        let center: f64 = t.bin_probs[3..8].iter().sum();
        assert!(center > 0.8, "central mass {center}");
    }
}
