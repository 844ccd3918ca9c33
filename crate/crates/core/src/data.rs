//! Reading observations and the ±2·max outlier augmentation.

use std::path::Path;

use crate::error::{Error, Result};

/// Parse one value per line. A first line that does not parse is taken as a
/// header; blank lines are skipped. Non-finite values are rejected.
pub fn parse(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        match line.parse::<f64>() {
            Ok(v) if v.is_finite() => out.push(v),
            Ok(v) => {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("non-finite value {v}"),
                })
            }
            Err(_) if i == 0 => continue,
            Err(e) => {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("cannot parse {line:?}: {e}"),
                })
            }
        }
    }
    if out.is_empty() {
        return Err(Error::Degenerate("no observations in input".into()));
    }
    Ok(out)
}

pub fn ingest(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse(&text)
}

/// Append `+2m` and `−2m`, where `m` is the largest value, or the largest
/// absolute value when `use_abs` is set.
pub fn add_outliers(data: &[f64], use_abs: bool) -> Result<Vec<f64>> {
    if data.is_empty() {
        return Err(Error::Degenerate("no observations".into()));
    }
    let m = if use_abs {
        data.iter().fold(0.0f64, |a, x| a.max(x.abs()))
    } else {
        data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    };
    let mut out = data.to_vec();
    out.push(2.0 * m);
    out.push(-2.0 * m);
    Ok(out)
}
