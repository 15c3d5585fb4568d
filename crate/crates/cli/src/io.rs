//! Plain-text artifacts and atomic writes.

use std::fs;
use std::path::{Path, PathBuf};

use semidev::ParameterVector;

use crate::error::CliError;

/// Writes `contents` to a sibling temporary file and renames it over `path`.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let name = path
        .file_name()
        .ok_or_else(|| CliError::Data(format!("{}: not a file path", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp: PathBuf = path.with_file_name(tmp_name);
    fs::write(&tmp, contents).map_err(|e| CliError::Data(format!("{}: {e}", tmp.display())))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        CliError::Data(format!("{}: {e}", path.display()))
    })
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

/// One coordinate per line.
pub fn format_weights(x: &[f64]) -> String {
    let mut out = String::new();
    for v in x {
        out.push_str(&format!("{v}\n"));
    }
    out
}

pub fn parse_weights(text: &str) -> Result<ParameterVector<f64>, CliError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let v: f64 = line
            .parse()
            .map_err(|_| CliError::Data(format!("weights line {}: bad number '{line}'", i + 1)))?;
        out.push(v);
    }
    if out.is_empty() {
        return Err(CliError::Data("weights file is empty".into()));
    }
    Ok(ParameterVector::new(out))
}

/// Rows `k,x_1,...,x_n` as written with checkpoints.
pub fn parse_checkpoints(text: &str) -> Result<Vec<(usize, ParameterVector<f64>)>, CliError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let bad = || CliError::Data(format!("checkpoints line {}: malformed row", i + 1));
        let mut cols = line.split(',');
        let k: usize = cols.next().and_then(|c| c.trim().parse().ok()).ok_or_else(bad)?;
        let x: Vec<f64> = cols
            .map(|c| c.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| bad())?;
        if x.is_empty() {
            return Err(bad());
        }
        out.push((k, ParameterVector::new(x)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_round_trip() {
        let x = [0.1, -2.5e-17, 3.0];
        let back = parse_weights(&format_weights(&x)).unwrap();
        assert_eq!(back.as_slice(), &x);
        assert!(parse_weights("1\nx\n")
            .unwrap_err()
            .to_string()
            .contains("line 2"));
        assert!(parse_weights("\n").is_err());
    }

    #[test]
    fn checkpoints() {
        let rows = parse_checkpoints("0,1,2\n5,3,4\n").unwrap();
        assert_eq!(rows[1].0, 5);
        assert_eq!(rows[1].1.as_slice(), &[3.0, 4.0]);
        assert!(parse_checkpoints("0\n").is_err());
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("w.txt");
        write_atomic(&p, "a").unwrap();
        write_atomic(&p, "b").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "b");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
