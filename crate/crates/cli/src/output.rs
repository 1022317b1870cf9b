//! Encoders for the result files and atomic writes.

use std::io::Write;
use std::path::{Path, PathBuf};

use crate::config::Format;
use crate::error::{CliError, CliResult};

/// One file produced by an experiment, named relative to the output
/// directory.
#[derive(Debug, Clone)]
pub struct Artifact {
    pub name: String,
    pub format: Format,
    pub bytes: Vec<u8>,
}

/// Text form of a number for CSV cells. Infinities are written as `inf`
/// and `-inf`; magnitudes outside `[1e-4, 1e15)` use scientific notation.
pub fn num(x: f64) -> String {
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let a = x.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn csv_artifact(name: impl Into<String>, header: &[&str], rows: Vec<Vec<String>>) -> CliResult<Artifact> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Config(format!("csv encoding: {e}"));
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(&r).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Config(format!("csv encoding: {e}")))?;
    Ok(Artifact { name: name.into(), format: Format::Csv, bytes })
}

/// Binary greyscale PGM, row-major, 0 at `lo` and 255 at `hi`.
pub fn pgm_artifact(name: impl Into<String>, rows: usize, cols: usize, value: impl Fn(usize, usize) -> f64, lo: f64, hi: f64) -> Artifact {
    let mut bytes = format!("P5\n{cols} {rows}\n255\n").into_bytes();
    let span = (hi - lo).max(f64::MIN_POSITIVE);
    for r in 0..rows {
        for c in 0..cols {
            let t = ((value(r, c) - lo) / span).clamp(0.0, 1.0);
            bytes.push((t * 255.0).round() as u8);
        }
    }
    Artifact { name: name.into(), format: Format::Pgm, bytes }
}

pub fn json_artifact(name: impl Into<String>, value: &serde_json::Value) -> CliResult<Artifact> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::Config(format!("json encoding: {e}")))?;
    bytes.push(b'\n');
    Ok(Artifact { name: name.into(), format: Format::Json, bytes })
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so readers never see a partial file.
pub fn write_atomic(dir: &Path, artifact: &Artifact) -> CliResult<PathBuf> {
    let path = dir.join(&artifact.name);
    let parent = path.parent().unwrap_or(dir);
    let fail = |what: &str, e: std::io::Error| CliError::Config(format!("{what} {}: {e}", path.display()));
    std::fs::create_dir_all(parent).map_err(|e| fail("cannot create directory for", e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(parent).map_err(|e| fail("cannot write", e))?;
    tmp.write_all(&artifact.bytes).map_err(|e| fail("cannot write", e))?;
    tmp.persist(&path).map_err(|e| fail("cannot rename into", e.error))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_formatting() {
        assert_eq!(num(0.5), "0.5");
        assert_eq!(num(-300.0), "-300");
        assert_eq!(num(0.0), "0");
        assert_eq!(num(f64::NEG_INFINITY), "-inf");
        assert_eq!(num(1e-30), "1e-30");
        assert_eq!(num(2.5e20), "2.5e20");
    }

    #[test]
    fn csv_has_header() {
        let a = csv_artifact("x.csv", &["a", "b"], vec![vec!["1".into(), "2".into()]]).unwrap();
        assert_eq!(String::from_utf8(a.bytes).unwrap(), "a,b\n1,2\n");
    }

    #[test]
    fn pgm_layout() {
        let a = pgm_artifact("x.pgm", 2, 3, |r, c| (r * 3 + c) as f64, 0.0, 5.0);
        let head = b"P5\n3 2\n255\n";
        assert_eq!(&a.bytes[..head.len()], head);
        assert_eq!(&a.bytes[head.len()..], &[0, 51, 102, 153, 204, 255]);
    }

    #[test]
    fn atomic_write_creates_dirs() {
        let dir = tempfile::tempdir().unwrap();
        let a = Artifact { name: "sub/f.txt".into(), format: Format::Csv, bytes: b"hi".to_vec() };
        let p = write_atomic(dir.path(), &a).unwrap();
        assert_eq!(std::fs::read(p).unwrap(), b"hi");
    }
}
