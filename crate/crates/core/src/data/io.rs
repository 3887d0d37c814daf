use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{DataError, Dataset, DomainTag};
use crate::numerics::DenseMatrix;

const MAGIC: &[u8; 4] = b"DLCF";
const HEADER_LEN: usize = 12;

/// On-disk layout of a feature file.
///
/// * `Csv`: one sample per line, comma-separated decimals, no header.
/// * `Binary`: `"DLCF"`, `u32` LE feature count, `u32` LE sample count, then
///   the samples back to back as little-endian `f64` (each sample's features
///   contiguous).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureFormat {
    Csv,
    Binary,
}

impl FeatureFormat {
    /// `.bin`/`.dlcf` are binary, anything else is CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("bin") | Some("dlcf") => FeatureFormat::Binary,
            _ => FeatureFormat::Csv,
        }
    }
}

impl FromStr for FeatureFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(FeatureFormat::Csv),
            "binary" | "bin" => Ok(FeatureFormat::Binary),
            other => Err(format!("unknown feature format '{other}'")),
        }
    }
}

fn read(path: &Path) -> Result<Vec<u8>, DataError> {
    fs::read(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_csv(path: &Path, bytes: &[u8]) -> Result<DenseMatrix, DataError> {
    let text = std::str::from_utf8(bytes).map_err(|e| DataError::Parse {
        path: path.to_path_buf(),
        line: 1 + bytes[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count(),
        message: "invalid UTF-8".into(),
    })?;
    let mut samples: Vec<f64> = Vec::new();
    let mut width = None;
    let mut count = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let before = samples.len();
        for field in line.split(',') {
            let v: f64 = field.trim().parse().map_err(|_| DataError::Parse {
                path: path.to_path_buf(),
                line: idx + 1,
                message: format!("cannot parse '{}' as a number", field.trim()),
            })?;
            if !v.is_finite() {
                return Err(DataError::NonFiniteValue {
                    feature: samples.len() - before,
                    sample: count,
                });
            }
            samples.push(v);
        }
        let w = samples.len() - before;
        match width {
            None => width = Some(w),
            Some(expected) if expected != w => {
                return Err(DataError::Parse {
                    path: path.to_path_buf(),
                    line: idx + 1,
                    message: format!("expected {expected} fields, found {w}"),
                })
            }
            _ => {}
        }
        count += 1;
    }
    let m = width.ok_or_else(|| DataError::Empty(format!("{} has no samples", path.display())))?;
    // each sample is a contiguous column in column-major storage
    Ok(DenseMatrix::from_column_slice(m, count, &samples))
}

fn parse_binary(path: &Path, bytes: &[u8]) -> Result<DenseMatrix, DataError> {
    let err = |offset: usize, message: &str| DataError::BinaryParse {
        path: path.to_path_buf(),
        offset,
        message: message.to_string(),
    };
    if bytes.len() < HEADER_LEN {
        return Err(err(bytes.len(), "truncated header"));
    }
    if &bytes[..4] != MAGIC {
        return Err(err(0, "bad magic, expected \"DLCF\""));
    }
    let m = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let n = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    if m == 0 || n == 0 {
        return Err(err(4, "feature and sample counts must be positive"));
    }
    let expected = m
        .checked_mul(n)
        .and_then(|c| c.checked_mul(8))
        .and_then(|c| c.checked_add(HEADER_LEN))
        .ok_or_else(|| err(4, "dimensions overflow"))?;
    if bytes.len() != expected {
        return Err(err(
            bytes.len().min(expected),
            &format!("expected {expected} bytes for {m}x{n}, found {}", bytes.len()),
        ));
    }
    let mut values = Vec::with_capacity(m * n);
    for (i, chunk) in bytes[HEADER_LEN..].chunks_exact(8).enumerate() {
        let v = f64::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            return Err(DataError::NonFiniteValue {
                feature: i % m,
                sample: i / m,
            });
        }
        values.push(v);
    }
    Ok(DenseMatrix::from_column_slice(m, n, &values))
}

/// Reads a label file: one integer per line, blank lines ignored.
pub fn load_labels(path: &Path) -> Result<Vec<usize>, DataError> {
    let bytes = read(path)?;
    let text = String::from_utf8_lossy(&bytes);
    let mut labels = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        // tolerate "3.0" style labels exported from numeric tools
        let parsed = line
            .parse::<usize>()
            .ok()
            .or_else(|| {
                line.parse::<f64>()
                    .ok()
                    .filter(|v| v.fract() == 0.0 && *v >= 0.0 && *v < u32::MAX as f64)
                    .map(|v| v as usize)
            })
            .ok_or_else(|| DataError::Parse {
                path: path.to_path_buf(),
                line: idx + 1,
                message: format!("cannot parse '{line}' as a class label"),
            })?;
        labels.push(parsed);
    }
    Ok(labels)
}

/// Loads a feature file (samples as rows on disk) into an `m × n` dataset,
/// attaching labels when `label_path` is given.
pub fn load_features(
    feature_path: &Path,
    label_path: Option<&Path>,
    format: FeatureFormat,
) -> Result<Dataset, DataError> {
    let bytes = read(feature_path)?;
    let features = match format {
        FeatureFormat::Csv => parse_csv(feature_path, &bytes)?,
        FeatureFormat::Binary => parse_binary(feature_path, &bytes)?,
    };
    let labels = label_path.map(load_labels).transpose()?;
    let name = feature_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Dataset::new(name, DomainTag::Source, features, labels)
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), DataError> {
    let io = |source| DataError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut f = fs::File::create(path).map_err(io)?;
    f.write_all(bytes).map_err(io)
}

/// Writes the dataset's features in the given on-disk layout.
pub fn save_features(d: &Dataset, path: &Path, format: FeatureFormat) -> Result<(), DataError> {
    let x = d.features();
    let bytes = match format {
        FeatureFormat::Binary => {
            let mut out = Vec::with_capacity(HEADER_LEN + 8 * x.len());
            out.extend_from_slice(MAGIC);
            out.extend_from_slice(&(x.nrows() as u32).to_le_bytes());
            out.extend_from_slice(&(x.ncols() as u32).to_le_bytes());
            for v in x.as_slice() {
                out.extend_from_slice(&v.to_le_bytes());
            }
            out
        }
        FeatureFormat::Csv => {
            let mut out = String::new();
            for col in x.column_iter() {
                let fields: Vec<String> = col.iter().map(|v| format!("{v:?}")).collect();
                out.push_str(&fields.join(","));
                out.push('\n');
            }
            out.into_bytes()
        }
    };
    write(path, &bytes)
}

pub fn save_labels(labels: &[usize], path: &Path) -> Result<(), DataError> {
    let mut out = String::with_capacity(labels.len() * 3);
    for l in labels {
        out.push_str(&l.to_string());
        out.push('\n');
    }
    write(path, out.as_bytes())
}
