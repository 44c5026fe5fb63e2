//! On-disk formats: the EMB1/LBL1/SCR1 binary arrays, their CSV
//! alternatives, query-batch JSON, and experiment-record JSONL.
//!
//! The binary layouts are little-endian and fully specified: a 4-byte
//! magic, u32 counts, then a packed f32/i32 payload. Loaders check the
//! payload length exactly and reject trailing bytes.

use crate::model::{EmbeddingSet, ModelError};
use crate::metrics::{ExperimentRecord, IterationRecord};
use crate::strategies::{ScoreMatrix, StrategyError};
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use thiserror::Error;

pub const EMB_MAGIC: [u8; 4] = *b"EMB1";
pub const LBL_MAGIC: [u8; 4] = *b"LBL1";
pub const SCR_MAGIC: [u8; 4] = *b"SCR1";

#[derive(Debug, Error)]
pub enum FormatError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },
    #[error("truncated payload: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("{extra} trailing bytes after the declared payload")]
    TrailingBytes { extra: usize },
    #[error("count mismatch: file declares {found}, expected {expected}")]
    CountMismatch { expected: usize, found: usize },
    #[error("score row {row} sums to {sum}, outside 1 ± 1e-4")]
    NonStochasticRow { row: usize, sum: f64 },
    #[error("line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
}

fn read_exact_file(path: &Path, magic: [u8; 4]) -> Result<Vec<u8>, FormatError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() < 4 {
        return Err(FormatError::Truncated { expected: 4, found: bytes.len() });
    }
    let found = [bytes[0], bytes[1], bytes[2], bytes[3]];
    if found != magic {
        return Err(FormatError::BadMagic { expected: magic, found });
    }
    Ok(bytes)
}

fn check_len(bytes: &[u8], expected: usize) -> Result<(), FormatError> {
    match bytes.len().cmp(&expected) {
        std::cmp::Ordering::Less => Err(FormatError::Truncated {
            expected,
            found: bytes.len(),
        }),
        std::cmp::Ordering::Greater => Err(FormatError::TrailingBytes {
            extra: bytes.len() - expected,
        }),
        std::cmp::Ordering::Equal => Ok(()),
    }
}

fn u32_at(bytes: &[u8], offset: usize) -> Result<u32, FormatError> {
    let end = offset + 4;
    if bytes.len() < end {
        return Err(FormatError::Truncated { expected: end, found: bytes.len() });
    }
    Ok(u32::from_le_bytes(bytes[offset..end].try_into().unwrap()))
}

/// Writes the EMB1 binary format. The payload narrows to f32.
pub fn write_embeddings(path: &Path, set: &EmbeddingSet) -> Result<(), FormatError> {
    let mut out = Vec::with_capacity(12 + set.len() * set.dim() * 4);
    out.extend_from_slice(&EMB_MAGIC);
    out.extend_from_slice(&(set.len() as u32).to_le_bytes());
    out.extend_from_slice(&(set.dim() as u32).to_le_bytes());
    for &v in set.data() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Reads and validates an EMB1 file.
pub fn read_embeddings(path: &Path) -> Result<EmbeddingSet, FormatError> {
    let bytes = read_exact_file(path, EMB_MAGIC)?;
    let n = u32_at(&bytes, 4)? as usize;
    let d = u32_at(&bytes, 8)? as usize;
    check_len(&bytes, 12 + n * d * 4)?;
    let mut data = Vec::with_capacity(n * d);
    for chunk in bytes[12..].chunks_exact(4) {
        data.push(f32::from_le_bytes(chunk.try_into().unwrap()) as f64);
    }
    Ok(EmbeddingSet::validate(data, d, None, None, None)?)
}

/// Writes LBL1: u32 count, then i32 labels (-1 marks unknown).
pub fn write_labels(path: &Path, labels: &[i32]) -> Result<(), FormatError> {
    let mut out = Vec::with_capacity(8 + labels.len() * 4);
    out.extend_from_slice(&LBL_MAGIC);
    out.extend_from_slice(&(labels.len() as u32).to_le_bytes());
    for &l in labels {
        out.extend_from_slice(&l.to_le_bytes());
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn read_labels(path: &Path) -> Result<Vec<i32>, FormatError> {
    let bytes = read_exact_file(path, LBL_MAGIC)?;
    let n = u32_at(&bytes, 4)? as usize;
    check_len(&bytes, 8 + n * 4)?;
    Ok(bytes[8..]
        .chunks_exact(4)
        .map(|c| i32::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

/// Binds a label vector to an embedding set, enforcing the count pairing
/// and label range.
pub fn attach_labels(
    set: &EmbeddingSet,
    labels: Vec<i32>,
    classes: Option<u32>,
) -> Result<EmbeddingSet, FormatError> {
    if labels.len() != set.len() {
        return Err(FormatError::CountMismatch {
            expected: set.len(),
            found: labels.len(),
        });
    }
    let mut rebuilt = EmbeddingSet::validate(
        set.data().to_vec(),
        set.dim(),
        Some(set.ids().to_vec()),
        Some(labels),
        classes,
    )?;
    if set.is_normalized() {
        rebuilt = rebuilt.l2_normalize()?;
    }
    Ok(rebuilt)
}

/// A loaded score matrix plus the rows that needed renormalization.
#[derive(Debug)]
pub struct LoadedScores {
    pub scores: ScoreMatrix,
    pub renormalized_rows: Vec<usize>,
}

/// Writes SCR1: u32 N, u32 C, row-major f32 probabilities.
pub fn write_scores(path: &Path, probs: &[f64], classes: usize) -> Result<(), FormatError> {
    assert!(classes >= 1 && probs.len() % classes == 0);
    let n = probs.len() / classes;
    let mut out = Vec::with_capacity(12 + probs.len() * 4);
    out.extend_from_slice(&SCR_MAGIC);
    out.extend_from_slice(&(n as u32).to_le_bytes());
    out.extend_from_slice(&(classes as u32).to_le_bytes());
    for &v in probs {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Reads SCR1. Rows whose sum is within 1e-4 of 1 are renormalized and
/// reported; rows further out are rejected.
pub fn read_scores(path: &Path) -> Result<LoadedScores, FormatError> {
    let bytes = read_exact_file(path, SCR_MAGIC)?;
    let n = u32_at(&bytes, 4)? as usize;
    let c = u32_at(&bytes, 8)? as usize;
    check_len(&bytes, 12 + n * c * 4)?;
    let mut probs = Vec::with_capacity(n * c);
    for chunk in bytes[12..].chunks_exact(4) {
        probs.push(f32::from_le_bytes(chunk.try_into().unwrap()) as f64);
    }
    let mut renormalized_rows = Vec::new();
    for row in 0..n {
        let slice = &mut probs[row * c..(row + 1) * c];
        let sum: f64 = slice.iter().sum();
        if (sum - 1.0).abs() > 1e-4 {
            return Err(FormatError::NonStochasticRow { row, sum });
        }
        if sum != 1.0 {
            for v in slice.iter_mut() {
                *v /= sum;
            }
            renormalized_rows.push(row);
        }
    }
    // renormalization can leave residue at the last ulp; snap tiny drift
    for row in 0..n {
        let slice = &mut probs[row * c..(row + 1) * c];
        let sum: f64 = slice.iter().sum();
        if sum != 1.0 && (sum - 1.0).abs() < 1e-9 {
            let last = slice.last_mut().unwrap();
            *last += 1.0 - sum;
            *last = last.clamp(0.0, 1.0);
        }
    }
    Ok(LoadedScores {
        scores: ScoreMatrix::validate(probs, c)?,
        renormalized_rows,
    })
}

/// CSV embeddings: one row per example, `d` numeric columns, optional
/// single header line.
pub fn read_embeddings_csv(path: &Path) -> Result<EmbeddingSet, FormatError> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut data = Vec::new();
    let mut dim = None;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        let parsed: Result<Vec<f64>, _> = fields.iter().map(|f| f.parse::<f64>()).collect();
        match parsed {
            Ok(row) => {
                match dim {
                    None => dim = Some(row.len()),
                    Some(d) if d != row.len() => {
                        return Err(FormatError::Csv {
                            line: lineno + 1,
                            message: format!("expected {d} columns, found {}", row.len()),
                        })
                    }
                    _ => {}
                }
                data.extend(row);
            }
            Err(_) if lineno == 0 && dim.is_none() => {} // header line
            Err(e) => {
                return Err(FormatError::Csv {
                    line: lineno + 1,
                    message: e.to_string(),
                })
            }
        }
    }
    let dim = dim.ok_or(FormatError::Csv {
        line: 0,
        message: "no data rows".into(),
    })?;
    Ok(EmbeddingSet::validate(data, dim, None, None, None)?)
}

/// CSV labels: one integer per line, optional header.
pub fn read_labels_csv(path: &Path) -> Result<Vec<i32>, FormatError> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut labels = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        match trimmed.parse::<i32>() {
            Ok(v) => labels.push(v),
            Err(_) if lineno == 0 && labels.is_empty() => {} // header line
            Err(e) => {
                return Err(FormatError::Csv {
                    line: lineno + 1,
                    message: e.to_string(),
                })
            }
        }
    }
    Ok(labels)
}

/// Loads embeddings by extension: `.csv` goes through the CSV reader,
/// anything else through EMB1.
pub fn load_embeddings(path: &Path) -> Result<EmbeddingSet, FormatError> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        read_embeddings_csv(path)
    } else {
        read_embeddings(path)
    }
}

/// Loads labels by extension, as [`load_embeddings`].
pub fn load_labels(path: &Path) -> Result<Vec<i32>, FormatError> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        read_labels_csv(path)
    } else {
        read_labels(path)
    }
}

/// Writes a query batch as a single JSON object.
pub fn write_batch_json<W: Write>(mut out: W, batch: &crate::model::QueryBatch) -> Result<(), FormatError> {
    serde_json::to_writer(&mut out, batch)?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn read_batch_json(path: &Path) -> Result<crate::model::QueryBatch, FormatError> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// Writes an experiment record as JSON lines: the header object first,
/// then one line per iteration.
pub fn write_record_jsonl<W: Write>(mut out: W, record: &ExperimentRecord) -> Result<(), FormatError> {
    serde_json::to_writer(&mut out, &record.header)?;
    out.write_all(b"\n")?;
    for iteration in &record.iterations {
        serde_json::to_writer(&mut out, iteration)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_record_jsonl(path: &Path) -> Result<ExperimentRecord, FormatError> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = serde_json::from_str(lines.next().ok_or(FormatError::Csv {
        line: 0,
        message: "empty record file".into(),
    })?)?;
    let iterations: Result<Vec<IterationRecord>, _> =
        lines.map(serde_json::from_str).collect();
    Ok(ExperimentRecord {
        header,
        iterations: iterations?,
    })
}
