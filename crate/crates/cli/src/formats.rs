//! Dataset file formats.
//!
//! Binary layout, all little-endian:
//!
//! ```text
//! magic "MUSS" | version u32 = 1 | n u64 | d u32 | flags u32 (bit 0 = labels)
//! n records of: d × f32 embedding | f32 quality | u8 label (only if flagged)
//! ```
//!
//! JSONL: one `{"id", "embedding", "quality", "label"?}` object per line, ids
//! dense `0..n` in any order.

use std::fs::File;
use std::io::{BufRead, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use muss_core::Dataset;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const MAGIC: [u8; 4] = *b"MUSS";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: u64 = 24;
const FLAG_LABELS: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Bin,
    Jsonl,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "bin" => Ok(Format::Bin),
            "jsonl" => Ok(Format::Jsonl),
            other => Err(format!("unknown format {other:?} (expected bin or jsonl)")),
        }
    }
}

impl Format {
    /// `.jsonl` / `.json` / `.ndjson` map to JSONL, everything else to binary.
    pub fn from_extension(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl" | "json" | "ndjson") => Format::Jsonl,
            _ => Format::Bin,
        }
    }
}

/// Exact size of a binary dataset file.
pub fn binary_size(n: u64, d: u64, labels: bool) -> u64 {
    HEADER_LEN + n * (4 * d + 4 + u64::from(labels))
}

/// The dataset as it reads back from the binary format: every value rounded
/// to the nearest `f32`.
pub fn round_to_f32(ds: &Dataset) -> Dataset {
    let emb = ds.embeddings().iter().map(|&x| x as f32 as f64).collect();
    let q = ds.qualities().iter().map(|&x| x as f32 as f64).collect();
    Dataset::new(ds.dim(), emb, q, ds.labels().map(<[bool]>::to_vec)).expect("rounding keeps values valid")
}

pub fn write_binary<W: Write>(ds: &Dataset, w: &mut W) -> std::io::Result<()> {
    w.write_all(&MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(ds.len() as u64).to_le_bytes())?;
    w.write_all(&(ds.dim() as u32).to_le_bytes())?;
    let flags = if ds.has_labels() { FLAG_LABELS } else { 0 };
    w.write_all(&flags.to_le_bytes())?;
    for id in 0..ds.len() {
        for &x in ds.embedding(id) {
            w.write_all(&(x as f32).to_le_bytes())?;
        }
        w.write_all(&(ds.quality(id) as f32).to_le_bytes())?;
        if let Some(label) = ds.label(id) {
            w.write_all(&[u8::from(label)])?;
        }
    }
    Ok(())
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::runtime(format!("invalid binary dataset: {}", msg.into()))
}

pub fn read_binary(bytes: &[u8]) -> Result<Dataset> {
    if bytes.len() < HEADER_LEN as usize {
        return Err(bad(format!("{} bytes is shorter than the header", bytes.len())));
    }
    if bytes[..4] != MAGIC {
        return Err(bad("missing MUSS magic"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let version = u32_at(4);
    if version != VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let n = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let d = u32_at(16) as usize;
    let flags = u32_at(20);
    if flags & !FLAG_LABELS != 0 {
        return Err(bad(format!("unknown flags {flags:#x}")));
    }
    let labeled = flags & FLAG_LABELS != 0;
    let expected = n
        .checked_mul(4 * d as u64 + 4 + u64::from(labeled))
        .and_then(|p| p.checked_add(HEADER_LEN))
        .ok_or_else(|| bad("header sizes overflow"))?;
    if bytes.len() as u64 != expected {
        return Err(bad(format!("expected {expected} bytes for n = {n}, d = {d}, found {}", bytes.len())));
    }
    let n = n as usize;
    let mut emb = Vec::with_capacity(n * d);
    let mut q = Vec::with_capacity(n);
    let mut labels = labeled.then(|| Vec::with_capacity(n));
    let f32_at = |o: usize| f32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as f64;
    let mut o = HEADER_LEN as usize;
    for id in 0..n {
        for _ in 0..d {
            emb.push(f32_at(o));
            o += 4;
        }
        q.push(f32_at(o));
        o += 4;
        if let Some(labels) = labels.as_mut() {
            labels.push(match bytes[o] {
                0 => false,
                1 => true,
                b => return Err(bad(format!("record {id}: label byte {b} is not 0 or 1"))),
            });
            o += 1;
        }
    }
    Ok(Dataset::new(d, emb, q, labels)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
enum LabelValue {
    Int(u8),
    Bool(bool),
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonlRecord {
    id: u64,
    embedding: Vec<f64>,
    quality: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<LabelValue>,
}

pub fn write_jsonl<W: Write>(ds: &Dataset, w: &mut W) -> std::io::Result<()> {
    for id in 0..ds.len() {
        let rec = JsonlRecord {
            id: id as u64,
            embedding: ds.embedding(id).to_vec(),
            quality: ds.quality(id),
            label: ds.label(id).map(|l| LabelValue::Int(u8::from(l))),
        };
        serde_json::to_writer(&mut *w, &rec)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_jsonl<R: BufRead>(r: R) -> Result<Dataset> {
    let mut records: Vec<(usize, JsonlRecord)> = Vec::new();
    let mut dim = None;
    let mut labeled = None;
    for (i, line) in r.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| CliError::runtime(format!("line {lineno}: {e}")))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: JsonlRecord =
            serde_json::from_str(&line).map_err(|e| CliError::runtime(format!("line {lineno}: {e}")))?;
        match dim {
            None => dim = Some(rec.embedding.len()),
            Some(d) if d != rec.embedding.len() => {
                return Err(CliError::runtime(format!(
                    "line {lineno}: embedding has dimension {}, expected {d}",
                    rec.embedding.len()
                )))
            }
            _ => {}
        }
        match labeled {
            None => labeled = Some(rec.label.is_some()),
            Some(l) if l != rec.label.is_some() => {
                return Err(CliError::runtime(format!("line {lineno}: labels must be present on all lines or none")))
            }
            _ => {}
        }
        if let Some(LabelValue::Int(v)) = rec.label {
            if v > 1 {
                return Err(CliError::runtime(format!("line {lineno}: label must be 0 or 1, got {v}")));
            }
        }
        records.push((lineno, rec));
    }
    let n = records.len();
    records.sort_by_key(|(_, r)| r.id);
    for (expected, (lineno, rec)) in records.iter().enumerate() {
        if rec.id != expected as u64 {
            let msg = if rec.id < expected as u64 {
                format!("line {lineno}: duplicate id {}", rec.id)
            } else {
                format!("line {lineno}: ids must be dense 0..{n}, found {} with {expected} missing", rec.id)
            };
            return Err(CliError::runtime(msg));
        }
    }
    let dim = dim.ok_or_else(|| CliError::runtime("dataset is empty"))?;
    let mut emb = Vec::with_capacity(n * dim);
    let mut q = Vec::with_capacity(n);
    let mut labels = (labeled == Some(true)).then(|| Vec::with_capacity(n));
    for (_, rec) in records {
        emb.extend(rec.embedding);
        q.push(rec.quality);
        if let Some(labels) = labels.as_mut() {
            labels.push(matches!(rec.label, Some(LabelValue::Int(1) | LabelValue::Bool(true))));
        }
    }
    Ok(Dataset::new(dim, emb, q, labels)?)
}

/// Loads a dataset, detecting the binary format by its magic bytes.
pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| CliError::io(path, e))?;
    let ds = if bytes.starts_with(&MAGIC) { read_binary(&bytes) } else { read_jsonl(bytes.as_slice()) };
    ds.map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))
}

pub fn save_dataset(ds: &Dataset, path: &Path, format: Format) -> Result<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    match format {
        Format::Bin => write_binary(ds, &mut w),
        Format::Jsonl => write_jsonl(ds, &mut w),
    }
    .and_then(|_| w.flush())
    .map_err(|e| CliError::io(path, e))
}
