//! Report and table output.
//!
//! CSV tables start with comment lines, the first of which stamps the schema:
//!
//! ```text
//! # schema: oscillon-csv/1
//! # table: decay
//! # alpha: 0.9
//! t,E,Phi,L,bound,margin
//! 0,1.25,...
//! ```
//!
//! Numbers use Rust's shortest round-trip formatting, so identical inputs
//! give byte-identical files.
//!
//! State dumps are little-endian binary:
//!
//! ```text
//! magic  b"OSCS"
//! u32    version (1)
//! u32    dim d
//! u32    modes per axis M
//! f64    alpha
//! u64    record count n
//! n × { f64 t, f64 u[M^d], f64 v[M^d] }
//! ```
//!
//! Every file is written to a temporary sibling and renamed into place.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::basis::{Field, SpectralBasis};
use crate::dynamics::State;
use crate::error::{Error, Result};

pub const CSV_SCHEMA: &str = "oscillon-csv/1";
pub const DUMP_MAGIC: &[u8; 4] = b"OSCS";
pub const DUMP_VERSION: u32 = 1;

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::invalid("path", "must name a file"))?
        .to_string_lossy();
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::invalid("json", e.to_string()))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// A numeric table with named columns and `key: value` metadata.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub name: String,
    pub meta: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            meta: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn meta(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.push((key.into(), value.to_string()));
        self
    }

    pub fn push(&mut self, row: Vec<f64>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::LengthMismatch {
                expected: self.columns.len(),
                actual: row.len(),
            });
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        writeln!(out, "# schema: {CSV_SCHEMA}")?;
        writeln!(out, "# table: {}", self.name)?;
        for (k, v) in &self.meta {
            writeln!(out, "# {k}: {v}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| Error::invalid("csv", e.to_string());
        w.write_record(&self.columns).map_err(csv_err)?;
        for row in &self.rows {
            // `+ 0.0` folds −0 into 0
            w.write_record(row.iter().map(|x| (x + 0.0).to_string())).map_err(csv_err)?;
        }
        w.into_inner().map_err(|e| Error::invalid("csv", e.to_string()))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_csv()?)
    }
}

/// Header and records of a state dump.
#[derive(Debug, Clone, PartialEq)]
pub struct StateDump {
    pub dim: u32,
    pub modes_per_axis: u32,
    pub alpha: f64,
    pub records: Vec<(f64, State)>,
}

pub fn encode_dump(basis: &SpectralBasis, alpha: f64, records: &[(f64, &State)]) -> Result<Vec<u8>> {
    let k = basis.len();
    let mut out = Vec::with_capacity(32 + records.len() * (1 + 2 * k) * 8);
    out.extend_from_slice(DUMP_MAGIC);
    out.extend_from_slice(&DUMP_VERSION.to_le_bytes());
    out.extend_from_slice(&(basis.dim() as u32).to_le_bytes());
    out.extend_from_slice(&(basis.modes_per_axis() as u32).to_le_bytes());
    out.extend_from_slice(&alpha.to_le_bytes());
    out.extend_from_slice(&(records.len() as u64).to_le_bytes());
    for (t, s) in records {
        basis.check_len(&s.u)?;
        basis.check_len(&s.v)?;
        out.extend_from_slice(&t.to_le_bytes());
        for x in s.u.iter().chain(s.v.iter()) {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    Ok(out)
}

fn malformed(reason: &str) -> Error {
    Error::invalid("dump", reason.to_string())
}

pub fn decode_dump(bytes: &[u8]) -> Result<StateDump> {
    let mut pos = 0usize;
    let mut take = |n: usize| -> Result<&[u8]> {
        let s = bytes.get(pos..pos + n).ok_or_else(|| malformed("truncated"))?;
        pos += n;
        Ok(s)
    };
    if take(4)? != DUMP_MAGIC {
        return Err(malformed("bad magic"));
    }
    let u32_at = |b: &[u8]| u32::from_le_bytes(b.try_into().expect("4 bytes"));
    let f64_at = |b: &[u8]| f64::from_le_bytes(b.try_into().expect("8 bytes"));
    let version = u32_at(take(4)?);
    if version != DUMP_VERSION {
        return Err(malformed(&format!("unsupported version {version}")));
    }
    let dim = u32_at(take(4)?);
    let modes_per_axis = u32_at(take(4)?);
    let alpha = f64_at(take(8)?);
    let count = u64::from_le_bytes(take(8)?.try_into().expect("8 bytes"));
    let k = (modes_per_axis as usize)
        .checked_pow(dim)
        .ok_or_else(|| malformed("mode count overflows"))?;
    let mut records = Vec::new();
    for _ in 0..count {
        let t = f64_at(take(8)?);
        let mut read = || -> Result<Field> {
            let raw = take(8 * k)?;
            Field::new(raw.chunks_exact(8).map(f64_at).collect())
        };
        let u = read()?;
        let v = read()?;
        records.push((t, State { u, v }));
    }
    if pos != bytes.len() {
        return Err(malformed("trailing bytes"));
    }
    Ok(StateDump {
        dim,
        modes_per_axis,
        alpha,
        records,
    })
}
