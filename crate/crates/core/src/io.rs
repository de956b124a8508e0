//! Field files, sequence manifests and JSON run reports.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::{Field, GridSpec};

pub const MAGIC: &[u8; 4] = b"FRCF";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 1 + 4 + 8 + 8;

pub const REPORT_SCHEMA: &str = "fracfield.report";
pub const REPORT_VERSION: u32 = 1;

/// Writes `u` and its order `s` in the FRCF layout: magic, version (u32),
/// dim (u8), points (u32), box length (f64), s (f64), then row-major values.
/// All numbers little-endian.
pub fn write_field<W: Write>(mut out: W, u: &Field, s: f64) -> Result<()> {
    let g = u.grid();
    let mut buf = Vec::with_capacity(HEADER_LEN + 8 * g.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.push(g.dim() as u8);
    buf.extend_from_slice(&(g.points() as u32).to_le_bytes());
    buf.extend_from_slice(&g.length().to_le_bytes());
    buf.extend_from_slice(&s.to_le_bytes());
    for v in u.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

/// Inverse of [`write_field`]; any header or length mismatch is a
/// [`Error::CorruptFile`].
pub fn read_field<R: Read>(mut input: R) -> Result<(Field, f64)> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    decode_field(&bytes)
}

pub fn decode_field(bytes: &[u8]) -> Result<(Field, f64)> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::CorruptFile(format!("{} bytes is shorter than the header", bytes.len())));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::CorruptFile("bad magic".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().expect("8 bytes"));
    let version = u32_at(4);
    if version != VERSION {
        return Err(Error::CorruptFile(format!("unsupported version {version}")));
    }
    let dim = bytes[8] as usize;
    let points = u32_at(9) as usize;
    let length = f64_at(13);
    let s = f64_at(21);
    let grid = GridSpec::new(dim, points, length).map_err(|e| Error::CorruptFile(format!("header: {e}")))?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != 8 * grid.len() {
        return Err(Error::CorruptFile(format!(
            "payload has {} bytes, header implies {}",
            payload.len(),
            8 * grid.len()
        )));
    }
    let values = payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    let field = Field::new(grid, values).map_err(|e| Error::CorruptFile(e.to_string()))?;
    Ok((field, s))
}

pub fn save_field(path: &Path, u: &Field, s: f64) -> Result<()> {
    write_field(fs::File::create(path)?, u, s)
}

pub fn load_field(path: &Path) -> Result<(Field, f64)> {
    decode_field(&fs::read(path)?)
}

/// Entries of a manifest: one path per line relative to the manifest's
/// directory, blank lines and `#` comments ignored.
pub fn read_manifest(path: &Path) -> Result<Vec<PathBuf>> {
    let text = fs::read_to_string(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let entries: Vec<PathBuf> = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(|l| base.join(l))
        .collect();
    if entries.is_empty() {
        return Err(Error::Manifest(format!("{} lists no fields", path.display())));
    }
    Ok(entries)
}

pub fn write_manifest(path: &Path, entries: &[String]) -> Result<()> {
    let mut text = String::from("# fracfield sequence\n");
    for e in entries {
        text.push_str(e);
        text.push('\n');
    }
    fs::write(path, text)?;
    Ok(())
}

/// Loads every field of a manifest, rejecting mixed grids or orders.
pub fn load_sequence(manifest: &Path) -> Result<(Vec<Field>, f64)> {
    let mut fields = Vec::new();
    let mut order: Option<f64> = None;
    for entry in read_manifest(manifest)? {
        let (u, s) = load_field(&entry).map_err(|e| Error::Manifest(format!("{}: {e}", entry.display())))?;
        if let Some(first) = fields.first().map(|f: &Field| *f.grid()) {
            if first != *u.grid() {
                return Err(Error::Manifest(format!("{} uses a different grid", entry.display())));
            }
        }
        if order.is_some_and(|o| o != s) {
            return Err(Error::Manifest(format!("{} has s = {s}, expected {}", entry.display(), order.unwrap_or(s))));
        }
        order = Some(s);
        fields.push(u);
    }
    Ok((fields, order.expect("non-empty manifest")))
}

/// Saves a sequence as `prefix_000.frcf, ...` plus `manifest.txt` in `dir`.
pub fn save_sequence(dir: &Path, prefix: &str, fields: &[Field], s: f64) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let mut names = Vec::with_capacity(fields.len());
    for (k, u) in fields.iter().enumerate() {
        let name = format!("{prefix}_{k:03}.frcf");
        save_field(&dir.join(&name), u, s)?;
        names.push(name);
    }
    let manifest = dir.join("manifest.txt");
    write_manifest(&manifest, &names)?;
    Ok(manifest)
}

/// Content hash in the style of git blobs: sha256 of `"blob <len>\0" + bytes`.
pub fn content_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// A reported number with the tolerance it was judged against.
pub fn scalar(value: f64, tol: Option<f64>) -> Value {
    json!({ "value": value, "tol": tol })
}

/// Versioned run report. `timings` is the only section allowed to differ
/// between identical runs.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub schema: &'static str,
    pub version: u32,
    pub command: String,
    pub parameters: Value,
    pub config: Value,
    pub results: Value,
    pub timings: Value,
    pub input_hash: String,
}

impl RunReport {
    /// `inputs` holds the bytes the hash covers: parameters, config and any
    /// input files, in a fixed order.
    pub fn new(command: &str, parameters: Value, config: Value, inputs: &[&[u8]]) -> Self {
        let mut all = serde_json::to_vec(&parameters).expect("json");
        all.extend(serde_json::to_vec(&config).expect("json"));
        for i in inputs {
            all.extend_from_slice(i);
        }
        Self {
            schema: REPORT_SCHEMA,
            version: REPORT_VERSION,
            command: command.to_string(),
            parameters,
            config,
            results: json!({}),
            timings: json!({}),
            input_hash: content_hash(&all),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// The report without `timings`, for determinism comparisons.
    pub fn stable_part(&self) -> Value {
        let mut v = serde_json::to_value(self).expect("report serializes");
        if let Some(o) = v.as_object_mut() {
            o.remove("timings");
        }
        v
    }
}
