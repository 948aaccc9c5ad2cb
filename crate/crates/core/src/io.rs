//! Binary field container.
//!
//! A file is the 8-byte magic `M2NOFLD1` followed by one or more records.
//! Each record is a little-endian `u64` header length, a UTF-8 header of
//! `key=value` lines, and a payload of little-endian `f64` values in the
//! field's storage order (channel-major, row-major planes).
//!
//! Required header keys: `dims`, `shape`, `channels`, `spacing`,
//! `dtype=float64`, `endianness=little`. `name` is optional; any other key
//! is kept as a free-form attribute.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::mwtransform::{CoeffPyramid, PyramidLevel, DETAIL_NAMES_2D};
use crate::pdegrid::Field;

pub const MAGIC: &[u8; 8] = b"M2NOFLD1";

const RESERVED: [&str; 7] = ["dims", "shape", "channels", "spacing", "dtype", "endianness", "name"];

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub name: Option<String>,
    pub attrs: BTreeMap<String, String>,
    pub field: Field,
}

impl Record {
    pub fn new(name: impl Into<String>, field: Field) -> Self {
        Self { name: Some(name.into()), attrs: BTreeMap::new(), field }
    }

    pub fn with_attr(mut self, key: &str, value: impl ToString) -> Self {
        self.attrs.insert(key.to_string(), value.to_string());
        self
    }
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

fn format_err(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

pub fn encode_records(records: &[Record]) -> Result<Vec<u8>> {
    let mut out = MAGIC.to_vec();
    for r in records {
        let f = &r.field;
        let mut h = String::new();
        writeln!(h, "dims={}", f.dim()).unwrap();
        writeln!(h, "shape={}", join(f.shape())).unwrap();
        writeln!(h, "channels={}", f.channels()).unwrap();
        writeln!(h, "spacing={}", join(f.spacing())).unwrap();
        h.push_str("dtype=float64\nendianness=little\n");
        if let Some(name) = &r.name {
            writeln!(h, "name={name}").unwrap();
        }
        for (k, v) in &r.attrs {
            if RESERVED.contains(&k.as_str()) || k.contains(['=', '\n']) || v.contains('\n') {
                return Err(format_err(format!("invalid attribute `{k}`")));
            }
            writeln!(h, "{k}={v}").unwrap();
        }
        out.extend((h.len() as u64).to_le_bytes());
        out.extend(h.as_bytes());
        for v in f.data() {
            out.extend(v.to_le_bytes());
        }
    }
    Ok(out)
}

fn parse_list<T: std::str::FromStr>(s: &str, key: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|t| t.trim().parse::<T>().map_err(|_| format_err(format!("bad `{key}` entry `{t}`"))))
        .collect()
}

pub fn decode_records(bytes: &[u8]) -> Result<Vec<Record>> {
    if bytes.len() < 8 || &bytes[..8] != MAGIC {
        return Err(format_err("bad magic: not a field container"));
    }
    let mut pos = 8;
    let mut out = Vec::new();
    while pos < bytes.len() {
        let len_bytes: [u8; 8] = bytes
            .get(pos..pos + 8)
            .ok_or_else(|| format_err("truncated record header length"))?
            .try_into()
            .unwrap();
        let hlen = u64::from_le_bytes(len_bytes) as usize;
        pos += 8;
        let header = bytes
            .get(pos..pos.checked_add(hlen).ok_or_else(|| format_err("header length overflow"))?)
            .ok_or_else(|| format_err("truncated header"))?;
        pos += hlen;
        let header = std::str::from_utf8(header).map_err(|_| format_err("header is not UTF-8"))?;
        let mut map = BTreeMap::new();
        for line in header.lines().filter(|l| !l.is_empty()) {
            let (k, v) = line.split_once('=').ok_or_else(|| format_err(format!("malformed header line `{line}`")))?;
            if map.insert(k.to_string(), v.to_string()).is_some() {
                return Err(format_err(format!("duplicate header key `{k}`")));
            }
        }
        let get = |k: &str| map.get(k).map(String::as_str).ok_or_else(|| format_err(format!("missing header key `{k}`")));
        match get("dtype")? {
            "float64" => {}
            other => return Err(format_err(format!("unsupported dtype `{other}`"))),
        }
        match get("endianness")? {
            "little" => {}
            other => return Err(format_err(format!("unsupported endianness `{other}`"))),
        }
        let dims: usize = get("dims")?.parse().map_err(|_| format_err("bad `dims`"))?;
        let shape: Vec<usize> = parse_list(get("shape")?, "shape")?;
        let spacing: Vec<f64> = parse_list(get("spacing")?, "spacing")?;
        let channels: usize = get("channels")?.parse().map_err(|_| format_err("bad `channels`"))?;
        if shape.len() != dims {
            return Err(format_err(format!("dims={dims} but shape has {} entries", shape.len())));
        }
        let count = shape
            .iter()
            .try_fold(channels, |acc, &n| acc.checked_mul(n))
            .and_then(|c| c.checked_mul(8))
            .ok_or_else(|| format_err("payload size overflow"))?;
        let payload = bytes
            .get(pos..pos + count)
            .ok_or_else(|| format_err(format!("truncated payload: need {count} bytes, {} remain", bytes.len() - pos)))?;
        pos += count;
        let data = payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        let field = Field::new(shape, channels, spacing, data).map_err(|e| format_err(e.to_string()))?;
        let name = map.remove("name");
        let attrs = map.into_iter().filter(|(k, _)| !RESERVED.contains(&k.as_str())).collect();
        out.push(Record { name, attrs, field });
    }
    Ok(out)
}

/// Writes `bytes` to a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let file_name = path.file_name().ok_or_else(|| Error::InvalidParameter(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", file_name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(|e| with_path(e, path))
}

fn with_path(e: std::io::Error, path: &Path) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

pub fn write_records(path: &Path, records: &[Record]) -> Result<()> {
    write_atomic(path, &encode_records(records)?)
}

pub fn read_records(path: &Path) -> Result<Vec<Record>> {
    decode_records(&fs::read(path).map_err(|e| with_path(e, path))?)
}

pub fn write_field(path: &Path, field: &Field) -> Result<()> {
    write_records(path, &[Record { name: None, attrs: BTreeMap::new(), field: field.clone() }])
}

/// Reads a single-record file.
pub fn read_field(path: &Path) -> Result<Field> {
    let mut recs = read_records(path)?;
    match recs.len() {
        1 => Ok(recs.pop().unwrap().field),
        n => Err(format_err(format!("expected one field record, found {n}"))),
    }
}

fn detail_names(dim: usize) -> &'static [&'static str] {
    if dim == 1 {
        &["G"]
    } else {
        &DETAIL_NAMES_2D
    }
}

/// One record per block: `base` (carrying `k` and `levels`), then
/// `L<j>.<block>` for each level `j` (0 = finest).
pub fn pyramid_to_records(p: &CoeffPyramid) -> Vec<Record> {
    let mut out = vec![Record::new("base", p.base.clone())
        .with_attr("k", p.k)
        .with_attr("levels", p.levels.len())];
    for (j, level) in p.levels.iter().enumerate() {
        for (d, name) in level.details.iter().zip(detail_names(p.base.dim())) {
            out.push(Record::new(format!("L{j}.{name}"), d.clone()));
        }
    }
    out
}

pub fn pyramid_from_records(records: &[Record]) -> Result<CoeffPyramid> {
    let base = records.first().filter(|r| r.name.as_deref() == Some("base")).ok_or_else(|| format_err("pyramid must start with a `base` record"))?;
    let attr = |k: &str| -> Result<usize> {
        base.attrs.get(k).and_then(|v| v.parse().ok()).ok_or_else(|| format_err(format!("base record lacks `{k}`")))
    };
    let (k, nlev) = (attr("k")?, attr("levels")?);
    let names = detail_names(base.field.dim());
    if records.len() != 1 + nlev * names.len() {
        return Err(format_err(format!("pyramid with {nlev} levels needs {} records, found {}", 1 + nlev * names.len(), records.len())));
    }
    let mut levels = Vec::with_capacity(nlev);
    let mut it = records[1..].iter();
    for j in 0..nlev {
        let mut details = Vec::new();
        for name in names {
            let r = it.next().unwrap();
            let want = format!("L{j}.{name}");
            if r.name.as_deref() != Some(want.as_str()) {
                return Err(format_err(format!("expected record `{want}`, found {:?}", r.name)));
            }
            details.push(r.field.clone());
        }
        levels.push(PyramidLevel { details });
    }
    Ok(CoeffPyramid { k, levels, base: base.field.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Field {
        let data = (0..32).map(|i| (i as f64 * 0.77).sin() * 1e-3 + f64::EPSILON * i as f64).collect();
        Field::new(vec![4, 4], 2, vec![0.2, 1.0 / 3.0], data).unwrap()
    }

    #[test]
    fn round_trip_is_bitwise() {
        let r = Record::new("u", sample()).with_attr("seed", 7);
        let back = decode_records(&encode_records(std::slice::from_ref(&r)).unwrap()).unwrap();
        assert_eq!(back, vec![r]);
    }

    #[test]
    fn rejects_corruption() {
        let bytes = encode_records(&[Record::new("u", sample())]).unwrap();
        assert!(matches!(decode_records(&bytes[..bytes.len() - 3]), Err(Error::Format(m)) if m.contains("truncated")));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode_records(&bad).is_err());
        // overwrite `little` with `big` plus blank lines so the header length is unchanged
        let mut patched = bytes.clone();
        let at = bytes.windows(17).position(|w| w == b"endianness=little").unwrap();
        patched[at + 11..at + 17].copy_from_slice(b"big\n\n\n");
        let err = decode_records(&patched).unwrap_err();
        assert!(err.to_string().contains("unsupported endianness"), "{err}");
    }

    #[test]
    fn reserved_attributes_are_rejected() {
        let r = Record::new("u", sample()).with_attr("shape", 3);
        assert!(encode_records(&[r]).is_err());
    }
}
