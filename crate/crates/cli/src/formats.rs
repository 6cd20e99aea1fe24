//! Binary sidecar formats: a JSON header next to a raw little-endian payload.
//!
//! Operators: each matrix is rows×cols complex entries, row-major, each entry
//! (re, im) as two f64 LE; matrices follow each other at the header offsets.
//!
//! Fields: u then v, each ny×nx complex entries with y outer, x inner, same
//! entry encoding; then φ (ny×nx f64 LE) if present; then the mask (ny×nx
//! bytes, 0 outside, 1 inside) if present.

use crate::error::{validation, CliError, CliResult};
use nalgebra::DMatrix;
use oscillotex_core::{diagnostics::Field2D, C64};
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const LAYOUT: &str = "row-major complex pairs (re, im), f64 little-endian";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixEntry {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    /// Byte offset into the payload.
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorHeader {
    pub schema_version: u32,
    pub layout: String,
    /// Payload file name, relative to the header.
    pub data: String,
    pub matrices: Vec<MatrixEntry>,
    /// Node spacing; the discrete L² weight of every unknown.
    pub h: f64,
    pub height: f64,
    pub grid_n: usize,
    pub rho: f64,
    pub omega: f64,
    /// (Δ, φ) per layer when the operator came from a layer stack.
    #[serde(default)]
    pub layers: Vec<(f64, f64)>,
    #[serde(default)]
    pub mu0: Option<f64>,
}

fn put_c64(buf: &mut Vec<u8>, z: C64) {
    buf.extend_from_slice(&z.re.to_le_bytes());
    buf.extend_from_slice(&z.im.to_le_bytes());
}

fn get_f64(b: &[u8], at: usize) -> f64 {
    f64::from_le_bytes(b[at..at + 8].try_into().expect("8 bytes"))
}

/// Payload bytes for the matrices, recording their offsets.
pub fn encode_matrices(mats: &[(&str, &DMatrix<C64>)]) -> (Vec<MatrixEntry>, Vec<u8>) {
    let mut buf = Vec::new();
    let mut entries = Vec::new();
    for (name, m) in mats {
        entries.push(MatrixEntry {
            name: name.to_string(),
            rows: m.nrows(),
            cols: m.ncols(),
            offset: buf.len(),
        });
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                put_c64(&mut buf, m[(i, j)]);
            }
        }
    }
    (entries, buf)
}

pub fn decode_matrix(entry: &MatrixEntry, payload: &[u8]) -> CliResult<DMatrix<C64>> {
    let need = entry.offset + 16 * entry.rows * entry.cols;
    if payload.len() < need {
        return validation(format!(
            "operator payload has {} bytes, matrix {} needs {need}",
            payload.len(),
            entry.name
        ));
    }
    Ok(DMatrix::from_fn(entry.rows, entry.cols, |i, j| {
        let at = entry.offset + 16 * (i * entry.cols + j);
        C64::new(get_f64(payload, at), get_f64(payload, at + 8))
    }))
}

fn read_bytes(path: &Path) -> CliResult<Vec<u8>> {
    std::fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn read_header<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

fn sidecar(header: &Path, data: &str) -> std::path::PathBuf {
    header.parent().unwrap_or(Path::new(".")).join(data)
}

pub fn read_operator(header_path: &Path, name: &str) -> CliResult<(OperatorHeader, DMatrix<C64>)> {
    let header: OperatorHeader = read_header(header_path)?;
    if header.schema_version != 1 {
        return validation(format!("operator schema_version {} not supported", header.schema_version));
    }
    let entry = header
        .matrices
        .iter()
        .find(|m| m.name == name)
        .ok_or_else(|| CliError::Validation(format!("operator file has no matrix {name:?}")))?
        .clone();
    if entry.rows != entry.cols {
        return validation("operator matrix must be square");
    }
    let payload = read_bytes(&sidecar(header_path, &header.data))?;
    let m = decode_matrix(&entry, &payload)?;
    Ok((header, m))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldHeader {
    pub schema_version: u32,
    pub nx: usize,
    pub ny: usize,
    pub x0: f64,
    pub y0: f64,
    pub dx: f64,
    pub dy: f64,
    pub data: String,
    #[serde(default)]
    pub phi: bool,
    #[serde(default)]
    pub mask: bool,
}

impl FieldHeader {
    pub fn payload_len(&self) -> usize {
        let n = self.nx * self.ny;
        32 * n + if self.phi { 8 * n } else { 0 } + if self.mask { n } else { 0 }
    }
}

#[cfg(test)]
pub fn encode_field(field: &Field2D, data: &str) -> (FieldHeader, Vec<u8>) {
    let header = FieldHeader {
        schema_version: 1,
        nx: field.nx,
        ny: field.ny,
        x0: field.x0,
        y0: field.y0,
        dx: field.dx,
        dy: field.dy,
        data: data.to_string(),
        phi: field.phi.is_some(),
        mask: field.mask.is_some(),
    };
    let mut buf = Vec::with_capacity(header.payload_len());
    for z in field.u.iter().chain(&field.v) {
        put_c64(&mut buf, *z);
    }
    if let Some(p) = &field.phi {
        for x in p {
            buf.extend_from_slice(&x.to_le_bytes());
        }
    }
    if let Some(m) = &field.mask {
        buf.extend(m.iter().map(|&b| b as u8));
    }
    (header, buf)
}

pub fn decode_field(header: &FieldHeader, payload: &[u8]) -> CliResult<Field2D> {
    if header.schema_version != 1 {
        return validation(format!("field schema_version {} not supported", header.schema_version));
    }
    if payload.len() != header.payload_len() {
        return validation(format!(
            "field payload has {} bytes, header implies {}",
            payload.len(),
            header.payload_len()
        ));
    }
    let n = header.nx * header.ny;
    let cplx = |k: usize| C64::new(get_f64(payload, 16 * k), get_f64(payload, 16 * k + 8));
    let u = (0..n).map(cplx).collect();
    let v = (n..2 * n).map(cplx).collect();
    let mut at = 32 * n;
    let phi = header.phi.then(|| {
        let p = (0..n).map(|k| get_f64(payload, at + 8 * k)).collect();
        at += 8 * n;
        p
    });
    let mask = match header.mask {
        false => None,
        true => {
            let bytes = &payload[at..at + n];
            if bytes.iter().any(|&b| b > 1) {
                return validation("mask bytes must be 0 or 1");
            }
            Some(bytes.iter().map(|&b| b == 1).collect())
        }
    };
    let f = Field2D {
        nx: header.nx,
        ny: header.ny,
        x0: header.x0,
        y0: header.y0,
        dx: header.dx,
        dy: header.dy,
        u,
        v,
        phi,
        mask,
    };
    f.validate()?;
    Ok(f)
}

pub fn read_field(header_path: &Path) -> CliResult<Field2D> {
    let header: FieldHeader = read_header(header_path)?;
    let payload = read_bytes(&sidecar(header_path, &header.data))?;
    decode_field(&header, &payload)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrices_round_trip_bit_exact() {
        let a = DMatrix::from_fn(3, 3, |i, j| C64::new(i as f64 + 0.1, -(j as f64) / 3.0));
        let b = DMatrix::from_fn(2, 2, |i, j| C64::new(1e-300 * i as f64, f64::MAX / (j + 1) as f64));
        let (entries, buf) = encode_matrices(&[("a", &a), ("b", &b)]);
        assert_eq!(buf.len(), 16 * 13);
        assert_eq!(entries[1].offset, 144);
        assert_eq!(decode_matrix(&entries[0], &buf).unwrap(), a);
        assert_eq!(decode_matrix(&entries[1], &buf).unwrap(), b);
        // entry (0, 1) of a: re at byte 16, im at byte 24
        assert_eq!(get_f64(&buf, 16), 0.1);
        assert_eq!(get_f64(&buf, 24), -1.0 / 3.0);
    }

    #[test]
    fn field_round_trip() {
        let mut f = Field2D::from_fn(4, 3, -1.0, 0.0, 0.5, 0.25, |x, y| (C64::new(x, y), C64::new(y, -x)));
        f.phi = Some((0..12).map(|k| k as f64 * 0.1).collect());
        f.mask = Some((0..12).map(|k| k % 5 != 0).collect());
        let (h, buf) = encode_field(&f, "f.bin");
        assert_eq!(buf.len(), h.payload_len());
        assert_eq!(decode_field(&h, &buf).unwrap(), f);
        assert!(decode_field(&h, &buf[1..]).is_err());
    }
}
