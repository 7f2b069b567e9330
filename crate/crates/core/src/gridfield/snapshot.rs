//! `PHF1` binary snapshots.
//!
//! Layout (little-endian): magic `PHF1`, `u32` dim, `u32` M, `f64` L,
//! `f64` t, `u8` payload kind (0 scalar, 1 vector), then the `f64` payload in
//! row-major order with vector components concatenated.

use std::io::{Read, Write};

use super::{Field, GridSpec, VectorField};
use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"PHF1";
const HEADER_LEN: usize = 4 + 4 + 4 + 8 + 8 + 1;

#[derive(Clone, Debug, PartialEq)]
pub enum Snapshot {
    Scalar(Field),
    Vector { field: VectorField, time: f64 },
}

fn header(grid: &GridSpec, t: f64, kind: u8) -> Vec<u8> {
    let mut h = Vec::with_capacity(HEADER_LEN);
    h.extend_from_slice(&MAGIC);
    h.extend_from_slice(&(grid.dim() as u32).to_le_bytes());
    h.extend_from_slice(&(grid.points_per_dim() as u32).to_le_bytes());
    h.extend_from_slice(&grid.half_width().to_le_bytes());
    h.extend_from_slice(&t.to_le_bytes());
    h.push(kind);
    h
}

pub fn encode_scalar(field: &Field) -> Vec<u8> {
    let mut out = header(field.grid(), field.time().unwrap_or(0.0), 0);
    out.reserve(8 * field.values().len());
    for v in field.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn encode_vector(field: &VectorField, t: f64) -> Vec<u8> {
    let mut out = header(field.grid(), t, 1);
    for c in field.components() {
        for v in c {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn write_scalar(w: &mut impl Write, field: &Field) -> Result<()> {
    w.write_all(&encode_scalar(field))?;
    Ok(())
}

fn le_u32(b: &[u8]) -> u32 {
    u32::from_le_bytes(b.try_into().expect("4 bytes"))
}

fn le_f64(b: &[u8]) -> f64 {
    f64::from_le_bytes(b.try_into().expect("8 bytes"))
}

pub fn decode(bytes: &[u8]) -> Result<Snapshot> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format(format!("truncated header ({} bytes)", bytes.len())));
    }
    if bytes[..4] != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let dim = le_u32(&bytes[4..8]) as usize;
    let m = le_u32(&bytes[8..12]) as usize;
    let l = le_f64(&bytes[12..20]);
    let t = le_f64(&bytes[20..28]);
    let kind = bytes[28];
    let grid = GridSpec::new(dim, l, m).map_err(|e| Error::Format(e.to_string()))?;
    let ncomp = match kind {
        0 => 1,
        1 => dim,
        k => return Err(Error::Format(format!("unknown payload kind {k}"))),
    };
    let expected = HEADER_LEN + 8 * ncomp * grid.len();
    if bytes.len() != expected {
        return Err(Error::Format(format!(
            "payload size {} does not match header (expected {})",
            bytes.len(),
            expected
        )));
    }
    let values: Vec<f64> = bytes[HEADER_LEN..].chunks_exact(8).map(le_f64).collect();
    if kind == 0 {
        Ok(Snapshot::Scalar(Field::new(grid, values)?.with_time(t)))
    } else {
        let components = values.chunks(grid.len()).map(|c| c.to_vec()).collect();
        Ok(Snapshot::Vector {
            field: VectorField::new(grid, components)?,
            time: t,
        })
    }
}

pub fn read(r: &mut impl Read) -> Result<Snapshot> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    decode(&buf)
}
