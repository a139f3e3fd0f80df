//! Binary field dumps.
//!
//! Layout: 64-byte header followed by the field values as little-endian f64 in C order
//! `(site_t, site_x, site_y, site_z, multi-index, lie-coordinate)`.
//!
//! | bytes  | content                         |
//! |--------|---------------------------------|
//! | 0..4   | magic `KWF1`                    |
//! | 4..8   | degree (u32)                    |
//! | 8..12  | value kind (0 real, 1 su(2), 2 complexified) |
//! | 12..28 | four site counts (u32)          |
//! | 28..32 | domain kind (0 T⁴, 1 slab, 2 T³)|
//! | 32..64 | four extents (f64)              |

use super::{Domain, DomainKind, FormField, GridError, ValueKind};
use std::io::{Read, Write};

pub const MAGIC: &[u8; 4] = b"KWF1";
pub const HEADER_LEN: usize = 64;

fn kind_code(k: DomainKind) -> u32 {
    match k {
        DomainKind::Torus4 => 0,
        DomainKind::SlabT3 => 1,
        DomainKind::Torus3 => 2,
    }
}

pub fn to_bytes(f: &FormField) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * f.data.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(f.degree as u32).to_le_bytes());
    out.extend_from_slice(&f.kind.code().to_le_bytes());
    for n in f.domain.sites {
        out.extend_from_slice(&(n as u32).to_le_bytes());
    }
    out.extend_from_slice(&kind_code(f.domain.kind).to_le_bytes());
    for e in f.domain.extents {
        out.extend_from_slice(&e.to_le_bytes());
    }
    for v in &f.data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn from_bytes(b: &[u8]) -> Result<FormField, GridError> {
    let err = |m: &str| GridError::Dump(m.to_string());
    if b.len() < HEADER_LEN || &b[0..4] != MAGIC {
        return Err(err("bad magic"));
    }
    let u = |o: usize| u32::from_le_bytes(b[o..o + 4].try_into().unwrap());
    let degree = u(4) as usize;
    let kind = ValueKind::from_code(u(8)).ok_or_else(|| err("value kind"))?;
    let sites = [u(12) as usize, u(16) as usize, u(20) as usize, u(24) as usize];
    let dkind = match u(28) {
        0 => DomainKind::Torus4,
        1 => DomainKind::SlabT3,
        2 => DomainKind::Torus3,
        _ => return Err(err("domain kind")),
    };
    let mut extents = [0.0; 4];
    for (a, e) in extents.iter_mut().enumerate() {
        *e = f64::from_le_bytes(b[32 + 8 * a..40 + 8 * a].try_into().unwrap());
    }
    let domain = Domain { kind: dkind, extents, sites };
    let mut f = FormField::zeros(&domain, degree, kind);
    if b.len() != HEADER_LEN + 8 * f.data.len() {
        return Err(err("payload length"));
    }
    for (i, v) in f.data.iter_mut().enumerate() {
        let o = HEADER_LEN + 8 * i;
        *v = f64::from_le_bytes(b[o..o + 8].try_into().unwrap());
    }
    Ok(f)
}

pub fn write_field(f: &FormField, w: &mut impl Write) -> std::io::Result<()> {
    w.write_all(&to_bytes(f))
}

pub fn read_field(r: &mut impl Read) -> Result<FormField, GridError> {
    let mut b = Vec::new();
    r.read_to_end(&mut b).map_err(|e| GridError::Dump(e.to_string()))?;
    from_bytes(&b)
}
