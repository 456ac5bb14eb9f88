//! Binary field snapshots.
//!
//! Layout: the 16-byte magic `spe-field-snap01`, a single-line JSON header
//! terminated by `\n`, then for every stored mode in [`MODE_ORDERING_ID`]
//! order and every component the real and imaginary parts as little-endian
//! `f64`.

use std::io::{BufRead, Read, Write};

use serde::{Deserialize, Serialize};

use super::field::{SpectralField, C64};
use super::modes::{ModeSet, MODE_ORDERING_ID};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 16] = b"spe-field-snap01";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub order: usize,
    pub mode_ordering: String,
    pub components: usize,
}

pub fn write_snapshot<const C: usize>(mut out: impl Write, field: &SpectralField<C>) -> Result<()> {
    let header = SnapshotHeader {
        order: field.order(),
        mode_ordering: MODE_ORDERING_ID.to_string(),
        components: C,
    };
    out.write_all(MAGIC)?;
    serde_json::to_writer(&mut out, &header)?;
    out.write_all(b"\n")?;
    let mut buf = Vec::with_capacity(field.coeffs().len() * C * 16);
    for a in field.coeffs() {
        for c in a {
            buf.extend_from_slice(&c.re.to_le_bytes());
            buf.extend_from_slice(&c.im.to_le_bytes());
        }
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn read_snapshot<const C: usize>(input: impl Read) -> Result<SpectralField<C>> {
    let mut input = std::io::BufReader::new(input);
    let mut magic = [0u8; 16];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let mut line = String::new();
    input.read_line(&mut line)?;
    let header: SnapshotHeader = serde_json::from_str(line.trim_end())?;
    if header.mode_ordering != MODE_ORDERING_ID {
        return Err(Error::Format(format!("unknown mode ordering {}", header.mode_ordering)));
    }
    if header.components != C {
        return Err(Error::Format(format!(
            "snapshot has {} components, expected {C}",
            header.components
        )));
    }
    let n = ModeSet::shared(header.order).len();
    let mut raw = vec![0u8; n * C * 16];
    input.read_exact(&mut raw)?;
    let mut rest = Vec::new();
    input.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(Error::Format("trailing bytes after coefficient array".into()));
    }
    let word = |i: usize| f64::from_le_bytes(raw[8 * i..8 * i + 8].try_into().unwrap());
    let coeffs = (0..n)
        .map(|i| std::array::from_fn(|c| C64::new(word(2 * (i * C + c)), word(2 * (i * C + c) + 1))))
        .collect();
    SpectralField::from_coeffs(header.order, coeffs)
}
