//! The `ULBW` on-disk format.
//!
//! All integers are little-endian:
//!
//! ```text
//! magic        4  "ULBW"
//! version      u16 (= 1)
//! bit_width    u8
//! reserved     u8 (= 0)
//! rows_M       u32
//! cols_K       u32
//! block_k      u32
//! has_codebook u8, codebook 4 x i8 (zeros when absent)
//! has_scales   u8, rows_M x f32 (only when present)
//! payload_len  u64
//! payload      payload_len bytes
//! ```

use std::io::{self, Read, Write};

use thiserror::Error;

use super::{payload_len, BitWidth, Codebook4, LayoutError, PackedWeightTensor};

pub const MAGIC: [u8; 4] = *b"ULBW";
pub const FORMAT_VERSION: u16 = 1;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("bad magic {0:02x?}, expected \"ULBW\"")]
    BadMagic([u8; 4]),
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u16),
    #[error("unsupported bit width {0}")]
    UnsupportedBitWidth(u8),
    #[error("payload length mismatch: expected {expected} bytes, found {found}")]
    LengthMismatch { expected: u64, found: u64 },
    #[error("header is truncated")]
    TruncatedHeader,
    #[error("invalid tensor: {0}")]
    Invariant(#[from] LayoutError),
    #[error("invalid header field: {0}")]
    InvalidField(&'static str),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Serializes `packed` into `sink`.
pub fn write_packed<W: Write>(packed: &PackedWeightTensor, mut sink: W) -> Result<(), FormatError> {
    let dim = |v: usize, name| u32::try_from(v).map_err(|_| FormatError::InvalidField(name));
    let mut header = Vec::with_capacity(32);
    header.extend_from_slice(&MAGIC);
    header.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    header.push(packed.bit_width().bits());
    header.push(0);
    header.extend_from_slice(&dim(packed.rows(), "rows_M")?.to_le_bytes());
    header.extend_from_slice(&dim(packed.cols(), "cols_K")?.to_le_bytes());
    header.extend_from_slice(&dim(packed.block_k(), "block_k")?.to_le_bytes());
    match packed.codebook() {
        Some(cb) => {
            header.push(1);
            header.extend_from_slice(&cb.to_bytes());
        }
        None => header.extend_from_slice(&[0; 5]),
    }
    match packed.row_scales() {
        Some(scales) => {
            header.push(1);
            for s in scales {
                header.extend_from_slice(&s.to_le_bytes());
            }
        }
        None => header.push(0),
    }
    header.extend_from_slice(&(packed.payload().len() as u64).to_le_bytes());
    sink.write_all(&header)?;
    sink.write_all(packed.payload())?;
    Ok(())
}

fn read_array<const N: usize, R: Read>(src: &mut R) -> Result<[u8; N], FormatError> {
    let mut buf = [0u8; N];
    src.read_exact(&mut buf).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => FormatError::TruncatedHeader,
        _ => FormatError::Io(e),
    })?;
    Ok(buf)
}

fn read_u32<R: Read>(src: &mut R) -> Result<usize, FormatError> {
    Ok(u32::from_le_bytes(read_array(src)?) as usize)
}

/// Parses a tensor from `source`, validating every field.
pub fn read_packed<R: Read>(mut source: R) -> Result<PackedWeightTensor, FormatError> {
    let src = &mut source;
    let magic: [u8; 4] = read_array(src)?;
    if magic != MAGIC {
        return Err(FormatError::BadMagic(magic));
    }
    let version = u16::from_le_bytes(read_array(src)?);
    if version != FORMAT_VERSION {
        return Err(FormatError::UnsupportedVersion(version));
    }
    let [bits, reserved] = read_array(src)?;
    let bit_width = BitWidth::from_bits(bits).map_err(|_| FormatError::UnsupportedBitWidth(bits))?;
    if reserved != 0 {
        return Err(FormatError::InvalidField("reserved byte must be zero"));
    }
    let rows = read_u32(src)?;
    let cols = read_u32(src)?;
    let block_k = read_u32(src)?;

    let [cb_flag, c0, c1, c2, c3] = read_array(src)?;
    let codebook = match cb_flag {
        0 => None,
        1 => Some(Codebook4::from_bytes([c0, c1, c2, c3])),
        _ => return Err(FormatError::InvalidField("codebook flag must be 0 or 1")),
    };

    let [scale_flag] = read_array(src)?;
    let row_scales = match scale_flag {
        0 => None,
        1 => {
            let mut scales = Vec::with_capacity(rows.min(1 << 20));
            for _ in 0..rows {
                scales.push(f32::from_le_bytes(read_array(src)?));
            }
            Some(scales)
        }
        _ => return Err(FormatError::InvalidField("scales flag must be 0 or 1")),
    };

    let declared = u64::from_le_bytes(read_array(src)?);
    let expected = payload_len(rows, cols, bit_width) as u64;
    if declared != expected {
        return Err(FormatError::LengthMismatch { expected, found: declared });
    }
    let mut payload = Vec::with_capacity(expected as usize);
    src.take(expected).read_to_end(&mut payload)?;
    if payload.len() as u64 != expected {
        return Err(FormatError::LengthMismatch { expected, found: payload.len() as u64 });
    }

    Ok(PackedWeightTensor::from_parts(bit_width, rows, cols, block_k, codebook, row_scales, payload)?)
}
