//! Bit-packed weight layouts.
//!
//! Two layouts are supported, both blocked as `[M/32][K/b_k][b_k/4]` units:
//!
//! * **2-bit VNNI4-interleaved.** Each unit is 32 bytes (eight little-endian
//!   32-bit words) and holds a logical 32×4 tile. Word `m8` packs a `[k4][m4]`
//!   subtensor: the code for row `m4 * 8 + m8`, column `k4` sits at bits
//!   `(k4 * 4 + m4) * 2 ..+2`. Seen as bytes, byte `m8 * 4 + k4` carries the
//!   four row groups in bit pairs 0-1, 2-3, 4-5 and 6-7, so a shuffle-based
//!   LUT turns one 256-bit load into four `[m8][k4]` int8 vectors.
//! * **1-bit VNNI4.** Each unit is 16 bytes (four words, one per row group
//!   `m4`); element `(m8, k4)` of group `m4` is bit `m8 * 4 + k4`.
//!
//! Because the `kb`/`kg` loops are contiguous, unit `u` of row block `mb`
//! covers columns `4u..4u+4` regardless of `block_k`; `block_k` records the
//! contraction blocking the kernels walk, not a different byte order.

mod format;

pub use format::{read_packed, write_packed, FormatError, FORMAT_VERSION, MAGIC};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Rows per packed block.
pub const BLOCK_M: usize = 32;
/// Columns per packed unit (the VNNI4 depth).
pub const K_GROUP: usize = 4;
/// Upper bound for [`default_block_k`].
pub const MAX_DEFAULT_BLOCK_K: usize = 512;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LayoutError {
    #[error("matrix must be non-empty, got {rows}x{cols}")]
    EmptyShape { rows: usize, cols: usize },
    #[error("rows_M = {rows} is not a multiple of {BLOCK_M}")]
    RowsNotDivisible { rows: usize },
    #[error("block_k = {block_k} is not a positive multiple of {K_GROUP}")]
    InvalidBlockK { block_k: usize },
    #[error("cols_K = {cols} is not a multiple of block_k = {block_k}")]
    ColsNotDivisible { cols: usize, block_k: usize },
    #[error("code {code} at (row {row}, col {col}) does not fit in {bits} bit(s)")]
    CodeOutOfRange { row: usize, col: usize, code: u8, bits: u8 },
    #[error("expected {expected} codes for the given shape, got {got}")]
    CodeCountMismatch { expected: usize, got: usize },
    #[error("expected {expected} row scales, got {got}")]
    ScaleCountMismatch { expected: usize, got: usize },
    #[error("row scale {index} is not finite")]
    NonFiniteScale { index: usize },
    #[error("unsupported bit width {0}; only 1 and 2 are packed")]
    UnsupportedBitWidth(u8),
    #[error("payload holds {got} bytes, expected {expected}")]
    PayloadLength { expected: usize, got: usize },
    #[error("a codebook is required for 2-bit tensors and forbidden for 1-bit tensors")]
    CodebookMismatch,
}

/// Weight width of a packed tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BitWidth {
    One,
    Two,
}

impl BitWidth {
    pub fn bits(self) -> u8 {
        match self {
            BitWidth::One => 1,
            BitWidth::Two => 2,
        }
    }

    pub fn from_bits(bits: u8) -> Result<Self, LayoutError> {
        match bits {
            1 => Ok(BitWidth::One),
            2 => Ok(BitWidth::Two),
            other => Err(LayoutError::UnsupportedBitWidth(other)),
        }
    }

    /// Bytes per packed 32×4 unit.
    pub fn unit_bytes(self) -> usize {
        BLOCK_M * K_GROUP * self.bits() as usize / 8
    }

    fn max_code(self) -> u8 {
        (1u8 << self.bits()) - 1
    }
}

/// Maps a 2-bit code to its signed 8-bit weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Codebook4 {
    pub values: [i8; 4],
}

impl Codebook4 {
    pub const fn new(values: [i8; 4]) -> Self {
        Self { values }
    }

    #[inline]
    pub fn lookup(&self, code: u8) -> i8 {
        self.values[(code & 3) as usize]
    }

    pub fn to_bytes(self) -> [u8; 4] {
        self.values.map(|v| v as u8)
    }

    pub fn from_bytes(bytes: [u8; 4]) -> Self {
        Self::new(bytes.map(|b| b as i8))
    }
}

impl Default for Codebook4 {
    /// Two's-complement reading of the code: `[-2, -1, 0, 1]`.
    fn default() -> Self {
        Self::new([-2, -1, 0, 1])
    }
}

/// Row-major matrix of unpacked weight codes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DenseCodeMatrix {
    rows: usize,
    cols: usize,
    codes: Vec<u8>,
}

impl DenseCodeMatrix {
    pub fn new(rows: usize, cols: usize, codes: Vec<u8>) -> Result<Self, LayoutError> {
        let expected = rows * cols;
        if codes.len() != expected {
            return Err(LayoutError::CodeCountMismatch { expected, got: codes.len() });
        }
        Ok(Self { rows, cols, codes })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, codes: vec![0; rows * cols] }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn codes(&self) -> &[u8] {
        &self.codes
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.codes[row * self.cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, code: u8) {
        self.codes[row * self.cols + col] = code;
    }
}

/// Dense row-major int8 weights; the output of [`decode_weights`] and the
/// input of the int8 baseline kernel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Int8Matrix {
    rows: usize,
    cols: usize,
    data: Vec<i8>,
}

impl Int8Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<i8>) -> Result<Self, LayoutError> {
        let expected = rows * cols;
        if data.len() != expected {
            return Err(LayoutError::CodeCountMismatch { expected, got: data.len() });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[i8] {
        &self.data
    }

    pub fn row(&self, m: usize) -> &[i8] {
        &self.data[m * self.cols..(m + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> i8 {
        self.data[row * self.cols + col]
    }
}

/// A packed, blocked weight matrix. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct PackedWeightTensor {
    bit_width: BitWidth,
    rows: usize,
    cols: usize,
    block_k: usize,
    codebook: Option<Codebook4>,
    row_scales: Option<Vec<f32>>,
    payload: Vec<u8>,
}

impl PackedWeightTensor {
    /// Assembles a tensor from raw parts, checking every layout invariant.
    pub fn from_parts(
        bit_width: BitWidth,
        rows: usize,
        cols: usize,
        block_k: usize,
        codebook: Option<Codebook4>,
        row_scales: Option<Vec<f32>>,
        payload: Vec<u8>,
    ) -> Result<Self, LayoutError> {
        check_shape(rows, cols, block_k)?;
        if codebook.is_some() != (bit_width == BitWidth::Two) {
            return Err(LayoutError::CodebookMismatch);
        }
        if let Some(scales) = &row_scales {
            check_scales(scales, rows)?;
        }
        let expected = payload_len(rows, cols, bit_width);
        if payload.len() != expected {
            return Err(LayoutError::PayloadLength { expected, got: payload.len() });
        }
        Ok(Self { bit_width, rows, cols, block_k, codebook, row_scales, payload })
    }

    pub fn bit_width(&self) -> BitWidth {
        self.bit_width
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn block_m(&self) -> usize {
        BLOCK_M
    }

    pub fn block_k(&self) -> usize {
        self.block_k
    }

    pub fn codebook(&self) -> Option<&Codebook4> {
        self.codebook.as_ref()
    }

    pub fn row_scales(&self) -> Option<&[f32]> {
        self.row_scales.as_deref()
    }

    pub fn payload(&self) -> &[u8] {
        &self.payload
    }

    /// Number of 32-row blocks.
    pub fn row_blocks(&self) -> usize {
        self.rows / BLOCK_M
    }

    /// Number of `block_k`-wide contraction blocks.
    pub fn k_blocks(&self) -> usize {
        self.cols / self.block_k
    }

    /// Packed 32×4 units per row block.
    pub fn units_per_row_block(&self) -> usize {
        self.cols / K_GROUP
    }

    /// Payload bytes of one 32-row block (all of its K).
    pub fn row_block_bytes(&self) -> usize {
        self.units_per_row_block() * self.bit_width.unit_bytes()
    }

    /// The payload slice for row block `mb`.
    pub fn row_block(&self, mb: usize) -> &[u8] {
        let len = self.row_block_bytes();
        &self.payload[mb * len..(mb + 1) * len]
    }
}

/// Payload size in bytes: `rows × cols × bits / 8`.
pub fn payload_len(rows: usize, cols: usize, bit_width: BitWidth) -> usize {
    rows * cols * bit_width.bits() as usize / 8
}

/// Largest multiple of 4 that divides `cols` and does not exceed
/// `min(cols, 512)`. `None` when `cols` is not a multiple of 4.
pub fn default_block_k(cols: usize) -> Option<usize> {
    if cols == 0 || !cols.is_multiple_of(K_GROUP) {
        return None;
    }
    let start = cols.min(MAX_DEFAULT_BLOCK_K) / K_GROUP * K_GROUP;
    (1..=start / K_GROUP)
        .rev()
        .map(|g| g * K_GROUP)
        .find(|bk| cols.is_multiple_of(*bk))
}

fn check_shape(rows: usize, cols: usize, block_k: usize) -> Result<(), LayoutError> {
    if rows == 0 || cols == 0 {
        return Err(LayoutError::EmptyShape { rows, cols });
    }
    if !rows.is_multiple_of(BLOCK_M) {
        return Err(LayoutError::RowsNotDivisible { rows });
    }
    if block_k == 0 || !block_k.is_multiple_of(K_GROUP) {
        return Err(LayoutError::InvalidBlockK { block_k });
    }
    if !cols.is_multiple_of(block_k) {
        return Err(LayoutError::ColsNotDivisible { cols, block_k });
    }
    Ok(())
}

fn check_scales(scales: &[f32], rows: usize) -> Result<(), LayoutError> {
    if scales.len() != rows {
        return Err(LayoutError::ScaleCountMismatch { expected: rows, got: scales.len() });
    }
    if let Some(index) = scales.iter().position(|s| !s.is_finite()) {
        return Err(LayoutError::NonFiniteScale { index });
    }
    Ok(())
}

/// Byte offset and bit shift of element `(m, k)` inside a payload.
#[inline]
pub(crate) fn element_location(bit_width: BitWidth, cols: usize, m: usize, k: usize) -> (usize, u32) {
    let unit = (m / BLOCK_M) * (cols / K_GROUP) + k / K_GROUP;
    let m_local = m % BLOCK_M;
    let (m8, m4, k4) = (m_local % 8, m_local / 8, k % K_GROUP);
    let base = unit * bit_width.unit_bytes();
    match bit_width {
        // word m8, bit pair (k4 * 4 + m4) => byte m8*4 + k4, shift 2*m4
        BitWidth::Two => (base + m8 * 4 + k4, (m4 * 2) as u32),
        // word m4, bit m8*4 + k4
        BitWidth::One => {
            let bit = m8 * 4 + k4;
            (base + m4 * 4 + bit / 8, (bit % 8) as u32)
        }
    }
}

fn pack(
    codes: &DenseCodeMatrix,
    bit_width: BitWidth,
    block_k: usize,
    codebook: Option<Codebook4>,
    row_scales: Option<Vec<f32>>,
) -> Result<PackedWeightTensor, LayoutError> {
    let (rows, cols) = (codes.rows, codes.cols);
    check_shape(rows, cols, block_k)?;
    if let Some(scales) = &row_scales {
        check_scales(scales, rows)?;
    }
    let max_code = bit_width.max_code();
    let mut payload = vec![0u8; payload_len(rows, cols, bit_width)];
    for m in 0..rows {
        for k in 0..cols {
            let code = codes.get(m, k);
            if code > max_code {
                return Err(LayoutError::CodeOutOfRange { row: m, col: k, code, bits: bit_width.bits() });
            }
            let (byte, shift) = element_location(bit_width, cols, m, k);
            payload[byte] |= code << shift;
        }
    }
    Ok(PackedWeightTensor { bit_width, rows, cols, block_k, codebook, row_scales, payload })
}

/// Packs 2-bit codes into the VNNI4-interleaved layout.
pub fn pack_int2(
    codes: &DenseCodeMatrix,
    block_k: usize,
    codebook: Codebook4,
    row_scales: Option<Vec<f32>>,
) -> Result<PackedWeightTensor, LayoutError> {
    pack(codes, BitWidth::Two, block_k, Some(codebook), row_scales)
}

/// Packs 1-bit codes into the VNNI4 layout. Bit 0 decodes to +1, bit 1 to -1.
pub fn pack_int1(
    codes: &DenseCodeMatrix,
    block_k: usize,
    row_scales: Option<Vec<f32>>,
) -> Result<PackedWeightTensor, LayoutError> {
    pack(codes, BitWidth::One, block_k, None, row_scales)
}

/// Recovers the raw codes from a packed tensor (inverse of packing).
pub fn decode_codes(packed: &PackedWeightTensor) -> DenseCodeMatrix {
    let (rows, cols) = (packed.rows, packed.cols);
    let mask = packed.bit_width.max_code();
    let mut out = DenseCodeMatrix::zeros(rows, cols);
    for m in 0..rows {
        for k in 0..cols {
            let (byte, shift) = element_location(packed.bit_width, cols, m, k);
            out.set(m, k, (packed.payload[byte] >> shift) & mask);
        }
    }
    out
}

/// Expands a packed tensor into dense int8 weights.
pub fn decode_weights(packed: &PackedWeightTensor) -> Int8Matrix {
    let codes = decode_codes(packed);
    let data = match packed.bit_width {
        BitWidth::Two => {
            let cb = packed.codebook.expect("2-bit tensors always carry a codebook");
            codes.codes.iter().map(|&c| cb.lookup(c)).collect()
        }
        BitWidth::One => codes.codes.iter().map(|&c| if c == 0 { 1 } else { -1 }).collect(),
    };
    Int8Matrix { rows: packed.rows, cols: packed.cols, data }
}
