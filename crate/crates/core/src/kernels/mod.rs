//! Up-convert-and-compute GEMV kernels.
//!
//! Each kernel walks the packed payload in storage order. For every 32-row
//! block and every group of four columns it expands the packed unit into
//! four `[m8][k4]` int8 groups (rows `8j..8j+8` in group `j`), multiplies each
//! group against the four activation bytes of that column group and adds the
//! 4-element dot products into 32 int32 accumulators. Accumulation is exact:
//! with |w| ≤ 128, |a| ≤ 127 and K ≤ [`MAX_COLS`] no int32 can wrap.
//!
//! Every kernel has a portable scalar implementation. On x86-64 hosts with
//! AVX2 a SIMD implementation is available; it must agree bit-for-bit.

mod scalar;
#[cfg(target_arch = "x86_64")]
mod x86;

use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::layout::{BitWidth, Codebook4, Int8Matrix, PackedWeightTensor, BLOCK_M, K_GROUP};
use crate::quant::{AccumulatorVector, QuantizedVector};

/// Longest contraction for which int32 accumulation provably cannot wrap:
/// 128 × 127 × 131072 < 2^31.
pub const MAX_COLS: usize = 131_072;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum KernelError {
    #[error("dimension mismatch: weights have {weights} columns, activations {activations}")]
    DimensionMismatch { weights: usize, activations: usize },
    #[error("expected a {expected:?} weight tensor, got {got:?}")]
    WrongWeightFormat { expected: WeightFormat, got: WeightFormat },
    #[error("the SIMD kernel variant is not supported on this host")]
    SimdUnavailable,
    #[error("K = {cols} exceeds the overflow-safe limit of {MAX_COLS}")]
    ContractionTooLong { cols: usize },
}

/// Scalar or SIMD implementation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelVariant {
    Scalar,
    Simd,
}

impl KernelVariant {
    /// Whether the host supports the SIMD variant.
    pub fn simd_available() -> bool {
        #[cfg(target_arch = "x86_64")]
        {
            is_x86_feature_detected!("avx2")
        }
        #[cfg(not(target_arch = "x86_64"))]
        {
            false
        }
    }

    /// SIMD when available, scalar otherwise.
    pub fn best() -> Self {
        if Self::simd_available() {
            KernelVariant::Simd
        } else {
            KernelVariant::Scalar
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            KernelVariant::Scalar => "scalar",
            KernelVariant::Simd => "simd",
        }
    }

    fn ensure_available(self) -> Result<(), KernelError> {
        match self {
            KernelVariant::Simd if !Self::simd_available() => Err(KernelError::SimdUnavailable),
            _ => Ok(()),
        }
    }
}

/// Weight storage a kernel consumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightFormat {
    Int8,
    Int2,
    Int1,
}

impl WeightFormat {
    pub fn bits(self) -> u8 {
        match self {
            WeightFormat::Int8 => 8,
            WeightFormat::Int2 => 2,
            WeightFormat::Int1 => 1,
        }
    }

    pub fn from_bits(bits: u8) -> Option<Self> {
        match bits {
            8 => Some(WeightFormat::Int8),
            2 => Some(WeightFormat::Int2),
            1 => Some(WeightFormat::Int1),
            _ => None,
        }
    }
}

impl From<BitWidth> for WeightFormat {
    fn from(b: BitWidth) -> Self {
        match b {
            BitWidth::One => WeightFormat::Int1,
            BitWidth::Two => WeightFormat::Int2,
        }
    }
}

/// A weight matrix the GEMV kernels (and the parallel driver) can consume
/// one 32-row block at a time.
pub trait GemvWeights: Sync {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    fn format(&self) -> WeightFormat;
    /// Bytes of weight data streamed by one GEMV.
    fn payload_bytes(&self) -> usize;

    /// Number of 32-row blocks (the last may be partial for dense int8).
    fn row_blocks(&self) -> usize {
        self.rows().div_ceil(BLOCK_M)
    }

    /// Writes rows `first_block * 32 .. first_block * 32 + out.len()` into `out`.
    ///
    /// Inputs must already be validated (see [`gemv`]); a mismatched
    /// activation length panics instead of returning an error.
    fn gemv_row_blocks(&self, act: &[i8], first_block: usize, out: &mut [i32], variant: KernelVariant);
}

impl GemvWeights for PackedWeightTensor {
    fn rows(&self) -> usize {
        PackedWeightTensor::rows(self)
    }

    fn cols(&self) -> usize {
        PackedWeightTensor::cols(self)
    }

    fn format(&self) -> WeightFormat {
        self.bit_width().into()
    }

    fn payload_bytes(&self) -> usize {
        self.payload().len()
    }

    fn gemv_row_blocks(&self, act: &[i8], first_block: usize, out: &mut [i32], variant: KernelVariant) {
        let all_kb = 0..self.k_blocks();
        for (i, chunk) in out.chunks_exact_mut(BLOCK_M).enumerate() {
            let acc: &mut [i32; BLOCK_M] = chunk.try_into().unwrap();
            acc.fill(0);
            brgemm_row_block(self, act, first_block + i, all_kb.clone(), acc, variant);
        }
    }
}

impl GemvWeights for Int8Matrix {
    fn rows(&self) -> usize {
        Int8Matrix::rows(self)
    }

    fn cols(&self) -> usize {
        Int8Matrix::cols(self)
    }

    fn format(&self) -> WeightFormat {
        WeightFormat::Int8
    }

    fn payload_bytes(&self) -> usize {
        self.data().len()
    }

    fn gemv_row_blocks(&self, act: &[i8], first_block: usize, out: &mut [i32], variant: KernelVariant) {
        let first_row = first_block * BLOCK_M;
        for (i, o) in out.iter_mut().enumerate() {
            *o = dot_i8(self.row(first_row + i), act, variant);
        }
    }
}

fn dot_i8(w: &[i8], a: &[i8], variant: KernelVariant) -> i32 {
    assert_simd_supported(variant);
    match variant {
        KernelVariant::Scalar => scalar::dot_i8(w, a),
        #[cfg(target_arch = "x86_64")]
        KernelVariant::Simd => unsafe { x86::dot_i8(w, a) },
        #[cfg(not(target_arch = "x86_64"))]
        KernelVariant::Simd => unreachable!("SIMD variant rejected during validation"),
    }
}

/// Accumulates the contribution of contraction blocks `kbs` of row block
/// `mb` into `acc` (the batch-reduce step). Each `kb` spans `block_k / 4`
/// packed units; the order of `kbs` does not affect the result.
///
/// # Panics
///
/// If `mb`/`kb` are out of range or `act` is shorter than the tensor's K.
pub fn brgemm_row_block(
    packed: &PackedWeightTensor,
    act: &[i8],
    mb: usize,
    kbs: impl IntoIterator<Item = usize>,
    acc: &mut [i32; BLOCK_M],
    variant: KernelVariant,
) {
    assert_simd_supported(variant);
    let block = packed.row_block(mb);
    let unit_bytes = packed.bit_width().unit_bytes();
    let units_per_kb = packed.block_k() / K_GROUP;
    for kb in kbs {
        let units: Range<usize> = kb * units_per_kb..(kb + 1) * units_per_kb;
        let bytes = &block[units.start * unit_bytes..units.end * unit_bytes];
        let act = &act[units.start * K_GROUP..units.end * K_GROUP];
        match (packed.bit_width(), variant) {
            (BitWidth::Two, KernelVariant::Scalar) => {
                scalar::int2_units(bytes, packed.codebook().unwrap(), act, acc)
            }
            (BitWidth::One, KernelVariant::Scalar) => scalar::int1_units(bytes, act, acc),
            #[cfg(target_arch = "x86_64")]
            (BitWidth::Two, KernelVariant::Simd) => unsafe {
                x86::int2_units(bytes, packed.codebook().unwrap(), act, acc)
            },
            #[cfg(target_arch = "x86_64")]
            (BitWidth::One, KernelVariant::Simd) => unsafe { x86::int1_units(bytes, act, acc) },
            #[cfg(not(target_arch = "x86_64"))]
            (_, KernelVariant::Simd) => unreachable!("SIMD variant rejected during validation"),
        }
    }
}

// The SIMD paths execute AVX2 instructions; never reach them on a host without it.
#[inline]
fn assert_simd_supported(variant: KernelVariant) {
    assert!(
        variant == KernelVariant::Scalar || KernelVariant::simd_available(),
        "SIMD kernel variant requested on a host without AVX2"
    );
}

/// Shared validation for every GEMV entry point.
pub fn validate<W: GemvWeights + ?Sized>(
    weights: &W,
    act: &QuantizedVector,
    variant: KernelVariant,
) -> Result<(), KernelError> {
    variant.ensure_available()?;
    if weights.cols() != act.len() {
        return Err(KernelError::DimensionMismatch { weights: weights.cols(), activations: act.len() });
    }
    if weights.cols() > MAX_COLS {
        return Err(KernelError::ContractionTooLong { cols: weights.cols() });
    }
    Ok(())
}

/// Single-threaded GEMV over any supported weight format.
pub fn gemv<W: GemvWeights + ?Sized>(
    weights: &W,
    act: &QuantizedVector,
    variant: KernelVariant,
) -> Result<AccumulatorVector, KernelError> {
    validate(weights, act, variant)?;
    let mut out = vec![0i32; weights.rows()];
    weights.gemv_row_blocks(act.values(), 0, &mut out, variant);
    Ok(out.into())
}

fn expect_format(packed: &PackedWeightTensor, expected: WeightFormat) -> Result<(), KernelError> {
    let got = packed.bit_width().into();
    if got != expected {
        return Err(KernelError::WrongWeightFormat { expected, got });
    }
    Ok(())
}

/// 2-bit GEMV: `acc[m] = Σ_k codebook[code(m, k)] × act[k]`.
pub fn gemv_int2(
    packed: &PackedWeightTensor,
    act: &QuantizedVector,
    variant: KernelVariant,
) -> Result<AccumulatorVector, KernelError> {
    expect_format(packed, WeightFormat::Int2)?;
    gemv(packed, act, variant)
}

/// 1-bit GEMV: `acc[m] = Σ_k (bit(m, k) ? -1 : +1) × act[k]`.
pub fn gemv_int1(
    packed: &PackedWeightTensor,
    act: &QuantizedVector,
    variant: KernelVariant,
) -> Result<AccumulatorVector, KernelError> {
    expect_format(packed, WeightFormat::Int1)?;
    gemv(packed, act, variant)
}

/// Dense int8 GEMV with the selected variant (the no-up-convert baseline).
pub fn gemv_int8(
    weights: &Int8Matrix,
    act: &QuantizedVector,
    variant: KernelVariant,
) -> Result<AccumulatorVector, KernelError> {
    gemv(weights, act, variant)
}

/// Reference int8 GEMV: plain row-by-row dot products in exact int32
/// arithmetic. The oracle the packed kernels are checked against.
pub fn gemv_int8_ref(weights: &Int8Matrix, act: &QuantizedVector) -> Result<AccumulatorVector, KernelError> {
    if weights.cols() != act.len() {
        return Err(KernelError::DimensionMismatch { weights: weights.cols(), activations: act.len() });
    }
    if weights.cols() > MAX_COLS {
        return Err(KernelError::ContractionTooLong { cols: weights.cols() });
    }
    let a = act.values();
    let values = (0..weights.rows())
        .map(|m| weights.row(m).iter().zip(a).map(|(&w, &x)| w as i32 * x as i32).sum())
        .collect();
    Ok(AccumulatorVector { values })
}

/// Expands one 32-byte 2-bit unit into four `[m8][k4]` int8 groups.
/// Group `j` byte `m8 * 4 + k4` is the weight of row `8j + m8`, column `k4`.
pub fn upconvert_block_int2(unit: &[u8; 32], codebook: &Codebook4) -> [[i8; 32]; 4] {
    let mut out = [[0i8; 32]; 4];
    for (j, group) in out.iter_mut().enumerate() {
        for (dst, &byte) in group.iter_mut().zip(unit) {
            *dst = codebook.lookup(byte >> (2 * j));
        }
    }
    out
}

/// Expands one 1-bit word (8 rows × 4 columns) into 32 int8 values in
/// `[m8][k4]` order: +1 for a clear bit, -1 for a set bit.
pub fn upconvert_word_int1(word: u32) -> [i8; 32] {
    std::array::from_fn(|i| if word >> i & 1 == 0 { 1 } else { -1 })
}
