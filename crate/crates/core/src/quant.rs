//! Symmetric int8 activation quantization and accumulator dequantization.

use thiserror::Error;

/// Largest magnitude produced by [`quantize_activations`]; -128 is never used.
pub const QMAX: i8 = 127;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuantError {
    #[error("input element {index} is not finite")]
    NonFinite { index: usize },
    #[error("quantized value {value} at {index} is outside [-127, 127]")]
    OutOfRange { index: usize, value: i8 },
    #[error("scale must be positive and finite, got {0}")]
    InvalidScale(f32),
    #[error("length mismatch: accumulators have {acc} entries, row scales {scales}")]
    LengthMismatch { acc: usize, scales: usize },
}

/// Int8 activations sharing one symmetric scale: `x ≈ values × scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedVector {
    values: Vec<i8>,
    scale: f32,
}

impl QuantizedVector {
    pub fn new(values: Vec<i8>, scale: f32) -> Result<Self, QuantError> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(QuantError::InvalidScale(scale));
        }
        if let Some(index) = values.iter().position(|&v| v == i8::MIN) {
            return Err(QuantError::OutOfRange { index, value: i8::MIN });
        }
        Ok(Self { values, scale })
    }

    pub fn values(&self) -> &[i8] {
        &self.values
    }

    pub fn scale(&self) -> f32 {
        self.scale
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Per-row int32 GEMV outputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccumulatorVector {
    pub values: Vec<i32>,
}

impl AccumulatorVector {
    pub fn zeros(len: usize) -> Self {
        Self { values: vec![0; len] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl From<Vec<i32>> for AccumulatorVector {
    fn from(values: Vec<i32>) -> Self {
        Self { values }
    }
}

/// Quantizes `x` with `scale = max|x| / 127` (1 for an all-zero input),
/// rounding half away from zero and clamping to [-127, 127].
pub fn quantize_activations(x: &[f32]) -> Result<QuantizedVector, QuantError> {
    if let Some(index) = x.iter().position(|v| !v.is_finite()) {
        return Err(QuantError::NonFinite { index });
    }
    let amax = x.iter().fold(0.0f32, |m, v| m.max(v.abs()));
    let scale = if amax == 0.0 { 1.0 } else { amax / QMAX as f32 };
    let values = x
        .iter()
        // f32::round is half-away-from-zero
        .map(|&v| (v / scale).round().clamp(-(QMAX as f32), QMAX as f32) as i8)
        .collect();
    Ok(QuantizedVector { values, scale })
}

/// `out[m] = acc[m] × act_scale × row_scales[m]` (row scale 1 when absent).
pub fn dequantize_output(
    acc: &AccumulatorVector,
    act_scale: f32,
    row_scales: Option<&[f32]>,
) -> Result<Vec<f32>, QuantError> {
    match row_scales {
        Some(scales) if scales.len() != acc.len() => {
            Err(QuantError::LengthMismatch { acc: acc.len(), scales: scales.len() })
        }
        Some(scales) => Ok(acc
            .values
            .iter()
            .zip(scales)
            .map(|(&a, &s)| a as f32 * act_scale * s)
            .collect()),
        None => Ok(acc.values.iter().map(|&a| a as f32 * act_scale).collect()),
    }
}
