//! Ultra-low-bit (1-bit and 2-bit) weight GEMV for CPUs.
//!
//! * [`layout`]: bit-exact packed weight layouts and the `ULBW` file format.
//! * [`quant`]: symmetric int8 activation quantization.
//! * [`kernels`]: up-convert-and-compute GEMV kernels (scalar and AVX2).
//! * [`parallel`]: dynamically self-scheduled multi-threaded GEMV.
//! * [`roofline`]: effective-bandwidth roofline and Amdahl speedup models.

pub mod kernels;
pub mod layout;
pub mod parallel;
pub mod quant;
pub mod roofline;

pub use kernels::{
    brgemm_row_block, gemv, gemv_int1, gemv_int2, gemv_int8, gemv_int8_ref, upconvert_block_int2,
    upconvert_word_int1, GemvWeights, KernelError, KernelVariant, WeightFormat,
};
pub use layout::{
    decode_codes, decode_weights, default_block_k, pack_int1, pack_int2, read_packed, write_packed, BitWidth,
    Codebook4, DenseCodeMatrix, FormatError, Int8Matrix, LayoutError, PackedWeightTensor,
};
pub use parallel::{parallel_gemv, ChunkCursor, GemvPool, ParallelConfig, ParallelError};
pub use quant::{dequantize_output, quantize_activations, AccumulatorVector, QuantError, QuantizedVector};
pub use roofline::{
    amdahl_speedup, cycles_per_vector, effective_bw, modeled_aggregate_bw, platform_betas, Bound, KernelProfile,
    PlatformSpec, RooflineError, RooflineReport,
};
