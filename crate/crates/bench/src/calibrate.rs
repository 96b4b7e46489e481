//! Host measurement of γ: single-thread up-convert + multiply-accumulate
//! time per 256-bit (32 × int8) output vector, with the weights cache-resident
//! so memory bandwidth does not enter.

use std::time::Instant;

use serde::Serialize;
use ulb_core::{
    brgemm_row_block, pack_int1, pack_int2, Codebook4, DenseCodeMatrix, KernelVariant, PackedWeightTensor,
};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaEstimate {
    pub bits: u8,
    pub variant: String,
    pub vectors: u64,
    pub ns_per_vector: f64,
    /// Only when a core frequency was supplied.
    pub cycles_per_vector: Option<f64>,
    pub bytes_per_vector: f64,
}

fn block(bits: u8, k: usize) -> PackedWeightTensor {
    let codes: Vec<u8> = (0..32 * k).map(|i| (i * 7 + i / 13) as u8 & ((1 << bits) - 1)).collect();
    let codes = DenseCodeMatrix::new(32, k, codes).expect("shape");
    match bits {
        2 => pack_int2(&codes, k, Codebook4::default(), None),
        _ => pack_int1(&codes, k, None),
    }
    .expect("valid block")
}

/// Best-of-`reps` timing of one 32-row block with `k` columns (keep
/// `k × bits × 4` bytes within L1/L2).
pub fn calibrate_gamma(
    bits: u8,
    variant: KernelVariant,
    k: usize,
    reps: usize,
    freq_ghz: Option<f64>,
) -> GammaEstimate {
    let p = block(bits, k);
    let act: Vec<i8> = (0..k).map(|i| (i % 255) as i8).collect();
    // 32 weights per vector, so a 32-row block holds `k` of them
    let vectors = k as u64;
    let inner = (1 << 22) / k.max(1) + 1;
    let mut best = f64::INFINITY;
    for _ in 0..reps.max(1) {
        let t = Instant::now();
        for _ in 0..inner {
            let mut acc = [0i32; 32];
            brgemm_row_block(&p, &act, 0, 0..1, &mut acc, variant);
            std::hint::black_box(&acc);
        }
        best = best.min(t.elapsed().as_secs_f64() / inner as f64);
    }
    let ns_per_vector = best * 1e9 / vectors as f64;
    GammaEstimate {
        bits,
        variant: variant.name().into(),
        vectors,
        ns_per_vector,
        cycles_per_vector: freq_ghz.map(|f| ns_per_vector * f),
        bytes_per_vector: (32 * bits as usize) as f64 / 8.0,
    }
}
