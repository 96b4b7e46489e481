#![allow(dead_code)]

use rand::Rng;
use ulb_core::{
    default_block_k, pack_int1, pack_int2, Codebook4, DenseCodeMatrix, PackedWeightTensor, QuantizedVector,
};

pub fn random_codes<R: Rng>(rng: &mut R, rows: usize, cols: usize, bits: u8) -> DenseCodeMatrix {
    let max = 1u8 << bits;
    DenseCodeMatrix::new(rows, cols, (0..rows * cols).map(|_| rng.gen_range(0..max)).collect()).unwrap()
}

pub fn random_codebook<R: Rng>(rng: &mut R) -> Codebook4 {
    Codebook4::new(std::array::from_fn(|_| rng.gen()))
}

pub fn random_act<R: Rng>(rng: &mut R, len: usize, mag: i8) -> QuantizedVector {
    QuantizedVector::new((0..len).map(|_| rng.gen_range(-mag..=mag)).collect(), 1.0).unwrap()
}

pub fn random_packed<R: Rng>(rng: &mut R, rows: usize, cols: usize, bits: u8) -> PackedWeightTensor {
    let codes = random_codes(rng, rows, cols, bits);
    let bk = default_block_k(cols).unwrap();
    if bits == 2 {
        pack_int2(&codes, bk, random_codebook(rng), None).unwrap()
    } else {
        pack_int1(&codes, bk, None).unwrap()
    }
}

/// Widened 64-bit brute-force GEMV straight from the codes.
pub fn oracle_i64(codes: &DenseCodeMatrix, bits: u8, cb: &Codebook4, act: &[i8]) -> Vec<i64> {
    (0..codes.rows())
        .map(|m| {
            (0..codes.cols())
                .map(|k| {
                    let c = codes.get(m, k);
                    let w = if bits == 2 { cb.values[c as usize] as i64 } else { 1 - 2 * c as i64 };
                    w * act[k] as i64
                })
                .sum()
        })
        .collect()
}
