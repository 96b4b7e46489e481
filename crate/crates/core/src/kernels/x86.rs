//! AVX2 kernels.
//!
//! 2-bit: one 256-bit load yields 128 codes. A 4-bit right shift and two
//! nibble masks feed four `vpshufb` lookups (LUT over bits 0-1 and over bits
//! 2-3 of each nibble), producing four `[m8][k4]` int8 vectors.
//!
//! 1-bit: each 32-bit word is broadcast, byte-shuffled so byte `i` holds the
//! source byte of bit `i`, masked with the per-byte bit selector and compared
//! to it; the mask then blends +1/-1.
//!
//! The signed int8 × int8 → int32 4-way dot product is emulated with
//! `vpmaddubsw(|w|, sign(a, w))` followed by `vpmaddwd` against ones. With
//! |w| ≤ 128 and |a| ≤ 127 each int16 pair sum is at most 32512, so the
//! saturating step never saturates.

use std::arch::x86_64::*;

use crate::layout::{Codebook4, BLOCK_M};

#[inline(always)]
unsafe fn dp4(acc: __m256i, w: __m256i, a: __m256i) -> __m256i {
    let prod = _mm256_maddubs_epi16(_mm256_abs_epi8(w), _mm256_sign_epi8(a, w));
    _mm256_add_epi32(acc, _mm256_madd_epi16(prod, _mm256_set1_epi16(1)))
}

#[inline(always)]
unsafe fn broadcast4(a: &[i8]) -> __m256i {
    _mm256_set1_epi32(i32::from_le_bytes([a[0] as u8, a[1] as u8, a[2] as u8, a[3] as u8]))
}

#[inline(always)]
unsafe fn add_into(acc: &mut [i32], v: __m256i) {
    let mut tmp = [0i32; 8];
    _mm256_storeu_si256(tmp.as_mut_ptr() as *mut __m256i, v);
    for (o, t) in acc.iter_mut().zip(tmp) {
        *o += t;
    }
}

fn lut(values: impl Fn(usize) -> i8) -> [i8; 32] {
    std::array::from_fn(|i| values(i % 16))
}

/// # Safety
///
/// The host must support AVX2. `bytes` holds whole 32-byte units and `act`
/// at least four activations per unit.
#[target_feature(enable = "avx2")]
pub(super) unsafe fn int2_units(bytes: &[u8], codebook: &Codebook4, act: &[i8], acc: &mut [i32; BLOCK_M]) {
    let lut01 = lut(|n| codebook.lookup(n as u8));
    let lut23 = lut(|n| codebook.lookup((n >> 2) as u8));
    let lut01 = _mm256_loadu_si256(lut01.as_ptr() as *const __m256i);
    let lut23 = _mm256_loadu_si256(lut23.as_ptr() as *const __m256i);
    let nibble = _mm256_set1_epi8(0x0f);

    let (mut c0, mut c1, mut c2, mut c3) =
        (_mm256_setzero_si256(), _mm256_setzero_si256(), _mm256_setzero_si256(), _mm256_setzero_si256());
    for (unit, a) in bytes.chunks_exact(32).zip(act.chunks_exact(4)) {
        let v = _mm256_loadu_si256(unit.as_ptr() as *const __m256i);
        let lo = _mm256_and_si256(v, nibble);
        let hi = _mm256_and_si256(_mm256_srli_epi32::<4>(v), nibble);
        let a = broadcast4(a);
        c0 = dp4(c0, _mm256_shuffle_epi8(lut01, lo), a);
        c1 = dp4(c1, _mm256_shuffle_epi8(lut23, lo), a);
        c2 = dp4(c2, _mm256_shuffle_epi8(lut01, hi), a);
        c3 = dp4(c3, _mm256_shuffle_epi8(lut23, hi), a);
    }
    add_into(&mut acc[0..8], c0);
    add_into(&mut acc[8..16], c1);
    add_into(&mut acc[16..24], c2);
    add_into(&mut acc[24..32], c3);
}

#[inline(always)]
unsafe fn upconvert_word(word: &[u8], perm: __m256i, bitsel: __m256i, plus: __m256i, minus: __m256i) -> __m256i {
    let w = _mm256_set1_epi32(i32::from_le_bytes([word[0], word[1], word[2], word[3]]));
    let spread = _mm256_shuffle_epi8(w, perm);
    let isolated = _mm256_and_si256(spread, bitsel);
    let set = _mm256_cmpeq_epi8(isolated, bitsel);
    _mm256_blendv_epi8(plus, minus, set)
}

/// # Safety
///
/// The host must support AVX2. `bytes` holds whole 16-byte units and `act`
/// at least four activations per unit.
#[target_feature(enable = "avx2")]
pub(super) unsafe fn int1_units(bytes: &[u8], act: &[i8], acc: &mut [i32; BLOCK_M]) {
    // byte i <- source byte i / 8 of the broadcast word (shuffles stay in-lane)
    let perm: [i8; 32] = std::array::from_fn(|i| (i / 8) as i8);
    let bitsel: [u8; 32] = std::array::from_fn(|i| 1u8 << (i % 8));
    let perm = _mm256_loadu_si256(perm.as_ptr() as *const __m256i);
    let bitsel = _mm256_loadu_si256(bitsel.as_ptr() as *const __m256i);
    let plus = _mm256_set1_epi8(1);
    let minus = _mm256_set1_epi8(-1);

    let (mut c0, mut c1, mut c2, mut c3) =
        (_mm256_setzero_si256(), _mm256_setzero_si256(), _mm256_setzero_si256(), _mm256_setzero_si256());
    for (unit, a) in bytes.chunks_exact(16).zip(act.chunks_exact(4)) {
        let a = broadcast4(a);
        c0 = dp4(c0, upconvert_word(&unit[0..4], perm, bitsel, plus, minus), a);
        c1 = dp4(c1, upconvert_word(&unit[4..8], perm, bitsel, plus, minus), a);
        c2 = dp4(c2, upconvert_word(&unit[8..12], perm, bitsel, plus, minus), a);
        c3 = dp4(c3, upconvert_word(&unit[12..16], perm, bitsel, plus, minus), a);
    }
    add_into(&mut acc[0..8], c0);
    add_into(&mut acc[8..16], c1);
    add_into(&mut acc[16..24], c2);
    add_into(&mut acc[24..32], c3);
}

/// # Safety
///
/// The host must support AVX2. Slices must have equal length.
#[target_feature(enable = "avx2")]
pub(super) unsafe fn dot_i8(w: &[i8], a: &[i8]) -> i32 {
    debug_assert_eq!(w.len(), a.len());
    let n = w.len().min(a.len());
    let body = n / 32 * 32;
    let mut acc = _mm256_setzero_si256();
    for (wc, ac) in w[..body].chunks_exact(32).zip(a[..body].chunks_exact(32)) {
        let wv = _mm256_loadu_si256(wc.as_ptr() as *const __m256i);
        let av = _mm256_loadu_si256(ac.as_ptr() as *const __m256i);
        acc = dp4(acc, wv, av);
    }
    let mut lanes = [0i32; 8];
    _mm256_storeu_si256(lanes.as_mut_ptr() as *mut __m256i, acc);
    let tail: i32 = w[body..n].iter().zip(&a[body..n]).map(|(&w, &a)| w as i32 * a as i32).sum();
    lanes.iter().sum::<i32>() + tail
}
