use super::{upconvert_block_int2, upconvert_word_int1};
use crate::layout::{Codebook4, BLOCK_M};

#[inline]
fn dot4(w: &[i8], a: &[i8; 4]) -> i32 {
    w.iter().zip(a).map(|(&w, &a)| w as i32 * a as i32).sum()
}

/// Multiply-accumulates one `[m8][k4]` group into rows `base..base + 8`.
#[inline]
fn fma_group(group: &[i8; 32], a: &[i8; 4], acc: &mut [i32]) {
    for (m8, out) in acc.iter_mut().enumerate() {
        *out += dot4(&group[m8 * 4..m8 * 4 + 4], a);
    }
}

pub(super) fn int2_units(bytes: &[u8], codebook: &Codebook4, act: &[i8], acc: &mut [i32; BLOCK_M]) {
    for (unit, a) in bytes.chunks_exact(32).zip(act.chunks_exact(4)) {
        let groups = upconvert_block_int2(unit.try_into().unwrap(), codebook);
        let a: &[i8; 4] = a.try_into().unwrap();
        for (j, group) in groups.iter().enumerate() {
            fma_group(group, a, &mut acc[j * 8..j * 8 + 8]);
        }
    }
}

pub(super) fn int1_units(bytes: &[u8], act: &[i8], acc: &mut [i32; BLOCK_M]) {
    for (unit, a) in bytes.chunks_exact(16).zip(act.chunks_exact(4)) {
        let a: &[i8; 4] = a.try_into().unwrap();
        for (g, word) in unit.chunks_exact(4).enumerate() {
            let group = upconvert_word_int1(u32::from_le_bytes(word.try_into().unwrap()));
            fma_group(&group, a, &mut acc[g * 8..g * 8 + 8]);
        }
    }
}

pub(super) fn dot_i8(w: &[i8], a: &[i8]) -> i32 {
    w.iter().zip(a).map(|(&w, &a)| w as i32 * a as i32).sum()
}
