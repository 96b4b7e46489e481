mod common;

use common::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ulb_core::{
    decode_weights, gemv, parallel_gemv, GemvPool, KernelVariant, ParallelConfig, ParallelError,
};

#[test]
fn worker_and_chunk_sweep_matches_serial() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for bits in [1u8, 2] {
        let p = random_packed(&mut rng, 1024, 512, bits);
        let a = random_act(&mut rng, 512, 127);
        let serial = gemv(&p, &a, KernelVariant::Scalar).unwrap();
        for workers in 1..=16 {
            for chunk in [1, 3, 32] {
                let cfg = ParallelConfig::new(workers, chunk).unwrap();
                assert_eq!(parallel_gemv(&p, &a, cfg, KernelVariant::best()).unwrap(), serial);
            }
        }
    }
}

#[test]
fn dense_int8_parallel_matches_serial_with_ragged_rows() {
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    let p = random_packed(&mut rng, 128, 256, 2);
    let dense = decode_weights(&p);
    let a = random_act(&mut rng, 256, 127);
    let serial = gemv(&dense, &a, KernelVariant::Scalar).unwrap();
    let pool = GemvPool::new(ParallelConfig::new(3, 2).unwrap()).unwrap();
    assert_eq!(pool.gemv(&dense, &a, KernelVariant::best()).unwrap(), serial);

    let ragged = ulb_core::Int8Matrix::new(70, 256, dense.data()[..70 * 256].to_vec()).unwrap();
    let want = gemv(&ragged, &a, KernelVariant::Scalar).unwrap();
    assert_eq!(pool.gemv(&ragged, &a, KernelVariant::best()).unwrap(), want);
}

#[test]
fn pool_is_reusable_and_validates_inputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let p = random_packed(&mut rng, 64, 64, 1);
    let pool = GemvPool::new(ParallelConfig::new(2, 1).unwrap()).unwrap();
    for _ in 0..3 {
        let a = random_act(&mut rng, 64, 127);
        assert_eq!(pool.gemv(&p, &a, KernelVariant::Scalar).unwrap(), gemv(&p, &a, KernelVariant::Scalar).unwrap());
    }
    let short = random_act(&mut rng, 60, 127);
    assert!(matches!(pool.gemv(&p, &short, KernelVariant::Scalar), Err(ParallelError::Kernel(_))));
}
