//! Timed GEMV runs over a shape suite.

use std::time::Instant;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use ulb_core::roofline::{attained_gbs, weight_payload_bytes};
use ulb_core::{
    decode_weights, default_block_k, gemv_int8_ref, pack_int1, pack_int2, Codebook4, DenseCodeMatrix, GemvPool,
    GemvWeights, Int8Matrix, KernelVariant, LayoutError, ParallelConfig, ParallelError, QuantizedVector,
    RooflineError,
};

use crate::suite::{ShapeSuite, SuiteError};

pub const MIN_ITERATIONS: usize = 3;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(
        "correctness gate failed for {bits}-bit {m}x{k} ({variant}): row {row} = {got}, oracle {want}"
    )]
    OracleMismatch { m: usize, k: usize, bits: u8, variant: &'static str, row: usize, got: i32, want: i32 },
    #[error("bits must be 1, 2 or 8, got {0}")]
    UnsupportedBits(u8),
    #[error("need at least {MIN_ITERATIONS} timed iterations, got {0}")]
    TooFewIterations(usize),
    #[error(transparent)]
    Suite(#[from] SuiteError),
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error(transparent)]
    Parallel(#[from] ParallelError),
    #[error(transparent)]
    Roofline(#[from] RooflineError),
}

/// How benchmark weights are filled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WeightInit {
    #[default]
    Random,
    /// Every code (or int8 weight) is zero.
    Zeros,
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub bits: u8,
    pub parallel: ParallelConfig,
    pub variant: KernelVariant,
    pub iterations: usize,
    pub warmup: usize,
    pub seed: u64,
    pub init: WeightInit,
}

impl BenchConfig {
    pub fn new(bits: u8, parallel: ParallelConfig) -> Self {
        Self {
            bits,
            parallel,
            variant: KernelVariant::best(),
            iterations: 100,
            warmup: 10,
            seed: 0,
            init: WeightInit::Random,
        }
    }
}

/// One timed shape. Field names match the CSV columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    pub suite: String,
    pub shape_m: usize,
    pub shape_k: usize,
    pub bits: u8,
    pub variant: String,
    pub workers: usize,
    pub iters: usize,
    pub median_us: f64,
    pub attained_gbs: f64,
    pub predicted_gbs: Option<f64>,
}

impl BenchResult {
    pub fn median_seconds(&self) -> f64 {
        self.median_us * 1e-6
    }

    pub fn payload_bytes(&self) -> u64 {
        weight_payload_bytes(self.shape_m, self.shape_k, self.bits)
    }
}

fn random_codes(rng: &mut ChaCha8Rng, m: usize, k: usize, bits: u8, init: WeightInit) -> DenseCodeMatrix {
    let mut codes = vec![0u8; m * k];
    if init == WeightInit::Random {
        rng.fill_bytes(&mut codes);
        let mask = (1u8 << bits) - 1;
        codes.iter_mut().for_each(|c| *c &= mask);
    }
    DenseCodeMatrix::new(m, k, codes).expect("length matches shape")
}

/// Weights plus the dense int8 view used by the correctness gate.
fn build_weights(
    rng: &mut ChaCha8Rng,
    m: usize,
    k: usize,
    bits: u8,
    init: WeightInit,
) -> Result<(Box<dyn GemvWeights>, Int8Matrix), BenchError> {
    let block_k = default_block_k(k).ok_or(LayoutError::InvalidBlockK { block_k: 0 })?;
    Ok(match bits {
        2 => {
            let p = pack_int2(&random_codes(rng, m, k, 2, init), block_k, Codebook4::default(), None)?;
            let dense = decode_weights(&p);
            (Box::new(p), dense)
        }
        1 => {
            let p = pack_int1(&random_codes(rng, m, k, 1, init), block_k, None)?;
            let dense = decode_weights(&p);
            (Box::new(p), dense)
        }
        8 => {
            let mut data = vec![0u8; m * k];
            if init == WeightInit::Random {
                rng.fill_bytes(&mut data);
            }
            let w = Int8Matrix::new(m, k, data.into_iter().map(|b| b as i8).collect())?;
            (Box::new(w.clone()), w)
        }
        other => return Err(BenchError::UnsupportedBits(other)),
    })
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

/// Runs every shape of `suite`: build weights, check one parallel result
/// against the scalar oracle, then warm up and time `iterations` calls.
pub fn run_gemv_bench(suite: &ShapeSuite, cfg: &BenchConfig) -> Result<Vec<BenchResult>, BenchError> {
    suite.validate()?;
    if cfg.iterations < MIN_ITERATIONS {
        return Err(BenchError::TooFewIterations(cfg.iterations));
    }
    if ![1, 2, 8].contains(&cfg.bits) {
        return Err(BenchError::UnsupportedBits(cfg.bits));
    }
    let pool = GemvPool::new(cfg.parallel)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut results = Vec::with_capacity(suite.shapes.len());

    for shape in &suite.shapes {
        let (m, k) = (shape.m, shape.k);
        let (weights, dense) = build_weights(&mut rng, m, k, cfg.bits, cfg.init)?;
        let act = QuantizedVector::new((0..k).map(|_| rng.gen_range(-127..=127)).collect(), 1.0)
            .expect("values in range");

        let got = pool.gemv(weights.as_ref(), &act, cfg.variant)?;
        let want = gemv_int8_ref(&dense, &act).map_err(ParallelError::from)?;
        if let Some(row) = (0..m).find(|&r| got.values[r] != want.values[r]) {
            return Err(BenchError::OracleMismatch {
                m,
                k,
                bits: cfg.bits,
                variant: cfg.variant.name(),
                row,
                got: got.values[row],
                want: want.values[row],
            });
        }
        drop(dense);

        for _ in 0..cfg.warmup {
            std::hint::black_box(pool.gemv(weights.as_ref(), &act, cfg.variant)?);
        }
        let mut times = Vec::with_capacity(cfg.iterations);
        for _ in 0..cfg.iterations {
            let start = Instant::now();
            std::hint::black_box(pool.gemv(weights.as_ref(), &act, cfg.variant)?);
            times.push(start.elapsed().as_secs_f64());
        }
        let secs = median(times).max(f64::MIN_POSITIVE);
        results.push(BenchResult {
            suite: suite.name.clone(),
            shape_m: m,
            shape_k: k,
            bits: cfg.bits,
            variant: cfg.variant.name().to_owned(),
            workers: pool.effective_workers(),
            iters: cfg.iterations,
            median_us: secs * 1e6,
            attained_gbs: attained_gbs(weight_payload_bytes(m, k, cfg.bits), secs)?,
            predicted_gbs: None,
        });
    }
    Ok(results)
}
