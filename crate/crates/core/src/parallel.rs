//! Multi-threaded GEMV via dynamic self-scheduling over 32-row blocks.
//!
//! Workers share a monotone cursor and repeatedly claim the next chunk of
//! `chunk_blocks` row blocks until none remain, so faster cores (P cores)
//! end up taking more chunks than slower ones (E cores). Each chunk owns a
//! disjoint slice of the output, which makes the result independent of the
//! worker count, chunk size and claim order.
//!
//! With the `parallel` feature (default) workers run on a dedicated rayon
//! pool of `worker_count` threads. Without it, the calling thread drains the
//! cursor alone.

use std::ops::Range;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use thiserror::Error;

use crate::kernels::{validate, GemvWeights, KernelError, KernelVariant};
use crate::layout::BLOCK_M;
use crate::quant::{AccumulatorVector, QuantizedVector};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParallelError {
    #[error("worker_count must be at least 1")]
    ZeroWorkers,
    #[error("chunk_blocks must be at least 1")]
    ZeroChunk,
    #[error("failed to build worker pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParallelConfig {
    pub worker_count: usize,
    /// 32-row blocks per claimed task.
    pub chunk_blocks: usize,
}

impl ParallelConfig {
    pub fn new(worker_count: usize, chunk_blocks: usize) -> Result<Self, ParallelError> {
        let cfg = Self { worker_count, chunk_blocks };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ParallelError> {
        if self.worker_count == 0 {
            return Err(ParallelError::ZeroWorkers);
        }
        if self.chunk_blocks == 0 {
            return Err(ParallelError::ZeroChunk);
        }
        Ok(())
    }
}

impl Default for ParallelConfig {
    /// One worker per hardware thread, one row block per task.
    fn default() -> Self {
        let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
        Self { worker_count: workers, chunk_blocks: 1 }
    }
}

/// Shared claim counter over `chunk_count()` chunks of row blocks.
#[derive(Debug)]
pub struct ChunkCursor {
    next: AtomicUsize,
    total_blocks: usize,
    chunk_blocks: usize,
}

impl ChunkCursor {
    pub fn new(total_blocks: usize, chunk_blocks: usize) -> Self {
        assert!(chunk_blocks > 0, "chunk_blocks must be positive");
        Self { next: AtomicUsize::new(0), total_blocks, chunk_blocks }
    }

    pub fn chunk_count(&self) -> usize {
        self.total_blocks.div_ceil(self.chunk_blocks)
    }

    /// Claims the next chunk, returning its index and its row-block range.
    pub fn claim(&self) -> Option<(usize, Range<usize>)> {
        let chunk = self.next.fetch_add(1, Ordering::Relaxed);
        if chunk >= self.chunk_count() {
            return None;
        }
        let start = chunk * self.chunk_blocks;
        Some((chunk, start..(start + self.chunk_blocks).min(self.total_blocks)))
    }

    pub fn is_exhausted(&self) -> bool {
        self.next.load(Ordering::Relaxed) >= self.chunk_count()
    }
}

/// What each worker did during one [`GemvPool::schedule`] call.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ScheduleStats {
    pub chunks_per_worker: Vec<usize>,
    /// Whether the cursor was exhausted when each worker stopped.
    pub exhausted_at_exit: Vec<bool>,
}

/// A worker pool sized by a [`ParallelConfig`], reusable across calls.
pub struct GemvPool {
    cfg: ParallelConfig,
    #[cfg(feature = "parallel")]
    pool: rayon::ThreadPool,
}

impl GemvPool {
    pub fn new(cfg: ParallelConfig) -> Result<Self, ParallelError> {
        cfg.validate()?;
        #[cfg(feature = "parallel")]
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.worker_count)
            .thread_name(|i| format!("ulb-gemv-{i}"))
            .build()
            .map_err(|e| ParallelError::Pool(e.to_string()))?;
        Ok(Self {
            cfg,
            #[cfg(feature = "parallel")]
            pool,
        })
    }

    pub fn config(&self) -> ParallelConfig {
        self.cfg
    }

    /// Number of workers that actually run (1 without the `parallel` feature).
    pub fn effective_workers(&self) -> usize {
        if cfg!(feature = "parallel") {
            self.cfg.worker_count
        } else {
            1
        }
    }

    /// Runs `task(worker, chunk, blocks)` for every chunk of `cursor`, each
    /// worker claiming chunks until the cursor is exhausted. Returns once all
    /// chunks are done.
    pub fn schedule<F>(&self, cursor: &ChunkCursor, task: F) -> ScheduleStats
    where
        F: Fn(usize, usize, Range<usize>) + Sync,
    {
        let worker = |id: usize| {
            let mut done = 0;
            while let Some((chunk, blocks)) = cursor.claim() {
                task(id, chunk, blocks);
                done += 1;
            }
            (done, cursor.is_exhausted())
        };

        #[cfg(feature = "parallel")]
        let per_worker = self.pool.broadcast(|ctx| worker(ctx.index()));
        #[cfg(not(feature = "parallel"))]
        let per_worker = vec![worker(0)];

        let (chunks_per_worker, exhausted_at_exit) = per_worker.into_iter().unzip();
        ScheduleStats { chunks_per_worker, exhausted_at_exit }
    }

    /// Multi-threaded GEMV; identical to the serial kernel for every config.
    pub fn gemv<W: GemvWeights + ?Sized>(
        &self,
        weights: &W,
        act: &QuantizedVector,
        variant: KernelVariant,
    ) -> Result<AccumulatorVector, ParallelError> {
        validate(weights, act, variant)?;
        let mut out = vec![0i32; weights.rows()];
        let chunk_rows = self.cfg.chunk_blocks * BLOCK_M;
        let slots: Vec<Mutex<Option<&mut [i32]>>> =
            out.chunks_mut(chunk_rows).map(|c| Mutex::new(Some(c))).collect();
        let cursor = ChunkCursor::new(weights.row_blocks(), self.cfg.chunk_blocks);
        debug_assert_eq!(cursor.chunk_count(), slots.len());

        let a = act.values();
        self.schedule(&cursor, |_, chunk, blocks| {
            let rows = slots[chunk].lock().unwrap().take().expect("chunk claimed twice");
            weights.gemv_row_blocks(a, blocks.start, rows, variant);
        });
        drop(slots);
        Ok(out.into())
    }
}

/// One-shot parallel GEMV; builds a pool for the call.
pub fn parallel_gemv<W: GemvWeights + ?Sized>(
    weights: &W,
    act: &QuantizedVector,
    cfg: ParallelConfig,
    variant: KernelVariant,
) -> Result<AccumulatorVector, ParallelError> {
    GemvPool::new(cfg)?.gemv(weights, act, variant)
}
