//! Deterministic parallel Monte Carlo.
//!
//! Samples are cut into fixed-size blocks; block `b` always draws from stream
//! `base_stream + b` and block results are reduced in block order. Output is
//! therefore bitwise independent of the worker count and of scheduling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;

pub const DEFAULT_BLOCK_SIZE: u64 = 256;

/// Blocks processed per chunk by [`MonteCarloPlan::for_each_chunked`], per worker.
const CHUNK_BLOCKS_PER_WORKER: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonteCarloPlan {
    pub seed: u64,
    pub base_stream: u64,
    pub samples: u64,
    pub block_size: u64,
    /// Thread count; 0 means the machine's available parallelism.
    #[serde(skip)]
    pub workers: usize,
}

/// A contiguous range of sample indices `start..start + len`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Block {
    pub index: u64,
    pub start: u64,
    pub len: u64,
}

/// Seed and worker count shared by every Monte Carlo estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Sampling {
    pub seed: u64,
    pub workers: usize,
}

impl Sampling {
    pub fn new(seed: u64, workers: usize) -> Self {
        Sampling { seed, workers }
    }

    /// Plan drawing from the stream namespace `domain_tag`.
    pub fn plan(&self, domain_tag: u64, samples: u64) -> MonteCarloPlan {
        MonteCarloPlan::new(self.seed, crate::rng::domain::base(domain_tag), samples, self.workers)
    }
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

impl MonteCarloPlan {
    pub fn new(seed: u64, base_stream: u64, samples: u64, workers: usize) -> Self {
        MonteCarloPlan {
            seed,
            base_stream,
            samples,
            block_size: DEFAULT_BLOCK_SIZE,
            workers,
        }
    }

    pub fn blocks(&self) -> u64 {
        self.samples.div_ceil(self.block_size)
    }

    fn block(&self, index: u64) -> Block {
        let start = index * self.block_size;
        Block {
            index,
            start,
            len: self.block_size.min(self.samples - start),
        }
    }

    /// Last stream index this plan touches (inclusive).
    pub fn stream_range(&self) -> (u64, u64) {
        (self.base_stream, self.base_stream + self.blocks().saturating_sub(1))
    }

    fn effective_workers(&self) -> usize {
        if self.workers == 0 {
            default_workers()
        } else {
            self.workers
        }
    }

    fn map_range<A, F>(&self, blocks: std::ops::Range<u64>, f: &F) -> Vec<A>
    where
        A: Send,
        F: Fn(Block, &mut RngStream) -> A + Sync,
    {
        let run_one = |b: u64| {
            let mut rng = RngStream::new(self.seed, self.base_stream + b);
            f(self.block(b), &mut rng)
        };
        if self.effective_workers() == 1 {
            return blocks.map(run_one).collect();
        }
        blocks.into_par_iter().map(run_one).collect()
    }

    fn with_pool<R: Send>(&self, job: impl FnOnce() -> R + Send) -> Result<R> {
        let workers = self.effective_workers();
        if workers == 1 {
            return Ok(job());
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::invalid("workers", e.to_string()))?;
        Ok(pool.install(job))
    }

    /// Runs `f` on every block and returns results in block order.
    pub fn map_blocks<A, F>(&self, f: F) -> Result<Vec<A>>
    where
        A: Send,
        F: Fn(Block, &mut RngStream) -> A + Sync + Send,
    {
        let blocks = self.blocks();
        self.with_pool(|| self.map_range(0..blocks, &f))
    }

    /// Like [`map_blocks`](Self::map_blocks) but hands results to `sink` in
    /// block order, a chunk at a time, so memory stays bounded.
    pub fn for_each_chunked<A, F, S>(&self, f: F, mut sink: S) -> Result<()>
    where
        A: Send,
        F: Fn(Block, &mut RngStream) -> A + Sync + Send,
        S: FnMut(A) -> Result<()> + Send,
    {
        let blocks = self.blocks();
        let chunk = (self.effective_workers() * CHUNK_BLOCKS_PER_WORKER) as u64;
        self.with_pool(|| {
            let mut start = 0;
            while start < blocks {
                let end = (start + chunk).min(blocks);
                for a in self.map_range(start..end, &f) {
                    sink(a)?;
                }
                start = end;
            }
            Ok(())
        })?
    }
}
