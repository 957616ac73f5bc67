//! Replicate-indexed random streams.
//!
//! Every replicate owns a generator seeded from `(base_seed, index)` alone, so
//! results never depend on how replicates are spread over threads.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

pub type StreamRng = Xoshiro256PlusPlus;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed; distinct `(seed, index)` pairs give unrelated seeds.
pub fn derive(seed: u64, index: u64) -> u64 {
    splitmix(splitmix(seed) ^ splitmix(index.wrapping_mul(GOLDEN) ^ 0x5851_f42d_4c95_7f2d))
}

/// Generator for replicate `index` under `seed`.
pub fn stream(seed: u64, index: u64) -> StreamRng {
    StreamRng::seed_from_u64(derive(seed, index))
}

/// Runs `f` on a pool of `workers` threads (0 means the rayon default).
pub fn with_workers<T, F>(workers: usize, f: F) -> T
where
    F: FnOnce() -> T + Send,
    T: Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .expect("thread pool construction");
    pool.install(f)
}

/// Replicate chunk size used for parallel loops. Fixed so that partial sums
/// are formed over the same index ranges whatever the worker count.
pub const CHUNK: usize = 256;
