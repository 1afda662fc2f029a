//! Tree and forest permutations: encoding, exact enumeration, fast pattern
//! counting, uniform samplers and limit constants.

pub mod binomial;
pub mod code;
pub mod constants;
pub mod error;
pub mod exact;
pub mod geom;
pub mod moments;
pub mod pattern;
pub mod perm;
pub mod quad;
pub mod rng;
pub mod sample;
pub mod simulate;
pub mod stats;
pub mod ustat;
pub mod verify;

pub use error::{Error, Result};

pub use rayon::ThreadPool;

/// A worker pool of exactly `workers` threads.
pub fn thread_pool(workers: usize) -> Result<ThreadPool> {
    if workers == 0 {
        return Err(Error::OutOfRange("workers must be >= 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Internal(format!("thread pool: {e}")))
}
