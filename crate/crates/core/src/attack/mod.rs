//! Offline dictionary partitioning: discard every candidate whose
//! recomputed leakage disagrees with an observed fingerprint, and plan how
//! many traces that takes.

mod dictionary;
mod plan;
mod table;

use rayon::prelude::*;
use thiserror::Error;

use crate::leakage::{candidate_consistent, Fingerprint, LeakageError};

pub use dictionary::{write_lines, Dictionary};
pub use plan::{
    efficiency, plan_measurements, pruning_confidence, AttackPlan, LeakDistribution, LeakOutcome,
};
pub use table::SignatureTable;

#[derive(Debug, Error)]
pub enum AttackError {
    #[error("dictionary is empty")]
    EmptyDictionary,
    #[error("dictionary line {0} is empty")]
    EmptyEntry(usize),
    #[error("dictionary line {0} repeats an earlier entry")]
    DuplicateEntry(usize),
    #[error("invalid leak distribution: {0}")]
    InvalidDistribution(&'static str),
    #[error("confidence must lie in (0, 1), got {0}")]
    InvalidConfidence(f64),
    #[error("dictionary size must be at least 2, got {0}")]
    InvalidDictionarySize(f64),
    #[error("no number of traces reaches the requested confidence")]
    Unsatisfiable,
    #[error("signature table does not cover this fingerprint: {0}")]
    TableMismatch(&'static str),
    #[error("cannot start worker pool: {0}")]
    ThreadPool(String),
    #[error(transparent)]
    Leakage(#[from] LeakageError),
}

/// Runs `f` on a pool of `threads` workers, or on the global pool when
/// `threads` is 0.
pub(crate) fn with_threads<T: Send>(
    threads: usize,
    f: impl FnOnce() -> T + Send,
) -> Result<T, AttackError> {
    if threads == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| AttackError::ThreadPool(e.to_string()))?;
    Ok(pool.install(f))
}

/// Candidates consistent with every session of `fp`, in dictionary order
/// whatever the thread count. An empty fingerprint keeps everything.
pub fn prune(
    dict: &Dictionary,
    fp: &Fingerprint,
    threads: usize,
) -> Result<Vec<Vec<u8>>, AttackError> {
    fp.validate()?;
    with_threads(threads, || {
        dict.entries()
            .par_iter()
            .filter(|pw| {
                fp.sessions
                    .iter()
                    .all(|s| candidate_consistent(pw, s, fp.profile))
            })
            .cloned()
            .collect()
    })
}
