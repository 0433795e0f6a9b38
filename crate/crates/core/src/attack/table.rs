use std::hash::{DefaultHasher, Hash, Hasher};

use rayon::prelude::*;

use super::{with_threads, AttackError, Dictionary};
use crate::encoding::LeakEvent;
use crate::leakage::{
    candidate_consistent, expected_observation, Channels, Fingerprint, LibraryProfile,
    SessionPublic,
};

fn digest(events: &[LeakEvent]) -> u64 {
    let mut h = DefaultHasher::new();
    events.hash(&mut h);
    h.finish()
}

/// Precomputed expected observations of every dictionary entry for a fixed
/// list of public parameters. Lets many fingerprints over the same sessions
/// be matched without re-running conversions.
pub struct SignatureTable {
    dict: Dictionary,
    publics: Vec<SessionPublic>,
    profile: LibraryProfile,
    channels: Channels,
    /// Row-major: `digests[i * publics.len() + j]`.
    digests: Vec<u64>,
}

impl SignatureTable {
    pub fn build(
        dict: Dictionary,
        publics: Vec<SessionPublic>,
        profile: LibraryProfile,
        channels: Channels,
        threads: usize,
    ) -> Result<Self, AttackError> {
        let rows: Vec<Vec<u64>> = with_threads(threads, || {
            dict.entries()
                .par_iter()
                .map(|pw| {
                    publics
                        .iter()
                        .map(|p| expected_observation(pw, p, profile, channels).map(|e| digest(&e)))
                        .collect::<Result<Vec<u64>, _>>()
                })
                .collect::<Result<Vec<_>, _>>()
        })??;
        Ok(SignatureTable {
            dict,
            publics,
            profile,
            channels,
            digests: rows.concat(),
        })
    }

    pub fn dictionary(&self) -> &Dictionary {
        &self.dict
    }

    pub fn publics(&self) -> &[SessionPublic] {
        &self.publics
    }

    /// Indices of entries consistent with every session of `fp`. Sessions
    /// must use a subset of the table's public parameters. Digest matches are
    /// confirmed by re-running the conversion, so the result is exact.
    pub fn survivors(&self, fp: &Fingerprint) -> Result<Vec<usize>, AttackError> {
        if fp.profile != self.profile {
            return Err(AttackError::TableMismatch("profile differs"));
        }
        let mut cols = Vec::with_capacity(fp.sessions.len());
        for s in &fp.sessions {
            if s.channels != self.channels {
                return Err(AttackError::TableMismatch("monitored channels differ"));
            }
            let j = self.publics.iter().position(|p| *p == s.public).ok_or(
                AttackError::TableMismatch("session parameters not in table"),
            )?;
            cols.push((j, digest(&s.events)));
        }
        let w = self.publics.len();
        Ok((0..self.dict.len())
            .filter(|&i| cols.iter().all(|&(j, h)| self.digests[i * w + j] == h))
            .filter(|&i| {
                fp.sessions
                    .iter()
                    .all(|s| candidate_consistent(&self.dict.entries()[i], s, self.profile))
            })
            .collect())
    }
}
