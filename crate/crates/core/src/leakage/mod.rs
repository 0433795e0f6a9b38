//! The attacker's view of protocol runs.
//!
//! Leaky primitives report every secret-dependent decision to a
//! [`LeakObserver`](crate::encoding::LeakObserver). This module reduces
//! those raw events to what a cache attacker resolves under a given
//! [`LibraryProfile`], accounts for the information they carry, models
//! measurement noise, and aggregates sessions into a [`Fingerprint`].

pub mod accounting;
mod fingerprint;
mod noise;
mod observe;
mod profile;
pub mod saept;

use thiserror::Error;

use crate::dragonfly::DragonflyError;
use crate::encoding::LeakSite;

pub use accounting::{
    analytic_expected_bits, information_bits, survival_probability, BitsBreakdown,
};
pub use fingerprint::{
    simulate_fingerprint, vary_peer_mac, victim_events, Fingerprint, FingerprintSpec,
    SimulatedFingerprint, FINGERPRINT_VERSION,
};
pub use noise::{simulate_measurements, MeasurementNoise, MergedMeasurement};
pub use observe::{
    candidate_consistent, expected_observation, filter_events, observe_session, offline_events,
    Channels, SessionObservation, SessionPublic,
};
pub use profile::{DecompressionStyle, LibraryProfile};
pub use saept::{saept_leak_rate, saept_leak_rate_mc, SaePtLeakRate};

#[derive(Debug, Error)]
pub enum LeakageError {
    #[error("unknown library profile `{0}`")]
    UnknownProfile(String),
    #[error("profile {profile} cannot produce a {site:?} event")]
    ProfileMismatch {
        profile: LibraryProfile,
        site: LeakSite,
    },
    #[error("invalid noise model: {0}")]
    InvalidNoise(&'static str),
    #[error("invalid fingerprint: {0}")]
    InvalidFingerprint(&'static str),
    #[error("unsupported fingerprint version {0}")]
    UnsupportedVersion(u32),
    #[error("malformed JSON: {0}")]
    Json(String),
    #[error(transparent)]
    Dragonfly(#[from] DragonflyError),
}
