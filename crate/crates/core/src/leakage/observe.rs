use serde::{Deserialize, Serialize};

use super::{LeakageError, LibraryProfile};
use crate::dragonfly::{derive_pt, hunting_and_pecking_offline, MacAddr, Mode, OfflineConversion};
use crate::encoding::{LeakEvent, LeakSite, SecretTag};
use crate::field_curve::CurveId;
use crate::leakage::DecompressionStyle;

/// Parameters of a session that the attacker knows or chooses.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SessionPublic {
    #[serde(rename = "macA")]
    pub mac_a: MacAddr,
    #[serde(rename = "macB")]
    pub mac_b: MacAddr,
    pub curve: CurveId,
    pub mode: Mode,
    #[serde(with = "crate::hexser", default)]
    pub ssid: Vec<u8>,
    #[serde(
        with = "crate::hexser::option",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub identifier: Option<Vec<u8>>,
}

/// Which microarchitectural channels the attacker monitors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Channels {
    pub decompression: bool,
    pub bin2bn: bool,
}

impl Channels {
    pub const ALL: Channels = Channels {
        decompression: true,
        bin2bn: true,
    };
    pub const DECOMPRESSION: Channels = Channels {
        decompression: true,
        bin2bn: false,
    };
    pub const BIN2BN: Channels = Channels {
        decompression: false,
        bin2bn: true,
    };
}

impl Default for Channels {
    fn default() -> Self {
        Channels::ALL
    }
}

/// The attacker's view of one session.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionObservation {
    #[serde(flatten)]
    pub public: SessionPublic,
    pub events: Vec<LeakEvent>,
    /// Raw measurements merged into this observation.
    pub reliability: u32,
    #[serde(default)]
    pub channels: Channels,
}

fn check_possible(e: &LeakEvent, profile: LibraryProfile) -> Result<(), LeakageError> {
    let style = profile.decompression_style();
    let ok = match e.site {
        LeakSite::SkippedZeroBytes => {
            profile.leaky_bin2bn() && (e.tag != SecretTag::Seed || profile.leaks_seed())
        }
        LeakSite::ParityBranchTaken => style != DecompressionStyle::Silent,
        LeakSite::ParityValue => style == DecompressionStyle::WolfSsl,
        LeakSite::FormatValue => style == DecompressionStyle::Ell,
    };
    if ok {
        Ok(())
    } else {
        Err(LeakageError::ProfileMismatch {
            profile,
            site: e.site,
        })
    }
}

/// Reduces a session's raw events to what the attacker resolves: only the
/// first candidate conversion of the loop, and the WolfSSL parity test only
/// on the path where its call count differs.
pub fn filter_events(
    events: &[LeakEvent],
    profile: LibraryProfile,
    channels: Channels,
) -> Result<Vec<LeakEvent>, LeakageError> {
    for e in events {
        check_possible(e, profile)?;
    }
    let branch = events
        .iter()
        .find(|e| e.site == LeakSite::ParityBranchTaken)
        .map(|e| e.value);
    let mut out = Vec::with_capacity(8);
    let mut seen_candidate = false;
    for e in events {
        let keep = match e.site {
            LeakSite::SkippedZeroBytes if e.tag == SecretTag::XCand => {
                let first = !seen_candidate;
                seen_candidate = true;
                channels.bin2bn && first
            }
            LeakSite::SkippedZeroBytes => channels.bin2bn,
            LeakSite::ParityBranchTaken | LeakSite::FormatValue => channels.decompression,
            LeakSite::ParityValue => channels.decompression && branch == Some(0),
        };
        if keep {
            out.push(*e);
        }
    }
    Ok(out)
}

pub fn observe_session(
    public: SessionPublic,
    events: &[LeakEvent],
    profile: LibraryProfile,
    channels: Channels,
) -> Result<SessionObservation, LeakageError> {
    Ok(SessionObservation {
        public,
        events: filter_events(events, profile, channels)?,
        reliability: 1,
        channels,
    })
}

fn leading_zeros(bytes: &[u8]) -> u16 {
    bytes.iter().take_while(|&&b| b == 0).count() as u16
}

/// The raw events a victim running `profile` would emit for this
/// conversion, with only the first candidate conversion of the loop.
pub fn offline_events(conv: &OfflineConversion, profile: LibraryProfile) -> Vec<LeakEvent> {
    let mut out = Vec::with_capacity(8);
    let zb = |tag, bytes: &[u8]| LeakEvent {
        site: LeakSite::SkippedZeroBytes,
        value: leading_zeros(bytes),
        tag,
    };
    let leaky = profile.leaky_bin2bn();
    if leaky {
        out.push(zb(SecretTag::XCand, &conv.first_candidate));
        out.push(zb(SecretTag::X, &conv.x));
    }
    let ev = |site, value: u8| LeakEvent {
        site,
        value: value as u16,
        tag: SecretTag::Y,
    };
    let taken = (conv.root_parity != conv.format_parity) as u8;
    match profile.decompression_style() {
        DecompressionStyle::OpenSsl => out.push(ev(LeakSite::ParityBranchTaken, taken)),
        DecompressionStyle::WolfSsl => {
            out.push(ev(LeakSite::ParityValue, conv.root_parity));
            out.push(ev(LeakSite::ParityBranchTaken, taken));
        }
        DecompressionStyle::Ell => {
            out.push(ev(LeakSite::FormatValue, conv.format_parity));
            out.push(ev(LeakSite::ParityBranchTaken, taken));
        }
        DecompressionStyle::Silent => {}
    }
    if leaky {
        out.push(zb(SecretTag::Y, &conv.y));
    }
    if profile.leaks_seed() {
        out.push(zb(SecretTag::Seed, &conv.seed));
    }
    out
}

/// What `candidate` would produce under the same public parameters.
pub fn expected_observation(
    candidate: &[u8],
    public: &SessionPublic,
    profile: LibraryProfile,
    channels: Channels,
) -> Result<Vec<LeakEvent>, LeakageError> {
    let curve = public.curve.params();
    let raw = match public.mode {
        Mode::Sae => {
            let conv = hunting_and_pecking_offline(candidate, public.mac_a, public.mac_b, curve)?;
            offline_events(&conv, profile)
        }
        Mode::SaePt => {
            let mut ev = Vec::new();
            derive_pt(
                candidate,
                &public.ssid,
                public.identifier.as_deref(),
                curve,
                profile,
                &mut ev,
            )?;
            ev
        }
    };
    filter_events(&raw, profile, channels)
}

/// True iff re-running the conversion for `candidate` reproduces every
/// observed event.
pub fn candidate_consistent(
    candidate: &[u8],
    observation: &SessionObservation,
    profile: LibraryProfile,
) -> bool {
    expected_observation(
        candidate,
        &observation.public,
        profile,
        observation.channels,
    )
    .is_ok_and(|ev| ev == observation.events)
}
