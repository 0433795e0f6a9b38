//! The Dragonfly handshake as used by WPA3-SAE.
//!
//! Password conversion comes in two flavours: hunting-and-pecking for SAE
//! and the simplified SWU hash-to-element for SAE-PT. Key agreement follows
//! the symmetric commit/confirm exchange of RFC 7664. Concrete choices:
//!
//! * `H` is HMAC-SHA-256 keyed with `max(mac) || min(mac)`; the message is
//!   `password || counter`.
//! * `KDF` is the 802.11 counter-mode construction with labels
//!   `"SAE Hunting and Pecking"` and `"SAE KCK and PMK"`.
//! * SAE-PT uses labels `"SAE Hash to Element u1 P1"` and `"... u2 P2"`.
//! * The salt in the PT-to-PWE step is 32 zero bytes.

mod exchange;
mod h2e;
mod hnp;
pub mod kdf;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::encoding::EncodingError;
use crate::field_curve::{AffinePoint, CurveError, CurveId};

pub use exchange::{
    commit, confirm_tag, process_peer_commit, run_handshake, CommitState, HandshakeOutcome,
    HandshakeResult, SessionKeys, Station, TranscriptRecord,
};
pub use h2e::{derive_pt, hash_to_element, pt_to_pwe, sswu_map};
pub use hnp::{
    hunting_and_pecking, hunting_and_pecking_offline, OfflineConversion, DEFAULT_ITERATIONS,
};

pub const HUNTING_LABEL: &[u8] = b"SAE Hunting and Pecking";
pub const H2E_LABEL_1: &[u8] = b"SAE Hash to Element u1 P1";
pub const H2E_LABEL_2: &[u8] = b"SAE Hash to Element u2 P2";
pub const KEYS_LABEL: &[u8] = b"SAE KCK and PMK";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DragonflyError {
    #[error("invalid session parameters: {0}")]
    Params(&'static str),
    #[error("password conversion did not find a point")]
    DerivationFailed,
    #[error("peer reflected our own commit")]
    Reflection,
    #[error("peer commit element is not a valid curve point")]
    InvalidElement,
    #[error("peer commit scalar is outside [2, q-1]")]
    ScalarOutOfRange,
    #[error("peers disagree on {0}")]
    Mismatch(&'static str),
    #[error(transparent)]
    Encoding(#[from] EncodingError),
    #[error(transparent)]
    Curve(#[from] CurveError),
}

/// A 48-bit IEEE 802 address.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MacAddr(pub [u8; 6]);

impl MacAddr {
    /// The address `base + n`, treating the six bytes as a big-endian integer.
    pub fn offset(self, n: u64) -> MacAddr {
        let mut v = [0u8; 8];
        v[2..].copy_from_slice(&self.0);
        let sum = u64::from_be_bytes(v).wrapping_add(n) & 0xffff_ffff_ffff;
        let mut out = [0u8; 6];
        out.copy_from_slice(&sum.to_be_bytes()[2..]);
        MacAddr(out)
    }
}

impl fmt::Display for MacAddr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let b = self.0;
        write!(
            f,
            "{:02x}:{:02x}:{:02x}:{:02x}:{:02x}:{:02x}",
            b[0], b[1], b[2], b[3], b[4], b[5]
        )
    }
}

impl fmt::Debug for MacAddr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for MacAddr {
    type Err = DragonflyError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let digits: String = s.chars().filter(|c| !matches!(c, ':' | '-')).collect();
        let bytes = hex::decode(digits).map_err(|_| DragonflyError::Params("bad MAC address"))?;
        let arr: [u8; 6] = bytes
            .try_into()
            .map_err(|_| DragonflyError::Params("MAC must be 6 bytes"))?;
        Ok(MacAddr(arr))
    }
}

impl Serialize for MacAddr {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MacAddr {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// `max(a, b) || min(a, b)`
pub(crate) fn ordered_macs(a: MacAddr, b: MacAddr) -> [u8; 12] {
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    let mut out = [0u8; 12];
    out[..6].copy_from_slice(&hi.0);
    out[6..].copy_from_slice(&lo.0);
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mode {
    #[serde(rename = "sae")]
    Sae,
    #[serde(rename = "sae-pt")]
    SaePt,
}

impl Mode {
    pub const ALL: [Mode; 2] = [Mode::Sae, Mode::SaePt];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Sae => "sae",
            Mode::SaePt => "sae-pt",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = DragonflyError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "sae" | "hnp" => Ok(Mode::Sae),
            "sae-pt" | "saept" | "h2e" => Ok(Mode::SaePt),
            _ => Err(DragonflyError::Params("mode must be sae or sae-pt")),
        }
    }
}

/// Everything one peer knows before a session starts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SessionParams {
    pub password: Vec<u8>,
    pub ssid: Vec<u8>,
    pub identifier: Option<Vec<u8>>,
    pub mac_a: MacAddr,
    pub mac_b: MacAddr,
    pub curve: CurveId,
    pub mode: Mode,
}

impl SessionParams {
    pub fn validate(&self) -> Result<(), DragonflyError> {
        if self.mac_a == self.mac_b {
            return Err(DragonflyError::Params("the two MAC addresses must differ"));
        }
        if self.password.is_empty() {
            return Err(DragonflyError::Params("password must not be empty"));
        }
        Ok(())
    }
}

/// Result of password conversion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PasswordElement {
    pub pwe: AffinePoint,
    /// The cached password-derived point (SAE-PT only).
    pub pt: Option<AffinePoint>,
    /// Loop passes performed (SAE only; zero for SAE-PT).
    pub iterations: u32,
    /// The successful iteration (SAE only). Exposed for instrumentation.
    pub found_at: u32,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mac_parse_order_and_offset() {
        let a: MacAddr = "aa:aa:aa:aa:aa:01".parse().unwrap();
        let b: MacAddr = "AA-AA-AA-AA-AA-02".parse().unwrap();
        assert_eq!(a.to_string(), "aa:aa:aa:aa:aa:01");
        assert_eq!(&ordered_macs(a, b)[..6], &b.0);
        assert_eq!(ordered_macs(a, b), ordered_macs(b, a));
        assert_eq!(a.offset(1), b);
        assert_eq!(
            "02:00:00:00:00:ff"
                .parse::<MacAddr>()
                .unwrap()
                .offset(1)
                .to_string(),
            "02:00:00:00:01:00"
        );
        assert!("aa:bb".parse::<MacAddr>().is_err());
    }

    #[test]
    fn mode_names() {
        assert_eq!("SAE-PT".parse::<Mode>().unwrap(), Mode::SaePt);
        assert_eq!(serde_json::to_string(&Mode::SaePt).unwrap(), "\"sae-pt\"");
    }
}
