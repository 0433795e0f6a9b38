//! Information accounting: bits leaked by an observation are
//! `-log2 P(a random wrong candidate produces the same observation)`.

use serde::Serialize;

use super::{Channels, LibraryProfile};
use crate::dragonfly::Mode;
use crate::encoding::{LeakEvent, LeakSite, SecretTag};
use crate::field_curve::{CurveId, CurveParams, Uint};

fn log2_uint(v: &Uint) -> f64 {
    let bits = v.bit_len();
    if bits <= 64 {
        return (v.low_u64() as f64).log2();
    }
    let top = v.to_be_bytes(Uint::MAX_BYTES);
    // take the leading 64 significant bits
    let shift = bits - 64;
    let mut acc = 0u64;
    for i in 0..64 {
        let bit = shift + 63 - i;
        let byte = top[Uint::MAX_BYTES - 1 - (bit / 8) as usize];
        acc = (acc << 1) | ((byte >> (bit % 8)) & 1) as u64;
    }
    shift as f64 + (acc as f64).log2()
}

/// Leading-zero-byte count of a value uniform in `[0, m)`, written on `len` bytes.
#[derive(Clone, Copy, Debug)]
pub struct ZeroByteModel {
    pub len: usize,
    pub log2_m: f64,
}

impl ZeroByteModel {
    pub fn p_at_least(&self, k: u16) -> f64 {
        let e = 8.0 * (self.len as f64 - k as f64) - self.log2_m;
        e.exp2().min(1.0)
    }

    pub fn p_exact(&self, z: u16) -> f64 {
        self.p_at_least(z) - self.p_at_least(z + 1)
    }

    /// Shannon entropy of the count, in bits.
    pub fn entropy(&self) -> f64 {
        (0..=self.len as u16)
            .map(|z| self.p_exact(z))
            .filter(|&p| p > 0.0)
            .map(|p| -p * p.log2())
            .sum()
    }
}

/// Distributions of every converted value for one curve.
#[derive(Clone, Copy, Debug)]
pub struct SiteModels {
    /// Raw KDF output of the first iteration.
    pub candidate: ZeroByteModel,
    /// Canonical field elements (final x, y, SAE-PT values).
    pub element: ZeroByteModel,
    /// 32-byte HMAC output.
    pub seed: ZeroByteModel,
    /// Probability that the first iteration yields a point.
    pub first_success: f64,
}

impl SiteModels {
    pub fn for_curve(curve: &CurveParams) -> SiteModels {
        let f = &curve.field;
        let len = f.byte_len();
        let bits = f.bits() as f64;
        let log2_p = log2_uint(&f.modulus());
        let log2_q = log2_uint(&curve.scalars.order());
        SiteModels {
            candidate: ZeroByteModel { len, log2_m: bits },
            element: ZeroByteModel {
                len,
                log2_m: log2_p,
            },
            seed: ZeroByteModel {
                len: 32,
                log2_m: 256.0,
            },
            first_success: (log2_q - bits - 1.0).exp2(),
        }
    }

    pub fn for_id(id: CurveId) -> SiteModels {
        SiteModels::for_curve(id.params())
    }

    /// Joint probability of the first-candidate and final-x counts.
    pub fn joint_first_final(&self, z1: u16, zx: u16) -> f64 {
        let s = self.first_success;
        let p1 = self.candidate.p_exact(z1);
        let same = if z1 == zx { s * p1 } else { 0.0 };
        same + (1.0 - s) * p1 * self.element.p_exact(zx)
    }

    /// Entropy of the (first candidate, final x) pair.
    pub fn joint_entropy(&self) -> f64 {
        let n = self.element.len as u16;
        let mut h = 0.0;
        for z1 in 0..=n.min(8) {
            for zx in 0..=n.min(8) {
                let p = self.joint_first_final(z1, zx);
                if p > 0.0 {
                    h -= p * p.log2();
                }
            }
        }
        h
    }
}

fn zero_count(events: &[LeakEvent], tag: SecretTag) -> Option<u16> {
    events
        .iter()
        .find(|e| e.site == LeakSite::SkippedZeroBytes && e.tag == tag)
        .map(|e| e.value)
}

/// Probability that a random wrong candidate reproduces `events` (already
/// filtered to the attacker's view).
pub fn survival_probability(
    events: &[LeakEvent],
    profile: LibraryProfile,
    mode: Mode,
    curve: CurveId,
) -> f64 {
    let m = SiteModels::for_id(curve);
    let mut p = 1.0;
    // decompression bits are independent fair coins
    for e in events {
        if matches!(
            e.site,
            LeakSite::ParityBranchTaken | LeakSite::ParityValue | LeakSite::FormatValue
        ) {
            p *= 0.5;
        }
    }
    match mode {
        Mode::Sae => {
            match (
                zero_count(events, SecretTag::XCand),
                zero_count(events, SecretTag::X),
            ) {
                (Some(z1), Some(zx)) => p *= m.joint_first_final(z1, zx),
                (Some(z1), None) => p *= m.candidate.p_exact(z1),
                (None, Some(zx)) => p *= m.element.p_exact(zx),
                (None, None) => {}
            }
            if let Some(zy) = zero_count(events, SecretTag::Y) {
                p *= m.element.p_exact(zy);
            }
            if profile.leaks_seed() {
                if let Some(zs) = zero_count(events, SecretTag::Seed) {
                    p *= m.seed.p_exact(zs);
                }
            }
        }
        Mode::SaePt => {
            for e in events
                .iter()
                .filter(|e| e.site == LeakSite::SkippedZeroBytes)
            {
                p *= m.element.p_exact(e.value);
            }
        }
    }
    p
}

pub fn information_bits(
    events: &[LeakEvent],
    profile: LibraryProfile,
    mode: Mode,
    curve: CurveId,
) -> f64 {
    0.0 - survival_probability(events, profile, mode, curve).log2()
}

/// Expected bits per session, split by channel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BitsBreakdown {
    pub decompression: f64,
    pub bin2bn: f64,
    pub total: f64,
}

/// Expected information per session under this crate's accounting.
pub fn analytic_expected_bits(
    profile: LibraryProfile,
    mode: Mode,
    curve: CurveId,
    channels: Channels,
) -> BitsBreakdown {
    let m = SiteModels::for_id(curve);
    let decompression = if channels.decompression && mode == Mode::Sae {
        profile.expected_decompression_bits()
    } else {
        0.0
    };
    let bin2bn = if channels.bin2bn && profile.leaky_bin2bn() {
        match mode {
            Mode::Sae => {
                let seed = if profile.leaks_seed() {
                    m.seed.entropy()
                } else {
                    0.0
                };
                m.joint_entropy() + m.element.entropy() + seed
            }
            Mode::SaePt => 6.0 * m.element.entropy(),
        }
    } else {
        0.0
    };
    BitsBreakdown {
        decompression,
        bin2bn,
        total: decompression + bin2bn,
    }
}

/// The per-session bin2bn figure obtained by taking the stated event
/// probabilities at face value: 8 bits with probability
/// `1/256 + 0.5 (1/256 + 1/256^2)` and 9 bits with probability `255/256^2`.
pub fn face_value_sae_bin2bn_bits() -> f64 {
    let b = 1.0 / 256.0;
    8.0 * (b + 0.5 * (b + b * b)) + 9.0 * 255.0 * b * b
}
