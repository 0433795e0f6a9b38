//! Binary-to-bignum conversion and compressed-point decompression, each in a
//! leaky reference form and a secret-independent form.
//!
//! The leaky forms branch on secret data the way common libraries do and
//! report every such decision to a [`LeakObserver`]. The hardened forms
//! compute the same results without branching and never report anything.

use serde::{Deserialize, Serialize};
use subtle::{ConditionallySelectable, ConstantTimeEq};

use crate::field_curve::{AffinePoint, CurveParams, FieldElement, Uint};
use crate::leakage::{DecompressionStyle, LibraryProfile};

/// A control-flow decision that a cache attacker can resolve.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LeakSite {
    /// Whether the conditional `p - y` subtraction ran.
    ParityBranchTaken,
    /// Parity of the square-root candidate.
    ParityValue,
    /// Parity bit of the compression format, when dispatched on first.
    FormatValue,
    /// Trip count of the leading-zero skip loop.
    SkippedZeroBytes,
}

/// Which secret-derived value an event concerns.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SecretTag {
    Seed,
    XCand,
    X,
    Y,
    U1,
    U2,
    P1x,
    P1y,
    P2x,
    P2y,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LeakEvent {
    pub site: LeakSite,
    pub value: u16,
    pub tag: SecretTag,
}

/// Sink for the events of one session.
pub trait LeakObserver {
    fn record(&mut self, event: LeakEvent);
}

impl LeakObserver for Vec<LeakEvent> {
    fn record(&mut self, event: LeakEvent) {
        self.push(event);
    }
}

/// Discards everything.
#[derive(Clone, Copy, Debug, Default)]
pub struct NullObserver;

impl LeakObserver for NullObserver {
    fn record(&mut self, _event: LeakEvent) {}
}

/// Compression prefix of a point, normalized to the SEC1 `0x02`/`0x03` bytes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CompressedFormat {
    parity_bit: u8,
}

impl CompressedFormat {
    pub fn from_parity(bit: u8) -> Self {
        CompressedFormat {
            parity_bit: bit & 1,
        }
    }

    pub fn from_wire(byte: u8) -> Result<Self, EncodingError> {
        match byte {
            0x02 | 0x03 => Ok(CompressedFormat {
                parity_bit: byte & 1,
            }),
            other => Err(EncodingError::BadFormat(other)),
        }
    }

    pub fn parity_bit(self) -> u8 {
        self.parity_bit
    }

    pub fn wire_value(self) -> u8 {
        0x02 | self.parity_bit
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EncodingError {
    #[error("x is not the abscissa of a curve point")]
    NotOnCurve,
    #[error("invalid compression byte {0:#04x}")]
    BadFormat(u8),
    #[error("buffer of {0} bytes exceeds the supported width")]
    TooLong(usize),
}

/// Big-endian bytes to integer, skipping leading zero bytes first and
/// reporting how many were skipped.
pub fn bin2bn_leaky(
    buf: &[u8],
    observer: &mut impl LeakObserver,
    tag: SecretTag,
) -> Result<Uint, EncodingError> {
    if buf.len() > Uint::MAX_BYTES {
        return Err(EncodingError::TooLong(buf.len()));
    }
    let mut rest = buf;
    let mut skipped = 0u16;
    while let [0, tail @ ..] = rest {
        rest = tail;
        skipped += 1;
    }
    observer.record(LeakEvent {
        site: LeakSite::SkippedZeroBytes,
        value: skipped,
        tag,
    });
    let mut acc = Uint::ZERO;
    for &b in rest {
        acc = acc.shl8_or(b);
    }
    Ok(acc)
}

/// Big-endian bytes to integer, touching every byte once in the same way.
pub fn bin2bn_ct(buf: &[u8]) -> Result<Uint, EncodingError> {
    Uint::from_be_bytes(buf).ok_or(EncodingError::TooLong(buf.len()))
}

/// Decompression with the branch structure of the library `profile` models.
pub fn decompress_leaky(
    x: &FieldElement,
    fmt: CompressedFormat,
    curve: &CurveParams,
    profile: LibraryProfile,
    observer: &mut impl LeakObserver,
) -> Result<AffinePoint, EncodingError> {
    let style = profile.decompression_style();
    if style == DecompressionStyle::Silent {
        return decompress_ct(x, fmt, curve);
    }
    let f = &curve.field;
    let mut y = f.sqrt(&curve.rhs(x)).ok_or(EncodingError::NotOnCurve)?;
    let y_parity = f.is_odd(&y).unwrap_u8();
    let mut emit = |site, value: u8| {
        observer.record(LeakEvent {
            site,
            value: value as u16,
            tag: SecretTag::Y,
        })
    };
    match style {
        DecompressionStyle::Ell => emit(LeakSite::FormatValue, fmt.parity_bit),
        DecompressionStyle::WolfSsl => emit(LeakSite::ParityValue, y_parity),
        _ => {}
    }
    if y_parity != fmt.parity_bit {
        y = f.neg(&y);
        emit(LeakSite::ParityBranchTaken, 1);
    } else {
        emit(LeakSite::ParityBranchTaken, 0);
    }
    Ok(AffinePoint {
        x: *x,
        y,
        is_identity: false,
    })
}

/// Computes both roots and selects arithmetically.
pub fn decompress_ct(
    x: &FieldElement,
    fmt: CompressedFormat,
    curve: &CurveParams,
) -> Result<AffinePoint, EncodingError> {
    let f = &curve.field;
    let (y, ok) = f.sqrt_candidate(&curve.rhs(x));
    let neg = f.neg(&y);
    let flip = !f.is_odd(&y).ct_eq(&subtle::Choice::from(fmt.parity_bit));
    let y = FieldElement::conditional_select(&y, &neg, flip);
    if !bool::from(ok) {
        return Err(EncodingError::NotOnCurve);
    }
    Ok(AffinePoint {
        x: *x,
        y,
        is_identity: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field_curve::CurveId;
    use rand::{Rng, RngCore, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn random_x(c: &CurveParams, rng: &mut impl RngCore) -> FieldElement {
        loop {
            let x = c.field.random(rng);
            if c.field.sqrt(&c.rhs(&x)).is_some() {
                return x;
            }
        }
    }

    #[test]
    fn bin2bn_examples() {
        let mut buf = vec![0u8, 0];
        buf.extend(std::iter::repeat_n(0xA1, 30));
        let mut ev = Vec::new();
        let v = bin2bn_leaky(&buf, &mut ev, SecretTag::X).unwrap();
        assert_eq!(v, bin2bn_ct(&buf).unwrap());
        assert_eq!(
            ev,
            vec![LeakEvent {
                site: LeakSite::SkippedZeroBytes,
                value: 2,
                tag: SecretTag::X
            }]
        );

        let mut ev = Vec::new();
        assert_eq!(
            bin2bn_leaky(&[0u8; 32], &mut ev, SecretTag::Y).unwrap(),
            Uint::ZERO
        );
        assert_eq!(ev[0].value, 32);
        assert_eq!(bin2bn_ct(&[0u8; 32]).unwrap(), Uint::ZERO);
    }

    #[test]
    fn bin2bn_equivalence() {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        for i in 0..10_000 {
            let mut buf = [0u8; 32];
            rng.fill_bytes(&mut buf);
            let zeros = i % 5;
            buf[..zeros].fill(0);
            let leaky = bin2bn_leaky(&buf, &mut NullObserver, SecretTag::XCand).unwrap();
            assert_eq!(leaky, bin2bn_ct(&buf).unwrap());
        }
    }

    #[test]
    fn decompression_branch_examples() {
        let c = CurveId::P256.params();
        let f = &c.field;
        let mut rng = ChaCha20Rng::seed_from_u64(12);
        let mut seen = [false; 2];
        while !(seen[0] && seen[1]) {
            let x = random_x(c, &mut rng);
            let y0 = f.sqrt(&c.rhs(&x)).unwrap();
            if f.is_odd(&y0).unwrap_u8() != 0 {
                continue;
            }
            for bit in 0..2u8 {
                let mut ev = Vec::new();
                let p = decompress_leaky(
                    &x,
                    CompressedFormat::from_parity(bit),
                    c,
                    LibraryProfile::OpenSsl,
                    &mut ev,
                )
                .unwrap();
                assert_eq!(ev.len(), 1);
                assert_eq!(ev[0].value, bit as u16);
                assert_eq!(p.y, if bit == 0 { y0 } else { f.neg(&y0) });
                assert_eq!(f.is_odd(&p.y).unwrap_u8(), bit);
                seen[bit as usize] = true;
            }
        }
    }

    #[test]
    fn event_counts_per_profile() {
        let c = CurveId::P256.params();
        let mut rng = ChaCha20Rng::seed_from_u64(13);
        let x = random_x(c, &mut rng);
        let fmt = CompressedFormat::from_parity(1);
        let count = |p| {
            let mut ev = Vec::new();
            decompress_leaky(&x, fmt, c, p, &mut ev).unwrap();
            ev.len()
        };
        assert_eq!(count(LibraryProfile::OpenSsl), 1);
        assert_eq!(count(LibraryProfile::FreeRadiusOpenSsl), 1);
        assert_eq!(count(LibraryProfile::WolfSsl), 2);
        assert_eq!(count(LibraryProfile::Ell), 2);
        assert_eq!(count(LibraryProfile::CoreCrypto), 0);
        assert_eq!(count(LibraryProfile::Hardened), 0);
    }

    #[test]
    fn leaky_and_hardened_agree_and_branch_rate() {
        let c = CurveId::P256.params();
        let f = &c.field;
        let mut rng = ChaCha20Rng::seed_from_u64(14);
        let n = 10_000;
        let mut taken = 0;
        for _ in 0..n {
            let x = random_x(c, &mut rng);
            let fmt = CompressedFormat::from_parity(rng.random::<u8>());
            let ct = decompress_ct(&x, fmt, c).unwrap();
            assert_eq!(f.is_odd(&ct.y).unwrap_u8(), fmt.parity_bit());
            for profile in LibraryProfile::ALL {
                let mut ev = Vec::new();
                assert_eq!(decompress_leaky(&x, fmt, c, profile, &mut ev).unwrap(), ct);
                if profile == LibraryProfile::OpenSsl {
                    taken += ev[0].value as usize;
                }
            }
        }
        let rate = taken as f64 / n as f64;
        assert!((rate - 0.5).abs() < 0.02, "branch-taken rate {rate}");
    }

    #[test]
    fn off_curve_x_rejected() {
        let c = CurveId::P256.params();
        let mut rng = ChaCha20Rng::seed_from_u64(15);
        let x = loop {
            let x = c.field.random(&mut rng);
            if c.field.sqrt(&c.rhs(&x)).is_none() {
                break x;
            }
        };
        let fmt = CompressedFormat::from_parity(0);
        assert_eq!(decompress_ct(&x, fmt, c), Err(EncodingError::NotOnCurve));
        assert_eq!(
            decompress_leaky(&x, fmt, c, LibraryProfile::OpenSsl, &mut NullObserver),
            Err(EncodingError::NotOnCurve)
        );
        assert_eq!(
            CompressedFormat::from_wire(0x04),
            Err(EncodingError::BadFormat(4))
        );
        assert_eq!(
            CompressedFormat::from_wire(0x03).unwrap().wire_value(),
            0x03
        );
    }
}
