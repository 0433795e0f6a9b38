//! Prime-field and elliptic-curve arithmetic for P-256, P-384 and P-521.
//!
//! Field and scalar values use a fixed limb array regardless of magnitude.
//! Core routines (multiplication, inversion, square root, the ladder and
//! point addition) run a sequence of operations that depends only on the
//! curve, never on the values involved.

mod curve;
mod field;
pub(crate) mod limbs;
mod scalar;

pub use curve::{AffinePoint, CurveId, CurveParams};
pub use field::{FieldElement, PrimeField};
pub use limbs::count_field_muls;
pub use scalar::{Scalar, ScalarField};

use limbs::Limbs;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CurveError {
    #[error("zero has no multiplicative inverse")]
    NotInvertible,
    #[error("quadratic-residue blind must be nonzero")]
    ZeroBlind,
    #[error("point is not on the curve")]
    OffCurve,
    #[error("malformed point or field encoding")]
    InvalidEncoding,
    #[error("unknown curve `{0}`")]
    UnknownCurve(String),
}

/// A plain unsigned integer as wide as the largest supported field.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Uint(pub(crate) Limbs);

impl Uint {
    pub const ZERO: Uint = Uint(limbs::ZERO);
    pub const MAX_BYTES: usize = 8 * limbs::MAX_LIMBS;

    /// `None` if the value does not fit in the limb array.
    pub fn from_be_bytes(bytes: &[u8]) -> Option<Uint> {
        limbs::from_be_bytes(bytes).map(Uint)
    }

    pub fn to_be_bytes(&self, len: usize) -> Vec<u8> {
        limbs::to_be_bytes(&self.0, len)
    }

    pub fn bit_len(&self) -> u32 {
        limbs::bit_len(&self.0)
    }

    pub fn low_u64(&self) -> u64 {
        self.0[0]
    }

    /// `self * 256 + byte`, dropping bits shifted past the top limb.
    pub(crate) fn shl8_or(&self, byte: u8) -> Uint {
        let mut out = limbs::ZERO;
        let mut carry = byte as u64;
        for (o, &w) in out.iter_mut().zip(self.0.iter()) {
            *o = (w << 8) | carry;
            carry = w >> 56;
        }
        Uint(out)
    }
}
