use rand::RngCore;
use subtle::{Choice, ConditionallySelectable, ConstantTimeEq};

use super::limbs::{self, Limbs, Modulus, ZERO};
use super::{CurveError, Uint};

/// An element of a prime field, stored in Montgomery form.
///
/// The limb array always has the same width; the active limb count is a
/// property of the field it belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FieldElement {
    pub(crate) limbs: Limbs,
}

impl ConditionallySelectable for FieldElement {
    fn conditional_select(a: &Self, b: &Self, choice: Choice) -> Self {
        FieldElement {
            limbs: limbs::select(&a.limbs, &b.limbs, choice.unwrap_u8() as u64),
        }
    }
}

impl ConstantTimeEq for FieldElement {
    fn ct_eq(&self, other: &Self) -> Choice {
        Choice::from(limbs::eq(&self.limbs, &other.limbs) as u8)
    }
}

/// Arithmetic modulo an odd prime `p` with `p ≡ 3 (mod 4)`.
#[derive(Clone, Debug)]
pub struct PrimeField {
    md: Modulus,
    byte_len: usize,
    /// (p + 1) / 4
    sqrt_exp: Limbs,
    /// (p - 1) / 2
    euler_exp: Limbs,
    /// p - 2
    inv_exp: Limbs,
}

impl PrimeField {
    pub(crate) fn new(p: Limbs) -> Self {
        let md = Modulus::new(p);
        assert_eq!(p[0] & 3, 3, "square roots need p = 3 mod 4");
        let byte_len = md.bits.div_ceil(8) as usize;
        PrimeField {
            sqrt_exp: limbs::shr(&limbs::add_small(&p, 1), 2),
            euler_exp: limbs::shr(&p, 1),
            inv_exp: limbs::sub_small(&p, 2),
            md,
            byte_len,
        }
    }

    pub fn modulus(&self) -> Uint {
        Uint(self.md.m)
    }

    pub fn bits(&self) -> u32 {
        self.md.bits
    }

    /// Length of the canonical big-endian encoding.
    pub fn byte_len(&self) -> usize {
        self.byte_len
    }

    pub fn zero(&self) -> FieldElement {
        FieldElement { limbs: ZERO }
    }

    pub fn one(&self) -> FieldElement {
        FieldElement { limbs: self.md.one }
    }

    pub fn from_u64(&self, v: u64) -> FieldElement {
        let mut l = ZERO;
        l[0] = v;
        FieldElement {
            limbs: self
                .md
                .to_mont(&self.md.reduce_be(&limbs::to_be_bytes(&l, 8))),
        }
    }

    /// Signed small constant, e.g. `-3` or the SSWU `Z`.
    pub fn from_i64(&self, v: i64) -> FieldElement {
        let m = self.from_u64(v.unsigned_abs());
        if v < 0 {
            self.neg(&m)
        } else {
            m
        }
    }

    /// Accepts only canonical values (`< p`).
    pub fn from_uint(&self, v: &Uint) -> Option<FieldElement> {
        if limbs::lt(&v.0, &self.md.m) == 1 {
            Some(FieldElement {
                limbs: self.md.to_mont(&v.0),
            })
        } else {
            None
        }
    }

    /// Like [`Self::from_uint`] without a data-dependent branch: out-of-range
    /// inputs map to zero together with a false flag.
    pub fn from_uint_ct(&self, v: &Uint) -> (FieldElement, Choice) {
        let ok = limbs::lt(&v.0, &self.md.m);
        let l = limbs::select(&ZERO, &v.0, ok);
        (
            FieldElement {
                limbs: self.md.to_mont(&l),
            },
            Choice::from(ok as u8),
        )
    }

    pub fn to_uint(&self, v: &FieldElement) -> Uint {
        Uint(self.md.leave_mont(&v.limbs))
    }

    /// Parses a canonical encoding of any length up to the limb capacity.
    pub fn from_be_bytes(&self, bytes: &[u8]) -> Option<FieldElement> {
        self.from_uint(&Uint::from_be_bytes(bytes)?)
    }

    /// Interprets arbitrary bytes as a big-endian integer reduced mod `p`.
    pub fn reduce_be_bytes(&self, bytes: &[u8]) -> FieldElement {
        FieldElement {
            limbs: self.md.to_mont(&self.md.reduce_be(bytes)),
        }
    }

    pub fn to_be_bytes(&self, v: &FieldElement) -> Vec<u8> {
        limbs::to_be_bytes(&self.md.leave_mont(&v.limbs), self.byte_len)
    }

    pub fn random(&self, rng: &mut impl RngCore) -> FieldElement {
        // Oversample by 64 bits so the reduction bias is negligible.
        let mut buf = vec![0u8; self.byte_len + 8];
        rng.fill_bytes(&mut buf);
        self.reduce_be_bytes(&buf)
    }

    pub fn random_nonzero(&self, rng: &mut impl RngCore) -> FieldElement {
        loop {
            let v = self.random(rng);
            if !bool::from(self.is_zero(&v)) {
                return v;
            }
        }
    }

    pub fn add(&self, a: &FieldElement, b: &FieldElement) -> FieldElement {
        FieldElement {
            limbs: self.md.add(&a.limbs, &b.limbs),
        }
    }

    pub fn sub(&self, a: &FieldElement, b: &FieldElement) -> FieldElement {
        FieldElement {
            limbs: self.md.sub(&a.limbs, &b.limbs),
        }
    }

    pub fn neg(&self, a: &FieldElement) -> FieldElement {
        FieldElement {
            limbs: self.md.sub(&ZERO, &a.limbs),
        }
    }

    pub fn mul(&self, a: &FieldElement, b: &FieldElement) -> FieldElement {
        FieldElement {
            limbs: self.md.mont_mul(&a.limbs, &b.limbs),
        }
    }

    pub fn square(&self, a: &FieldElement) -> FieldElement {
        self.mul(a, a)
    }

    pub fn double(&self, a: &FieldElement) -> FieldElement {
        self.add(a, a)
    }

    pub fn pow(&self, a: &FieldElement, exp: &Uint) -> FieldElement {
        FieldElement {
            limbs: self.md.pow(&a.limbs, &exp.0),
        }
    }

    /// `a^(p-2)`, which maps zero to zero.
    pub fn inv0(&self, a: &FieldElement) -> FieldElement {
        FieldElement {
            limbs: self.md.pow(&a.limbs, &self.inv_exp),
        }
    }

    pub fn inv(&self, a: &FieldElement) -> Result<FieldElement, CurveError> {
        if bool::from(self.is_zero(a)) {
            return Err(CurveError::NotInvertible);
        }
        Ok(self.inv0(a))
    }

    /// The principal root candidate `v^((p+1)/4)` and whether it squares back to `v`.
    pub fn sqrt_candidate(&self, v: &FieldElement) -> (FieldElement, Choice) {
        let r = FieldElement {
            limbs: self.md.pow(&v.limbs, &self.sqrt_exp),
        };
        let ok = self.square(&r).ct_eq(v);
        (r, ok)
    }

    pub fn sqrt(&self, v: &FieldElement) -> Option<FieldElement> {
        let (r, ok) = self.sqrt_candidate(v);
        bool::from(ok).then_some(r)
    }

    /// Euler's criterion evaluated on `v * blind^2`, which has the same
    /// quadratic character as `v` but hides it from the exponentiation.
    /// Zero counts as a residue.
    pub fn is_quadratic_residue(
        &self,
        v: &FieldElement,
        blind: &FieldElement,
    ) -> Result<bool, CurveError> {
        if bool::from(self.is_zero(blind)) {
            return Err(CurveError::ZeroBlind);
        }
        Ok(bool::from(self.is_square_blinded(v, blind)))
    }

    pub(crate) fn is_square_blinded(&self, v: &FieldElement, blind: &FieldElement) -> Choice {
        let w = self.mul(v, &self.square(blind));
        let l = FieldElement {
            limbs: self.md.pow(&w.limbs, &self.euler_exp),
        };
        l.ct_eq(&self.one()) | self.is_zero(v)
    }

    pub fn is_zero(&self, a: &FieldElement) -> Choice {
        Choice::from(limbs::is_zero(&a.limbs) as u8)
    }

    /// Parity of the canonical (non-Montgomery) value.
    pub fn is_odd(&self, a: &FieldElement) -> Choice {
        Choice::from((self.md.leave_mont(&a.limbs)[0] & 1) as u8)
    }
}
