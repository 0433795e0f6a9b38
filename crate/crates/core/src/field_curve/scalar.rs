use rand::RngCore;
use subtle::{Choice, ConditionallySelectable, ConstantTimeEq};

use super::limbs::{self, Limbs, Modulus, ZERO};
use super::Uint;

/// An integer modulo the group order, stored canonically (not in
/// Montgomery form) so the ladder can read its bits directly.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Scalar {
    pub(crate) limbs: Limbs,
}

impl ConditionallySelectable for Scalar {
    fn conditional_select(a: &Self, b: &Self, choice: Choice) -> Self {
        Scalar {
            limbs: limbs::select(&a.limbs, &b.limbs, choice.unwrap_u8() as u64),
        }
    }
}

impl ConstantTimeEq for Scalar {
    fn ct_eq(&self, other: &Self) -> Choice {
        Choice::from(limbs::eq(&self.limbs, &other.limbs) as u8)
    }
}

impl Scalar {
    pub fn to_uint(&self) -> Uint {
        Uint(self.limbs)
    }
}

/// Arithmetic modulo the prime group order `q`.
#[derive(Clone, Debug)]
pub struct ScalarField {
    md: Modulus,
    byte_len: usize,
    q_minus_one: Limbs,
}

impl ScalarField {
    pub(crate) fn new(q: Limbs) -> Self {
        let md = Modulus::new(q);
        ScalarField {
            byte_len: md.bits.div_ceil(8) as usize,
            q_minus_one: limbs::sub_small(&q, 1),
            md,
        }
    }

    pub fn order(&self) -> Uint {
        Uint(self.md.m)
    }

    pub fn bits(&self) -> u32 {
        self.md.bits
    }

    pub fn byte_len(&self) -> usize {
        self.byte_len
    }

    pub fn zero(&self) -> Scalar {
        Scalar { limbs: ZERO }
    }

    pub fn from_u64(&self, v: u64) -> Scalar {
        Scalar {
            limbs: self.md.reduce_be(&v.to_be_bytes()),
        }
    }

    /// Canonical parse: rejects values `>= q`.
    pub fn from_be_bytes(&self, bytes: &[u8]) -> Option<Scalar> {
        let v = Uint::from_be_bytes(bytes)?;
        (limbs::lt(&v.0, &self.md.m) == 1).then_some(Scalar { limbs: v.0 })
    }

    pub fn reduce_be_bytes(&self, bytes: &[u8]) -> Scalar {
        Scalar {
            limbs: self.md.reduce_be(bytes),
        }
    }

    /// `(v mod (q - 1)) + 1`, a nonzero scalar from arbitrary bytes.
    pub fn reduce_nonzero(&self, bytes: &[u8]) -> Scalar {
        let r = limbs::reduce_be_any(bytes, &self.q_minus_one, self.md.n);
        Scalar {
            limbs: limbs::add_small(&r, 1),
        }
    }

    pub fn to_be_bytes(&self, s: &Scalar) -> Vec<u8> {
        limbs::to_be_bytes(&s.limbs, self.byte_len)
    }

    pub fn add(&self, a: &Scalar, b: &Scalar) -> Scalar {
        Scalar {
            limbs: self.md.add(&a.limbs, &b.limbs),
        }
    }

    pub fn neg(&self, a: &Scalar) -> Scalar {
        Scalar {
            limbs: self.md.sub(&ZERO, &a.limbs),
        }
    }

    pub fn mul(&self, a: &Scalar, b: &Scalar) -> Scalar {
        let am = self.md.to_mont(&a.limbs);
        Scalar {
            limbs: self.md.mont_mul(&am, &b.limbs),
        }
    }

    /// True iff `min <= s < q`.
    pub fn at_least(&self, s: &Scalar, min: u64) -> bool {
        let mut m = ZERO;
        m[0] = min;
        limbs::lt(&s.limbs, &m) == 0 && limbs::lt(&s.limbs, &self.md.m) == 1
    }

    /// Uniform in `[min, q - 1]` by rejection sampling.
    pub fn random_at_least(&self, rng: &mut impl RngCore, min: u64) -> Scalar {
        let top_bits = self.md.bits % 8;
        let mut buf = vec![0u8; self.byte_len];
        loop {
            rng.fill_bytes(&mut buf);
            if top_bits != 0 {
                buf[0] &= (1u8 << top_bits) - 1;
            }
            let Some(v) = Uint::from_be_bytes(&buf) else {
                continue;
            };
            let s = Scalar { limbs: v.0 };
            if self.at_least(&s, min) {
                return s;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use crate::field_curve::CurveId;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn random_range_and_wrap() {
        let sf = &CurveId::P256.params().scalars;
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        for _ in 0..200 {
            let s = sf.random_at_least(&mut rng, 2);
            assert!(sf.at_least(&s, 2));
        }
        let qm1 = sf.neg(&sf.from_u64(1));
        assert_eq!(sf.add(&qm1, &sf.from_u64(1)), sf.zero());
        assert_eq!(sf.mul(&sf.from_u64(6), &sf.from_u64(7)), sf.from_u64(42));
        assert_eq!(sf.mul(&qm1, &qm1), sf.from_u64(1));
    }

    #[test]
    fn reduce_nonzero_bounds() {
        let sf = &CurveId::P256.params().scalars;
        let q = sf.order().to_be_bytes(32);
        // q mod (q-1) = 1, so the result is 2
        assert_eq!(sf.reduce_nonzero(&q), sf.from_u64(2));
        assert_eq!(sf.reduce_nonzero(&[0u8; 32]), sf.from_u64(1));
    }
}
