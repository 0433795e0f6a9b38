use std::fmt;
use std::str::FromStr;
use std::sync::LazyLock;

use serde::{Deserialize, Serialize};
use subtle::{Choice, ConditionallySelectable, ConstantTimeEq};

use super::field::{FieldElement, PrimeField};
use super::limbs::{self, from_hex};
use super::scalar::{Scalar, ScalarField};
use super::CurveError;

/// The NIST curves SAE negotiates, by IANA group number 19, 20 and 21.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveId {
    P256,
    P384,
    P521,
}

impl CurveId {
    pub const ALL: [CurveId; 3] = [CurveId::P256, CurveId::P384, CurveId::P521];

    pub fn params(self) -> &'static CurveParams {
        match self {
            CurveId::P256 => &P256,
            CurveId::P384 => &P384,
            CurveId::P521 => &P521,
        }
    }

    pub fn group(self) -> u16 {
        match self {
            CurveId::P256 => 19,
            CurveId::P384 => 20,
            CurveId::P521 => 21,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CurveId::P256 => "p256",
            CurveId::P384 => "p384",
            CurveId::P521 => "p521",
        }
    }
}

impl fmt::Display for CurveId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CurveId {
    type Err = CurveError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "").as_str() {
            "p256" | "19" | "secp256r1" => Ok(CurveId::P256),
            "p384" | "20" | "secp384r1" => Ok(CurveId::P384),
            "p521" | "21" | "secp521r1" => Ok(CurveId::P521),
            _ => Err(CurveError::UnknownCurve(s.to_string())),
        }
    }
}

/// A point in affine coordinates. The identity carries an explicit flag and
/// zeroed coordinates that must not be interpreted.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AffinePoint {
    pub x: FieldElement,
    pub y: FieldElement,
    pub is_identity: bool,
}

/// Homogeneous projective coordinates; the identity is `(0 : 1 : 0)`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct ProjectivePoint {
    x: FieldElement,
    y: FieldElement,
    z: FieldElement,
}

impl ConditionallySelectable for ProjectivePoint {
    fn conditional_select(a: &Self, b: &Self, c: Choice) -> Self {
        ProjectivePoint {
            x: FieldElement::conditional_select(&a.x, &b.x, c),
            y: FieldElement::conditional_select(&a.y, &b.y, c),
            z: FieldElement::conditional_select(&a.z, &b.z, c),
        }
    }
}

/// Short Weierstrass curve `y^2 = x^3 + a x + b` with `a = -3`.
#[derive(Debug)]
pub struct CurveParams {
    pub id: CurveId,
    pub field: PrimeField,
    pub scalars: ScalarField,
    pub a: FieldElement,
    pub b: FieldElement,
    pub generator: AffinePoint,
    /// Non-square constant of the simplified SWU map.
    pub sswu_z: FieldElement,
    pub(crate) sswu_neg_b_over_a: FieldElement,
    pub(crate) sswu_b_over_za: FieldElement,
}

struct RawCurve {
    p: &'static str,
    b: &'static str,
    q: &'static str,
    gx: &'static str,
    gy: &'static str,
    z: i64,
}

fn build(id: CurveId, raw: RawCurve) -> CurveParams {
    let field = PrimeField::new(from_hex(raw.p));
    let scalars = ScalarField::new(from_hex(raw.q));
    let f = &field;
    let a = f.from_i64(-3);
    let b = f
        .from_be_bytes(&limbs::to_be_bytes(&from_hex(raw.b), f.byte_len()))
        .expect("b < p");
    let gx = f
        .from_be_bytes(&limbs::to_be_bytes(&from_hex(raw.gx), f.byte_len()))
        .expect("gx < p");
    let gy = f
        .from_be_bytes(&limbs::to_be_bytes(&from_hex(raw.gy), f.byte_len()))
        .expect("gy < p");
    let z = f.from_i64(raw.z);
    let inv_a = f.inv(&a).expect("a != 0");
    let sswu_neg_b_over_a = f.neg(&f.mul(&b, &inv_a));
    let sswu_b_over_za = f.mul(&b, &f.inv(&f.mul(&z, &a)).expect("za != 0"));
    CurveParams {
        id,
        a,
        b,
        generator: AffinePoint {
            x: gx,
            y: gy,
            is_identity: false,
        },
        sswu_z: z,
        sswu_neg_b_over_a,
        sswu_b_over_za,
        field,
        scalars,
    }
}

static P256: LazyLock<CurveParams> = LazyLock::new(|| {
    build(
        CurveId::P256,
        RawCurve {
            p: "ffffffff00000001000000000000000000000000ffffffffffffffffffffffff",
            b: "5ac635d8aa3a93e7b3ebbd55769886bc651d06b0cc53b0f63bce3c3e27d2604b",
            q: "ffffffff00000000ffffffffffffffffbce6faada7179e84f3b9cac2fc632551",
            gx: "6b17d1f2e12c4247f8bce6e563a440f277037d812deb33a0f4a13945d898c296",
            gy: "4fe342e2fe1a7f9b8ee7eb4a7c0f9e162bce33576b315ececbb6406837bf51f5",
            z: -10,
        },
    )
});

static P384: LazyLock<CurveParams> = LazyLock::new(|| {
    build(CurveId::P384, RawCurve {
        p: "fffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffeffffffff0000000000000000ffffffff",
        b: "b3312fa7e23ee7e4988e056be3f82d19181d9c6efe8141120314088f5013875ac656398d8a2ed19d2a85c8edd3ec2aef",
        q: "ffffffffffffffffffffffffffffffffffffffffffffffffc7634d81f4372ddf581a0db248b0a77aecec196accc52973",
        gx: "aa87ca22be8b05378eb1c71ef320ad746e1d3b628ba79b9859f741e082542a385502f25dbf55296c3a545e3872760ab7",
        gy: "3617de4a96262c6f5d9e98bf9292dc29f8f41dbd289a147ce9da3113b5f0b8c00a60b1ce1d7e819d7a431d7c90ea0e5f",
        z: -12,
    })
});

static P521: LazyLock<CurveParams> = LazyLock::new(|| {
    build(CurveId::P521, RawCurve {
        p: "01ffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffff",
        b: "0051953eb9618e1c9a1f929a21a0b68540eea2da725b99b315f3b8b489918ef109e156193951ec7e937b1652c0bd3bb1bf073573df883d2c34f1ef451fd46b503f00",
        q: "01fffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffa51868783bf2f966b7fcc0148f709a5d03bb5c9b8899c47aebb6fb71e91386409",
        gx: "00c6858e06b70404e9cd9e3ecb662395b4429c648139053fb521f828af606b4d3dbaa14b5e77efe75928fe1dc127a2ffa8de3348b3c1856a429bf97e7e31c2e5bd66",
        gy: "011839296a789a3bc0045c8a5fb42c7d1bd998f54449579b446817afbd17273e662c97ee72995ef42640c550b9013fad0761353c7086a272c24088be94769fd16650",
        z: -4,
    })
});

impl CurveParams {
    pub fn byte_len(&self) -> usize {
        self.field.byte_len()
    }

    pub fn identity(&self) -> AffinePoint {
        AffinePoint {
            x: self.field.zero(),
            y: self.field.zero(),
            is_identity: true,
        }
    }

    /// `x^3 + a x + b`
    pub fn rhs(&self, x: &FieldElement) -> FieldElement {
        let f = &self.field;
        let x3 = f.mul(&f.square(x), x);
        f.add(&f.add(&x3, &f.mul(&self.a, x)), &self.b)
    }

    pub fn contains(&self, p: &AffinePoint) -> bool {
        p.is_identity || self.field.square(&p.y) == self.rhs(&p.x)
    }

    pub fn negate(&self, p: &AffinePoint) -> AffinePoint {
        AffinePoint {
            y: self.field.neg(&p.y),
            ..*p
        }
    }

    /// Group law on validated inputs.
    pub fn add(&self, p: &AffinePoint, q: &AffinePoint) -> Result<AffinePoint, CurveError> {
        if !self.contains(p) || !self.contains(q) {
            return Err(CurveError::OffCurve);
        }
        Ok(self.to_affine(&self.proj_add(&self.to_projective(p), &self.to_projective(q))))
    }

    /// `k * p` with a Montgomery ladder over every bit position of `q`, so the
    /// operation sequence depends only on the curve.
    pub fn mul(&self, k: &Scalar, p: &AffinePoint) -> AffinePoint {
        let mut r0 = self.proj_identity();
        let mut r1 = self.to_projective(p);
        for i in (0..self.scalars.bits()).rev() {
            let bit = Choice::from(limbs::bit(&k.limbs, i) as u8);
            ProjectivePoint::conditional_swap(&mut r0, &mut r1, bit);
            r1 = self.proj_add(&r0, &r1);
            r0 = self.proj_add(&r0, &r0);
            ProjectivePoint::conditional_swap(&mut r0, &mut r1, bit);
        }
        self.to_affine(&r0)
    }

    pub fn mul_generator(&self, k: &Scalar) -> AffinePoint {
        self.mul(k, &self.generator)
    }

    /// `0x04 || x || y`; the identity encodes as a single zero byte.
    pub fn encode_uncompressed(&self, p: &AffinePoint) -> Vec<u8> {
        if p.is_identity {
            return vec![0];
        }
        let mut out = vec![0x04];
        out.extend(self.field.to_be_bytes(&p.x));
        out.extend(self.field.to_be_bytes(&p.y));
        out
    }

    pub fn decode_uncompressed(&self, bytes: &[u8]) -> Result<AffinePoint, CurveError> {
        let n = self.byte_len();
        if bytes.len() != 1 + 2 * n || bytes[0] != 0x04 {
            return Err(CurveError::InvalidEncoding);
        }
        let x = self
            .field
            .from_be_bytes(&bytes[1..=n])
            .ok_or(CurveError::InvalidEncoding)?;
        let y = self
            .field
            .from_be_bytes(&bytes[n + 1..])
            .ok_or(CurveError::InvalidEncoding)?;
        let p = AffinePoint {
            x,
            y,
            is_identity: false,
        };
        if !self.contains(&p) {
            return Err(CurveError::OffCurve);
        }
        Ok(p)
    }

    /// `0x02 | parity(y) || x`.
    pub fn encode_compressed(&self, p: &AffinePoint) -> Vec<u8> {
        let mut out = vec![0x02 | self.field.is_odd(&p.y).unwrap_u8()];
        out.extend(self.field.to_be_bytes(&p.x));
        out
    }

    /// Coordinates as fixed-length byte strings, x then y.
    pub fn coordinates(&self, p: &AffinePoint) -> (Vec<u8>, Vec<u8>) {
        (self.field.to_be_bytes(&p.x), self.field.to_be_bytes(&p.y))
    }

    pub fn point_from_coordinates(&self, x: &[u8], y: &[u8]) -> Result<AffinePoint, CurveError> {
        let x = self
            .field
            .from_be_bytes(x)
            .ok_or(CurveError::InvalidEncoding)?;
        let y = self
            .field
            .from_be_bytes(y)
            .ok_or(CurveError::InvalidEncoding)?;
        let p = AffinePoint {
            x,
            y,
            is_identity: false,
        };
        if self.contains(&p) {
            Ok(p)
        } else {
            Err(CurveError::OffCurve)
        }
    }

    fn proj_identity(&self) -> ProjectivePoint {
        ProjectivePoint {
            x: self.field.zero(),
            y: self.field.one(),
            z: self.field.zero(),
        }
    }

    pub(crate) fn to_projective(&self, p: &AffinePoint) -> ProjectivePoint {
        let id = self.proj_identity();
        let q = ProjectivePoint {
            x: p.x,
            y: p.y,
            z: self.field.one(),
        };
        ProjectivePoint::conditional_select(&q, &id, Choice::from(p.is_identity as u8))
    }

    pub(crate) fn to_affine(&self, p: &ProjectivePoint) -> AffinePoint {
        let f = &self.field;
        let zi = f.inv0(&p.z);
        let is_identity = f.is_zero(&p.z);
        AffinePoint {
            x: f.mul(&p.x, &zi),
            y: f.mul(&p.y, &zi),
            is_identity: bool::from(is_identity),
        }
    }

    /// Complete addition for `a = -3` (Renes, Costello, Batina; Algorithm 4).
    /// Valid for every pair of inputs, including doubling and the identity.
    pub(crate) fn proj_add(&self, p: &ProjectivePoint, q: &ProjectivePoint) -> ProjectivePoint {
        let f = &self.field;
        let b = &self.b;
        let (x1, y1, z1) = (&p.x, &p.y, &p.z);
        let (x2, y2, z2) = (&q.x, &q.y, &q.z);

        let mut t0 = f.mul(x1, x2);
        let mut t1 = f.mul(y1, y2);
        let mut t2 = f.mul(z1, z2);
        let mut t3 = f.add(x1, y1);
        let mut t4 = f.add(x2, y2);
        t3 = f.mul(&t3, &t4);
        t4 = f.add(&t0, &t1);
        t3 = f.sub(&t3, &t4);
        t4 = f.add(y1, z1);
        let mut x3 = f.add(y2, z2);
        t4 = f.mul(&t4, &x3);
        x3 = f.add(&t1, &t2);
        t4 = f.sub(&t4, &x3);
        x3 = f.add(x1, z1);
        let mut y3 = f.add(x2, z2);
        x3 = f.mul(&x3, &y3);
        y3 = f.add(&t0, &t2);
        y3 = f.sub(&x3, &y3);
        let mut z3 = f.mul(b, &t2);
        x3 = f.sub(&y3, &z3);
        z3 = f.add(&x3, &x3);
        x3 = f.add(&x3, &z3);
        z3 = f.sub(&t1, &x3);
        x3 = f.add(&t1, &x3);
        y3 = f.mul(b, &y3);
        t1 = f.add(&t2, &t2);
        t2 = f.add(&t1, &t2);
        y3 = f.sub(&y3, &t2);
        y3 = f.sub(&y3, &t0);
        t1 = f.add(&y3, &y3);
        y3 = f.add(&t1, &y3);
        t1 = f.add(&t0, &t0);
        t0 = f.add(&t1, &t0);
        t0 = f.sub(&t0, &t2);
        t1 = f.mul(&t4, &y3);
        t2 = f.mul(&t0, &y3);
        y3 = f.mul(&x3, &z3);
        y3 = f.add(&y3, &t2);
        x3 = f.mul(&t3, &x3);
        x3 = f.sub(&x3, &t1);
        z3 = f.mul(&t4, &z3);
        t1 = f.mul(&t3, &t0);
        z3 = f.add(&z3, &t1);
        ProjectivePoint {
            x: x3,
            y: y3,
            z: z3,
        }
    }
}

impl AffinePoint {
    pub fn ct_eq_point(&self, other: &AffinePoint) -> bool {
        if self.is_identity || other.is_identity {
            return self.is_identity == other.is_identity;
        }
        bool::from(self.x.ct_eq(&other.x) & self.y.ct_eq(&other.y))
    }
}
