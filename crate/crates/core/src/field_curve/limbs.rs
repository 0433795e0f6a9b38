//! Fixed-width multi-precision helpers.
//!
//! Every value is stored in a `[u64; MAX_LIMBS]` array, little-endian by limb.
//! Only the first `n` limbs are meaningful for a given modulus and `n` is a
//! property of the curve, never of the value. Hot loops are monomorphized on
//! the limb count so that the compiler can fully unroll them.

use std::cell::Cell;

pub const MAX_LIMBS: usize = 9;

pub type Limbs = [u64; MAX_LIMBS];

pub const ZERO: Limbs = [0; MAX_LIMBS];

thread_local! {
    static FIELD_MULS: Cell<u64> = const { Cell::new(0) };
}

/// Runs `f` and returns its result along with the number of Montgomery
/// multiplications (squarings included) it performed on this thread.
pub fn count_field_muls<T>(f: impl FnOnce() -> T) -> (T, u64) {
    let before = FIELD_MULS.with(Cell::get);
    let out = f();
    let after = FIELD_MULS.with(Cell::get);
    (out, after - before)
}

#[inline(always)]
pub(crate) fn adc(a: u64, b: u64, carry: u64) -> (u64, u64) {
    let t = (a as u128) + (b as u128) + (carry as u128);
    (t as u64, (t >> 64) as u64)
}

/// Returns `(a - b - borrow, borrow_out)` with borrows in `{0, 1}`.
#[inline(always)]
pub(crate) fn sbb(a: u64, b: u64, borrow: u64) -> (u64, u64) {
    let t = (a as u128).wrapping_sub((b as u128) + (borrow as u128));
    (t as u64, ((t >> 64) as u64) & 1)
}

#[inline(always)]
pub(crate) fn mac(acc: u64, a: u64, b: u64, carry: u64) -> (u64, u64) {
    let t = (acc as u128) + (a as u128) * (b as u128) + (carry as u128);
    (t as u64, (t >> 64) as u64)
}

/// All-ones when `bit == 1`, zero when `bit == 0`.
#[inline(always)]
pub(crate) fn mask(bit: u64) -> u64 {
    0u64.wrapping_sub(bit & 1)
}

#[inline(always)]
pub(crate) fn select(a: &Limbs, b: &Limbs, choose_b: u64) -> Limbs {
    let m = mask(choose_b);
    let mut out = ZERO;
    for i in 0..MAX_LIMBS {
        out[i] = (a[i] & !m) | (b[i] & m);
    }
    out
}

/// Constant-time `a == b` over all limbs, as 0/1.
#[inline(always)]
pub(crate) fn eq(a: &Limbs, b: &Limbs) -> u64 {
    let mut acc = 0u64;
    for i in 0..MAX_LIMBS {
        acc |= a[i] ^ b[i];
    }
    // acc == 0  <=>  (acc | -acc) has a clear top bit
    1 ^ ((acc | acc.wrapping_neg()) >> 63)
}

#[inline(always)]
pub(crate) fn is_zero(a: &Limbs) -> u64 {
    eq(a, &ZERO)
}

/// Constant-time `a < b` as 0/1.
pub(crate) fn lt(a: &Limbs, b: &Limbs) -> u64 {
    let mut borrow = 0;
    for i in 0..MAX_LIMBS {
        (_, borrow) = sbb(a[i], b[i], borrow);
    }
    borrow
}

pub(crate) fn from_be_bytes(bytes: &[u8]) -> Option<Limbs> {
    let mut out = ZERO;
    let mut i = 0;
    for chunk in bytes.rchunks(8) {
        let mut word = 0u64;
        for &b in chunk {
            word = (word << 8) | b as u64;
        }
        if i == MAX_LIMBS {
            if word != 0 {
                return None;
            }
            continue;
        }
        out[i] = word;
        i += 1;
    }
    Some(out)
}

/// Big-endian encoding into exactly `len` bytes; higher bytes are dropped.
pub(crate) fn to_be_bytes(a: &Limbs, len: usize) -> Vec<u8> {
    let mut out = vec![0u8; len];
    for (k, byte) in out.iter_mut().rev().enumerate() {
        let limb = k / 8;
        if limb < MAX_LIMBS {
            *byte = (a[limb] >> (8 * (k % 8))) as u8;
        }
    }
    out
}

pub(crate) fn from_hex(s: &str) -> Limbs {
    let s = s.trim_start_matches("0x");
    let s = if s.len() % 2 == 1 {
        format!("0{s}")
    } else {
        s.to_string()
    };
    let bytes: Vec<u8> = (0..s.len())
        .step_by(2)
        .map(|i| u8::from_str_radix(&s[i..i + 2], 16).expect("hex constant"))
        .collect();
    from_be_bytes(&bytes).expect("constant fits")
}

pub(crate) fn bit_len(a: &Limbs) -> u32 {
    for i in (0..MAX_LIMBS).rev() {
        if a[i] != 0 {
            return 64 * i as u32 + (64 - a[i].leading_zeros());
        }
    }
    0
}

#[inline(always)]
pub(crate) fn bit(a: &Limbs, i: u32) -> u64 {
    (a[(i / 64) as usize] >> (i % 64)) & 1
}

/// Plain (non-modular) subtraction of a small value, used for exponents.
pub(crate) fn sub_small(a: &Limbs, v: u64) -> Limbs {
    let mut out = ZERO;
    let mut borrow = v;
    for i in 0..MAX_LIMBS {
        let (d, b) = sbb(a[i], borrow, 0);
        out[i] = d;
        borrow = b;
    }
    out
}

pub(crate) fn add_small(a: &Limbs, v: u64) -> Limbs {
    let mut out = ZERO;
    let mut carry = v;
    for i in 0..MAX_LIMBS {
        let (s, c) = adc(a[i], carry, 0);
        out[i] = s;
        carry = c;
    }
    out
}

pub(crate) fn shr(a: &Limbs, s: u32) -> Limbs {
    let mut out = ZERO;
    let words = (s / 64) as usize;
    let bits = s % 64;
    for i in 0..MAX_LIMBS - words {
        let lo = a[i + words] >> bits;
        let hi = if bits > 0 && i + words + 1 < MAX_LIMBS {
            a[i + words + 1] << (64 - bits)
        } else {
            0
        };
        out[i] = lo | hi;
    }
    out
}

macro_rules! dispatch {
    ($n:expr, $f:ident ( $($arg:expr),* )) => {
        match $n {
            1 => $f::<1>($($arg),*),
            2 => $f::<2>($($arg),*),
            3 => $f::<3>($($arg),*),
            4 => $f::<4>($($arg),*),
            5 => $f::<5>($($arg),*),
            6 => $f::<6>($($arg),*),
            7 => $f::<7>($($arg),*),
            8 => $f::<8>($($arg),*),
            9 => $f::<9>($($arg),*),
            _ => unreachable!("unsupported limb count"),
        }
    };
}

/// An odd modulus with precomputed Montgomery constants (`R = 2^(64 n)`).
#[derive(Clone, Debug)]
pub struct Modulus {
    pub(crate) m: Limbs,
    pub(crate) n: usize,
    pub(crate) bits: u32,
    inv: u64,
    r2: Limbs,
    pub(crate) one: Limbs,
}

impl Modulus {
    pub(crate) fn new(m: Limbs) -> Self {
        let bits = bit_len(&m);
        let n = bits.div_ceil(64) as usize;
        assert!(m[0] & 1 == 1, "Montgomery modulus must be odd");
        // Newton iteration for m^{-1} mod 2^64.
        let mut inv = 1u64;
        for _ in 0..6 {
            inv = inv.wrapping_mul(2u64.wrapping_sub(m[0].wrapping_mul(inv)));
        }
        let mut md = Modulus {
            m,
            n,
            bits,
            inv: inv.wrapping_neg(),
            r2: ZERO,
            one: ZERO,
        };
        let mut r = ZERO;
        r[0] = 1;
        for _ in 0..64 * n {
            r = md.add(&r, &r);
        }
        md.one = r;
        for _ in 0..64 * n {
            r = md.add(&r, &r);
        }
        md.r2 = r;
        md
    }

    pub(crate) fn add(&self, a: &Limbs, b: &Limbs) -> Limbs {
        dispatch!(self.n, add_n(a, b, &self.m))
    }

    pub(crate) fn sub(&self, a: &Limbs, b: &Limbs) -> Limbs {
        dispatch!(self.n, sub_n(a, b, &self.m))
    }

    pub(crate) fn mont_mul(&self, a: &Limbs, b: &Limbs) -> Limbs {
        FIELD_MULS.with(|c| c.set(c.get() + 1));
        dispatch!(self.n, mont_mul_n(a, b, &self.m, self.inv))
    }

    pub(crate) fn to_mont(&self, a: &Limbs) -> Limbs {
        self.mont_mul(a, &self.r2)
    }

    pub(crate) fn leave_mont(&self, a: &Limbs) -> Limbs {
        let mut one = ZERO;
        one[0] = 1;
        self.mont_mul(a, &one)
    }

    /// `base^exp` in Montgomery form. The exponent is public: the sequence of
    /// operations depends on it but never on `base`.
    pub(crate) fn pow(&self, base: &Limbs, exp: &Limbs) -> Limbs {
        let mut table = [ZERO; 16];
        table[0] = self.one;
        table[1] = *base;
        for i in 2..16 {
            table[i] = self.mont_mul(&table[i - 1], base);
        }
        let nbits = bit_len(exp);
        let windows = nbits.div_ceil(4);
        let mut acc = self.one;
        for w in (0..windows).rev() {
            if w + 1 != windows {
                for _ in 0..4 {
                    acc = self.mont_mul(&acc, &acc);
                }
            }
            let nib = (exp[(4 * w / 64) as usize] >> ((4 * w) % 64)) & 0xf;
            // public nibble, public table index
            acc = self.mont_mul(&acc, &table[nib as usize]);
        }
        acc
    }

    /// `a mod m` for an arbitrary-length big-endian byte string, processing
    /// every bit with a fixed operation sequence.
    pub(crate) fn reduce_be(&self, bytes: &[u8]) -> Limbs {
        reduce_be_any(bytes, &self.m, self.n)
    }
}

/// Bit-serial reduction modulo any `m` (odd or even) of `n` limbs.
pub(crate) fn reduce_be_any(bytes: &[u8], m: &Limbs, n: usize) -> Limbs {
    let mut acc = ZERO;
    for &byte in bytes {
        for k in (0..8).rev() {
            let b = ((byte >> k) & 1) as u64;
            acc = dispatch!(n, double_plus_bit_n(&acc, b, m));
        }
    }
    acc
}

fn double_plus_bit_n<const N: usize>(a: &Limbs, b: u64, m: &Limbs) -> Limbs {
    let mut d = ZERO;
    let mut carry = b;
    for i in 0..N {
        let v = (a[i] << 1) | carry;
        carry = a[i] >> 63;
        d[i] = v;
    }
    cond_sub_n::<N>(&d, carry, m)
}

/// Given `t + (hi << 64N)` with `t + hi*2^64N < 2m`, returns it reduced below `m`.
#[inline(always)]
fn cond_sub_n<const N: usize>(t: &Limbs, hi: u64, m: &Limbs) -> Limbs {
    let mut s = ZERO;
    let mut borrow = 0;
    for i in 0..N {
        (s[i], borrow) = sbb(t[i], m[i], borrow);
    }
    let (_, borrow) = sbb(hi, 0, borrow);
    // borrow == 1 means t < m: keep t
    let keep = mask(borrow);
    let mut out = ZERO;
    for i in 0..N {
        out[i] = (t[i] & keep) | (s[i] & !keep);
    }
    out
}

fn add_n<const N: usize>(a: &Limbs, b: &Limbs, m: &Limbs) -> Limbs {
    let mut s = ZERO;
    let mut carry = 0;
    for i in 0..N {
        (s[i], carry) = adc(a[i], b[i], carry);
    }
    cond_sub_n::<N>(&s, carry, m)
}

fn sub_n<const N: usize>(a: &Limbs, b: &Limbs, m: &Limbs) -> Limbs {
    let mut d = ZERO;
    let mut borrow = 0;
    for i in 0..N {
        (d[i], borrow) = sbb(a[i], b[i], borrow);
    }
    let mk = mask(borrow);
    let mut carry = 0;
    let mut out = ZERO;
    for i in 0..N {
        (out[i], carry) = adc(d[i], m[i] & mk, carry);
    }
    out
}

#[allow(clippy::needless_range_loop)]
fn mont_mul_n<const N: usize>(a: &Limbs, b: &Limbs, m: &Limbs, inv: u64) -> Limbs {
    let mut t = [0u64; MAX_LIMBS + 2];
    for i in 0..N {
        let mut c = 0;
        for j in 0..N {
            (t[j], c) = mac(t[j], a[j], b[i], c);
        }
        let (s, c2) = adc(t[N], c, 0);
        t[N] = s;
        t[N + 1] = c2;

        let q = t[0].wrapping_mul(inv);
        let (_, mut c) = mac(t[0], q, m[0], 0);
        for j in 1..N {
            (t[j - 1], c) = mac(t[j], q, m[j], c);
        }
        let (s, c3) = adc(t[N], c, 0);
        t[N - 1] = s;
        t[N] = t[N + 1] + c3;
    }
    let mut lo = ZERO;
    lo[..N].copy_from_slice(&t[..N]);
    cond_sub_n::<N>(&lo, t[N], m)
}
