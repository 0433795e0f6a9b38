//! HMAC-SHA-256 based derivation functions.

use hkdf::Hkdf;
use hmac::{Hmac, KeyInit, Mac};
use sha2::Sha256;

type HmacSha256 = Hmac<Sha256>;

pub fn hmac_sha256(key: &[u8], parts: &[&[u8]]) -> [u8; 32] {
    let mut mac = HmacSha256::new_from_slice(key).expect("HMAC accepts any key length");
    for p in parts {
        mac.update(p);
    }
    mac.finalize().into_bytes().into()
}

/// The 802.11 counter-mode KDF producing exactly `bits` output bits.
///
/// Blocks are `HMAC(key, i_le16 || label || context || bits_le16)`. When
/// `bits` is not a multiple of 8 the result is shifted right so that it is a
/// `bits`-bit integer in big-endian form.
pub fn kdf_bits(key: &[u8], label: &[u8], context: &[u8], bits: u16) -> Vec<u8> {
    let nbytes = (bits as usize).div_ceil(8);
    let mut out = Vec::with_capacity(nbytes + 32);
    let mut i: u16 = 1;
    while out.len() < nbytes {
        out.extend(hmac_sha256(
            key,
            &[&i.to_le_bytes(), label, context, &bits.to_le_bytes()],
        ));
        i += 1;
    }
    out.truncate(nbytes);
    let extra = bits % 8;
    if extra != 0 {
        let shift = 8 - extra;
        let last = nbytes - 1;
        out[last] &= 0xffu8 << shift;
        // shift the whole big-endian string right by `shift` bits
        for j in (0..nbytes).rev() {
            let lo = out[j] >> shift;
            let hi = if j > 0 { out[j - 1] << (8 - shift) } else { 0 };
            out[j] = lo | hi;
        }
    }
    out
}

pub fn hkdf_extract(salt: &[u8], ikm: &[u8]) -> [u8; 32] {
    let (prk, _) = Hkdf::<Sha256>::extract(Some(salt), ikm);
    prk.into()
}

pub fn hkdf_expand(prk: &[u8; 32], info: &[u8], len: usize) -> Vec<u8> {
    let hk = Hkdf::<Sha256>::from_prk(prk).expect("32-byte PRK");
    let mut okm = vec![0u8; len];
    hk.expand(info, &mut okm).expect("length within HKDF limit");
    okm
}
