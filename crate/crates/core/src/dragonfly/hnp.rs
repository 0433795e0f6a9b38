//! Hunting-and-pecking password conversion.

use rand::RngCore;
use subtle::{Choice, ConditionallySelectable};

use super::kdf::{hmac_sha256, kdf_bits};
use super::{
    ordered_macs, DragonflyError, MacAddr, Mode, PasswordElement, SessionParams, HUNTING_LABEL,
};
use crate::encoding::{
    bin2bn_ct, bin2bn_leaky, decompress_leaky, CompressedFormat, LeakObserver, SecretTag,
};
use crate::field_curve::{CurveParams, FieldElement};
use crate::leakage::LibraryProfile;

pub const DEFAULT_ITERATIONS: u32 = 40;

fn seed_for(macs: &[u8; 12], password: &[u8], counter: u8) -> [u8; 32] {
    hmac_sha256(macs, &[password, &[counter]])
}

fn candidate_bytes(curve: &CurveParams, seed: &[u8; 32]) -> Vec<u8> {
    let f = &curve.field;
    let p = f.modulus().to_be_bytes(f.byte_len());
    kdf_bits(seed, HUNTING_LABEL, &p, f.bits() as u16)
}

/// Victim-side conversion with the usual mitigations: a fixed number of
/// passes, a random dummy password once a point is found, and a blinded
/// residue test. The `profile` decides which conversions and which
/// decompression routine run, and hence which events reach `observer`.
pub fn hunting_and_pecking(
    params: &SessionParams,
    k_iterations: u32,
    rng: &mut impl RngCore,
    observer: &mut impl LeakObserver,
    profile: LibraryProfile,
) -> Result<PasswordElement, DragonflyError> {
    params.validate()?;
    if params.mode != Mode::Sae {
        return Err(DragonflyError::Params(
            "hunting-and-pecking requires SAE mode",
        ));
    }
    let curve = params.curve.params();
    let f = &curve.field;
    let macs = ordered_macs(params.mac_a, params.mac_b);
    let leaky = profile.leaky_bin2bn();

    // same length as the password so the HMAC input size never changes
    let mut dummy = vec![0u8; params.password.len()];
    rng.fill_bytes(&mut dummy);

    let mut found = Choice::from(0);
    let mut x = f.zero();
    let mut seed_saved = [0u8; 32];
    let mut found_at = 0u32;
    let mut counter = 0u32;
    while counter < k_iterations || !bool::from(found) {
        counter += 1;
        if counter > u8::MAX as u32 {
            return Err(DragonflyError::DerivationFailed);
        }
        let pwd: &[u8] = if bool::from(found) {
            &dummy
        } else {
            &params.password
        };
        let seed = seed_for(&macs, pwd, counter as u8);
        let cand = candidate_bytes(curve, &seed);
        let cand_int = if leaky {
            bin2bn_leaky(&cand, observer, SecretTag::XCand)?
        } else {
            bin2bn_ct(&cand)?
        };
        let (x_cand, in_range) = f.from_uint_ct(&cand_int);
        let blind = f.random_nonzero(rng);
        let is_point = f.is_square_blinded(&curve.rhs(&x_cand), &blind) & in_range;
        let take = is_point & !found;
        x = FieldElement::conditional_select(&x, &x_cand, take);
        for (s, &n) in seed_saved.iter_mut().zip(seed.iter()) {
            *s = u8::conditional_select(s, &n, take);
        }
        found_at = u32::conditional_select(&found_at, &counter, take);
        found |= take;
    }

    let fmt = CompressedFormat::from_parity(seed_saved[31] & 1);
    if leaky {
        bin2bn_leaky(&f.to_be_bytes(&x), observer, SecretTag::X)?;
    }
    // Silent profiles are routed to the hardened routine inside.
    let pwe = decompress_leaky(&x, fmt, curve, profile, observer)?;
    if leaky {
        bin2bn_leaky(&f.to_be_bytes(&pwe.y), observer, SecretTag::Y)?;
    }
    if profile.leaks_seed() {
        bin2bn_leaky(&seed_saved, observer, SecretTag::Seed)?;
    }
    Ok(PasswordElement {
        pwe,
        pt: None,
        iterations: counter,
        found_at,
    })
}

/// What an attacker computes offline for one candidate password: the
/// conversion stopped at the first successful iteration, plus the values
/// whose encodings leak.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OfflineConversion {
    pub found_at: u32,
    /// KDF output of the first iteration.
    pub first_candidate: Vec<u8>,
    pub x: Vec<u8>,
    pub y: Vec<u8>,
    pub seed: [u8; 32],
    /// Parity of the principal square root before the format adjustment.
    pub root_parity: u8,
    /// Parity requested by the compression format (seed LSB).
    pub format_parity: u8,
}

/// Attacker-side conversion. It uses the principal root both as the residue
/// test and as the decompressed `y`, so each pass costs one exponentiation.
pub fn hunting_and_pecking_offline(
    password: &[u8],
    mac_a: MacAddr,
    mac_b: MacAddr,
    curve: &CurveParams,
) -> Result<OfflineConversion, DragonflyError> {
    let f = &curve.field;
    let macs = ordered_macs(mac_a, mac_b);
    let mut first_candidate = Vec::new();
    for counter in 1..=u8::MAX {
        let seed = seed_for(&macs, password, counter);
        let cand = candidate_bytes(curve, &seed);
        if counter == 1 {
            first_candidate = cand.clone();
        }
        let Some(x) = f.from_be_bytes(&cand) else {
            continue;
        };
        let (root, ok) = f.sqrt_candidate(&curve.rhs(&x));
        if !bool::from(ok) {
            continue;
        }
        let root_parity = f.is_odd(&root).unwrap_u8();
        let format_parity = seed[31] & 1;
        let y = if root_parity == format_parity {
            root
        } else {
            f.neg(&root)
        };
        return Ok(OfflineConversion {
            found_at: counter as u32,
            first_candidate,
            x: cand,
            y: f.to_be_bytes(&y),
            seed,
            root_parity,
            format_parity,
        });
    }
    Err(DragonflyError::DerivationFailed)
}
