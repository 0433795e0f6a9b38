//! Hash-to-element (SAE-PT) password conversion.

use subtle::{ConditionallySelectable, ConstantTimeEq};

use super::kdf::{hkdf_expand, hkdf_extract};
use super::{ordered_macs, DragonflyError, MacAddr, Mode, PasswordElement, SessionParams};
use super::{H2E_LABEL_1, H2E_LABEL_2};
use crate::encoding::{bin2bn_ct, bin2bn_leaky, LeakObserver, SecretTag};
use crate::field_curve::{AffinePoint, CurveParams, FieldElement};
use crate::leakage::LibraryProfile;

/// Simplified SWU map for `a != 0`, with every exceptional case handled by
/// arithmetic selection. The sign of `y` follows the parity of `u`.
pub fn sswu_map(u: &FieldElement, curve: &CurveParams) -> AffinePoint {
    let f = &curve.field;
    let zu2 = f.mul(&curve.sswu_z, &f.square(u));
    let den = f.add(&f.square(&zu2), &zu2);
    let t = f.inv0(&den);
    let x1_generic = f.mul(&curve.sswu_neg_b_over_a, &f.add(&f.one(), &t));
    let x1 = FieldElement::conditional_select(&x1_generic, &curve.sswu_b_over_za, f.is_zero(&den));
    let x2 = f.mul(&zu2, &x1);
    let (y1, first_ok) = f.sqrt_candidate(&curve.rhs(&x1));
    let (y2, _) = f.sqrt_candidate(&curve.rhs(&x2));
    let x = FieldElement::conditional_select(&x2, &x1, first_ok);
    let y = FieldElement::conditional_select(&y2, &y1, first_ok);
    let flip = !f.is_odd(u).ct_eq(&f.is_odd(&y));
    let y = FieldElement::conditional_select(&y, &f.neg(&y), flip);
    AffinePoint {
        x,
        y,
        is_identity: false,
    }
}

fn convert(
    bytes: &[u8],
    leaky: bool,
    observer: &mut impl LeakObserver,
    tag: SecretTag,
) -> Result<(), DragonflyError> {
    if leaky {
        bin2bn_leaky(bytes, observer, tag)?;
    } else {
        bin2bn_ct(bytes)?;
    }
    Ok(())
}

/// The password-derived point `PT`, computed once per
/// (password, SSID, identifier, curve). Under leaky profiles the two `u`
/// values and both coordinates of both mapped points pass through the
/// leading-zero-skipping conversion.
pub fn derive_pt(
    password: &[u8],
    ssid: &[u8],
    identifier: Option<&[u8]>,
    curve: &CurveParams,
    profile: LibraryProfile,
    observer: &mut impl LeakObserver,
) -> Result<AffinePoint, DragonflyError> {
    let f = &curve.field;
    let n = f.byte_len();
    let len = n + n / 2;
    let mut ikm = password.to_vec();
    ikm.extend_from_slice(identifier.unwrap_or_default());
    let seed = hkdf_extract(ssid, &ikm);
    let leaky = profile.leaky_bin2bn();

    let mut map = |label: &[u8], tags: [SecretTag; 3]| -> Result<AffinePoint, DragonflyError> {
        let u = f.reduce_be_bytes(&hkdf_expand(&seed, label, len));
        convert(&f.to_be_bytes(&u), leaky, observer, tags[0])?;
        let p = sswu_map(&u, curve);
        let (x, y) = curve.coordinates(&p);
        convert(&x, leaky, observer, tags[1])?;
        convert(&y, leaky, observer, tags[2])?;
        Ok(p)
    };
    let p1 = map(H2E_LABEL_1, [SecretTag::U1, SecretTag::P1x, SecretTag::P1y])?;
    let p2 = map(H2E_LABEL_2, [SecretTag::U2, SecretTag::P2x, SecretTag::P2y])?;
    let pt = curve.add(&p1, &p2)?;
    if pt.is_identity {
        return Err(DragonflyError::DerivationFailed);
    }
    Ok(pt)
}

/// `k * PT` with `k = (HKDF-Extract(0^32, max(mac) || min(mac)) mod (q-1)) + 1`.
pub fn pt_to_pwe(
    pt: &AffinePoint,
    mac_a: MacAddr,
    mac_b: MacAddr,
    curve: &CurveParams,
) -> AffinePoint {
    let val = hkdf_extract(&[0u8; 32], &ordered_macs(mac_a, mac_b));
    let k = curve.scalars.reduce_nonzero(&val);
    curve.mul(&k, pt)
}

pub fn hash_to_element(
    params: &SessionParams,
    observer: &mut impl LeakObserver,
    profile: LibraryProfile,
) -> Result<PasswordElement, DragonflyError> {
    params.validate()?;
    if params.mode != Mode::SaePt {
        return Err(DragonflyError::Params(
            "hash-to-element requires SAE-PT mode",
        ));
    }
    let curve = params.curve.params();
    let pt = derive_pt(
        &params.password,
        &params.ssid,
        params.identifier.as_deref(),
        curve,
        profile,
        observer,
    )?;
    let pwe = pt_to_pwe(&pt, params.mac_a, params.mac_b, curve);
    Ok(PasswordElement {
        pwe,
        pt: Some(pt),
        iterations: 0,
        found_at: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::{LeakEvent, NullObserver};
    use crate::field_curve::CurveId;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn sswu_on_curve_and_deterministic() {
        let mut rng = ChaCha20Rng::seed_from_u64(31);
        for id in CurveId::ALL {
            let c = id.params();
            for _ in 0..200 {
                let u = c.field.random(&mut rng);
                let p = sswu_map(&u, c);
                assert!(c.contains(&p));
                assert_eq!(p, sswu_map(&u, c));
                assert_eq!(
                    c.field.is_odd(&p.y).unwrap_u8(),
                    c.field.is_odd(&u).unwrap_u8()
                );
            }
            assert!(c.contains(&sswu_map(&c.field.zero(), c)));
        }
    }

    #[test]
    fn six_sites_under_openssl() {
        let c = CurveId::P256.params();
        let mut ev: Vec<LeakEvent> = Vec::new();
        derive_pt(b"pw", b"ssid", None, c, LibraryProfile::OpenSsl, &mut ev).unwrap();
        let tags: Vec<_> = ev.iter().map(|e| e.tag).collect();
        use SecretTag::*;
        assert_eq!(tags, vec![U1, P1x, P1y, U2, P2x, P2y]);
        let mut ev: Vec<LeakEvent> = Vec::new();
        derive_pt(b"pw", b"ssid", None, c, LibraryProfile::Ell, &mut ev).unwrap();
        assert!(ev.is_empty());
    }

    #[test]
    fn identifier_and_mac_dependence() {
        let c = CurveId::P256.params();
        let a = derive_pt(
            b"pw",
            b"s",
            None,
            c,
            LibraryProfile::Hardened,
            &mut NullObserver,
        )
        .unwrap();
        let b = derive_pt(
            b"pw",
            b"s",
            Some(b"id"),
            c,
            LibraryProfile::Hardened,
            &mut NullObserver,
        )
        .unwrap();
        assert_ne!(a, b);
        assert_eq!(
            a,
            derive_pt(
                b"pw",
                b"s",
                None,
                c,
                LibraryProfile::Hardened,
                &mut NullObserver
            )
            .unwrap()
        );
        let m1: MacAddr = "02:00:00:00:00:01".parse().unwrap();
        let pwe1 = pt_to_pwe(&a, m1, m1.offset(1), c);
        let pwe2 = pt_to_pwe(&a, m1, m1.offset(2), c);
        assert!(c.contains(&pwe1) && c.contains(&pwe2));
        assert_ne!(pwe1, pwe2);
    }
}
