//! Commit/confirm exchange and a two-peer session runner.

use rand::RngCore;
use serde::{Deserialize, Serialize};
use subtle::ConstantTimeEq;

use super::kdf::{hmac_sha256, kdf_bits};
use super::{
    derive_pt, hunting_and_pecking, pt_to_pwe, DragonflyError, MacAddr, Mode, PasswordElement,
    SessionParams, DEFAULT_ITERATIONS, KEYS_LABEL,
};
use crate::encoding::{LeakEvent, LeakObserver};
use crate::field_curve::{AffinePoint, CurveId, CurveParams, Scalar};
use crate::leakage::LibraryProfile;

/// One side's commit: the public scalar and element plus the private `rand`.
#[derive(Clone, Debug)]
pub struct CommitState {
    rand: Scalar,
    pub scalar: Scalar,
    pub element: AffinePoint,
}

/// `rand, mask` uniform in `[2, q-1]`, `scalar = rand + mask mod q`
/// (redrawn while below 2) and `element = -mask * PWE`.
pub fn commit(pwe: &AffinePoint, curve: &CurveParams, rng: &mut impl RngCore) -> CommitState {
    let sf = &curve.scalars;
    loop {
        let rand = sf.random_at_least(rng, 2);
        let mask = sf.random_at_least(rng, 2);
        let scalar = sf.add(&rand, &mask);
        if !sf.at_least(&scalar, 2) {
            continue;
        }
        let element = curve.negate(&curve.mul(&mask, pwe));
        return CommitState {
            rand,
            scalar,
            element,
        };
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
pub struct SessionKeys {
    pub kck: [u8; 32],
    pub pmk: [u8; 32],
}

impl std::fmt::Debug for SessionKeys {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("SessionKeys(..)")
    }
}

/// Validates the peer's commit and derives KCK and PMK from
/// `x(rand * (peer_scalar * PWE + peer_element))`.
pub fn process_peer_commit(
    own: &CommitState,
    peer_scalar: &Scalar,
    peer_element: &AffinePoint,
    pwe: &AffinePoint,
    curve: &CurveParams,
) -> Result<SessionKeys, DragonflyError> {
    let sf = &curve.scalars;
    if !sf.at_least(peer_scalar, 2) {
        return Err(DragonflyError::ScalarOutOfRange);
    }
    if peer_element.is_identity || !curve.contains(peer_element) {
        return Err(DragonflyError::InvalidElement);
    }
    if bool::from(peer_scalar.ct_eq(&own.scalar)) && peer_element.ct_eq_point(&own.element) {
        return Err(DragonflyError::Reflection);
    }
    let t = curve.add(&curve.mul(peer_scalar, pwe), peer_element)?;
    let k = curve.mul(&own.rand, &t);
    if k.is_identity {
        return Err(DragonflyError::InvalidElement);
    }
    let ss = curve.field.to_be_bytes(&k.x);
    let keyseed = hmac_sha256(&[0u8; 32], &[&ss]);
    let ctx = sf.to_be_bytes(&sf.add(&own.scalar, peer_scalar));
    let okm = kdf_bits(&keyseed, KEYS_LABEL, &ctx, 512);
    let mut keys = SessionKeys {
        kck: [0; 32],
        pmk: [0; 32],
    };
    keys.kck.copy_from_slice(&okm[..32]);
    keys.pmk.copy_from_slice(&okm[32..]);
    Ok(keys)
}

fn element_bytes(curve: &CurveParams, p: &AffinePoint) -> Vec<u8> {
    let (mut x, y) = curve.coordinates(p);
    x.extend(y);
    x
}

/// `HMAC(kck, send_confirm || scalar || peer_scalar || element || peer_element)`.
pub fn confirm_tag(
    kck: &[u8; 32],
    send_confirm: u16,
    own: (&Scalar, &AffinePoint),
    peer: (&Scalar, &AffinePoint),
    curve: &CurveParams,
) -> [u8; 32] {
    let sf = &curve.scalars;
    hmac_sha256(
        kck,
        &[
            &send_confirm.to_le_bytes(),
            &sf.to_be_bytes(own.0),
            &sf.to_be_bytes(peer.0),
            &element_bytes(curve, own.1),
            &element_bytes(curve, peer.1),
        ],
    )
}

/// One peer's view of a finished session.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HandshakeResult {
    /// Present only when the peer's confirm verified.
    pub pmk: Option<[u8; 32]>,
    pub commit_scalar: Vec<u8>,
    pub commit_element: Vec<u8>,
    pub confirm: [u8; 32],
    pub confirmed: bool,
}

/// A line of the session transcript export.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub peer: String,
    pub mac: MacAddr,
    pub peer_mac: MacAddr,
    pub curve: CurveId,
    pub mode: Mode,
    pub scalar: String,
    pub element: String,
    pub confirm: String,
    pub confirmed: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub pmk: Option<String>,
}

#[derive(Clone, Debug)]
pub struct HandshakeOutcome {
    pub a: HandshakeResult,
    pub b: HandshakeResult,
    pub events_a: Vec<LeakEvent>,
    pub events_b: Vec<LeakEvent>,
    pub pwe_a: PasswordElement,
    pub pwe_b: PasswordElement,
}

impl HandshakeOutcome {
    pub fn agreed(&self) -> bool {
        self.a.confirmed && self.b.confirmed && self.a.pmk.is_some() && self.a.pmk == self.b.pmk
    }
}

/// A simulated peer. For SAE-PT the password-derived point is computed on
/// first use and cached, so later sessions skip the hash-to-curve work.
#[derive(Clone, Debug)]
pub struct Station {
    pub mac: MacAddr,
    pub password: Vec<u8>,
    pub ssid: Vec<u8>,
    pub identifier: Option<Vec<u8>>,
    pub curve: CurveId,
    pub mode: Mode,
    pub profile: LibraryProfile,
    pub k_iterations: u32,
    pt_cache: Option<AffinePoint>,
}

impl Station {
    pub fn new(
        mac: MacAddr,
        password: &[u8],
        curve: CurveId,
        mode: Mode,
        profile: LibraryProfile,
    ) -> Self {
        Station {
            mac,
            password: password.to_vec(),
            ssid: Vec::new(),
            identifier: None,
            curve,
            mode,
            profile,
            k_iterations: DEFAULT_ITERATIONS,
            pt_cache: None,
        }
    }

    pub fn with_ssid(mut self, ssid: &[u8]) -> Self {
        self.ssid = ssid.to_vec();
        self.pt_cache = None;
        self
    }

    pub fn with_identifier(mut self, id: Option<&[u8]>) -> Self {
        self.identifier = id.map(<[u8]>::to_vec);
        self.pt_cache = None;
        self
    }

    pub fn from_params(p: &SessionParams, profile: LibraryProfile) -> Self {
        Station::new(p.mac_a, &p.password, p.curve, p.mode, profile)
            .with_ssid(&p.ssid)
            .with_identifier(p.identifier.as_deref())
    }

    pub fn cached_pt(&self) -> Option<&AffinePoint> {
        self.pt_cache.as_ref()
    }

    fn params_with(&self, peer: MacAddr) -> SessionParams {
        SessionParams {
            password: self.password.clone(),
            ssid: self.ssid.clone(),
            identifier: self.identifier.clone(),
            mac_a: self.mac,
            mac_b: peer,
            curve: self.curve,
            mode: self.mode,
        }
    }

    pub fn password_element(
        &mut self,
        peer: MacAddr,
        rng: &mut impl RngCore,
        observer: &mut impl LeakObserver,
    ) -> Result<PasswordElement, DragonflyError> {
        let params = self.params_with(peer);
        params.validate()?;
        let curve = self.curve.params();
        match self.mode {
            Mode::Sae => {
                hunting_and_pecking(&params, self.k_iterations, rng, observer, self.profile)
            }
            Mode::SaePt => {
                let pt = match self.pt_cache {
                    Some(pt) => pt,
                    None => {
                        let pt = derive_pt(
                            &self.password,
                            &self.ssid,
                            self.identifier.as_deref(),
                            curve,
                            self.profile,
                            observer,
                        )?;
                        self.pt_cache = Some(pt);
                        pt
                    }
                };
                let pwe = pt_to_pwe(&pt, self.mac, peer, curve);
                Ok(PasswordElement {
                    pwe,
                    pt: Some(pt),
                    iterations: 0,
                    found_at: 0,
                })
            }
        }
    }

    /// Runs a full session between `self` (peer A) and `peer` (peer B).
    pub fn handshake(
        &mut self,
        peer: &mut Station,
        rng: &mut impl RngCore,
    ) -> Result<HandshakeOutcome, DragonflyError> {
        if self.curve != peer.curve {
            return Err(DragonflyError::Mismatch("curve"));
        }
        if self.mode != peer.mode {
            return Err(DragonflyError::Mismatch("mode"));
        }
        let curve = self.curve.params();
        let sf = &curve.scalars;
        let mut events_a = Vec::new();
        let mut events_b = Vec::new();
        let pwe_a = self.password_element(peer.mac, rng, &mut events_a)?;
        let pwe_b = peer.password_element(self.mac, rng, &mut events_b)?;

        let ca = commit(&pwe_a.pwe, curve, rng);
        let cb = commit(&pwe_b.pwe, curve, rng);
        let ka = process_peer_commit(&ca, &cb.scalar, &cb.element, &pwe_a.pwe, curve)?;
        let kb = process_peer_commit(&cb, &ca.scalar, &ca.element, &pwe_b.pwe, curve)?;

        let tag_a = confirm_tag(
            &ka.kck,
            1,
            (&ca.scalar, &ca.element),
            (&cb.scalar, &cb.element),
            curve,
        );
        let tag_b = confirm_tag(
            &kb.kck,
            1,
            (&cb.scalar, &cb.element),
            (&ca.scalar, &ca.element),
            curve,
        );
        // Each side recomputes what the other should have sent.
        let expect_b = confirm_tag(
            &ka.kck,
            1,
            (&cb.scalar, &cb.element),
            (&ca.scalar, &ca.element),
            curve,
        );
        let expect_a = confirm_tag(
            &kb.kck,
            1,
            (&ca.scalar, &ca.element),
            (&cb.scalar, &cb.element),
            curve,
        );
        let ok_a = bool::from(expect_b.ct_eq(&tag_b));
        let ok_b = bool::from(expect_a.ct_eq(&tag_a));

        let result = |c: &CommitState, keys: &SessionKeys, tag, ok: bool| HandshakeResult {
            pmk: ok.then_some(keys.pmk),
            commit_scalar: sf.to_be_bytes(&c.scalar),
            commit_element: element_bytes(curve, &c.element),
            confirm: tag,
            confirmed: ok,
        };
        Ok(HandshakeOutcome {
            a: result(&ca, &ka, tag_a, ok_a),
            b: result(&cb, &kb, tag_b, ok_b),
            events_a,
            events_b,
            pwe_a,
            pwe_b,
        })
    }

    /// Transcript line for this station's side of `outcome`.
    pub fn transcript(&self, peer: &Station, side: &str, r: &HandshakeResult) -> TranscriptRecord {
        TranscriptRecord {
            peer: side.to_string(),
            mac: self.mac,
            peer_mac: peer.mac,
            curve: self.curve,
            mode: self.mode,
            scalar: hex::encode(&r.commit_scalar),
            element: hex::encode(&r.commit_element),
            confirm: hex::encode(r.confirm),
            confirmed: r.confirmed,
            pmk: r.pmk.map(hex::encode),
        }
    }
}

/// Runs one session between peers described by `a` and `b`, where each
/// `mac_a` is the peer's own address and `mac_b` the other side's.
pub fn run_handshake(
    a: &SessionParams,
    b: &SessionParams,
    profile: LibraryProfile,
    rng: &mut impl RngCore,
) -> Result<HandshakeOutcome, DragonflyError> {
    a.validate()?;
    b.validate()?;
    if a.mac_a != b.mac_b || a.mac_b != b.mac_a {
        return Err(DragonflyError::Mismatch("MAC addresses"));
    }
    if a.ssid != b.ssid {
        return Err(DragonflyError::Mismatch("SSID"));
    }
    let mut sa = Station::from_params(a, profile);
    let mut sb = Station::from_params(b, profile);
    sa.handshake(&mut sb, rng)
}
