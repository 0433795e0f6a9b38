use std::collections::BTreeSet;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::noise::{simulate_measurements, MeasurementNoise};
use super::{
    observe_session, Channels, LeakageError, LibraryProfile, SessionObservation, SessionPublic,
};
use crate::dragonfly::{
    hash_to_element, hunting_and_pecking, MacAddr, Mode, SessionParams, DEFAULT_ITERATIONS,
};
use crate::encoding::LeakEvent;
use crate::field_curve::CurveId;

pub const FINGERPRINT_VERSION: u32 = 1;

/// Observations of one password under pairwise-distinct public parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fingerprint {
    pub version: u32,
    /// Opaque label; never the password itself.
    pub password_id: String,
    pub mode: Mode,
    pub profile: LibraryProfile,
    pub sessions: Vec<SessionObservation>,
}

impl Fingerprint {
    pub fn new(password_id: impl Into<String>, mode: Mode, profile: LibraryProfile) -> Self {
        Fingerprint {
            version: FINGERPRINT_VERSION,
            password_id: password_id.into(),
            mode,
            profile,
            sessions: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.sessions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sessions.is_empty()
    }

    pub fn push(&mut self, obs: SessionObservation) -> Result<(), LeakageError> {
        if obs.public.mode != self.mode {
            return Err(LeakageError::InvalidFingerprint(
                "session mode differs from fingerprint mode",
            ));
        }
        if self.sessions.iter().any(|s| s.public == obs.public) {
            return Err(LeakageError::InvalidFingerprint(
                "duplicate public parameters",
            ));
        }
        self.sessions.push(obs);
        Ok(())
    }

    pub fn validate(&self) -> Result<(), LeakageError> {
        if self.version != FINGERPRINT_VERSION {
            return Err(LeakageError::UnsupportedVersion(self.version));
        }
        let mut seen = BTreeSet::new();
        for s in &self.sessions {
            if s.public.mode != self.mode {
                return Err(LeakageError::InvalidFingerprint(
                    "session mode differs from fingerprint mode",
                ));
            }
            if s.reliability == 0 {
                return Err(LeakageError::InvalidFingerprint(
                    "reliability must be at least 1",
                ));
            }
            if !seen.insert(&s.public) {
                return Err(LeakageError::InvalidFingerprint(
                    "duplicate public parameters",
                ));
            }
            super::observe::filter_events(&s.events, self.profile, s.channels)?;
        }
        Ok(())
    }

    /// Total raw measurements behind the fingerprint.
    pub fn measurements(&self) -> u64 {
        self.sessions.iter().map(|s| s.reliability as u64).sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("fingerprint serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, LeakageError> {
        let fp: Fingerprint =
            serde_json::from_str(s).map_err(|e| LeakageError::Json(e.to_string()))?;
        fp.validate()?;
        Ok(fp)
    }
}

/// Runs the victim's password conversion for one session and returns its
/// raw events.
pub fn victim_events(
    password: &[u8],
    public: &SessionPublic,
    profile: LibraryProfile,
    rng: &mut impl RngCore,
) -> Result<Vec<LeakEvent>, LeakageError> {
    let params = SessionParams {
        password: password.to_vec(),
        ssid: public.ssid.clone(),
        identifier: public.identifier.clone(),
        mac_a: public.mac_a,
        mac_b: public.mac_b,
        curve: public.curve,
        mode: public.mode,
    };
    let mut events = Vec::new();
    match public.mode {
        Mode::Sae => {
            hunting_and_pecking(&params, DEFAULT_ITERATIONS, rng, &mut events, profile)?;
        }
        Mode::SaePt => {
            hash_to_element(&params, &mut events, profile)?;
        }
    }
    Ok(events)
}

/// Public parameters for `n` sessions between a fixed victim and an
/// attacker-controlled address incremented per session.
pub fn vary_peer_mac(
    victim: MacAddr,
    first_peer: MacAddr,
    n: usize,
    curve: CurveId,
    mode: Mode,
    ssid: &[u8],
) -> Vec<SessionPublic> {
    (0..n as u64)
        .map(|i| SessionPublic {
            mac_a: victim,
            mac_b: first_peer.offset(i),
            curve,
            mode,
            ssid: ssid.to_vec(),
            identifier: None,
        })
        .collect()
}

/// Parameters of [`simulate_fingerprint`].
#[derive(Clone, Debug)]
pub struct FingerprintSpec<'a> {
    pub password: &'a [u8],
    pub password_id: String,
    pub profile: LibraryProfile,
    pub channels: Channels,
    pub noise: MeasurementNoise,
    pub repetitions: u32,
}

/// Outcome of [`simulate_fingerprint`], including the discarded sessions.
#[derive(Clone, Debug)]
pub struct SimulatedFingerprint {
    pub fingerprint: Fingerprint,
    pub discarded: usize,
}

/// Observes the victim once per public parameter set, merging
/// `repetitions` noisy measurements per session and dropping those below
/// the usability threshold.
pub fn simulate_fingerprint(
    spec: &FingerprintSpec<'_>,
    publics: &[SessionPublic],
    rng: &mut impl RngCore,
) -> Result<SimulatedFingerprint, LeakageError> {
    let mode = publics.first().map_or(Mode::Sae, |p| p.mode);
    let mut fp = Fingerprint::new(spec.password_id.clone(), mode, spec.profile);
    let mut discarded = 0;
    for public in publics {
        let raw = victim_events(spec.password, public, spec.profile, rng)?;
        let truth = observe_session(public.clone(), &raw, spec.profile, spec.channels)?;
        let merged = simulate_measurements(&truth, &spec.noise, spec.repetitions, rng)?;
        if merged.usable {
            fp.push(merged.observation)?;
        } else {
            discarded += 1;
        }
    }
    Ok(SimulatedFingerprint {
        fingerprint: fp,
        discarded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::leakage::candidate_consistent;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn spec(profile: LibraryProfile) -> FingerprintSpec<'static> {
        FingerprintSpec {
            password: b"correct horse",
            password_id: "victim".into(),
            profile,
            channels: Channels::ALL,
            noise: MeasurementNoise::NONE,
            repetitions: 1,
        }
    }

    fn macs() -> (MacAddr, MacAddr) {
        (
            "02:00:00:00:00:01".parse().unwrap(),
            "02:00:00:00:10:00".parse().unwrap(),
        )
    }

    #[test]
    fn json_roundtrip_and_consistency() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let (v, p) = macs();
        let publics = vary_peer_mac(v, p, 6, CurveId::P256, Mode::Sae, b"net");
        let sim = simulate_fingerprint(&spec(LibraryProfile::WolfSsl), &publics, &mut rng).unwrap();
        assert_eq!(sim.fingerprint.len(), 6);
        let back = Fingerprint::from_json(&sim.fingerprint.to_json()).unwrap();
        assert_eq!(back, sim.fingerprint);
        for s in &back.sessions {
            assert!(candidate_consistent(
                b"correct horse",
                s,
                LibraryProfile::WolfSsl
            ));
        }
    }

    #[test]
    fn hardened_fingerprint_is_empty_per_session() {
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        let (v, p) = macs();
        let publics = vary_peer_mac(v, p, 3, CurveId::P256, Mode::Sae, b"");
        let sim =
            simulate_fingerprint(&spec(LibraryProfile::Hardened), &publics, &mut rng).unwrap();
        assert!(sim.fingerprint.sessions.iter().all(|s| s.events.is_empty()));
    }

    #[test]
    fn rejects_duplicates_and_versions() {
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        let (v, p) = macs();
        let mut publics = vary_peer_mac(v, p, 2, CurveId::P256, Mode::Sae, b"");
        publics.push(publics[0].clone());
        assert!(simulate_fingerprint(&spec(LibraryProfile::OpenSsl), &publics, &mut rng).is_err());
        let mut fp = Fingerprint::new("x", Mode::Sae, LibraryProfile::OpenSsl);
        fp.version = 9;
        assert!(matches!(
            Fingerprint::from_json(&fp.to_json()),
            Err(LeakageError::UnsupportedVersion(9))
        ));
    }
}
