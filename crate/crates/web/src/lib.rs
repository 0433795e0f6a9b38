//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Every export takes plain values and returns a JSON string. The logic
//! lives in the `*_json` functions so it can be tested natively; the
//! exported wrappers only convert errors into JavaScript exceptions.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::Serialize;
use wasm_bindgen::prelude::*;

use saelab::attack::{plan_measurements, Dictionary, LeakDistribution};
use saelab::dragonfly::{MacAddr, Mode, Station};
use saelab::field_curve::CurveId;
use saelab::leakage::{
    candidate_consistent, simulate_fingerprint, vary_peer_mac, Channels, FingerprintSpec,
    LibraryProfile, MeasurementNoise,
};

/// Largest dictionary the partitioning demo accepts; each candidate costs a
/// full password conversion per session.
pub const MAX_DEMO_DICTIONARY: usize = 5000;
pub const MAX_DEMO_SESSIONS: usize = 64;

const VICTIM: MacAddr = MacAddr([0x02, 0, 0, 0, 0, 0x01]);
const PEER: MacAddr = MacAddr([0x02, 0, 0, 0, 0x01, 0]);

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("demo output serializes")
}

fn parse<T: std::str::FromStr>(what: &str, s: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    s.parse().map_err(|e| format!("{what}: {e}"))
}

#[derive(Serialize)]
struct PeerView {
    mac: String,
    scalar: String,
    element: String,
    confirm: String,
    confirmed: bool,
    pmk: Option<String>,
    events: usize,
}

#[derive(Serialize)]
struct HandshakeView {
    agreed: bool,
    mode: Mode,
    curve: CurveId,
    profile: LibraryProfile,
    /// Successful hunting-and-pecking iteration of each side (SAE only).
    found_at: [u32; 2],
    peers: [PeerView; 2],
}

pub fn handshake_json(
    password_a: &str,
    password_b: &str,
    mode: &str,
    curve: &str,
    profile: &str,
    seed: u32,
) -> Result<String, String> {
    let mode: Mode = parse("mode", mode)?;
    let curve: CurveId = parse("curve", curve)?;
    let profile: LibraryProfile = parse("profile", profile)?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed as u64);
    let mut a = Station::new(VICTIM, password_a.as_bytes(), curve, mode, profile);
    let mut b = Station::new(PEER, password_b.as_bytes(), curve, mode, profile);
    let out = a.handshake(&mut b, &mut rng).map_err(|e| e.to_string())?;
    let view = |s: &Station, peer: &Station, side, r, events: usize| {
        let t = s.transcript(peer, side, r);
        PeerView {
            mac: t.mac.to_string(),
            scalar: t.scalar,
            element: t.element,
            confirm: t.confirm,
            confirmed: t.confirmed,
            pmk: t.pmk,
            events,
        }
    };
    Ok(to_json(&HandshakeView {
        agreed: out.agreed(),
        mode,
        curve,
        profile,
        found_at: [out.pwe_a.found_at, out.pwe_b.found_at],
        peers: [
            view(&a, &b, "a", &out.a, out.events_a.len()),
            view(&b, &a, "b", &out.b, out.events_b.len()),
        ],
    }))
}

/// `leak` is `bit`, `iteration` or a profile name.
pub fn plan_json(
    dict_size: f64,
    leak: &str,
    repetitions: u32,
    confidence: f64,
) -> Result<String, String> {
    if repetitions == 0 {
        return Err("repetitions must be at least 1".into());
    }
    let dist = match leak {
        "bit" => LeakDistribution::single_bit(repetitions),
        "iteration" => LeakDistribution::geometric_iteration(repetitions),
        other => LeakDistribution::from_profile(
            parse("leak", other)?,
            Mode::Sae,
            CurveId::P256,
            Channels::ALL,
            repetitions,
        ),
    };
    let plan = plan_measurements(dict_size, &dist, confidence).map_err(|e| e.to_string())?;
    Ok(to_json(&plan))
}

#[derive(Serialize)]
struct PartitionView {
    dictionary_size: usize,
    /// Survivors after each session, starting with the full dictionary.
    survivors: Vec<usize>,
    target_survives: bool,
    /// Remaining candidates when at most ten are left.
    remaining: Vec<String>,
}

/// Observes `password` over `sessions` SAE sessions with distinct peer
/// addresses and prunes a random dictionary that contains it.
pub fn partition_json(
    password: &str,
    profile: &str,
    sessions: usize,
    dict_size: usize,
    seed: u32,
) -> Result<String, String> {
    let profile: LibraryProfile = parse("profile", profile)?;
    if password.is_empty() || password.contains('\n') {
        return Err("password must be one non-empty line".into());
    }
    if !(2..=MAX_DEMO_DICTIONARY).contains(&dict_size) {
        return Err(format!("dictionary size must be 2..={MAX_DEMO_DICTIONARY}"));
    }
    if !(1..=MAX_DEMO_SESSIONS).contains(&sessions) {
        return Err(format!("sessions must be 1..={MAX_DEMO_SESSIONS}"));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed as u64);
    let mut dict = Dictionary::random(dict_size - 1, &mut rng);
    dict.plant(password.as_bytes(), &mut rng);
    let publics = vary_peer_mac(VICTIM, PEER, sessions, CurveId::P256, Mode::Sae, b"demo");
    let spec = FingerprintSpec {
        password: password.as_bytes(),
        password_id: "demo".into(),
        profile,
        channels: Channels::ALL,
        noise: MeasurementNoise::NONE,
        repetitions: 1,
    };
    let fp = simulate_fingerprint(&spec, &publics, &mut rng)
        .map_err(|e| e.to_string())?
        .fingerprint;
    let mut alive: Vec<&[u8]> = dict.entries().iter().map(Vec::as_slice).collect();
    let mut survivors = vec![alive.len()];
    for s in &fp.sessions {
        alive.retain(|c| candidate_consistent(c, s, profile));
        survivors.push(alive.len());
    }
    Ok(to_json(&PartitionView {
        dictionary_size: dict.len(),
        survivors,
        target_survives: alive.contains(&password.as_bytes()),
        remaining: if alive.len() <= 10 {
            alive
                .iter()
                .map(|c| String::from_utf8_lossy(c).into_owned())
                .collect()
        } else {
            Vec::new()
        },
    }))
}

#[wasm_bindgen]
pub fn handshake(
    password_a: &str,
    password_b: &str,
    mode: &str,
    curve: &str,
    profile: &str,
    seed: u32,
) -> Result<String, JsError> {
    handshake_json(password_a, password_b, mode, curve, profile, seed).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn plan(
    dict_size: f64,
    leak: &str,
    repetitions: u32,
    confidence: f64,
) -> Result<String, JsError> {
    plan_json(dict_size, leak, repetitions, confidence).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn partition(
    password: &str,
    profile: &str,
    sessions: usize,
    dict_size: usize,
    seed: u32,
) -> Result<String, JsError> {
    partition_json(password, profile, sessions, dict_size, seed).map_err(|e| JsError::new(&e))
}
