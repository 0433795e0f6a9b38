//! Statistical properties of the attacker's view.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use saelab::dragonfly::{MacAddr, Mode};
use saelab::encoding::LeakSite;
use saelab::field_curve::CurveId;
use saelab::leakage::{
    candidate_consistent, observe_session, survival_probability, victim_events, Channels,
    LibraryProfile, SessionObservation, SessionPublic,
};

const VICTIM: MacAddr = MacAddr([0x02, 0, 0, 0, 0, 0x01]);

fn public(mode: Mode, curve: CurveId, peer: u64) -> SessionPublic {
    SessionPublic {
        mac_a: VICTIM,
        mac_b: VICTIM.offset(0x100 + peer),
        curve,
        mode,
        ssid: b"lab".to_vec(),
        identifier: None,
    }
}

fn password(rng: &mut impl RngCore) -> Vec<u8> {
    let mut pw = vec![0u8; 12];
    rng.fill_bytes(&mut pw);
    pw
}

fn observe(
    pw: &[u8],
    public: SessionPublic,
    profile: LibraryProfile,
    channels: Channels,
    rng: &mut impl RngCore,
) -> SessionObservation {
    let raw = victim_events(pw, &public, profile, rng).unwrap();
    observe_session(public, &raw, profile, channels).unwrap()
}

/// Fraction of `n` random wrong candidates consistent with `obs`.
fn survival(obs: &SessionObservation, profile: LibraryProfile, n: usize, seed: u64) -> f64 {
    let hits: usize = (0..n as u64)
        .into_par_iter()
        .filter(|&i| {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            rng.set_stream(i);
            candidate_consistent(&password(&mut rng), obs, profile)
        })
        .count();
    hits as f64 / n as f64
}

fn three_sigma(p: f64, n: usize) -> f64 {
    3.0 * (p * (1.0 - p) / n as f64).sqrt()
}

#[test]
fn true_password_is_always_consistent() {
    // 10^4 noise-free sessions spread over every profile, both modes and
    // all three curves
    let cases: Vec<(LibraryProfile, Mode, CurveId)> = LibraryProfile::ALL
        .into_iter()
        .flat_map(|p| Mode::ALL.into_iter().map(move |m| (p, m)))
        .flat_map(|(p, m)| CurveId::ALL.into_iter().map(move |c| (p, m, c)))
        .collect();
    let per_case = 10_000usize.div_ceil(cases.len());
    let failures: usize = cases
        .par_iter()
        .enumerate()
        .map(|(k, &(profile, mode, curve))| {
            let mut rng = ChaCha20Rng::seed_from_u64(k as u64);
            (0..per_case)
                .filter(|&i| {
                    let pw = password(&mut rng);
                    let obs = observe(
                        &pw,
                        public(mode, curve, i as u64),
                        profile,
                        Channels::ALL,
                        &mut rng,
                    );
                    !candidate_consistent(&pw, &obs, profile)
                })
                .count()
        })
        .sum();
    assert_eq!(failures, 0);
}

#[test]
fn openssl_parity_halves_the_candidates() {
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    let obs = observe(
        b"victim password",
        public(Mode::Sae, CurveId::P256, 0),
        LibraryProfile::OpenSsl,
        Channels::DECOMPRESSION,
        &mut rng,
    );
    assert_eq!(obs.events.len(), 1);
    let n = 10_000;
    let s = survival(&obs, LibraryProfile::OpenSsl, n, 2);
    assert!((s - 0.5).abs() <= three_sigma(0.5, n), "{s}");
    let model = survival_probability(
        &obs.events,
        LibraryProfile::OpenSsl,
        Mode::Sae,
        CurveId::P256,
    );
    assert_eq!(model, 0.5);
}

#[test]
fn two_bit_profiles_quarter_the_candidates() {
    let n = 10_000;
    // ell always resolves format and parity
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let obs = observe(
        b"victim password",
        public(Mode::Sae, CurveId::P256, 0),
        LibraryProfile::Ell,
        Channels::DECOMPRESSION,
        &mut rng,
    );
    let s = survival(&obs, LibraryProfile::Ell, n, 4);
    assert!((s - 0.25).abs() <= three_sigma(0.25, n), "ell {s}");

    // wolfssl only on sessions where the parity value is visible
    let obs = (0..)
        .map(|i| {
            observe(
                b"victim password",
                public(Mode::Sae, CurveId::P256, i),
                LibraryProfile::WolfSsl,
                Channels::DECOMPRESSION,
                &mut rng,
            )
        })
        .find(|o| o.events.iter().any(|e| e.site == LeakSite::ParityValue))
        .unwrap();
    let s = survival(&obs, LibraryProfile::WolfSsl, n, 5);
    assert!((s - 0.25).abs() <= three_sigma(0.25, n), "wolfssl {s}");
}

#[test]
fn wolfssl_parity_value_shows_on_half_the_sessions() {
    let mut rng = ChaCha20Rng::seed_from_u64(6);
    let n = 2_000;
    let visible = (0..n)
        .filter(|&i| {
            let pw = password(&mut rng);
            observe(
                &pw,
                public(Mode::Sae, CurveId::P256, i),
                LibraryProfile::WolfSsl,
                Channels::DECOMPRESSION,
                &mut rng,
            )
            .events
            .iter()
            .any(|e| e.site == LeakSite::ParityValue)
        })
        .count();
    let p = visible as f64 / n as f64;
    assert!((p - 0.5).abs() <= three_sigma(0.5, n as usize), "{p}");
}

#[test]
fn hardened_and_silent_profiles_accept_everyone() {
    let mut rng = ChaCha20Rng::seed_from_u64(7);
    for profile in [LibraryProfile::Hardened, LibraryProfile::CoreCrypto] {
        for mode in Mode::ALL {
            let obs = observe(
                b"victim password",
                public(mode, CurveId::P256, 0),
                profile,
                Channels::ALL,
                &mut rng,
            );
            assert!(obs.events.is_empty());
            assert_eq!(survival(&obs, profile, 300, 8), 1.0);
        }
    }
}

#[test]
fn sae_pt_leakage_ignores_mac_addresses() {
    let mut rng = ChaCha20Rng::seed_from_u64(9);
    let pw = password(&mut rng);
    let first = observe(
        &pw,
        public(Mode::SaePt, CurveId::P256, 0),
        LibraryProfile::OpenSsl,
        Channels::ALL,
        &mut rng,
    );
    for peer in 1..5 {
        let mac_b = MacAddr(rng.random());
        let p = SessionPublic {
            mac_b,
            ..public(Mode::SaePt, CurveId::P256, peer)
        };
        let o = observe(&pw, p, LibraryProfile::OpenSsl, Channels::ALL, &mut rng);
        assert_eq!(o.events, first.events);
    }
}
