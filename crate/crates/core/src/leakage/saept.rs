use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::accounting::{SiteModels, ZeroByteModel};
use super::{LeakageError, LibraryProfile};
use crate::dragonfly::derive_pt;
use crate::encoding::{LeakEvent, LeakSite};
use crate::field_curve::CurveId;

/// Converted values per curve when deriving `PT`: two `u` and two points.
pub const SITES_PER_CURVE: u32 = 6;

/// Bits revealed by seeing `zeros` skipped bytes for a value modelled by `m`.
pub fn leaked_bits(m: &ZeroByteModel, zeros: u16) -> f64 {
    (m.log2_m - 8.0 * (m.len as f64 - zeros as f64)).max(0.0)
}

/// Smallest zero count that reveals at least `bits` bits.
fn min_zeros_for(m: &ZeroByteModel, bits: f64) -> u16 {
    (0..=m.len as u16)
        .find(|&z| leaked_bits(m, z) >= bits - 1e-9)
        .unwrap_or(m.len as u16 + 1)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SaePtLeakRate {
    pub profile: LibraryProfile,
    pub curves: Vec<CurveId>,
    /// Threshold in bytes: the event is "at least `8k` bits leaked at some site".
    pub k: u16,
    /// Union bound `6 |curves| / 256^k`.
    pub union_bound: f64,
    /// Exact probability under independent uniform site values.
    pub exact: f64,
    pub monte_carlo: Option<f64>,
    pub trials: u64,
}

/// Analytic rate of SAE-PT sessions leaking at least `8k` bits in one
/// conversion when `PT` is derived on every curve in `curves`.
pub fn saept_leak_rate(profile: LibraryProfile, curves: &[CurveId], k: u16) -> SaePtLeakRate {
    let leaky = profile.leaky_bin2bn();
    let union_bound = if leaky {
        (SITES_PER_CURVE as usize * curves.len()) as f64 / 256f64.powi(k as i32)
    } else {
        0.0
    };
    let exact = if leaky {
        let miss: f64 = curves
            .iter()
            .map(|&c| {
                let m = SiteModels::for_id(c).element;
                (1.0 - m.p_at_least(min_zeros_for(&m, 8.0 * k as f64))).powi(SITES_PER_CURVE as i32)
            })
            .product();
        1.0 - miss
    } else {
        0.0
    };
    SaePtLeakRate {
        profile,
        curves: curves.to_vec(),
        k,
        union_bound,
        exact,
        monte_carlo: None,
        trials: 0,
    }
}

/// Whether one session's events (covering every curve) reach the threshold.
pub fn session_reaches(events: &[(CurveId, LeakEvent)], k: u16) -> bool {
    events.iter().any(|(c, e)| {
        e.site == LeakSite::SkippedZeroBytes
            && leaked_bits(&SiteModels::for_id(*c).element, e.value) >= 8.0 * k as f64 - 1e-9
    })
}

/// Runs `trials` random-password PT derivations over all `curves` and
/// counts sessions reaching the threshold. Deterministic in `seed` for any
/// thread count.
pub fn saept_leak_rate_mc(
    profile: LibraryProfile,
    curves: &[CurveId],
    k: u16,
    trials: u64,
    seed: u64,
) -> Result<SaePtLeakRate, LeakageError> {
    const CHUNK: u64 = 1024;
    let chunks = trials.div_ceil(CHUNK);
    let hits: u64 = (0..chunks)
        .into_par_iter()
        .map(|chunk| -> Result<u64, LeakageError> {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            rng.set_stream(chunk);
            let n = CHUNK.min(trials - chunk * CHUNK);
            let mut hits = 0;
            let mut events = Vec::with_capacity(6 * curves.len());
            for _ in 0..n {
                let mut password = [0u8; 16];
                rng.fill_bytes(&mut password);
                let mut ssid = [0u8; 8];
                rng.fill(&mut ssid);
                events.clear();
                for &c in curves {
                    let mut ev: Vec<LeakEvent> = Vec::new();
                    derive_pt(&password, &ssid, None, c.params(), profile, &mut ev)?;
                    events.extend(ev.into_iter().map(|e| (c, e)));
                }
                hits += session_reaches(&events, k) as u64;
            }
            Ok(hits)
        })
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .sum();
    let mut out = saept_leak_rate(profile, curves, k);
    out.monte_carlo = Some(hits as f64 / trials.max(1) as f64);
    out.trials = trials;
    Ok(out)
}
