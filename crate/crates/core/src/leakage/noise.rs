use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{LeakageError, SessionObservation};
use crate::encoding::LeakSite;

/// Independent-flip model for the binary events of one raw measurement.
/// Zero-byte counts are taken as exact.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementNoise {
    pub flip_probability: f64,
    /// Merged observations whose confidence falls below this are discarded.
    pub usable_threshold: f64,
}

impl MeasurementNoise {
    pub const NONE: MeasurementNoise = MeasurementNoise {
        flip_probability: 0.0,
        usable_threshold: 0.0,
    };

    /// Calibrated default: one raw measurement in ten is misread, and only
    /// unanimous votes are kept.
    pub const DEFAULT: MeasurementNoise = MeasurementNoise {
        flip_probability: 0.1,
        usable_threshold: 1.0,
    };

    pub fn new(flip_probability: f64, usable_threshold: f64) -> Result<Self, LeakageError> {
        if !(0.0..0.5).contains(&flip_probability) {
            return Err(LeakageError::InvalidNoise(
                "flip probability must lie in [0, 0.5)",
            ));
        }
        if !(0.0..=1.0).contains(&usable_threshold) {
            return Err(LeakageError::InvalidNoise(
                "usable threshold must lie in [0, 1]",
            ));
        }
        Ok(MeasurementNoise {
            flip_probability,
            usable_threshold,
        })
    }
}

impl Default for MeasurementNoise {
    fn default() -> Self {
        MeasurementNoise::DEFAULT
    }
}

fn is_binary(site: LeakSite) -> bool {
    matches!(
        site,
        LeakSite::ParityBranchTaken | LeakSite::ParityValue | LeakSite::FormatValue
    )
}

/// Result of merging `R` raw measurements of the same session.
#[derive(Clone, Debug, PartialEq)]
pub struct MergedMeasurement {
    pub observation: SessionObservation,
    /// Smallest vote margin over the binary events, divided by `R`.
    pub confidence: f64,
    pub usable: bool,
}

/// Draws `r` noisy copies of `truth` and merges them by per-event majority.
/// Ties resolve to 0.
pub fn simulate_measurements(
    truth: &SessionObservation,
    noise: &MeasurementNoise,
    r: u32,
    rng: &mut impl Rng,
) -> Result<MergedMeasurement, LeakageError> {
    if r == 0 {
        return Err(LeakageError::InvalidNoise(
            "at least one measurement is required",
        ));
    }
    let mut merged = truth.clone();
    merged.reliability = r;
    let mut confidence = 1.0f64;
    for e in merged.events.iter_mut().filter(|e| is_binary(e.site)) {
        let mut ones = 0u32;
        for _ in 0..r {
            let flipped = noise.flip_probability > 0.0 && rng.random_bool(noise.flip_probability);
            ones += (e.value as u32 & 1) ^ flipped as u32;
        }
        let zeros = r - ones;
        e.value = (ones > zeros) as u16;
        confidence = confidence.min(ones.abs_diff(zeros) as f64 / r as f64);
    }
    Ok(MergedMeasurement {
        observation: merged,
        confidence,
        usable: confidence >= noise.usable_threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dragonfly::{MacAddr, Mode};
    use crate::encoding::{LeakEvent, SecretTag};
    use crate::field_curve::CurveId;
    use crate::leakage::{Channels, SessionPublic};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn obs(bit: u16) -> SessionObservation {
        let mac: MacAddr = "02:00:00:00:00:01".parse().unwrap();
        SessionObservation {
            public: SessionPublic {
                mac_a: mac,
                mac_b: mac.offset(1),
                curve: CurveId::P256,
                mode: Mode::Sae,
                ssid: Vec::new(),
                identifier: None,
            },
            events: vec![
                LeakEvent {
                    site: LeakSite::SkippedZeroBytes,
                    value: 0,
                    tag: SecretTag::X,
                },
                LeakEvent {
                    site: LeakSite::ParityBranchTaken,
                    value: bit,
                    tag: SecretTag::Y,
                },
            ],
            reliability: 1,
            channels: Channels::ALL,
        }
    }

    #[test]
    fn noiseless_is_identity() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        for bit in [0, 1] {
            let m = simulate_measurements(&obs(bit), &MeasurementNoise::NONE, 1, &mut rng).unwrap();
            assert!(m.usable);
            assert_eq!(m.observation.events, obs(bit).events);
        }
    }

    #[test]
    fn three_measurements_are_accurate() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let noise = MeasurementNoise::DEFAULT;
        let (mut usable, mut correct) = (0u32, 0u32);
        for i in 0..10_000u32 {
            let truth = obs((i & 1) as u16);
            let m = simulate_measurements(&truth, &noise, 3, &mut rng).unwrap();
            if m.usable {
                usable += 1;
                correct += (m.observation.events == truth.events) as u32;
            }
        }
        assert!(correct as f64 / usable as f64 >= 0.99);
    }

    #[test]
    fn two_measurements_lose_samples() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let usable = (0..10_000)
            .filter(|_| {
                simulate_measurements(&obs(1), &MeasurementNoise::DEFAULT, 2, &mut rng)
                    .unwrap()
                    .usable
            })
            .count();
        assert!(usable < 10_000 && usable > 7_000, "{usable}");
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(MeasurementNoise::new(0.5, 0.5).is_err());
        assert!(MeasurementNoise::new(0.1, 1.5).is_err());
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        assert!(simulate_measurements(&obs(0), &MeasurementNoise::NONE, 0, &mut rng).is_err());
    }
}
