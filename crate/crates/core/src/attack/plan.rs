use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::AttackError;
use crate::dragonfly::Mode;
use crate::field_curve::CurveId;
use crate::leakage::accounting::SiteModels;
use crate::leakage::{Channels, DecompressionStyle, LibraryProfile};

/// Per-trace leak model: each outcome `j` is observed with probability
/// `weight`, and a wrong candidate reproduces it with probability `survival`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeakDistribution {
    pub outcomes: Vec<LeakOutcome>,
    /// Raw measurements merged into one trace.
    pub repetitions: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeakOutcome {
    pub survival: f64,
    pub weight: f64,
}

const WEIGHT_FLOOR: f64 = 1e-18;

fn product(a: &[LeakOutcome], b: &[LeakOutcome]) -> Vec<LeakOutcome> {
    let mut merged: BTreeMap<u64, LeakOutcome> = BTreeMap::new();
    for x in a {
        for y in b {
            let w = x.weight * y.weight;
            if w < WEIGHT_FLOOR {
                continue;
            }
            let s = x.survival * y.survival;
            // outcomes with equal survival are interchangeable for planning
            let key = (-s.log2() * 1e6).round() as u64;
            let e = merged.entry(key).or_insert(LeakOutcome {
                survival: s,
                weight: 0.0,
            });
            e.weight += w;
        }
    }
    merged.into_values().collect()
}

/// Outcomes of a single zero-count site: seeing `z` zeros has probability
/// `p(z)` for the victim and for any wrong candidate alike.
fn zero_site(p: impl Fn(u16) -> f64, max: u16) -> Vec<LeakOutcome> {
    (0..=max)
        .map(p)
        .filter(|&w| w > 0.0)
        .map(|w| LeakOutcome {
            survival: w,
            weight: w,
        })
        .collect()
}

impl LeakDistribution {
    pub fn new(outcomes: Vec<LeakOutcome>, repetitions: u32) -> Result<Self, AttackError> {
        let d = LeakDistribution {
            outcomes,
            repetitions,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<(), AttackError> {
        if self.outcomes.is_empty() {
            return Err(AttackError::InvalidDistribution("no outcomes"));
        }
        if self.repetitions == 0 {
            return Err(AttackError::InvalidDistribution(
                "repetitions must be at least 1",
            ));
        }
        if self
            .outcomes
            .iter()
            .any(|o| !(o.survival > 0.0 && o.survival <= 1.0 && o.weight >= 0.0))
        {
            return Err(AttackError::InvalidDistribution(
                "survival must lie in (0, 1] and weights be nonnegative",
            ));
        }
        let total: f64 = self.outcomes.iter().map(|o| o.weight).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(AttackError::InvalidDistribution("weights must sum to 1"));
        }
        Ok(())
    }

    /// Every trace reveals one fair bit.
    pub fn single_bit(repetitions: u32) -> Self {
        LeakDistribution {
            outcomes: vec![LeakOutcome {
                survival: 0.5,
                weight: 1.0,
            }],
            repetitions,
        }
    }

    /// Every trace reveals `bits` bits.
    pub fn fixed_bits(bits: f64, repetitions: u32) -> Self {
        LeakDistribution {
            outcomes: vec![LeakOutcome {
                survival: (-bits).exp2(),
                weight: 1.0,
            }],
            repetitions,
        }
    }

    /// Each trace reveals the iteration at which the conversion succeeded,
    /// each iteration succeeding with probability 1/2.
    pub fn geometric_iteration(repetitions: u32) -> Self {
        let mut outcomes: Vec<LeakOutcome> = (1..=60)
            .map(|i| LeakOutcome {
                survival: (-(i as f64)).exp2(),
                weight: (-(i as f64)).exp2(),
            })
            .collect();
        // fold the tail into the last outcome
        let total: f64 = outcomes.iter().map(|o| o.weight).sum();
        outcomes.last_mut().unwrap().weight += 1.0 - total;
        LeakDistribution {
            outcomes,
            repetitions,
        }
    }

    /// Per-session distribution implied by a library profile and the
    /// monitored channels, under the crate's information accounting.
    pub fn from_profile(
        profile: LibraryProfile,
        mode: Mode,
        curve: CurveId,
        channels: Channels,
        repetitions: u32,
    ) -> Self {
        let one = |s: f64, w: f64| LeakOutcome {
            survival: s,
            weight: w,
        };
        let mut dist = vec![one(1.0, 1.0)];
        if channels.decompression && mode == Mode::Sae {
            let part = match profile.decompression_style() {
                DecompressionStyle::OpenSsl => vec![one(0.5, 1.0)],
                DecompressionStyle::WolfSsl => vec![one(0.5, 0.5), one(0.25, 0.5)],
                DecompressionStyle::Ell => vec![one(0.25, 1.0)],
                DecompressionStyle::Silent => vec![one(1.0, 1.0)],
            };
            dist = product(&dist, &part);
        }
        if channels.bin2bn && profile.leaky_bin2bn() {
            let m = SiteModels::for_id(curve);
            let max = m.element.len as u16;
            match mode {
                Mode::Sae => {
                    let mut joint = Vec::new();
                    for z1 in 0..=max {
                        for zx in 0..=max {
                            let w = m.joint_first_final(z1, zx);
                            if w > 0.0 {
                                joint.push(one(w, w));
                            }
                        }
                    }
                    dist = product(&dist, &joint);
                    dist = product(&dist, &zero_site(|z| m.element.p_exact(z), max));
                    if profile.leaks_seed() {
                        dist = product(&dist, &zero_site(|z| m.seed.p_exact(z), 32));
                    }
                }
                Mode::SaePt => {
                    for _ in 0..6 {
                        dist = product(&dist, &zero_site(|z| m.element.p_exact(z), max));
                    }
                }
            }
        }
        let total: f64 = dist.iter().map(|o| o.weight).sum();
        for o in &mut dist {
            o.weight /= total;
        }
        LeakDistribution {
            outcomes: dist,
            repetitions,
        }
    }

    /// Expected bits per trace, `E[-log2 survival]`.
    pub fn expected_bits(&self) -> f64 {
        self.outcomes
            .iter()
            .map(|o| -o.weight * o.survival.log2())
            .sum()
    }
}

/// Leaked bits per trace divided by raw measurements per trace.
pub fn efficiency(dist: &LeakDistribution) -> f64 {
    dist.expected_bits() / dist.repetitions as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackPlan {
    pub d: f64,
    pub n_traces: u32,
    pub measurements: u64,
    /// Target probability that every wrong candidate is pruned.
    pub confidence: f64,
    /// The probability actually reached with `n_traces`.
    pub achieved_confidence: f64,
    pub repetitions: u32,
    #[serde(rename = "efficiency_D")]
    pub efficiency_d: f64,
}

/// Bins per bit used to discretize accumulated leakage.
const BINS_PER_BIT: f64 = 64.0;
const MAX_TRACES: u32 = 100_000;

/// `P[all d-1 wrong candidates pruned | t bits accumulated]`.
fn all_pruned(d: f64, bits: f64) -> f64 {
    ((d - 1.0) * (-(-bits).exp2()).ln_1p()).exp()
}

/// Accumulated-leakage distribution after successive traces, evaluated as
/// the probability that all `d - 1` wrong candidates are pruned.
struct PruneCurve {
    cap: usize,
    steps: Vec<(usize, f64)>,
    mass: Vec<f64>,
    scratch: Vec<f64>,
    pruned: Vec<f64>,
}

impl PruneCurve {
    fn new(d: f64, dist: &LeakDistribution) -> Self {
        // beyond this many bits every wrong candidate is pruned to within 2^-40
        let cap = ((d.log2() + 40.0) * BINS_PER_BIT).ceil() as usize;
        let steps = dist
            .outcomes
            .iter()
            .filter(|o| o.weight > 0.0)
            .map(|o| {
                (
                    ((-o.survival.log2()) * BINS_PER_BIT).round() as usize,
                    o.weight,
                )
            })
            .collect();
        let mut mass = vec![0.0f64; cap + 1];
        mass[0] = 1.0;
        let pruned = (0..=cap)
            .map(|b| all_pruned(d, b as f64 / BINS_PER_BIT))
            .collect();
        PruneCurve {
            cap,
            steps,
            mass,
            scratch: vec![0.0; cap + 1],
            pruned,
        }
    }

    /// Adds one trace and returns the new all-pruned probability.
    fn step(&mut self) -> f64 {
        self.scratch.iter_mut().for_each(|v| *v = 0.0);
        for (b, &w) in self.mass.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for &(step, sw) in &self.steps {
                self.scratch[(b + step).min(self.cap)] += w * sw;
            }
        }
        std::mem::swap(&mut self.mass, &mut self.scratch);
        self.mass.iter().zip(&self.pruned).map(|(w, p)| w * p).sum()
    }
}

fn check_inputs(d: f64, dist: &LeakDistribution) -> Result<(), AttackError> {
    dist.validate()?;
    if d.is_nan() || d < 2.0 || d.is_infinite() {
        return Err(AttackError::InvalidDictionarySize(d));
    }
    Ok(())
}

/// Probability that `n` traces prune all `d - 1` wrong candidates, averaged
/// over the victim's outcomes, each wrong candidate surviving a trace
/// independently.
pub fn pruning_confidence(d: f64, dist: &LeakDistribution, n: u32) -> Result<f64, AttackError> {
    check_inputs(d, dist)?;
    let mut curve = PruneCurve::new(d, dist);
    let mut p = all_pruned(d, 0.0);
    for _ in 0..n {
        p = curve.step();
    }
    Ok(p)
}

/// Smallest trace count whose [`pruning_confidence`] reaches `confidence`.
pub fn plan_measurements(
    d: f64,
    dist: &LeakDistribution,
    confidence: f64,
) -> Result<AttackPlan, AttackError> {
    check_inputs(d, dist)?;
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(AttackError::InvalidConfidence(confidence));
    }
    if dist.outcomes.iter().all(|o| o.survival >= 1.0) {
        return Err(AttackError::Unsatisfiable);
    }
    let mut curve = PruneCurve::new(d, dist);
    for n in 1..=MAX_TRACES {
        let achieved = curve.step();
        if achieved >= confidence {
            return Ok(AttackPlan {
                d,
                n_traces: n,
                measurements: n as u64 * dist.repetitions as u64,
                confidence,
                achieved_confidence: achieved,
                repetitions: dist.repetitions,
                efficiency_d: efficiency(dist),
            });
        }
    }
    Err(AttackError::Unsatisfiable)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_plan() {
        let perfect = LeakDistribution::fixed_bits(1.0, 1);
        let p = plan_measurements(2.0, &perfect, 0.5).unwrap();
        assert_eq!(p.n_traces, 1);
        assert!((p.achieved_confidence - 0.5).abs() < 1e-12);
    }

    #[test]
    fn single_bit_closed_form() {
        // (1 - 2^-n)^(d-1) >= c  <=>  n >= -log2(1 - c^(1/(d-1)))
        for (d, c) in [(1e4, 0.95), (1.4e7, 0.95), (1e6, 0.5)] {
            let n = plan_measurements(d, &LeakDistribution::single_bit(1), c)
                .unwrap()
                .n_traces;
            let exact = (-(1.0 - f64::powf(c, 1.0 / (d - 1.0))).log2()).ceil() as u32;
            assert_eq!(n, exact, "d={d}");
        }
    }

    #[test]
    fn degenerate_and_invalid() {
        let none = LeakDistribution::fixed_bits(0.0, 1);
        assert!(matches!(
            plan_measurements(10.0, &none, 0.9),
            Err(AttackError::Unsatisfiable)
        ));
        assert!(plan_measurements(1.0, &LeakDistribution::single_bit(1), 0.9).is_err());
        assert!(plan_measurements(10.0, &LeakDistribution::single_bit(1), 1.0).is_err());
        let bad = LeakDistribution {
            outcomes: vec![LeakOutcome {
                survival: 0.5,
                weight: 0.7,
            }],
            repetitions: 1,
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn distributions_are_normalized() {
        assert!((LeakDistribution::geometric_iteration(10).expected_bits() - 2.0).abs() < 1e-9);
        for profile in LibraryProfile::ALL {
            for mode in Mode::ALL {
                let d =
                    LeakDistribution::from_profile(profile, mode, CurveId::P256, Channels::ALL, 3);
                d.validate().unwrap();
                let analytic = crate::leakage::analytic_expected_bits(
                    profile,
                    mode,
                    CurveId::P256,
                    Channels::ALL,
                )
                .total;
                assert!(
                    (d.expected_bits() - analytic).abs() < 1e-6,
                    "{profile} {mode:?}"
                );
            }
        }
    }

    #[test]
    fn plan_json_field_names() {
        let p = plan_measurements(1e4, &LeakDistribution::single_bit(3), 0.95).unwrap();
        let v: serde_json::Value = serde_json::to_value(&p).unwrap();
        for k in [
            "d",
            "n_traces",
            "measurements",
            "confidence",
            "efficiency_D",
        ] {
            assert!(v.get(k).is_some(), "{k}");
        }
    }
}
