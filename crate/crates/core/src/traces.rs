//! Flush+Reload measurement layer, simulated: hit-count traces for a
//! monitored branch, the whitespace-column `.dat` trace format, threshold
//! calibration and hit-count classification.

use std::fmt::Write as _;

use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TraceError {
    #[error("trace has no samples")]
    Empty,
    #[error("slot indices must be strictly increasing (at sample {0})")]
    UnorderedSlots(usize),
    #[error("reload latency must be positive (at sample {0})")]
    ZeroLatency(usize),
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("calibration needs two separated, nonempty latency populations")]
    Calibration,
    #[error("invalid trace model: {0}")]
    InvalidModel(&'static str),
}

/// One probe's reload latencies over consecutive time slots.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawTrace {
    samples: Vec<(i64, u32)>,
    pub threshold_cycles: u32,
}

impl RawTrace {
    pub fn new(samples: Vec<(i64, u32)>, threshold_cycles: u32) -> Result<Self, TraceError> {
        for (i, w) in samples.windows(2).enumerate() {
            if w[1].0 <= w[0].0 {
                return Err(TraceError::UnorderedSlots(i + 1));
            }
        }
        if let Some(i) = samples.iter().position(|s| s.1 == 0) {
            return Err(TraceError::ZeroLatency(i));
        }
        Ok(RawTrace {
            samples,
            threshold_cycles,
        })
    }

    pub fn samples(&self) -> &[(i64, u32)] {
        &self.samples
    }

    /// Samples reloaded faster than the threshold.
    pub fn hits(&self) -> usize {
        self.samples
            .iter()
            .filter(|s| s.1 < self.threshold_cycles)
            .count()
    }

    pub fn shifted(&self, by: i64) -> RawTrace {
        RawTrace {
            samples: self.samples.iter().map(|&(t, c)| (t + by, c)).collect(),
            threshold_cycles: self.threshold_cycles,
        }
    }

    /// Parses whitespace-separated columns: slot index in column 0, reload
    /// cycles in column 2. Blank lines and `#` comments are skipped.
    pub fn parse_dat(text: &str, threshold_cycles: u32) -> Result<Self, TraceError> {
        let mut samples = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |reason: String| TraceError::Parse {
                line: i + 1,
                reason,
            };
            let cols: Vec<&str> = line.split_whitespace().collect();
            if cols.len() < 3 {
                return Err(err(format!(
                    "expected at least 3 columns, found {}",
                    cols.len()
                )));
            }
            let slot = cols[0]
                .parse::<f64>()
                .map_err(|e| err(format!("slot: {e}")))?;
            let cycles = cols[2]
                .parse::<f64>()
                .map_err(|e| err(format!("cycles: {e}")))?;
            if slot.fract() != 0.0
                || cycles.fract() != 0.0
                || cycles < 0.0
                || cycles > u32::MAX as f64
            {
                return Err(err("slot and cycles must be integers".into()));
            }
            samples.push((slot as i64, cycles as u32));
        }
        RawTrace::new(samples, threshold_cycles)
    }

    /// Writes `slot hit cycles` lines, readable by [`RawTrace::parse_dat`].
    pub fn to_dat(&self) -> String {
        let mut out = String::from("# slot hit cycles\n");
        for &(t, c) in &self.samples {
            let _ = writeln!(out, "{t} {} {c}", (c < self.threshold_cycles) as u8);
        }
        out
    }
}

/// `shift + Poisson(poisson_mean)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HitCountDist {
    pub shift: u32,
    pub poisson_mean: f64,
}

impl HitCountDist {
    pub fn mean(&self) -> f64 {
        self.shift as f64 + self.poisson_mean
    }

    fn sample(&self, rng: &mut impl Rng) -> u32 {
        let extra = if self.poisson_mean > 0.0 {
            Poisson::new(self.poisson_mean)
                .expect("positive mean")
                .sample(rng) as u32
        } else {
            0
        };
        self.shift + extra
    }
}

/// Normal latency population, in cycles.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Latency {
    pub mean: f64,
    pub sd: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceModel {
    pub taken: HitCountDist,
    pub not_taken: HitCountDist,
    pub hit_latency: Latency,
    pub miss_latency: Latency,
    pub threshold_cycles: u32,
    /// Time slots per trace.
    pub slots: u32,
    /// Probability that an idle slot shows a spurious hit.
    pub background_rate: f64,
}

impl Default for TraceModel {
    /// A couple of hits when the branch is skipped, about a dozen when it
    /// runs, with rare spurious hits.
    fn default() -> Self {
        TraceModel {
            taken: HitCountDist {
                shift: 9,
                poisson_mean: 3.0,
            },
            not_taken: HitCountDist {
                shift: 0,
                poisson_mean: 2.0,
            },
            hit_latency: Latency {
                mean: 60.0,
                sd: 10.0,
            },
            miss_latency: Latency {
                mean: 250.0,
                sd: 30.0,
            },
            threshold_cycles: 120,
            slots: 70,
            background_rate: 0.002,
        }
    }
}

impl TraceModel {
    /// Deterministic hit counts equal to the default means.
    pub fn zero_noise() -> Self {
        TraceModel {
            taken: HitCountDist {
                shift: 12,
                poisson_mean: 0.0,
            },
            not_taken: HitCountDist {
                shift: 2,
                poisson_mean: 0.0,
            },
            background_rate: 0.0,
            ..TraceModel::default()
        }
    }

    /// Noisier setting for studying two-measurement merging: wider hit-count
    /// spread and frequent spurious hits.
    pub fn elevated_noise() -> Self {
        TraceModel {
            taken: HitCountDist {
                shift: 2,
                poisson_mean: 8.0,
            },
            not_taken: HitCountDist {
                shift: 0,
                poisson_mean: 4.0,
            },
            background_rate: 0.02,
            ..TraceModel::default()
        }
    }

    pub fn validate(&self) -> Result<(), TraceError> {
        if !(0.0..1.0).contains(&self.background_rate) {
            return Err(TraceError::InvalidModel(
                "background rate must lie in [0, 1)",
            ));
        }
        if self.taken.poisson_mean < 0.0 || self.not_taken.poisson_mean < 0.0 {
            return Err(TraceError::InvalidModel(
                "Poisson means must be nonnegative",
            ));
        }
        if self.hit_latency.mean >= self.threshold_cycles as f64
            || self.miss_latency.mean < self.threshold_cycles as f64
        {
            return Err(TraceError::InvalidModel(
                "threshold must separate hit and miss latencies",
            ));
        }
        if self.slots == 0 {
            return Err(TraceError::InvalidModel("at least one slot"));
        }
        Ok(())
    }

    /// Expected below-threshold samples per trace.
    pub fn expected_hits(&self, taken: bool) -> f64 {
        let m = if taken {
            self.taken.mean()
        } else {
            self.not_taken.mean()
        };
        m + self.background_rate * (self.slots as f64 - m)
    }

    fn latency(&self, hit: bool, rng: &mut impl Rng) -> u32 {
        let t = self.threshold_cycles as f64;
        let (pop, lo, hi) = if hit {
            (self.hit_latency, 1.0, t - 1.0)
        } else {
            (self.miss_latency, t, f64::from(u32::MAX))
        };
        let v = if pop.sd > 0.0 {
            Normal::new(pop.mean, pop.sd)
                .expect("finite sd")
                .sample(rng)
        } else {
            pop.mean
        };
        v.round().clamp(lo, hi) as u32
    }
}

/// A trace whose signal hits follow the model's taken or not-taken count,
/// placed at random slots, with idle slots turning into hits at the
/// background rate.
pub fn synthesize_trace(
    model: &TraceModel,
    branch_taken: bool,
    rng: &mut impl Rng,
) -> Result<RawTrace, TraceError> {
    model.validate()?;
    let n = model.slots as usize;
    let dist = if branch_taken {
        model.taken
    } else {
        model.not_taken
    };
    let signal = (dist.sample(rng) as usize).min(n);
    let mut hit = vec![false; n];
    for i in rand::seq::index::sample(rng, n, signal) {
        hit[i] = true;
    }
    for h in hit.iter_mut().filter(|h| !**h) {
        *h = model.background_rate > 0.0 && rng.random_bool(model.background_rate);
    }
    let samples = hit
        .iter()
        .enumerate()
        .map(|(i, &h)| (i as i64, model.latency(h, rng)))
        .collect();
    RawTrace::new(samples, model.threshold_cycles)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Taken,
    NotTaken,
    LowConfidence,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Taken => "taken",
            Verdict::NotTaken => "not-taken",
            Verdict::LowConfidence => "low-confidence",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub verdict: Verdict,
    /// Hit count, averaged when several traces are merged.
    pub hits: f64,
    pub confidence: f64,
}

/// Hit-count decision rule. Counts at or above `taken_min` mean taken, at
/// or below `not_taken_max` not taken, anything between is low confidence.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cutoffs {
    pub taken_min: f64,
    pub not_taken_max: f64,
    /// Hit-count distance treated as full confidence, normally the gap
    /// between the two means.
    pub scale: f64,
}

impl Default for Cutoffs {
    fn default() -> Self {
        Cutoffs::for_model(&TraceModel::default())
    }
}

impl Cutoffs {
    /// A band of one hit either side of the midpoint between the expected
    /// counts.
    pub fn for_model(model: &TraceModel) -> Self {
        let (lo, hi) = (model.expected_hits(false), model.expected_hits(true));
        let mid = (lo + hi) / 2.0;
        Cutoffs {
            taken_min: (mid + 1.0).round(),
            not_taken_max: (mid - 1.0).round(),
            scale: hi - lo,
        }
    }

    pub fn midpoint(&self) -> f64 {
        (self.taken_min + self.not_taken_max) / 2.0
    }

    /// Confidence below which a verdict is withheld.
    pub fn min_confidence(&self) -> f64 {
        (self.taken_min - self.not_taken_max) / (2.0 * self.scale)
    }

    fn decide(&self, hits: f64) -> Classification {
        let confidence = ((hits - self.midpoint()).abs() / self.scale).clamp(0.0, 1.0);
        let verdict = if hits >= self.taken_min {
            Verdict::Taken
        } else if hits <= self.not_taken_max {
            Verdict::NotTaken
        } else {
            Verdict::LowConfidence
        };
        Classification {
            verdict,
            hits,
            confidence,
        }
    }
}

pub fn classify(trace: &RawTrace, cutoffs: &Cutoffs) -> Result<Classification, TraceError> {
    if trace.samples.is_empty() {
        return Err(TraceError::Empty);
    }
    Ok(cutoffs.decide(trace.hits() as f64))
}

/// Classifies the mean hit count of several traces of the same event.
pub fn classify_repeated(
    traces: &[RawTrace],
    cutoffs: &Cutoffs,
) -> Result<Classification, TraceError> {
    if traces.is_empty() || traces.iter().any(|t| t.samples.is_empty()) {
        return Err(TraceError::Empty);
    }
    let mean = traces.iter().map(|t| t.hits() as f64).sum::<f64>() / traces.len() as f64;
    Ok(cutoffs.decide(mean))
}

/// Midpoint between the mean hit and mean miss latencies.
pub fn calibrate_threshold(hit_samples: &[u32], miss_samples: &[u32]) -> Result<u32, TraceError> {
    if hit_samples.is_empty() || miss_samples.is_empty() {
        return Err(TraceError::Calibration);
    }
    let mean = |s: &[u32]| s.iter().map(|&v| v as f64).sum::<f64>() / s.len() as f64;
    let (h, m) = (mean(hit_samples), mean(miss_samples));
    if h >= m {
        return Err(TraceError::Calibration);
    }
    Ok(((h + m) / 2.0).round() as u32)
}

/// CSV report: `trace_id,hits,verdict,confidence`.
pub fn report_csv<'a>(rows: impl IntoIterator<Item = (&'a str, &'a Classification)>) -> String {
    let mut out = String::from("trace_id,hits,verdict,confidence\n");
    for (id, c) in rows {
        let _ = writeln!(
            out,
            "{id},{},{},{:.4}",
            c.hits,
            c.verdict.name(),
            c.confidence
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn trace_with_hits(hits: usize) -> RawTrace {
        let samples = (0..40)
            .map(|i| (i as i64, if i < hits { 50 } else { 300 }))
            .collect();
        RawTrace::new(samples, 120).unwrap()
    }

    #[test]
    fn constructed_examples() {
        let c = Cutoffs {
            taken_min: 8.0,
            not_taken_max: 4.0,
            scale: 10.0,
        };
        assert_eq!(
            classify(&trace_with_hits(12), &c).unwrap().verdict,
            Verdict::Taken
        );
        assert_eq!(
            classify(&trace_with_hits(2), &c).unwrap().verdict,
            Verdict::NotTaken
        );
        let mid = classify(&trace_with_hits(6), &c).unwrap();
        assert_eq!((mid.verdict, mid.confidence), (Verdict::LowConfidence, 0.0));
        assert_eq!(
            classify(&RawTrace::new(vec![], 120).unwrap(), &c),
            Err(TraceError::Empty)
        );
    }

    #[test]
    fn low_confidence_iff_below_cutoff() {
        let c = Cutoffs::default();
        for h in 0..30 {
            let r = classify(&trace_with_hits(h), &c).unwrap();
            assert_eq!(
                r.verdict == Verdict::LowConfidence,
                r.confidence < c.min_confidence(),
                "{h}"
            );
        }
    }

    #[test]
    fn zero_noise_counts_are_exact() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let m = TraceModel::zero_noise();
        assert_eq!(synthesize_trace(&m, false, &mut rng).unwrap().hits(), 2);
        let t = synthesize_trace(&m, true, &mut rng).unwrap();
        assert_eq!(t.hits(), 12);
        let c = Cutoffs::for_model(&m);
        assert_eq!(classify(&t, &c).unwrap().verdict, Verdict::Taken);
    }

    #[test]
    fn default_model_ratio() {
        let m = TraceModel::default();
        let ratio = m.taken.mean() / m.not_taken.mean();
        assert!((5.0..=10.0).contains(&ratio));
        let c = Cutoffs::default();
        assert_eq!((c.taken_min, c.not_taken_max), (8.0, 6.0));
    }

    #[test]
    fn dat_roundtrip_and_errors() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let t = synthesize_trace(&TraceModel::default(), true, &mut rng)
            .unwrap()
            .shifted(980);
        assert_eq!(RawTrace::parse_dat(&t.to_dat(), 120).unwrap(), t);
        assert!(matches!(
            RawTrace::parse_dat("1 2\n", 120),
            Err(TraceError::Parse { line: 1, .. })
        ));
        assert_eq!(
            RawTrace::parse_dat("2 0 100\n1 0 100\n", 120),
            Err(TraceError::UnorderedSlots(1))
        );
        let extra = RawTrace::parse_dat("# c\n\n5 x 100 y\n6 x 200\n", 120).unwrap();
        assert_eq!(extra.samples(), &[(5, 100), (6, 200)]);
    }

    #[test]
    fn calibration() {
        assert_eq!(calibrate_threshold(&[60; 10], &[250; 10]).unwrap(), 155);
        assert_eq!(calibrate_threshold(&[80, 100], &[140, 160]).unwrap(), 120);
        assert_eq!(
            calibrate_threshold(&[100; 3], &[100; 3]),
            Err(TraceError::Calibration)
        );
        assert_eq!(
            calibrate_threshold(&[], &[100]),
            Err(TraceError::Calibration)
        );
    }

    #[test]
    fn csv_report() {
        let c = Classification {
            verdict: Verdict::Taken,
            hits: 12.0,
            confidence: 0.6,
        };
        assert_eq!(
            report_csv([("t0", &c)]),
            "trace_id,hits,verdict,confidence\nt0,12,taken,0.6000\n"
        );
    }
}
