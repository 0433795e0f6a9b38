//! Algebraic and behavioural invariants checked on generated inputs.

use proptest::prelude::*;
use saelab::attack::{plan_measurements, prune, Dictionary, LeakDistribution};
use saelab::dragonfly::{sswu_map, MacAddr, Mode};
use saelab::encoding::{
    bin2bn_ct, bin2bn_leaky, decompress_ct, decompress_leaky, CompressedFormat, LeakEvent,
    SecretTag,
};
use saelab::field_curve::{count_field_muls, AffinePoint, CurveId, CurveParams, FieldElement};
use saelab::leakage::{
    candidate_consistent, simulate_fingerprint, vary_peer_mac, Channels, FingerprintSpec,
    LibraryProfile, MeasurementNoise,
};

fn curve_id() -> impl Strategy<Value = CurveId> {
    prop::sample::select(CurveId::ALL.to_vec())
}

fn element(c: &CurveParams, bytes: &[u8]) -> FieldElement {
    c.field.reduce_be_bytes(bytes)
}

fn point(c: &CurveParams, bytes: &[u8]) -> AffinePoint {
    sswu_map(&element(c, bytes), c)
}

fn bytes() -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(any::<u8>(), 80)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 10_000, ..ProptestConfig::default() })]

    #[test]
    fn addition_is_closed(id in curve_id(), a in bytes(), b in bytes()) {
        let c = id.params();
        let (p, q) = (point(c, &a), point(c, &b));
        let s = c.add(&p, &q).unwrap();
        prop_assert!(s.is_identity || c.contains(&s));
        prop_assert_eq!(c.add(&q, &p).unwrap(), s);
        prop_assert!(c.add(&p, &c.negate(&p)).unwrap().is_identity);
    }

    #[test]
    fn sqrt_of_residues(id in curve_id(), a in bytes()) {
        let c = id.params();
        let g = element(c, &a);
        let v = c.field.square(&g);
        let r = c.field.sqrt(&v).unwrap();
        prop_assert_eq!(c.field.square(&r), v);
        prop_assert!(r == g || r == c.field.neg(&g));
    }

    #[test]
    fn bin2bn_variants_agree(buf in prop::collection::vec(prop_oneof![3 => Just(0u8), 1 => any::<u8>()], 0..=72)) {
        let mut ev: Vec<LeakEvent> = Vec::new();
        let leaky = bin2bn_leaky(&buf, &mut ev, SecretTag::X).unwrap();
        prop_assert_eq!(leaky, bin2bn_ct(&buf).unwrap());
        let zeros = buf.iter().take_while(|&&b| b == 0).count() as u16;
        prop_assert_eq!(ev.len(), 1);
        prop_assert_eq!(ev[0].value, zeros);
    }

    #[test]
    fn decompression_variants_agree(id in curve_id(), a in bytes(), bit in 0u8..2) {
        let c = id.params();
        let x = point(c, &a).x;
        let fmt = CompressedFormat::from_parity(bit);
        let ct = decompress_ct(&x, fmt, c).unwrap();
        for profile in LibraryProfile::ALL {
            let mut ev: Vec<LeakEvent> = Vec::new();
            prop_assert_eq!(decompress_leaky(&x, fmt, c, profile, &mut ev).unwrap(), ct);
        }
        prop_assert_eq!(c.field.is_odd(&ct.y).unwrap_u8(), bit);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 1_000, ..ProptestConfig::default() })]

    #[test]
    fn addition_is_associative(id in curve_id(), a in bytes(), b in bytes(), d in bytes()) {
        let c = id.params();
        let (p, q, r) = (point(c, &a), point(c, &b), point(c, &d));
        let left = c.add(&c.add(&p, &q).unwrap(), &r).unwrap();
        let right = c.add(&p, &c.add(&q, &r).unwrap()).unwrap();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn planner_is_monotone(log_d in 2.0f64..40.0, extra in 0.0f64..10.0, c in 0.05f64..0.95, dc in 0.0f64..0.04) {
        let dist = LeakDistribution::geometric_iteration(10);
        let (d1, d2) = (log_d.exp2(), (log_d + extra).exp2());
        let n = |d, conf| plan_measurements(d, &dist, conf).unwrap().n_traces;
        prop_assert!(n(d1, c) <= n(d2, c));
        prop_assert!(n(d1, c) <= n(d1, c + dc));
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 100, ..ProptestConfig::default() })]

    /// The ladder performs the same number of field multiplications for
    /// every scalar, including ones with long runs of equal bits.
    #[test]
    fn ladder_cost_is_scalar_independent(id in curve_id(), k in bytes(), a in bytes()) {
        let c = id.params();
        let p = point(c, &a);
        let reference = count_field_muls(|| c.mul(&c.scalars.from_u64(1), &p)).1;
        let k = c.scalars.reduce_be_bytes(&k);
        prop_assert_eq!(count_field_muls(|| c.mul(&k, &p)).1, reference);
        let minus_one = c.scalars.neg(&c.scalars.from_u64(1));
        prop_assert_eq!(count_field_muls(|| c.mul(&minus_one, &p)).1, reference);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    /// The true password survives any noise-free fingerprint, and pruning a
    /// second time changes nothing.
    #[test]
    fn pruning_is_sound_and_idempotent(
        profile in prop::sample::select(LibraryProfile::ALL.to_vec()),
        mode in prop::sample::select(Mode::ALL.to_vec()),
        seed in any::<u64>(),
    ) {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
        let mut dict = Dictionary::random(40, &mut rng);
        let password = dict.entries()[7].clone();
        dict.plant(&password, &mut rng);
        let victim = MacAddr([2, 0, 0, 0, 0, 1]);
        let publics = vary_peer_mac(victim, victim.offset(0x10), 3, CurveId::P256, mode, b"lab");
        let spec = FingerprintSpec {
            password: &password,
            password_id: "p".into(),
            profile,
            channels: Channels::ALL,
            noise: MeasurementNoise::NONE,
            repetitions: 1,
        };
        let fp = simulate_fingerprint(&spec, &publics, &mut rng).unwrap().fingerprint;
        for s in &fp.sessions {
            prop_assert!(candidate_consistent(&password, s, profile));
        }
        let once = prune(&dict, &fp, 0).unwrap();
        prop_assert!(once.contains(&password));
        let twice = prune(&Dictionary::new(once.clone()).unwrap(), &fp, 0).unwrap();
        prop_assert_eq!(&twice, &once);
        if !profile.leaks_anything() {
            prop_assert_eq!(once.len(), dict.len());
        }
    }
}
