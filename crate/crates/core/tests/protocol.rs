//! Session-level invariants over random seeds, sizes and attacks.

use proptest::prelude::*;

use qdialogue::adversary::{AttackModel, AttackTarget};
use qdialogue::bellalg::classify_outcome;
use qdialogue::protocol::{
    run_session, EncodingConvention, MessageBody, Particle, SecretMessage, Session, SessionConfig, Verdict,
};

fn convention() -> impl Strategy<Value = EncodingConvention> {
    prop::sample::select(EncodingConvention::ALL.to_vec())
}

fn attack() -> impl Strategy<Value = AttackModel> {
    prop_oneof![
        Just(AttackModel::None),
        Just(AttackModel::MeasureResend),
        Just(AttackModel::InterceptSubstitute),
        (0.0f64..=1.0).prop_map(|s| AttackModel::entangle(s).unwrap()),
    ]
}

fn target() -> impl Strategy<Value = AttackTarget> {
    prop::sample::select(vec![
        AttackTarget::Both,
        AttackTarget::SequenceA,
        AttackTarget::SequenceB,
    ])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn attack_free_sessions_decode(groups in 1usize..=4, seed: u64, conv in convention(), pairs in 0usize..6, decoys in 0usize..6) {
        let mut c = SessionConfig::new(groups, seed);
        c.convention = conv;
        c.check_pairs = Some(pairs);
        c.decoys = Some(decoys);
        let t = run_session(c).unwrap();
        prop_assert!(!t.is_aborted());
        prop_assert!(t.decoded_correctly());
        prop_assert!(t.checks.iter().all(|r| r.mismatches == 0));
        for g in &t.groups {
            prop_assert_eq!(g.announced, Some(classify_outcome(g.m_a.unwrap(), g.m_b.unwrap())));
        }
    }

    #[test]
    fn supplied_secrets_round_trip(bits in prop::collection::vec(any::<bool>(), 8), seed: u64) {
        let mut c = SessionConfig::new(2, seed);
        c.alice_secret = Some(SecretMessage::new(bits[..4].to_vec()).unwrap());
        c.bob_secret = Some(SecretMessage::new(bits[4..].to_vec()).unwrap());
        let t = run_session(c.clone()).unwrap();
        prop_assert_eq!(t.decoded.by_bob, c.alice_secret);
        prop_assert_eq!(t.decoded.by_alice, c.bob_secret);
    }

    #[test]
    fn particles_are_conserved(groups in 1usize..=4, seed: u64, pairs in 0usize..8, decoys in 0usize..8) {
        let mut c = SessionConfig::new(groups, seed);
        c.check_pairs = Some(pairs);
        c.decoys = Some(decoys);
        let mut s = Session::new(c).unwrap();
        s.prepare().unwrap();
        s.insert_check_pairs().unwrap();
        prop_assert_eq!(s.sequence_b().len(), 2 * groups + pairs);
        let mut seen: Vec<Particle> = s.sequence_b().to_vec();
        seen.extend_from_slice(s.sequence_a());
        seen.sort_by_key(|p| format!("{p:?}"));
        let before = seen.len();
        seen.dedup();
        prop_assert_eq!(seen.len(), before);
        s.transmit_sequence_b().unwrap();
        s.run_check_one().unwrap();
        s.alice_encode().unwrap();
        s.insert_decoys().unwrap();
        prop_assert_eq!(s.sequence_a().len(), 2 * groups + decoys);
        let decoy_count = s.sequence_a().iter().filter(|p| matches!(p, Particle::Decoy { .. })).count();
        prop_assert_eq!(decoy_count, decoys);
    }

    #[test]
    fn wiretap_sees_every_message(groups in 1usize..=3, seed: u64, a in attack(), tgt in target(), threshold in 0.0f64..=1.0) {
        let mut c = SessionConfig::new(groups, seed);
        c.attack = a;
        c.attack_target = tgt;
        c.threshold = threshold;
        let t = run_session(c).unwrap();
        prop_assert_eq!(&t.eve_log.classical, &t.classical_log);
    }

    #[test]
    fn abort_stops_the_dialogue(groups in 1usize..=3, seed: u64, a in attack(), tgt in target()) {
        let mut c = SessionConfig::new(groups, seed);
        c.attack = a;
        c.attack_target = tgt;
        c.check_pairs = Some(8);
        c.decoys = Some(8);
        let t = run_session(c).unwrap();
        let abort_at = t.classical_log.iter().position(|m| {
            matches!(m.body, MessageBody::CheckVerdict { verdict: Verdict::Abort, .. })
        });
        if let Some(i) = abort_at {
            prop_assert!(t.is_aborted());
            prop_assert_eq!(i, t.classical_log.len() - 1);
            prop_assert!(t.groups.iter().all(|g| g.announced.is_none()));
            prop_assert!(t.decoded.by_alice.is_none() && t.decoded.by_bob.is_none());
            if t.checks.len() == 1 {
                prop_assert!(t.groups.iter().all(|g| g.alice_op.is_none()));
            }
        } else {
            prop_assert!(!t.is_aborted());
            prop_assert_eq!(t.classical_log.iter().filter(|m| m.is_announcement()).count(), groups);
        }
    }

    #[test]
    fn later_attacks_leave_check_one_alone(groups in 1usize..=3, seed: u64, a in attack()) {
        let mut c = SessionConfig::new(groups, seed);
        c.threshold = 1.0;
        let clean = run_session(c.clone()).unwrap();
        c.attack = a;
        c.attack_target = AttackTarget::SequenceA;
        let attacked = run_session(c).unwrap();
        prop_assert_eq!(&attacked.checks[0], &clean.checks[0]);
        prop_assert_eq!(&attacked.classical_log[..3], &clean.classical_log[..3]);
    }
}

#[test]
fn measure_resend_is_caught() {
    let mut aborted = 0;
    for seed in 0..20 {
        let mut c = SessionConfig::new(8, seed);
        c.attack = AttackModel::MeasureResend;
        c.check_pairs = Some(64);
        if run_session(c).unwrap().is_aborted() {
            aborted += 1;
        }
    }
    assert_eq!(aborted, 20);
}

#[test]
fn attacking_only_sequence_a_trips_check_two() {
    let mut c = SessionConfig::new(4, 9);
    c.attack = AttackModel::MeasureResend;
    c.attack_target = AttackTarget::SequenceA;
    c.decoys = Some(64);
    let t = run_session(c).unwrap();
    assert_eq!(t.checks.len(), 2);
    assert_eq!(t.checks[0].verdict, Verdict::Continue);
    assert_eq!(t.checks[1].verdict, Verdict::Abort);
}

#[test]
fn transcript_round_trips_through_json() {
    let mut c = SessionConfig::new(3, 4);
    c.attack = AttackModel::entangle(0.1).unwrap();
    c.threshold = 1.0;
    let t = run_session(c).unwrap();
    let back: qdialogue::SessionTranscript = serde_json::from_str(&t.to_json()).unwrap();
    assert_eq!(back, t);
}
