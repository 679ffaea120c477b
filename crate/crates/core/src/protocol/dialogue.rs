//! Step three: Bob's swapping measurements, the announcement, and decoding.

use rand::Rng;

use super::{EncodingConvention, GroupRecord};
use crate::bellalg::{classify_outcome, decode_partner, BellClass, Collection, PauliCode};
use crate::qsim::{apply_single, compose, measure_bell_pair, prepare_bell, StateVector};

/// What Bob observes and announces for one group.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DialogueOutcome {
    /// Class of the unencoded pair, learned by Bell measurement.
    pub bob_initial: BellClass,
    /// Bell outcome on the two A particles.
    pub m_a: BellClass,
    /// Bell outcome on the two B particles.
    pub m_b: BellClass,
    pub announced: Collection,
    /// Alice's operation as read out by Bob.
    pub bob_decoded: PauliCode,
}

/// Runs Bob's side of step three on one group.
///
/// `first` and `second` are the registers of pairs 2n-1 and 2n (A at qubit 0,
/// B at qubit 1), with Alice's operation already applied per `convention`.
/// Bob measures the unencoded pair, re-prepares a fresh pair of the observed
/// class, encodes on its B particle, then Bell-measures the A particles and
/// the B particles.
pub fn bob_dialogue_group<R: Rng + ?Sized>(
    first: &StateVector,
    second: &StateVector,
    convention: EncodingConvention,
    bob_op: PauliCode,
    rng: &mut R,
) -> Result<DialogueOutcome, crate::qsim::QsimError> {
    let group = compose(&[first.clone(), second.clone()])?;
    // qubits: A1 B1 A2 B2
    let (reference, encoded) = match convention {
        EncodingConvention::OddFirst => ((2, 3), 0),
        EncodingConvention::EvenFirst => ((0, 1), 1),
    };
    let (bob_initial, kept) = measure_bell_pair(&group, reference, rng)?;
    let fresh = apply_single(bob_op, 1, &prepare_bell(bob_initial))?;
    let rebuilt = if encoded == 0 {
        compose(&[kept, fresh])?
    } else {
        compose(&[fresh, kept])?
    };
    let (m_a, rest) = measure_bell_pair(&rebuilt, (0, 2), rng)?;
    let (m_b, _) = measure_bell_pair(&rest, (0, 1), rng)?;
    let announced = classify_outcome(m_a, m_b);
    Ok(DialogueOutcome {
        bob_initial,
        m_a,
        m_b,
        announced,
        bob_decoded: decode_partner(announced, bob_initial, bob_op),
    })
}

/// Alice's readout of Bob's two bits from the announcement, her own prepared
/// class and her own operation. `None` if she has not encoded this group.
pub fn alice_decode(announced: Collection, record: &GroupRecord) -> Option<(bool, bool)> {
    let own = record.alice_op?;
    Some(decode_partner(announced, record.initial_class, own).secret_bits())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bellalg::{pauli_action, swap_collection};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use BellClass::*;

    fn encoded_pairs(chi: BellClass, alice: PauliCode, conv: EncodingConvention) -> (StateVector, StateVector) {
        let plain = prepare_bell(chi);
        let enc = apply_single(alice, 0, &plain).unwrap();
        match conv {
            EncodingConvention::OddFirst => (enc, plain),
            EncodingConvention::EvenFirst => (plain, enc),
        }
    }

    #[test]
    fn worked_example() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..20 {
            let (a, b) = encoded_pairs(PsiMinus, PauliCode::X, EncodingConvention::OddFirst);
            let out = bob_dialogue_group(&a, &b, EncodingConvention::OddFirst, PauliCode::Z, &mut rng).unwrap();
            assert_eq!(out.bob_initial, PsiMinus);
            assert_eq!(out.announced, Collection::C3);
            assert!(Collection::C3.members().contains(&(out.m_a, out.m_b)));
            assert_eq!(out.bob_decoded.bits_str(), "01");
            let mut record = GroupRecord::new(1, PsiMinus, EncodingConvention::OddFirst);
            record.alice_op = Some(PauliCode::X);
            assert_eq!(alice_decode(out.announced, &record), Some((true, true)));
        }
    }

    #[test]
    fn identity_secrets_announce_c0() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for chi in BellClass::ALL {
            let (a, b) = encoded_pairs(chi, PauliCode::I, EncodingConvention::OddFirst);
            let out = bob_dialogue_group(&a, &b, EncodingConvention::OddFirst, PauliCode::I, &mut rng).unwrap();
            assert_eq!(out.announced, Collection::C0);
            assert_eq!(out.bob_decoded, PauliCode::I);
        }
    }

    #[test]
    fn exhaustive_agreement() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for conv in EncodingConvention::ALL {
            for chi in BellClass::ALL {
                for ua in PauliCode::ALL {
                    for ub in PauliCode::ALL {
                        let (a, b) = encoded_pairs(chi, ua, conv);
                        let out = bob_dialogue_group(&a, &b, conv, ub, &mut rng).unwrap();
                        assert_eq!(
                            out.announced,
                            swap_collection(pauli_action(chi, ua), pauli_action(chi, ub))
                        );
                        assert_eq!(out.bob_decoded, ua);
                        let mut record = GroupRecord::new(1, chi, conv);
                        record.alice_op = Some(ua);
                        assert_eq!(alice_decode(out.announced, &record), Some(ub.secret_bits()));
                    }
                }
            }
        }
    }

    #[test]
    fn outcome_frequencies_are_quarter() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (chi, ua, ub) = (PhiMinus, PauliCode::IY, PauliCode::X);
        let mut counts = std::collections::BTreeMap::new();
        let runs = 10_000;
        let (a, b) = encoded_pairs(chi, ua, EncodingConvention::OddFirst);
        for _ in 0..runs {
            let out = bob_dialogue_group(&a, &b, EncodingConvention::OddFirst, ub, &mut rng).unwrap();
            assert!(out.announced.members().contains(&(out.m_a, out.m_b)));
            *counts.entry((out.m_a, out.m_b)).or_insert(0usize) += 1;
        }
        assert_eq!(counts.len(), 4);
        for (_, c) in counts {
            assert!((c as f64 / runs as f64 - 0.25).abs() < 0.02);
        }
    }
}
