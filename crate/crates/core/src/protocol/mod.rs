//! The three-step dialogue protocol: preparation with the first security
//! check, Alice's encoding with the second check, and the swapping dialogue.

mod dialogue;
mod sequence;
mod session;
mod transcript;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversary::AttackError;
use crate::bellalg::{BellClass, Collection, PauliCode};
use crate::qsim::{Basis, QsimError, StateVector};

pub use dialogue::{alice_decode, bob_dialogue_group, DialogueOutcome};
pub use sequence::{
    insert_at_random, insert_check_pairs, insert_decoys, prepare_blocks, remove_positions, Blocks, CheckPairInsertion,
    DecoyInsertion,
};
pub use session::{run_session, Phase, Session, SessionConfig};
pub use transcript::{
    BasisOutcome, ClassicalMessage, ConfigEcho, Decoded, GroupTally, MessageBody, SessionOutcome, SessionTranscript,
    Tallies,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error("group count must be at least 1")]
    NoGroups,
    #[error("abort threshold {0} outside [0, 1]")]
    Threshold(f64),
    #[error("{party} secret has {got} bits, expected {expected}")]
    SecretLength { party: Party, got: usize, expected: usize },
    #[error("secret must be an even-length string of 0/1, got {0:?}")]
    SecretParse(String),
    #[error("{given} forced initial classes for {groups} groups")]
    InitialCount { given: usize, groups: usize },
    #[error("{op} is not allowed in phase {phase:?}")]
    OutOfOrder { op: &'static str, phase: Phase },
    #[error("group {0} has already been consumed")]
    GroupConsumed(usize),
    #[error("no group {0}")]
    NoSuchGroup(usize),
    #[error("unknown encoding convention {0:?} (expected odd-first | even-first)")]
    Convention(String),
    #[error(transparent)]
    Attack(#[from] AttackError),
    #[error(transparent)]
    Qsim(#[from] QsimError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Party {
    Alice,
    Bob,
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Party::Alice => "alice",
            Party::Bob => "bob",
        })
    }
}

/// Which particle of a group each party encodes. Agreed out of band and fixed
/// for the whole session.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EncodingConvention {
    /// Alice encodes A(2n-1), Bob encodes B(2n).
    #[default]
    OddFirst,
    /// Alice encodes A(2n), Bob encodes B(2n-1).
    EvenFirst,
}

impl EncodingConvention {
    pub const ALL: [EncodingConvention; 2] = [EncodingConvention::OddFirst, EncodingConvention::EvenFirst];

    /// Offset within the group (0 = first pair, 1 = second) of Alice's encoded pair.
    pub fn alice_offset(self) -> usize {
        match self {
            EncodingConvention::OddFirst => 0,
            EncodingConvention::EvenFirst => 1,
        }
    }

    pub fn bob_offset(self) -> usize {
        1 - self.alice_offset()
    }
}

impl FromStr for EncodingConvention {
    type Err = ProtocolError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "odd-first" | "odd" => Ok(EncodingConvention::OddFirst),
            "even-first" | "even" => Ok(EncodingConvention::EvenFirst),
            other => Err(ProtocolError::Convention(other.to_string())),
        }
    }
}

/// A secret of 2N bits read as N two-bit Pauli codes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct SecretMessage(Vec<bool>);

impl SecretMessage {
    pub fn new(bits: Vec<bool>) -> Result<Self, ProtocolError> {
        if !bits.len().is_multiple_of(2) {
            return Err(ProtocolError::SecretParse(bits_string(&bits)));
        }
        Ok(Self(bits))
    }

    pub fn from_ops(ops: &[PauliCode]) -> Self {
        Self(
            ops.iter()
                .flat_map(|op| {
                    let (a, b) = op.secret_bits();
                    [a, b]
                })
                .collect(),
        )
    }

    pub fn random<R: Rng + ?Sized>(groups: usize, rng: &mut R) -> Self {
        Self((0..2 * groups).map(|_| rng.random_bool(0.5)).collect())
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn ops(&self) -> Vec<PauliCode> {
        self.0
            .chunks(2)
            .map(|c| PauliCode::from_secret_bits(c[0], c[1]))
            .collect()
    }
}

fn bits_string(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

impl fmt::Display for SecretMessage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&bits_string(&self.0))
    }
}

impl FromStr for SecretMessage {
    type Err = ProtocolError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(ProtocolError::SecretParse(s.to_string())),
            })
            .collect::<Result<Vec<_>, _>>()?;
        if !bits.len().is_multiple_of(2) {
            return Err(ProtocolError::SecretParse(s.to_string()));
        }
        Ok(Self(bits))
    }
}

impl From<SecretMessage> for String {
    fn from(m: SecretMessage) -> String {
        m.to_string()
    }
}

impl TryFrom<String> for SecretMessage {
    type Error = ProtocolError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    A,
    B,
}

impl Side {
    /// Qubit index of this half inside its pair register.
    pub fn index(self) -> usize {
        match self {
            Side::A => 0,
            Side::B => 1,
        }
    }
}

/// One entry of a transmitted particle sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Particle {
    /// Half of message pair `pair` (0-based, groups are pairs 2n and 2n+1).
    Message { pair: usize, side: Side },
    /// Half of first-check pair `pair`.
    Sample { pair: usize, side: Side },
    /// Second-check single qubit.
    Decoy { id: usize },
}

/// Quantum registers backing the particle sequences. Each Bell pair is one
/// two-qubit register (A at index 0, B at index 1); each decoy is a one-qubit
/// register. Measured registers become `None`.
#[derive(Debug, Clone, Default)]
pub struct ParticleStore {
    pub message_pairs: Vec<Option<StateVector>>,
    pub sample_pairs: Vec<Option<StateVector>>,
    pub decoys: Vec<Option<StateVector>>,
}

impl ParticleStore {
    pub fn locate_mut(&mut self, particle: Particle) -> Option<(&mut StateVector, usize)> {
        match particle {
            Particle::Message { pair, side } => self.message_pairs.get_mut(pair)?.as_mut().map(|s| (s, side.index())),
            Particle::Sample { pair, side } => self.sample_pairs.get_mut(pair)?.as_mut().map(|s| (s, side.index())),
            Particle::Decoy { id } => self.decoys.get_mut(id)?.as_mut().map(|s| (s, 0)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Continue,
    Abort,
}

/// Outcome of one security check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check_id: u8,
    pub samples_tested: usize,
    pub mismatches: usize,
    /// `mismatches / samples_tested`, zero when nothing was tested.
    pub error_rate: f64,
    pub threshold: f64,
    pub verdict: Verdict,
}

impl CheckReport {
    pub fn new(check_id: u8, samples_tested: usize, mismatches: usize, threshold: f64) -> Self {
        let error_rate = if samples_tested == 0 {
            0.0
        } else {
            mismatches as f64 / samples_tested as f64
        };
        let verdict = if error_rate > threshold {
            Verdict::Abort
        } else {
            Verdict::Continue
        };
        Self {
            check_id,
            samples_tested,
            mismatches,
            error_rate,
            threshold,
            verdict,
        }
    }
}

/// Everything recorded about one group of two message pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRecord {
    /// 1-based group number n.
    pub index: usize,
    /// Class both pairs were prepared in.
    pub initial_class: BellClass,
    /// 1-based particle number Alice encodes (2n-1 or 2n).
    pub alice_encodes: usize,
    /// 1-based particle number Bob encodes.
    pub bob_encodes: usize,
    pub alice_op: Option<PauliCode>,
    pub bob_op: Option<PauliCode>,
    /// Class Bob obtained from the unencoded pair.
    pub bob_initial: Option<BellClass>,
    pub m_a: Option<BellClass>,
    pub m_b: Option<BellClass>,
    pub announced: Option<Collection>,
    pub alice_decoded: Option<PauliCode>,
    pub bob_decoded: Option<PauliCode>,
}

impl GroupRecord {
    pub fn new(index: usize, initial_class: BellClass, convention: EncodingConvention) -> Self {
        let first = 2 * index - 1;
        Self {
            index,
            initial_class,
            alice_encodes: first + convention.alice_offset(),
            bob_encodes: first + convention.bob_offset(),
            alice_op: None,
            bob_op: None,
            bob_initial: None,
            m_a: None,
            m_b: None,
            announced: None,
            alice_decoded: None,
            bob_decoded: None,
        }
    }

    pub fn is_consumed(&self) -> bool {
        self.announced.is_some()
    }
}

/// Basis and outcome of one check-one measurement as published by Bob.
pub(crate) fn basis_outcome(position: usize, basis: Basis, outcome: bool) -> BasisOutcome {
    BasisOutcome {
        position,
        basis,
        outcome: outcome as u8,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn secret_parsing() {
        let s: SecretMessage = "0111".parse().unwrap();
        assert_eq!(s.ops(), vec![PauliCode::X, PauliCode::Z]);
        assert_eq!(s.to_string(), "0111");
        assert_eq!(SecretMessage::from_ops(&s.ops()), s);
        assert!("011".parse::<SecretMessage>().is_err());
        assert!("01a1".parse::<SecretMessage>().is_err());
        assert!(SecretMessage::new(vec![true]).is_err());
    }

    #[test]
    fn check_report_verdicts() {
        let r = CheckReport::new(1, 10, 0, 0.0);
        assert_eq!((r.error_rate, r.verdict), (0.0, Verdict::Continue));
        let r = CheckReport::new(1, 10, 1, 0.0);
        assert_eq!((r.error_rate, r.verdict), (0.1, Verdict::Abort));
        let r = CheckReport::new(2, 10, 1, 0.1);
        assert_eq!(r.verdict, Verdict::Continue);
        let r = CheckReport::new(2, 0, 0, 0.0);
        assert_eq!((r.error_rate, r.verdict), (0.0, Verdict::Continue));
    }

    #[test]
    fn group_positions_follow_convention() {
        let g = GroupRecord::new(3, BellClass::PhiPlus, EncodingConvention::OddFirst);
        assert_eq!((g.alice_encodes, g.bob_encodes), (5, 6));
        let g = GroupRecord::new(3, BellClass::PhiPlus, EncodingConvention::EvenFirst);
        assert_eq!((g.alice_encodes, g.bob_encodes), (6, 5));
    }
}
