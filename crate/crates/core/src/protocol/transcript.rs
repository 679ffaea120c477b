//! Serializable record of a session.

use serde::{Deserialize, Serialize};

use super::{CheckReport, EncodingConvention, GroupRecord, Party, SecretMessage, Verdict};
use crate::adversary::{AttackModel, AttackTarget, EveLog, Transmission};
use crate::bellalg::{BellClass, Collection};
use crate::qsim::Basis;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisOutcome {
    pub position: usize,
    pub basis: Basis,
    pub outcome: u8,
}

/// Payload of a public classical message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MessageBody {
    ReceiptConfirmed { transmission: Transmission },
    SamplePositions { positions: Vec<usize> },
    CheckOneResults { results: Vec<BasisOutcome> },
    DecoyInfo { positions: Vec<usize>, bases: Vec<Basis> },
    CheckTwoResults { outcomes: Vec<u8> },
    CheckVerdict { check_id: u8, verdict: Verdict },
    Announcement { group: usize, collection: Collection },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalMessage {
    pub from: Party,
    #[serde(flatten)]
    pub body: MessageBody,
}

impl ClassicalMessage {
    pub fn new(from: Party, body: MessageBody) -> Self {
        Self { from, body }
    }

    pub fn is_announcement(&self) -> bool {
        matches!(self.body, MessageBody::Announcement { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub groups: usize,
    pub seed: u64,
    pub attack: AttackModel,
    pub attack_target: AttackTarget,
    pub check_pairs: usize,
    pub decoys: usize,
    pub threshold: f64,
    pub convention: EncodingConvention,
    pub forced_initial: Option<Vec<BellClass>>,
    pub alice_secret: SecretMessage,
    pub bob_secret: SecretMessage,
}

/// Per-group resource accounting used for the Cabello efficiency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupTally {
    pub secret_bits: usize,
    pub message_qubits: usize,
    pub announcement_bits: usize,
}

impl GroupTally {
    /// Two bits each way over two Bell pairs with a two-bit announcement.
    pub const COMPLETED: GroupTally = GroupTally {
        secret_bits: 4,
        message_qubits: 4,
        announcement_bits: 2,
    };
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct Tallies {
    pub per_group: Vec<GroupTally>,
    pub secret_bits: usize,
    pub message_qubits: usize,
    pub announcement_bits: usize,
    /// Check-pair qubits (both halves), excluded from the efficiency.
    pub sample_qubits: usize,
    pub decoy_qubits: usize,
    /// Qubits Bob prepares when re-creating the reference pair.
    pub reprepared_qubits: usize,
    pub qubits_transmitted: usize,
    pub classical_messages: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Decoded {
    /// Bob's secret as read out by Alice.
    pub by_alice: Option<SecretMessage>,
    /// Alice's secret as read out by Bob.
    pub by_bob: Option<SecretMessage>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SessionOutcome {
    Completed,
    Aborted { check_id: u8 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionTranscript {
    pub config: ConfigEcho,
    pub outcome: SessionOutcome,
    pub groups: Vec<GroupRecord>,
    pub checks: Vec<CheckReport>,
    pub classical_log: Vec<ClassicalMessage>,
    pub tallies: Tallies,
    pub decoded: Decoded,
    pub eve_log: EveLog,
}

impl SessionTranscript {
    pub fn is_aborted(&self) -> bool {
        matches!(self.outcome, SessionOutcome::Aborted { .. })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("transcript serializes")
    }

    /// Both parties recovered the partner's secret exactly.
    pub fn decoded_correctly(&self) -> bool {
        self.decoded.by_alice.as_ref() == Some(&self.config.bob_secret)
            && self.decoded.by_bob.as_ref() == Some(&self.config.alice_secret)
    }
}
