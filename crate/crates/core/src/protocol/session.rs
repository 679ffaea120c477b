//! Alice/Bob session state machine.

use serde::{Deserialize, Serialize};

use super::dialogue::{alice_decode, bob_dialogue_group};
use super::sequence::{insert_check_pairs, insert_decoys, prepare_blocks, remove_positions};
use super::transcript::{
    ClassicalMessage, ConfigEcho, Decoded, GroupTally, MessageBody, SessionOutcome, SessionTranscript, Tallies,
};
use super::{
    basis_outcome, CheckReport, EncodingConvention, GroupRecord, Particle, ParticleStore, Party, ProtocolError,
    SecretMessage, Verdict,
};
use crate::adversary::{AttackModel, AttackTarget, Channel, Transmission};
use crate::bellalg::{BellClass, PauliCode};
use crate::qsim::{apply_single, measure_single, Basis, BasisState};
use crate::rng::SessionRng;
use rand::Rng;

/// Session parameters. Check-pair and decoy counts default to 2N.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionConfig {
    pub groups: usize,
    pub seed: u64,
    pub attack: AttackModel,
    pub attack_target: AttackTarget,
    pub check_pairs: Option<usize>,
    pub decoys: Option<usize>,
    pub threshold: f64,
    pub convention: EncodingConvention,
    /// Pin each group's initial class instead of drawing it.
    pub forced_initial: Option<Vec<BellClass>>,
    /// Random (secrets stream) when absent.
    pub alice_secret: Option<SecretMessage>,
    pub bob_secret: Option<SecretMessage>,
}

impl SessionConfig {
    pub fn new(groups: usize, seed: u64) -> Self {
        Self {
            groups,
            seed,
            attack: AttackModel::None,
            attack_target: AttackTarget::Both,
            check_pairs: None,
            decoys: None,
            threshold: 0.0,
            convention: EncodingConvention::OddFirst,
            forced_initial: None,
            alice_secret: None,
            bob_secret: None,
        }
    }

    pub fn check_pair_count(&self) -> usize {
        self.check_pairs.unwrap_or(2 * self.groups)
    }

    pub fn decoy_count(&self) -> usize {
        self.decoys.unwrap_or(2 * self.groups)
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        if self.groups == 0 {
            return Err(ProtocolError::NoGroups);
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(ProtocolError::Threshold(self.threshold));
        }
        for (party, secret) in [(Party::Alice, &self.alice_secret), (Party::Bob, &self.bob_secret)] {
            if let Some(s) = secret {
                if s.len() != 2 * self.groups {
                    return Err(ProtocolError::SecretLength {
                        party,
                        got: s.len(),
                        expected: 2 * self.groups,
                    });
                }
            }
        }
        if let Some(f) = &self.forced_initial {
            if f.len() != self.groups {
                return Err(ProtocolError::InitialCount {
                    given: f.len(),
                    groups: self.groups,
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Start,
    Prepared,
    SamplesInserted,
    SequenceBSent,
    CheckOnePassed,
    Encoded,
    DecoysInserted,
    SequenceASent,
    CheckTwoPassed,
    Completed,
    Aborted,
}

/// One protocol run. Each step checks that it follows the previous one.
#[derive(Debug)]
pub struct Session {
    config: SessionConfig,
    alice_secret: SecretMessage,
    bob_secret: SecretMessage,
    phase: Phase,
    rng: SessionRng,
    store: ParticleStore,
    channel: Channel,
    groups: Vec<GroupRecord>,
    s_a: Vec<Particle>,
    s_b: Vec<Particle>,
    sample_positions_a: Vec<usize>,
    sample_positions_b: Vec<usize>,
    sample_classes: Vec<BellClass>,
    decoy_positions: Vec<usize>,
    decoy_states: Vec<BasisState>,
    checks: Vec<CheckReport>,
    classical_log: Vec<ClassicalMessage>,
    qubits_transmitted: usize,
}

impl Session {
    pub fn new(config: SessionConfig) -> Result<Self, ProtocolError> {
        config.validate()?;
        let mut rng = SessionRng::new(config.seed);
        // both secrets are drawn even if one is given, so supplying one
        // does not change the other
        let drawn_alice = SecretMessage::random(config.groups, &mut rng.secrets);
        let drawn_bob = SecretMessage::random(config.groups, &mut rng.secrets);
        let alice_secret = config.alice_secret.clone().unwrap_or(drawn_alice);
        let bob_secret = config.bob_secret.clone().unwrap_or(drawn_bob);
        let channel = Channel::new(config.attack, config.attack_target);
        Ok(Self {
            config,
            alice_secret,
            bob_secret,
            phase: Phase::Start,
            rng,
            store: ParticleStore::default(),
            channel,
            groups: Vec::new(),
            s_a: Vec::new(),
            s_b: Vec::new(),
            sample_positions_a: Vec::new(),
            sample_positions_b: Vec::new(),
            sample_classes: Vec::new(),
            decoy_positions: Vec::new(),
            decoy_states: Vec::new(),
            checks: Vec::new(),
            classical_log: Vec::new(),
            qubits_transmitted: 0,
        })
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn groups(&self) -> &[GroupRecord] {
        &self.groups
    }

    pub fn sequence_a(&self) -> &[Particle] {
        &self.s_a
    }

    pub fn sequence_b(&self) -> &[Particle] {
        &self.s_b
    }

    pub fn store(&self) -> &ParticleStore {
        &self.store
    }

    pub fn checks(&self) -> &[CheckReport] {
        &self.checks
    }

    fn expect(&self, op: &'static str, phase: Phase) -> Result<(), ProtocolError> {
        if self.phase != phase {
            return Err(ProtocolError::OutOfOrder { op, phase: self.phase });
        }
        Ok(())
    }

    fn publish(&mut self, from: Party, body: MessageBody) {
        let message = ClassicalMessage::new(from, body);
        self.channel.wiretap(&message);
        self.classical_log.push(message);
    }

    /// Step 1: prepare 2N pairs in groups and split them into S_A and S_B.
    pub fn prepare(&mut self) -> Result<(), ProtocolError> {
        self.expect("prepare", Phase::Start)?;
        let blocks = prepare_blocks(
            self.config.groups,
            self.config.convention,
            self.config.forced_initial.as_deref(),
            &mut self.rng.preparation,
        )?;
        self.store.message_pairs = blocks.pairs.into_iter().map(Some).collect();
        self.groups = blocks.groups;
        self.s_a = blocks.s_a;
        self.s_b = blocks.s_b;
        self.phase = Phase::Prepared;
        Ok(())
    }

    pub fn insert_check_pairs(&mut self) -> Result<(), ProtocolError> {
        self.expect("insert_check_pairs", Phase::Prepared)?;
        let ins = insert_check_pairs(
            &self.s_a,
            &self.s_b,
            self.config.check_pair_count(),
            &mut self.rng.insertion,
        );
        self.store.sample_pairs = ins.pairs.into_iter().map(Some).collect();
        self.s_a = ins.s_a;
        self.s_b = ins.s_b;
        self.sample_positions_a = ins.positions_a;
        self.sample_positions_b = ins.positions_b;
        self.sample_classes = ins.classes;
        self.phase = Phase::SamplesInserted;
        Ok(())
    }

    /// Sends S'_B to Bob over the attacked channel.
    pub fn transmit_sequence_b(&mut self) -> Result<(), ProtocolError> {
        self.expect("transmit_sequence_b", Phase::SamplesInserted)?;
        self.channel.transmit(
            &self.s_b,
            Transmission::SequenceB,
            &mut self.store,
            &mut self.rng.attack,
        )?;
        self.qubits_transmitted += self.s_b.len();
        self.publish(
            Party::Bob,
            MessageBody::ReceiptConfirmed {
                transmission: Transmission::SequenceB,
            },
        );
        self.phase = Phase::SequenceBSent;
        Ok(())
    }

    fn record_check(&mut self, report: CheckReport) -> Verdict {
        let verdict = report.verdict;
        self.publish(
            Party::Alice,
            MessageBody::CheckVerdict {
                check_id: report.check_id,
                verdict,
            },
        );
        self.checks.push(report);
        verdict
    }

    /// First security check on the check pairs in S'_B.
    pub fn run_check_one(&mut self) -> Result<CheckReport, ProtocolError> {
        self.expect("run_check_one", Phase::SequenceBSent)?;
        self.publish(
            Party::Alice,
            MessageBody::SamplePositions {
                positions: self.sample_positions_b.clone(),
            },
        );
        let rng = &mut self.rng.measurement;
        let mut results = Vec::with_capacity(self.sample_classes.len());
        let mut alice_bits = Vec::with_capacity(self.sample_classes.len());
        for (k, &position) in self.sample_positions_b.iter().enumerate() {
            let pair = self.store.sample_pairs[k].take().expect("check pair measured once");
            let basis = if rng.random_bool(0.5) { Basis::X } else { Basis::Z };
            let (bob, rest) = measure_single(&pair, 1, basis, rng)?;
            let (alice, _) = measure_single(&rest, 0, basis, rng)?;
            results.push(basis_outcome(position, basis, bob));
            alice_bits.push(alice);
        }
        let mismatches = results
            .iter()
            .zip(&alice_bits)
            .zip(&self.sample_classes)
            .filter(|((r, &a), class)| (a ^ (r.outcome == 1)) != class.opposite_outcomes(r.basis))
            .count();
        let tested = results.len();
        self.publish(Party::Bob, MessageBody::CheckOneResults { results });
        let report = CheckReport::new(1, tested, mismatches, self.config.threshold);
        self.s_a = remove_positions(&self.s_a, &self.sample_positions_a);
        self.s_b = remove_positions(&self.s_b, &self.sample_positions_b);
        self.phase = match self.record_check(report.clone()) {
            Verdict::Continue => Phase::CheckOnePassed,
            Verdict::Abort => Phase::Aborted,
        };
        Ok(report)
    }

    /// Step 2: Alice applies her operations at the agreed positions.
    pub fn alice_encode(&mut self) -> Result<(), ProtocolError> {
        self.expect("alice_encode", Phase::CheckOnePassed)?;
        let ops = self.alice_secret.ops();
        for (record, op) in self.groups.iter_mut().zip(ops) {
            let pair = 2 * (record.index - 1) + self.config.convention.alice_offset();
            let register = self.store.message_pairs[pair].as_mut().expect("message pair present");
            *register = apply_single(op, 0, register)?;
            record.alice_op = Some(op);
        }
        self.phase = Phase::Encoded;
        Ok(())
    }

    pub fn insert_decoys(&mut self) -> Result<(), ProtocolError> {
        self.expect("insert_decoys", Phase::Encoded)?;
        let ins = insert_decoys(&self.s_a, self.config.decoy_count(), &mut self.rng.insertion);
        self.store.decoys = ins.states.iter().map(|s| Some(s.state())).collect();
        self.s_a = ins.s_a;
        self.decoy_positions = ins.positions;
        self.decoy_states = ins.states;
        self.phase = Phase::DecoysInserted;
        Ok(())
    }

    /// Sends S''_A to Bob over the attacked channel.
    pub fn transmit_sequence_a(&mut self) -> Result<(), ProtocolError> {
        self.expect("transmit_sequence_a", Phase::DecoysInserted)?;
        self.channel.transmit(
            &self.s_a,
            Transmission::SequenceA,
            &mut self.store,
            &mut self.rng.attack,
        )?;
        self.qubits_transmitted += self.s_a.len();
        self.publish(
            Party::Bob,
            MessageBody::ReceiptConfirmed {
                transmission: Transmission::SequenceA,
            },
        );
        self.phase = Phase::SequenceASent;
        Ok(())
    }

    /// Second security check on the decoys in S''_A.
    pub fn run_check_two(&mut self) -> Result<CheckReport, ProtocolError> {
        self.expect("run_check_two", Phase::SequenceASent)?;
        let bases = self.decoy_states.iter().map(|s| s.basis()).collect();
        self.publish(
            Party::Alice,
            MessageBody::DecoyInfo {
                positions: self.decoy_positions.clone(),
                bases,
            },
        );
        let mut outcomes = Vec::with_capacity(self.decoy_states.len());
        let mut mismatches = 0;
        for (id, prepared) in self.decoy_states.iter().enumerate() {
            let qubit = self.store.decoys[id].take().expect("decoy measured once");
            let (bit, _) = measure_single(&qubit, 0, prepared.basis(), &mut self.rng.measurement)?;
            if bit != prepared.bit() {
                mismatches += 1;
            }
            outcomes.push(bit as u8);
        }
        let tested = outcomes.len();
        self.publish(Party::Bob, MessageBody::CheckTwoResults { outcomes });
        let report = CheckReport::new(2, tested, mismatches, self.config.threshold);
        self.s_a = remove_positions(&self.s_a, &self.decoy_positions);
        self.phase = match self.record_check(report.clone()) {
            Verdict::Continue => Phase::CheckTwoPassed,
            Verdict::Abort => Phase::Aborted,
        };
        Ok(report)
    }

    /// Step 3 for group `n` (1-based): Bob's measurements, the announcement,
    /// and both readouts.
    pub fn dialogue_group(&mut self, n: usize) -> Result<(), ProtocolError> {
        self.expect("dialogue_group", Phase::CheckTwoPassed)?;
        if n == 0 || n > self.groups.len() {
            return Err(ProtocolError::NoSuchGroup(n));
        }
        if self.groups[n - 1].is_consumed() {
            return Err(ProtocolError::GroupConsumed(n));
        }
        // Bob pairs up S_A and S_B in order; group n is positions 2n-2, 2n-1.
        let take = |store: &mut ParticleStore, pos: usize, s_a: &[Particle]| match s_a[pos] {
            Particle::Message { pair, .. } => store.message_pairs[pair].take(),
            _ => None,
        };
        let first = take(&mut self.store, 2 * n - 2, &self.s_a).ok_or(ProtocolError::GroupConsumed(n))?;
        let second = take(&mut self.store, 2 * n - 1, &self.s_a).ok_or(ProtocolError::GroupConsumed(n))?;
        let bob_op = self.bob_secret.ops()[n - 1];
        let out = bob_dialogue_group(
            &first,
            &second,
            self.config.convention,
            bob_op,
            &mut self.rng.measurement,
        )?;
        let record = &mut self.groups[n - 1];
        record.bob_op = Some(bob_op);
        record.bob_initial = Some(out.bob_initial);
        record.m_a = Some(out.m_a);
        record.m_b = Some(out.m_b);
        record.announced = Some(out.announced);
        record.bob_decoded = Some(out.bob_decoded);
        record.alice_decoded = alice_decode(out.announced, record).map(|(a, b)| PauliCode::from_secret_bits(a, b));
        self.publish(
            Party::Bob,
            MessageBody::Announcement {
                group: n,
                collection: out.announced,
            },
        );
        if self.groups.iter().all(GroupRecord::is_consumed) {
            self.phase = Phase::Completed;
        }
        Ok(())
    }

    /// Runs whatever steps remain, stopping at an abort.
    pub fn run_to_end(&mut self) -> Result<(), ProtocolError> {
        loop {
            match self.phase {
                Phase::Start => self.prepare()?,
                Phase::Prepared => self.insert_check_pairs()?,
                Phase::SamplesInserted => self.transmit_sequence_b()?,
                Phase::SequenceBSent => {
                    self.run_check_one()?;
                }
                Phase::CheckOnePassed => self.alice_encode()?,
                Phase::Encoded => self.insert_decoys()?,
                Phase::DecoysInserted => self.transmit_sequence_a()?,
                Phase::SequenceASent => {
                    self.run_check_two()?;
                }
                Phase::CheckTwoPassed => {
                    let next = self
                        .groups
                        .iter()
                        .position(|g| !g.is_consumed())
                        .expect("a group remains");
                    self.dialogue_group(next + 1)?;
                }
                Phase::Completed | Phase::Aborted => return Ok(()),
            }
        }
    }

    pub fn transcript(&self) -> SessionTranscript {
        let completed = self.phase == Phase::Completed;
        let outcome = if self.phase == Phase::Aborted {
            SessionOutcome::Aborted {
                check_id: self.checks.last().map_or(0, |c| c.check_id),
            }
        } else {
            SessionOutcome::Completed
        };
        let decoded = if completed {
            let collect = |f: fn(&GroupRecord) -> Option<PauliCode>| {
                self.groups
                    .iter()
                    .map(f)
                    .collect::<Option<Vec<_>>>()
                    .map(|ops| SecretMessage::from_ops(&ops))
            };
            Decoded {
                by_alice: collect(|g| g.alice_decoded),
                by_bob: collect(|g| g.bob_decoded),
            }
        } else {
            Decoded::default()
        };
        let per_group: Vec<GroupTally> = self
            .groups
            .iter()
            .filter(|g| g.is_consumed())
            .map(|_| GroupTally::COMPLETED)
            .collect();
        let tallies = Tallies {
            secret_bits: per_group.iter().map(|t| t.secret_bits).sum(),
            message_qubits: per_group.iter().map(|t| t.message_qubits).sum(),
            announcement_bits: per_group.iter().map(|t| t.announcement_bits).sum(),
            per_group,
            sample_qubits: 2 * self.sample_classes.len(),
            decoy_qubits: self.decoy_states.len(),
            reprepared_qubits: 2 * self.groups.iter().filter(|g| g.is_consumed()).count(),
            qubits_transmitted: self.qubits_transmitted,
            classical_messages: self.classical_log.len(),
        };
        SessionTranscript {
            config: ConfigEcho {
                groups: self.config.groups,
                seed: self.config.seed,
                attack: self.config.attack,
                attack_target: self.config.attack_target,
                check_pairs: self.config.check_pair_count(),
                decoys: self.config.decoy_count(),
                threshold: self.config.threshold,
                convention: self.config.convention,
                forced_initial: self.config.forced_initial.clone(),
                alice_secret: self.alice_secret.clone(),
                bob_secret: self.bob_secret.clone(),
            },
            outcome,
            groups: self.groups.clone(),
            checks: self.checks.clone(),
            classical_log: self.classical_log.clone(),
            tallies,
            decoded,
            eve_log: self.channel.eve_log().clone(),
        }
    }
}

/// Executes all three steps and returns the transcript. An abort is a normal
/// outcome recorded in the transcript, not an error.
pub fn run_session(config: SessionConfig) -> Result<SessionTranscript, ProtocolError> {
    let mut session = Session::new(config)?;
    session.run_to_end()?;
    Ok(session.transcript())
}
