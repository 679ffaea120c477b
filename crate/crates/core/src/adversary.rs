//! Quantum channel with pluggable eavesdropping models.
//!
//! Every attack acts on one transmitted qubit inside its register and leaves
//! the register layout unchanged, so the receiving party addresses qubits the
//! same way with or without Eve. Eve's private systems are measured as soon as
//! she is done with them; nothing she does afterwards touches the honest
//! parties' qubits, so their statistics are the same as if she waited.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bellalg::BellClass;
use crate::protocol::{ClassicalMessage, Particle, ParticleStore};
use crate::qsim::{
    self, measure_single, prepare_bell, reduced_density, Basis, BasisState, QsimError, StateVector, C64,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AttackError {
    #[error("attack strength {0} outside [0, 1]")]
    StrengthOutOfRange(f64),
    #[error("unrecognized attack spec {0:?} (expected none | measure-resend | intercept | entangle:<beta2>)")]
    Parse(String),
    #[error("particle {0:?} is no longer in flight")]
    MissingParticle(Particle),
    #[error(transparent)]
    Qsim(#[from] QsimError),
}

/// Eavesdropping strategy applied to every attacked qubit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum AttackModel {
    None,
    /// Measure in a random Z/X basis, forward the observed eigenstate.
    MeasureResend,
    /// Keep the qubit, forward a random one of `|0>, |1>, |+>, |->`.
    InterceptSubstitute,
    /// Couple the qubit to a fresh ancilla with flip probability `strength` = |β|².
    EntangleMeasure {
        strength: f64,
    },
}

impl AttackModel {
    pub fn entangle(strength: f64) -> Result<Self, AttackError> {
        if !(0.0..=1.0).contains(&strength) {
            return Err(AttackError::StrengthOutOfRange(strength));
        }
        Ok(AttackModel::EntangleMeasure { strength })
    }

    pub fn is_none(&self) -> bool {
        matches!(self, AttackModel::None)
    }
}

impl fmt::Display for AttackModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttackModel::None => f.write_str("none"),
            AttackModel::MeasureResend => f.write_str("measure-resend"),
            AttackModel::InterceptSubstitute => f.write_str("intercept"),
            AttackModel::EntangleMeasure { strength } => write!(f, "entangle:{strength}"),
        }
    }
}

impl FromStr for AttackModel {
    type Err = AttackError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "none" => Ok(AttackModel::None),
            "measure-resend" => Ok(AttackModel::MeasureResend),
            "intercept" => Ok(AttackModel::InterceptSubstitute),
            other => {
                let beta2 = other
                    .strip_prefix("entangle:")
                    .and_then(|v| v.parse::<f64>().ok())
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| AttackError::Parse(other.to_string()))?;
                AttackModel::entangle(beta2)
            }
        }
    }
}

impl From<AttackModel> for String {
    fn from(a: AttackModel) -> String {
        a.to_string()
    }
}

impl TryFrom<String> for AttackModel {
    type Error = AttackError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// The two quantum transmissions from Alice to Bob.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transmission {
    /// S'_B: B halves plus check-pair halves.
    SequenceB,
    /// S''_A: A halves (Alice-encoded) plus decoys.
    SequenceA,
}

/// Which transmissions Eve attacks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackTarget {
    #[default]
    Both,
    SequenceB,
    SequenceA,
}

impl AttackTarget {
    pub fn covers(self, t: Transmission) -> bool {
        match self {
            AttackTarget::Both => true,
            AttackTarget::SequenceB => t == Transmission::SequenceB,
            AttackTarget::SequenceA => t == Transmission::SequenceA,
        }
    }
}

impl FromStr for AttackTarget {
    type Err = AttackError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "both" => Ok(AttackTarget::Both),
            "sb" | "sequence-b" => Ok(AttackTarget::SequenceB),
            "sa" | "sequence-a" => Ok(AttackTarget::SequenceA),
            other => Err(AttackError::Parse(other.to_string())),
        }
    }
}

/// What Eve learned from one attacked qubit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EveObservation {
    MeasureResend {
        basis: Basis,
        outcome: bool,
    },
    Substitute {
        sent: BasisState,
        /// Bloch vector of the captured qubit's reduced state.
        stored_bloch: [f64; 3],
        stored_basis: Basis,
        stored_outcome: bool,
    },
    Entangle {
        strength: f64,
        ancilla_outcome: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EveRecord {
    pub transmission: Transmission,
    pub position: usize,
    #[serde(flatten)]
    pub observation: EveObservation,
}

/// Eve's private notes: attacked qubits plus every public classical message.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EveLog {
    pub quantum: Vec<EveRecord>,
    pub classical: Vec<ClassicalMessage>,
}

/// Bloch vector `(x, y, z)` of a single-qubit density matrix.
pub fn bloch_vector(rho: &qsim::DensityMatrix) -> [f64; 3] {
    let off = rho.get(1, 0);
    [2.0 * off.re, 2.0 * off.im, (rho.get(0, 0) - rho.get(1, 1)).re]
}

fn random_basis<R: Rng + ?Sized>(rng: &mut R) -> Basis {
    if rng.random_bool(0.5) {
        Basis::X
    } else {
        Basis::Z
    }
}

fn random_basis_state<R: Rng + ?Sized>(rng: &mut R) -> BasisState {
    BasisState::ALL[rng.random_range(0..4)]
}

/// Measures qubit `index` in a random basis and puts the observed eigenstate
/// back in its place.
pub fn attack_measure_resend<R: Rng + ?Sized>(
    state: &StateVector,
    index: usize,
    rng: &mut R,
) -> Result<(StateVector, EveObservation), AttackError> {
    let basis = random_basis(rng);
    let (outcome, rest) = measure_single(state, index, basis, rng)?;
    let resent = rest.insert(index, &basis.eigenstate(outcome))?;
    Ok((resent, EveObservation::MeasureResend { basis, outcome }))
}

/// Captures qubit `index` and substitutes a random BB84 state. The captured
/// qubit is logged (reduced state, then a random-basis readout) and dropped.
pub fn attack_intercept_substitute<R: Rng + ?Sized>(
    state: &StateVector,
    index: usize,
    rng: &mut R,
) -> Result<(StateVector, EveObservation), AttackError> {
    let stored_bloch = bloch_vector(&reduced_density(state, &[index])?);
    let stored_basis = random_basis(rng);
    let (stored_outcome, rest) = measure_single(state, index, stored_basis, rng)?;
    let sent = random_basis_state(rng);
    let forwarded = rest.insert(index, &sent.state())?;
    Ok((
        forwarded,
        EveObservation::Substitute {
            sent,
            stored_bloch,
            stored_basis,
            stored_outcome,
        },
    ))
}

/// 4×4 attack unitary on (data, ancilla) with real α = √(1−|β|²), β = √|β|²:
/// `|d>|0> ↦ α|d>|0> + β|d⊕1>|1>`, i.e. an ancilla rotation followed by a
/// CNOT from ancilla to data. Ancilla states ε00 = |0>, ε01 = |1>.
pub fn entangle_unitary(strength: f64) -> Result<[[C64; 4]; 4], AttackError> {
    if !(0.0..=1.0).contains(&strength) {
        return Err(AttackError::StrengthOutOfRange(strength));
    }
    let alpha = (1.0 - strength).sqrt();
    let beta = strength.sqrt();
    let rot = [[alpha, -beta], [beta, alpha]];
    let mut m = [[Complex64::new(0.0, 0.0); 4]; 4];
    for d in 0..2 {
        for e in 0..2 {
            for (e2, row) in rot.iter().enumerate() {
                m[((d ^ e2) << 1) | e2][(d << 1) | e] = Complex64::new(row[e], 0.0);
            }
        }
    }
    Ok(m)
}

/// Appends a fresh `|0>` ancilla and applies the attack unitary to
/// `(index, ancilla)`. The ancilla is the last qubit of the result.
pub fn attack_entangle_measure(state: &StateVector, index: usize, strength: f64) -> Result<StateVector, AttackError> {
    let u = entangle_unitary(strength)?;
    let with_ancilla = state.insert(state.num_qubits(), &StateVector::zero())?;
    Ok(with_ancilla.apply_two(index, state.num_qubits(), &u)?)
}

/// Applies `attack` to qubit `index` and returns the forwarded register.
pub fn apply_attack<R: Rng + ?Sized>(
    attack: AttackModel,
    state: &StateVector,
    index: usize,
    rng: &mut R,
) -> Result<(StateVector, Option<EveObservation>), AttackError> {
    match attack {
        AttackModel::None => Ok((state.clone(), None)),
        AttackModel::MeasureResend => {
            let (s, o) = attack_measure_resend(state, index, rng)?;
            Ok((s, Some(o)))
        }
        AttackModel::InterceptSubstitute => {
            let (s, o) = attack_intercept_substitute(state, index, rng)?;
            Ok((s, Some(o)))
        }
        AttackModel::EntangleMeasure { strength } => {
            let entangled = attack_entangle_measure(state, index, strength)?;
            let ancilla = entangled.num_qubits() - 1;
            let (ancilla_outcome, rest) = measure_single(&entangled, ancilla, Basis::Z, rng)?;
            Ok((
                rest,
                Some(EveObservation::Entangle {
                    strength,
                    ancilla_outcome,
                }),
            ))
        }
    }
}

/// Quantum channel plus the public classical channel, both watched by Eve.
#[derive(Debug, Clone)]
pub struct Channel {
    attack: AttackModel,
    target: AttackTarget,
    log: EveLog,
}

impl Channel {
    pub fn new(attack: AttackModel, target: AttackTarget) -> Self {
        Self {
            attack,
            target,
            log: EveLog::default(),
        }
    }

    pub fn attack(&self) -> AttackModel {
        self.attack
    }

    pub fn eve_log(&self) -> &EveLog {
        &self.log
    }

    pub fn into_eve_log(self) -> EveLog {
        self.log
    }

    /// Sends `sequence` through the channel, attacking each qubit in order.
    pub fn transmit<R: Rng + ?Sized>(
        &mut self,
        sequence: &[Particle],
        transmission: Transmission,
        store: &mut ParticleStore,
        rng: &mut R,
    ) -> Result<(), AttackError> {
        if self.attack.is_none() || !self.target.covers(transmission) {
            return Ok(());
        }
        for (position, &particle) in sequence.iter().enumerate() {
            let (register, index) = store
                .locate_mut(particle)
                .ok_or(AttackError::MissingParticle(particle))?;
            let (forwarded, observation) = apply_attack(self.attack, register, index, rng)?;
            *register = forwarded;
            if let Some(observation) = observation {
                self.log.quantum.push(EveRecord {
                    transmission,
                    position,
                    observation,
                });
            }
        }
        Ok(())
    }

    /// Public authenticated channel: Eve reads everything, forges nothing.
    pub fn wiretap(&mut self, message: &ClassicalMessage) {
        self.log.classical.push(message.clone());
    }
}

/// Which security check a detection experiment exercises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    /// Check one: random-class Bell pair, B half attacked, random Z/X basis.
    BellPairs,
    /// Check two: decoy uniform over the four BB84 states.
    Decoys,
    /// Check two restricted to `|0>, |1>` decoys.
    ZDecoys,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionEstimate {
    pub trials: usize,
    pub detections: usize,
    pub rate: f64,
    pub std_error: f64,
}

impl DetectionEstimate {
    pub fn from_counts(trials: usize, detections: usize) -> Self {
        let rate = if trials == 0 {
            0.0
        } else {
            detections as f64 / trials as f64
        };
        let std_error = if trials == 0 {
            0.0
        } else {
            (rate * (1.0 - rate) / trials as f64).sqrt()
        };
        Self {
            trials,
            detections,
            rate,
            std_error,
        }
    }
}

/// One check sample under `attack`; returns whether it flags a mismatch.
pub fn detection_trial<R: Rng + ?Sized>(
    attack: AttackModel,
    check: CheckKind,
    rng: &mut R,
) -> Result<bool, AttackError> {
    match check {
        CheckKind::BellPairs => {
            let class = BellClass::ALL[rng.random_range(0..4)];
            let (pair, _) = apply_attack(attack, &prepare_bell(class), 1, rng)?;
            let basis = random_basis(rng);
            let (bob, rest) = measure_single(&pair, 1, basis, rng)?;
            let (alice, _) = measure_single(&rest, 0, basis, rng)?;
            Ok((alice ^ bob) != class.opposite_outcomes(basis))
        }
        CheckKind::Decoys | CheckKind::ZDecoys => {
            let decoy = if check == CheckKind::ZDecoys {
                BasisState::new(Basis::Z, rng.random_bool(0.5))
            } else {
                random_basis_state(rng)
            };
            let (received, _) = apply_attack(attack, &decoy.state(), 0, rng)?;
            let (bit, _) = measure_single(&received, 0, decoy.basis(), rng)?;
            Ok(bit != decoy.bit())
        }
    }
}

/// Monte Carlo estimate of the per-sample detection probability.
pub fn detection_stats<R: Rng + ?Sized>(
    attack: AttackModel,
    check: CheckKind,
    trials: usize,
    rng: &mut R,
) -> Result<DetectionEstimate, AttackError> {
    let mut detections = 0;
    for _ in 0..trials {
        if detection_trial(attack, check, rng)? {
            detections += 1;
        }
    }
    Ok(DetectionEstimate::from_counts(trials, detections))
}
