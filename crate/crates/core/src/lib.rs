//! Simulator and security analysis for a quantum dialogue protocol built on
//! Bell states and entanglement swapping.
//!
//! - [`qsim`]: small exact state-vector simulator (up to five qubits).
//! - [`bellalg`]: Bell-class labels, Pauli action, the swap table and decoding.
//! - [`protocol`]: the three-step Alice/Bob session with both security checks.
//! - [`adversary`]: attackable quantum channel and detection experiments.
//! - [`analysis`]: Eve's information versus detection, leakage audit, efficiency.
//! - [`verify`]: swap-table checks against explicit amplitudes.
//! - [`cli`]: the `qdialogue` command.

pub mod adversary;
pub mod analysis;
pub mod bellalg;
pub mod cli;
pub mod protocol;
pub mod qsim;
pub mod rng;
pub mod verify;

pub use adversary::{AttackModel, AttackTarget};
pub use bellalg::{BellClass, Collection, PauliCode, SwapTable};
pub use protocol::{run_session, SessionConfig, SessionTranscript};
