//! Eavesdropper-information analysis, the leakage audit and efficiency.
//!
//! The attacked-state matrix is written in the ordered basis
//! `{|0,ε00>, |1,ε01>, |1,ε00>, |0,ε01>}`, which makes it block diagonal.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bellalg::{pauli_action, swap_collection, BellClass, Collection, PauliCode};
use crate::protocol::SessionTranscript;
use crate::qsim::{DensityMatrix, QsimError};

/// Slack allowed on probability sums and on slightly negative inputs.
pub const PROB_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("priors must be non-negative and sum to 1, got {0:?}")]
    Priors([f64; 4]),
    #[error("detection probability {0} outside [0, 1]")]
    DetectionProbability(f64),
    #[error("negative discriminant {0}")]
    Discriminant(f64),
    #[error("invalid spectrum {0:?}")]
    Spectrum(Vec<f64>),
    #[error("grid step {0} outside (0, 0.5]")]
    Step(f64),
    #[error("efficiency undefined: no qubits or classical bits")]
    ZeroDenominator,
    #[error(transparent)]
    Qsim(#[from] QsimError),
}

/// Alice's operation priors `p0..p3` (for I, σx, iσy, σz) and the
/// detection probability `d = |β|²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackAnalysisParams {
    priors: [f64; 4],
    d: f64,
}

impl AttackAnalysisParams {
    pub fn new(priors: [f64; 4], d: f64) -> Result<Self, AnalysisError> {
        let sum: f64 = priors.iter().sum();
        if priors.iter().any(|&p| p < 0.0 || !p.is_finite()) || (sum - 1.0).abs() > PROB_TOL {
            return Err(AnalysisError::Priors(priors));
        }
        check_d(d)?;
        Ok(Self { priors, d })
    }

    pub fn uniform(d: f64) -> Result<Self, AnalysisError> {
        Self::new([0.25; 4], d)
    }

    pub fn priors(&self) -> [f64; 4] {
        self.priors
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    /// Real, non-negative `(α, β)` with `|β|² = d`.
    pub fn amplitudes(&self) -> (f64, f64) {
        ((1.0 - self.d).sqrt(), self.d.sqrt())
    }
}

fn check_d(d: f64) -> Result<(), AnalysisError> {
    if !(0.0..=1.0).contains(&d) {
        return Err(AnalysisError::DetectionProbability(d));
    }
    Ok(())
}

/// Block-diagonal state of Eve's ancilla and the data qubit after the attack
/// on `|0>` and Alice's randomly chosen operation.
pub fn build_rho(params: &AttackAnalysisParams) -> Result<DensityMatrix, AnalysisError> {
    let [p0, p1, p2, p3] = params.priors;
    let (a, b) = params.amplitudes();
    let (aa, bb, ab) = (a * a, b * b, a * b);
    #[rustfmt::skip]
    let entries = [
        (p0 + p3) * aa, (p0 - p3) * ab, 0.0, 0.0,
        (p0 - p3) * ab, (p0 + p3) * bb, 0.0, 0.0,
        0.0, 0.0, (p1 + p2) * aa, (p1 - p2) * ab,
        0.0, 0.0, (p1 - p2) * ab, (p1 + p2) * bb,
    ];
    Ok(DensityMatrix::from_real(4, &entries)?)
}

/// Closed-form eigenvalues `(λ0, λ1, λ2, λ3)`; `λ0`/`λ2` take the `+` root.
pub fn attack_eigenvalues(params: &AttackAnalysisParams) -> Result<[f64; 4], AnalysisError> {
    let [p0, p1, p2, p3] = params.priors;
    let dd = params.d - params.d * params.d;
    let block = |s: f64, pi: f64, pj: f64| -> Result<(f64, f64), AnalysisError> {
        let disc = s * s - 16.0 * pi * pj * dd;
        if disc < -PROB_TOL {
            return Err(AnalysisError::Discriminant(disc));
        }
        let r = disc.max(0.0).sqrt();
        Ok((0.5 * s + 0.5 * r, 0.5 * s - 0.5 * r))
    };
    let (l0, l1) = block(p0 + p3, p0, p3)?;
    let (l2, l3) = block(p1 + p2, p1, p2)?;
    Ok([l0, l1, l2, l3])
}

/// `-p log2 p` with `0 log 0 = 0`.
fn plogp(p: f64) -> f64 {
    if p <= 0.0 {
        0.0
    } else {
        -p * p.log2()
    }
}

/// Shannon entropy in bits of a probability vector.
pub fn shannon_entropy(probs: &[f64]) -> f64 {
    probs.iter().map(|&p| plogp(p)).sum()
}

/// Von Neumann entropy in bits of a spectrum. Eigenvalues within
/// [`PROB_TOL`] below zero are treated as zero.
pub fn von_neumann_info(spectrum: &[f64]) -> Result<f64, AnalysisError> {
    let sum: f64 = spectrum.iter().sum();
    if spectrum.iter().any(|&l| l < -PROB_TOL || !l.is_finite()) || (sum - 1.0).abs() > 1e-10 {
        return Err(AnalysisError::Spectrum(spectrum.to_vec()));
    }
    Ok(shannon_entropy(spectrum))
}

/// Eve's information when Alice sends `|0>`, uniform priors.
pub fn info_sending_zero(d: f64) -> Result<f64, AnalysisError> {
    check_d(d)?;
    Ok(plogp(d) + d + plogp(1.0 - d) + (1.0 - d))
}

/// Eve's information when Alice sends `|1>`, uniform priors. Evaluated on its
/// own: the attacked state is the bit-flipped mirror of the `|0>` case, so the
/// flip and no-flip weights trade places and the two halves of the spectrum
/// are `(1-d)/2` and `d/2` in the other order.
pub fn info_sending_one(d: f64) -> Result<f64, AnalysisError> {
    check_d(d)?;
    let spectrum = [0.5 * (1.0 - d), 0.5 * d, 0.5 * (1.0 - d), 0.5 * d];
    von_neumann_info(&spectrum)
}

/// Maximal information Eve gains at detection probability `d`:
/// `1 - d log2 d - (1-d) log2 (1-d)`.
pub fn eve_info(d: f64) -> Result<f64, AnalysisError> {
    check_d(d)?;
    Ok(1.0 + plogp(d) + plogp(1.0 - d))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EveInfoPoint {
    pub d: f64,
    pub eigenvalues: [f64; 4],
    pub info: f64,
}

impl EveInfoPoint {
    pub fn uniform(d: f64) -> Result<Self, AnalysisError> {
        let eigenvalues = attack_eigenvalues(&AttackAnalysisParams::uniform(d)?)?;
        Ok(Self {
            d,
            eigenvalues,
            info: eve_info(d)?,
        })
    }
}

/// Grid of `d` values over `[0, 1]` with spacing `step`. When `1/step` is an
/// integer `n` the points are exactly `i/n`, so `0.5` and `1` land on the grid.
pub fn grid(step: f64) -> Result<Vec<f64>, AnalysisError> {
    if !(step > 0.0 && step <= 0.5) {
        return Err(AnalysisError::Step(step));
    }
    let inv = 1.0 / step;
    if (inv - inv.round()).abs() < 1e-9 {
        let n = inv.round() as usize;
        return Ok((0..=n).map(|i| i as f64 / n as f64).collect());
    }
    let n = (inv + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| i as f64 * step).collect())
}

/// `(d, I(d))` rows for the information-versus-detection curve.
pub fn emit_fig1(step: f64) -> Result<Vec<(f64, f64)>, AnalysisError> {
    grid(step)?.into_iter().map(|d| Ok((d, eve_info(d)?))).collect()
}

/// CSV with header `d,I`; values use the shortest round-trip decimal form.
pub fn fig1_csv(rows: &[(f64, f64)]) -> String {
    let mut out = String::from("d,I\n");
    for (d, i) in rows {
        let _ = writeln!(out, "{d},{i}");
    }
    out
}

/// Outcome of enumerating every `(χ, u_A, u_B)` with uniform priors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeakageAudit {
    pub cases: usize,
    /// Probability of each `(χ, u_A, u_B, C)` case, keyed `"χ,uA,uB,C"` with
    /// operations written as their secret bits.
    pub joint: BTreeMap<String, f64>,
    pub total_probability: f64,
    /// Number of `(u_A, u_B)` pairs consistent with each announced collection.
    pub consistent_pairs: BTreeMap<String, usize>,
    pub prior_entropy: f64,
    pub conditional_entropy: f64,
    pub mutual_information: f64,
    /// The figure the no-leakage argument states for Eve's remaining
    /// uncertainty. Reported for comparison only.
    pub claimed_conditional_entropy: f64,
}

impl LeakageAudit {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("audit serializes")
    }
}

/// `H(X | C)` from a joint table `p(x, c)`.
pub fn conditional_entropy<X: Ord + Clone, C: Ord + Clone>(joint: &BTreeMap<(X, C), f64>) -> f64 {
    let mut marginal: BTreeMap<C, f64> = BTreeMap::new();
    for ((_, c), &p) in joint {
        *marginal.entry(c.clone()).or_default() += p;
    }
    joint
        .iter()
        .filter(|(_, &p)| p > 0.0)
        .map(|((_, c), &p)| -p * (p / marginal[c]).log2())
        .sum()
}

pub fn leakage_audit() -> LeakageAudit {
    let p = 1.0 / 64.0;
    let mut joint = BTreeMap::new();
    let mut by_ops: BTreeMap<((PauliCode, PauliCode), Collection), f64> = BTreeMap::new();
    let mut prior: BTreeMap<(PauliCode, PauliCode), f64> = BTreeMap::new();
    for chi in BellClass::ALL {
        for ua in PauliCode::ALL {
            for ub in PauliCode::ALL {
                let c = swap_collection(pauli_action(chi, ua), pauli_action(chi, ub));
                joint.insert(format!("{chi:?},{},{},{c}", ua.bits_str(), ub.bits_str()), p);
                *by_ops.entry(((ua, ub), c)).or_default() += p;
                *prior.entry((ua, ub)).or_default() += p;
            }
        }
    }
    let total_probability = joint.values().sum();
    let prior_entropy = shannon_entropy(&prior.values().copied().collect::<Vec<_>>());
    let conditional = conditional_entropy(&by_ops);
    let mut consistent_pairs = BTreeMap::new();
    for (_, c) in by_ops.keys() {
        *consistent_pairs.entry(c.to_string()).or_insert(0) += 1;
    }
    LeakageAudit {
        cases: joint.len(),
        joint,
        total_probability,
        consistent_pairs,
        prior_entropy,
        conditional_entropy: conditional,
        mutual_information: prior_entropy - conditional,
        claimed_conditional_entropy: 4.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyReport {
    pub b_s: usize,
    pub q_t: usize,
    pub b_t: usize,
    pub eta: f64,
}

/// `η = b_s / (q_t + b_t)`.
pub fn cabello_efficiency(b_s: usize, q_t: usize, b_t: usize) -> Result<EfficiencyReport, AnalysisError> {
    if q_t + b_t == 0 {
        return Err(AnalysisError::ZeroDenominator);
    }
    Ok(EfficiencyReport {
        b_s,
        q_t,
        b_t,
        eta: b_s as f64 / (q_t + b_t) as f64,
    })
}

/// Efficiency from a transcript's message tallies (check overhead excluded).
pub fn transcript_efficiency(t: &SessionTranscript) -> Result<EfficiencyReport, AnalysisError> {
    cabello_efficiency(
        t.tallies.secret_bits,
        t.tallies.message_qubits,
        t.tallies.announcement_bits,
    )
}

/// Oracle for [`build_rho`]: simulate the attack on `|0>`, apply each Pauli
/// with its prior, and reorder to the block basis.
pub fn simulate_rho(params: &AttackAnalysisParams) -> Result<DensityMatrix, AnalysisError> {
    use crate::adversary::attack_entangle_measure;
    use crate::qsim::{apply_single, StateVector};
    let attacked = attack_entangle_measure(&StateVector::zero(), 0, params.d).map_err(|e| match e {
        crate::adversary::AttackError::Qsim(q) => AnalysisError::Qsim(q),
        _ => AnalysisError::DetectionProbability(params.d),
    })?;
    let parts = PauliCode::ALL
        .iter()
        .zip(params.priors)
        .map(|(&op, p)| Ok((p, DensityMatrix::pure(&apply_single(op, 0, &attacked)?))))
        .collect::<Result<Vec<_>, QsimError>>()?;
    // computational order is 2*data + ancilla; block order is 0, 3, 2, 1
    Ok(DensityMatrix::mixture(&parts)?.permuted(&[0, 3, 2, 1]))
}
