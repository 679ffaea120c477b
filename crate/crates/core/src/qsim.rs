//! Exact state-vector simulation for registers of at most five qubits.
//!
//! Qubit 0 is the leftmost ket position and the most significant bit of a
//! basis-state index, so `|q0 q1 ... q(n-1)>` maps to the integer with `q0`
//! in the high bit. Operations never strip global phase; comparisons against
//! textbook states go through [`StateVector::equals_up_to_phase`] where a sign
//! may legitimately differ.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bellalg::{BellClass, PauliCode};

pub type C64 = Complex64;

/// Largest register the simulator will build.
pub const MAX_QUBITS: usize = 5;

/// Tolerance for invariant checks (normalization, hermiticity, trace).
pub const INVARIANT_TOL: f64 = 1e-10;

/// Tolerance for exact algebraic identities.
pub const EXACT_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QsimError {
    #[error("register of {0} qubits exceeds the {MAX_QUBITS}-qubit limit")]
    TooManyQubits(usize),
    #[error("qubit index {index} out of range for a {num_qubits}-qubit register")]
    IndexOutOfRange { index: usize, num_qubits: usize },
    #[error("Bell measurement needs two distinct qubits, got ({0}, {0})")]
    DegeneratePair(usize),
    #[error("partial trace needs a nonempty set of kept qubits")]
    EmptySubset,
    #[error("qubit {0} listed twice")]
    DuplicateIndex(usize),
    #[error("amplitude vector of length {0} is not a power of two")]
    BadLength(usize),
    #[error("state norm {0} differs from 1")]
    NotNormalized(f64),
    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),
}

/// Single-qubit measurement basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    /// Computational basis `{|0>, |1>}`.
    Z,
    /// Hadamard basis `{|+>, |->}`.
    X,
}

impl Basis {
    pub const ALL: [Basis; 2] = [Basis::Z, Basis::X];

    /// Eigenstate for outcome `bit`: 0 ↦ |0> or |+>, 1 ↦ |1> or |->.
    pub fn eigenstate(self, bit: bool) -> StateVector {
        match (self, bit) {
            (Basis::Z, false) => StateVector::zero(),
            (Basis::Z, true) => StateVector::one(),
            (Basis::X, false) => StateVector::plus(),
            (Basis::X, true) => StateVector::minus(),
        }
    }

    fn projector_row(self, bit: bool) -> [C64; 2] {
        let e = self.eigenstate(bit);
        [e.amps[0].conj(), e.amps[1].conj()]
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Basis::Z => f.write_str("Z"),
            Basis::X => f.write_str("X"),
        }
    }
}

/// One of the four single-qubit states `|0>, |1>, |+>, |->`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BasisState {
    #[serde(rename = "0")]
    Zero,
    #[serde(rename = "1")]
    One,
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl BasisState {
    pub const ALL: [BasisState; 4] = [BasisState::Zero, BasisState::One, BasisState::Plus, BasisState::Minus];

    pub fn new(basis: Basis, bit: bool) -> Self {
        match (basis, bit) {
            (Basis::Z, false) => BasisState::Zero,
            (Basis::Z, true) => BasisState::One,
            (Basis::X, false) => BasisState::Plus,
            (Basis::X, true) => BasisState::Minus,
        }
    }

    pub fn basis(self) -> Basis {
        match self {
            BasisState::Zero | BasisState::One => Basis::Z,
            BasisState::Plus | BasisState::Minus => Basis::X,
        }
    }

    pub fn bit(self) -> bool {
        matches!(self, BasisState::One | BasisState::Minus)
    }

    pub fn state(self) -> StateVector {
        self.basis().eigenstate(self.bit())
    }
}

/// Normalized pure state over `num_qubits` qubits.
///
/// A zero-qubit register (a single unit amplitude) is what remains after every
/// qubit of a state has been measured out.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amps: Vec<C64>,
}

impl StateVector {
    /// Builds a state from raw amplitudes, checking length and norm.
    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self, QsimError> {
        let len = amps.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(QsimError::BadLength(len));
        }
        let num_qubits = len.trailing_zeros() as usize;
        if num_qubits > MAX_QUBITS {
            return Err(QsimError::TooManyQubits(num_qubits));
        }
        let state = Self { num_qubits, amps };
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > INVARIANT_TOL {
            return Err(QsimError::NotNormalized(norm));
        }
        Ok(state)
    }

    pub fn from_real(amps: &[f64]) -> Result<Self, QsimError> {
        Self::from_amplitudes(amps.iter().map(|&a| C64::new(a, 0.0)).collect())
    }

    /// Computational basis state `|index>` on `num_qubits` qubits.
    pub fn basis_state(num_qubits: usize, index: usize) -> Result<Self, QsimError> {
        if num_qubits > MAX_QUBITS {
            return Err(QsimError::TooManyQubits(num_qubits));
        }
        let dim = 1usize << num_qubits;
        if index >= dim {
            return Err(QsimError::IndexOutOfRange { index, num_qubits });
        }
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        amps[index] = C64::new(1.0, 0.0);
        Ok(Self { num_qubits, amps })
    }

    pub fn empty() -> Self {
        Self {
            num_qubits: 0,
            amps: vec![C64::new(1.0, 0.0)],
        }
    }

    pub fn zero() -> Self {
        Self {
            num_qubits: 1,
            amps: vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
        }
    }

    pub fn one() -> Self {
        Self {
            num_qubits: 1,
            amps: vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
        }
    }

    pub fn plus() -> Self {
        let h = C64::new(FRAC_1_SQRT_2, 0.0);
        Self {
            num_qubits: 1,
            amps: vec![h, h],
        }
    }

    pub fn minus() -> Self {
        let h = C64::new(FRAC_1_SQRT_2, 0.0);
        Self {
            num_qubits: 1,
            amps: vec![h, -h],
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitude(&self, index: usize) -> C64 {
        self.amps[index]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    /// Largest componentwise amplitude difference; infinite on size mismatch.
    pub fn max_abs_diff(&self, other: &StateVector) -> f64 {
        if self.num_qubits != other.num_qubits {
            return f64::INFINITY;
        }
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `|<self|other>| = 1` within `tol`.
    pub fn equals_up_to_phase(&self, other: &StateVector, tol: f64) -> bool {
        self.num_qubits == other.num_qubits && (self.inner(other).norm() - 1.0).abs() <= tol
    }

    fn check_index(&self, index: usize) -> Result<(), QsimError> {
        if index >= self.num_qubits {
            return Err(QsimError::IndexOutOfRange {
                index,
                num_qubits: self.num_qubits,
            });
        }
        Ok(())
    }

    fn bit_of(&self, full: usize, qubit: usize) -> usize {
        (full >> (self.num_qubits - 1 - qubit)) & 1
    }

    /// Index of `full` with the bits of `removed` (qubit positions) deleted.
    fn squeeze(&self, full: usize, removed: &[usize]) -> usize {
        let mut out = 0usize;
        for q in 0..self.num_qubits {
            if removed.contains(&q) {
                continue;
            }
            out = (out << 1) | self.bit_of(full, q);
        }
        out
    }

    fn renormalized(num_qubits: usize, mut amps: Vec<C64>) -> StateVector {
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        for a in &mut amps {
            *a /= norm;
        }
        StateVector { num_qubits, amps }
    }

    /// Applies a 2×2 matrix (row-major) to `index`.
    pub fn apply_matrix(&self, index: usize, m: &[[C64; 2]; 2]) -> Result<StateVector, QsimError> {
        self.check_index(index)?;
        let shift = self.num_qubits - 1 - index;
        let mask = 1usize << shift;
        let mut out = self.amps.clone();
        for lo in 0..self.dim() {
            if lo & mask != 0 {
                continue;
            }
            let hi = lo | mask;
            let (a0, a1) = (self.amps[lo], self.amps[hi]);
            out[lo] = m[0][0] * a0 + m[0][1] * a1;
            out[hi] = m[1][0] * a0 + m[1][1] * a1;
        }
        Ok(StateVector {
            num_qubits: self.num_qubits,
            amps: out,
        })
    }

    /// Applies a 4×4 matrix to the ordered qubit pair `(first, second)`;
    /// `first` is the high bit of the matrix index.
    pub fn apply_two(&self, first: usize, second: usize, m: &[[C64; 4]; 4]) -> Result<StateVector, QsimError> {
        self.check_index(first)?;
        self.check_index(second)?;
        if first == second {
            return Err(QsimError::DegeneratePair(first));
        }
        let m1 = 1usize << (self.num_qubits - 1 - first);
        let m2 = 1usize << (self.num_qubits - 1 - second);
        let mut out = self.amps.clone();
        for base in 0..self.dim() {
            if base & (m1 | m2) != 0 {
                continue;
            }
            let idx = [base, base | m2, base | m1, base | m1 | m2];
            let v = idx.map(|i| self.amps[i]);
            for (row, &target) in idx.iter().enumerate() {
                out[target] = (0..4).map(|col| m[row][col] * v[col]).sum();
            }
        }
        Ok(StateVector {
            num_qubits: self.num_qubits,
            amps: out,
        })
    }

    /// Inserts `other` so that its qubits start at position `at`.
    pub fn insert(&self, at: usize, other: &StateVector) -> Result<StateVector, QsimError> {
        if at > self.num_qubits {
            return Err(QsimError::IndexOutOfRange {
                index: at,
                num_qubits: self.num_qubits,
            });
        }
        let n = self.num_qubits + other.num_qubits;
        if n > MAX_QUBITS {
            return Err(QsimError::TooManyQubits(n));
        }
        let tail = self.num_qubits - at;
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
        for (i, a) in self.amps.iter().enumerate() {
            let head = i >> tail;
            let low = i & ((1 << tail) - 1);
            for (j, b) in other.amps.iter().enumerate() {
                let full = (((head << other.num_qubits) | j) << tail) | low;
                amps[full] = a * b;
            }
        }
        Ok(StateVector { num_qubits: n, amps })
    }

    /// Born probabilities of the four Bell projectors on `(first, second)`,
    /// indexed by [`BellClass::index`].
    pub fn bell_probabilities(&self, first: usize, second: usize) -> Result<[f64; 4], QsimError> {
        let mut probs = [0.0; 4];
        for class in BellClass::ALL {
            probs[class.index()] = self.project_bell(first, second, class)?.norm_sqr_raw();
        }
        Ok(probs)
    }

    /// Unnormalized remainder after projecting `(first, second)` onto `class`.
    fn project_bell(&self, first: usize, second: usize, class: BellClass) -> Result<Unnormalized, QsimError> {
        self.check_index(first)?;
        self.check_index(second)?;
        if first == second {
            return Err(QsimError::DegeneratePair(first));
        }
        let bell = prepare_bell(class);
        let rest_qubits = self.num_qubits - 2;
        let mut rest = vec![C64::new(0.0, 0.0); 1 << rest_qubits];
        for (full, amp) in self.amps.iter().enumerate() {
            let ab = self.bit_of(full, first) * 2 + self.bit_of(full, second);
            rest[self.squeeze(full, &[first, second])] += bell.amps[ab].conj() * amp;
        }
        Ok(Unnormalized {
            num_qubits: rest_qubits,
            amps: rest,
        })
    }

    fn project_single(&self, index: usize, basis: Basis, bit: bool) -> Result<Unnormalized, QsimError> {
        self.check_index(index)?;
        let row = basis.projector_row(bit);
        let rest_qubits = self.num_qubits - 1;
        let mut rest = vec![C64::new(0.0, 0.0); 1 << rest_qubits];
        for (full, amp) in self.amps.iter().enumerate() {
            rest[self.squeeze(full, &[index])] += row[self.bit_of(full, index)] * amp;
        }
        Ok(Unnormalized {
            num_qubits: rest_qubits,
            amps: rest,
        })
    }

    /// Probability that measuring `index` in `basis` yields 1.
    pub fn prob_one(&self, index: usize, basis: Basis) -> Result<f64, QsimError> {
        Ok(self.project_single(index, basis, true)?.norm_sqr_raw())
    }
}

struct Unnormalized {
    num_qubits: usize,
    amps: Vec<C64>,
}

impl Unnormalized {
    fn norm_sqr_raw(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn into_state(self) -> StateVector {
        StateVector::renormalized(self.num_qubits, self.amps)
    }
}

/// Samples an index from `weights` (assumed to sum to one).
fn sample<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last_nonzero = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            last_nonzero = i;
        }
        acc += w;
        if u < acc && w > 0.0 {
            return i;
        }
    }
    last_nonzero
}

/// The Bell state of `class` on two qubits, coefficient 1/√2 and phase +1:
/// `(|0,x> + (-1)^z |1,1-x>)/√2`.
pub fn prepare_bell(class: BellClass) -> StateVector {
    let h = FRAC_1_SQRT_2;
    let mut amps = vec![C64::new(0.0, 0.0); 4];
    let x = class.x() as usize;
    let sign = if class.z() { -1.0 } else { 1.0 };
    amps[x] = C64::new(h, 0.0);
    amps[2 | (1 - x)] = C64::new(sign * h, 0.0);
    StateVector { num_qubits: 2, amps }
}

/// Tensor product in argument order.
pub fn compose(states: &[StateVector]) -> Result<StateVector, QsimError> {
    let total: usize = states.iter().map(|s| s.num_qubits).sum();
    if total > MAX_QUBITS {
        return Err(QsimError::TooManyQubits(total));
    }
    let mut acc = StateVector::empty();
    for s in states {
        acc = acc.insert(acc.num_qubits, s)?;
    }
    Ok(acc)
}

/// 2×2 matrix of a Pauli encoding operation.
pub fn pauli_matrix(op: PauliCode) -> [[C64; 2]; 2] {
    let o = C64::new(0.0, 0.0);
    let l = C64::new(1.0, 0.0);
    match op {
        PauliCode::I => [[l, o], [o, l]],
        PauliCode::X => [[o, l], [l, o]],
        // iσy = |0><1| - |1><0|
        PauliCode::IY => [[o, l], [-l, o]],
        PauliCode::Z => [[l, o], [o, -l]],
    }
}

pub fn apply_single(op: PauliCode, index: usize, state: &StateVector) -> Result<StateVector, QsimError> {
    state.apply_matrix(index, &pauli_matrix(op))
}

/// Projective Bell-basis measurement of `pair`; the measured qubits are
/// removed from the returned state.
pub fn measure_bell_pair<R: Rng + ?Sized>(
    state: &StateVector,
    pair: (usize, usize),
    rng: &mut R,
) -> Result<(BellClass, StateVector), QsimError> {
    let (first, second) = pair;
    let mut parts = Vec::with_capacity(4);
    for class in BellClass::ALL {
        parts.push(state.project_bell(first, second, class)?);
    }
    let probs: Vec<f64> = parts.iter().map(Unnormalized::norm_sqr_raw).collect();
    let k = sample(&probs, rng);
    let class = BellClass::ALL[k];
    Ok((class, parts.swap_remove(k).into_state()))
}

/// Projects `pair` onto the Bell state `class` without sampling. Returns the
/// branch probability and, when it is nonzero, the renormalized remainder.
pub fn collapse_bell(
    state: &StateVector,
    pair: (usize, usize),
    class: BellClass,
) -> Result<(f64, Option<StateVector>), QsimError> {
    let part = state.project_bell(pair.0, pair.1, class)?;
    let p = part.norm_sqr_raw();
    Ok((p, (p > 0.0).then(|| part.into_state())))
}

/// Single-qubit projective measurement; bit 0 ↦ |0>/|+>, bit 1 ↦ |1>/|->.
pub fn measure_single<R: Rng + ?Sized>(
    state: &StateVector,
    index: usize,
    basis: Basis,
    rng: &mut R,
) -> Result<(bool, StateVector), QsimError> {
    let zero = state.project_single(index, basis, false)?;
    let one = state.project_single(index, basis, true)?;
    let probs = [zero.norm_sqr_raw(), one.norm_sqr_raw()];
    if sample(&probs, rng) == 1 {
        Ok((true, one.into_state()))
    } else {
        Ok((false, zero.into_state()))
    }
}

/// Partial trace keeping `keep` (in the given order).
pub fn reduced_density(state: &StateVector, keep: &[usize]) -> Result<DensityMatrix, QsimError> {
    if keep.is_empty() {
        return Err(QsimError::EmptySubset);
    }
    for (i, &q) in keep.iter().enumerate() {
        state.check_index(q)?;
        if keep[..i].contains(&q) {
            return Err(QsimError::DuplicateIndex(q));
        }
    }
    let n = state.num_qubits;
    let traced: Vec<usize> = (0..n).filter(|q| !keep.contains(q)).collect();
    let dim = 1usize << keep.len();
    let env = 1usize << traced.len();
    // amplitude table psi[kept][env]
    let mut table = vec![vec![C64::new(0.0, 0.0); env]; dim];
    for (full, amp) in state.amps.iter().enumerate() {
        let k = keep.iter().fold(0, |acc, &q| (acc << 1) | state.bit_of(full, q));
        let e = traced.iter().fold(0, |acc, &q| (acc << 1) | state.bit_of(full, q));
        table[k][e] = *amp;
    }
    let mut entries = vec![C64::new(0.0, 0.0); dim * dim];
    for r in 0..dim {
        for c in 0..dim {
            entries[r * dim + c] = (0..env).map(|e| table[r][e] * table[c][e].conj()).sum();
        }
    }
    Ok(DensityMatrix { dim, entries })
}

/// Dense density matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    dim: usize,
    entries: Vec<C64>,
}

impl DensityMatrix {
    /// Validated construction: Hermitian, unit trace, positive semidefinite.
    pub fn new(dim: usize, entries: Vec<C64>) -> Result<Self, QsimError> {
        if entries.len() != dim * dim || dim == 0 {
            return Err(QsimError::InvalidDensity(format!(
                "{} entries for dimension {dim}",
                entries.len()
            )));
        }
        let rho = Self { dim, entries };
        if !rho.is_hermitian(INVARIANT_TOL) {
            return Err(QsimError::InvalidDensity("not Hermitian".into()));
        }
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > INVARIANT_TOL || tr.im.abs() > INVARIANT_TOL {
            return Err(QsimError::InvalidDensity(format!("trace {tr}")));
        }
        if let Some(min) = rho.eigenvalues().first() {
            if *min < -INVARIANT_TOL {
                return Err(QsimError::InvalidDensity(format!("negative eigenvalue {min}")));
            }
        }
        Ok(rho)
    }

    pub fn from_real(dim: usize, entries: &[f64]) -> Result<Self, QsimError> {
        Self::new(dim, entries.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn pure(state: &StateVector) -> Self {
        let dim = state.dim();
        let mut entries = vec![C64::new(0.0, 0.0); dim * dim];
        for r in 0..dim {
            for c in 0..dim {
                entries[r * dim + c] = state.amps[r] * state.amps[c].conj();
            }
        }
        Self { dim, entries }
    }

    /// `I/dim`.
    pub fn maximally_mixed(dim: usize) -> Self {
        let mut entries = vec![C64::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = C64::new(1.0 / dim as f64, 0.0);
        }
        Self { dim, entries }
    }

    /// Convex combination `Σ w_i ρ_i`; weights are not renormalized.
    pub fn mixture(parts: &[(f64, DensityMatrix)]) -> Result<Self, QsimError> {
        let dim = parts.first().map(|(_, r)| r.dim).ok_or(QsimError::EmptySubset)?;
        let mut entries = vec![C64::new(0.0, 0.0); dim * dim];
        for (w, rho) in parts {
            if rho.dim != dim {
                return Err(QsimError::InvalidDensity("mixed dimensions".into()));
            }
            for (e, x) in entries.iter_mut().zip(&rho.entries) {
                *e += x * *w;
            }
        }
        Ok(Self { dim, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.entries[row * self.dim + col]
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        (0..self.dim).all(|r| (0..self.dim).all(|c| (self.get(r, c) - self.get(c, r).conj()).norm() <= tol))
    }

    /// `tr(ρ²)`.
    pub fn purity(&self) -> f64 {
        self.entries.iter().map(|e| e.norm_sqr()).sum()
    }

    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        if self.dim != other.dim {
            return f64::INFINITY;
        }
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Reorders the basis: entry `(r, c)` of the result is `(order[r], order[c])` of `self`.
    pub fn permuted(&self, order: &[usize]) -> DensityMatrix {
        let dim = order.len();
        let mut entries = Vec::with_capacity(dim * dim);
        for &r in order {
            for &c in order {
                entries.push(self.get(r, c));
            }
        }
        DensityMatrix { dim, entries }
    }

    /// Eigenvalues in ascending order (Hermitian eigensolver).
    pub fn eigenvalues(&self) -> Vec<f64> {
        let m = DMatrix::from_row_slice(self.dim, self.dim, &self.entries);
        let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }
}
