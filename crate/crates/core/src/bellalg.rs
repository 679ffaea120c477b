//! Bell-class algebra: Pauli action on Bell states, the entanglement-swapping
//! outcome collections, the two-bit secret codec and table-based decoding.
//!
//! Every Bell class, Pauli operation and collection carries an `(x, z)` bit
//! label. Pauli action and swapping both reduce to XOR on these labels; the
//! swap table itself is still stored literally and decoding reads it the way
//! the parties do, so the XOR law stays a checked property rather than an
//! assumption.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qsim::Basis;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BellAlgError {
    #[error("unknown collection label {0:?}")]
    UnknownCollection(String),
    #[error("unknown Bell class {0:?} (expected Phi+, Phi-, Psi+ or Psi-)")]
    UnknownBellClass(String),
    #[error("swap table needs 4 rows of 4 labels, {0}")]
    TableShape(String),
}

/// One of the four Bell states, labelled by bit-flip `x` and phase `z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BellClass {
    #[serde(rename = "Phi+")]
    PhiPlus,
    #[serde(rename = "Phi-")]
    PhiMinus,
    #[serde(rename = "Psi+")]
    PsiPlus,
    #[serde(rename = "Psi-")]
    PsiMinus,
}

impl BellClass {
    /// Table order: Φ+, Φ-, Ψ+, Ψ-.
    pub const ALL: [BellClass; 4] = [
        BellClass::PhiPlus,
        BellClass::PhiMinus,
        BellClass::PsiPlus,
        BellClass::PsiMinus,
    ];

    pub fn from_bits(x: bool, z: bool) -> Self {
        Self::ALL[(x as usize) << 1 | z as usize]
    }

    pub fn x(self) -> bool {
        matches!(self, BellClass::PsiPlus | BellClass::PsiMinus)
    }

    pub fn z(self) -> bool {
        matches!(self, BellClass::PhiMinus | BellClass::PsiMinus)
    }

    /// Position in [`BellClass::ALL`], equal to `2x + z`.
    pub fn index(self) -> usize {
        (self.x() as usize) << 1 | self.z() as usize
    }

    pub fn xor(self, other: BellClass) -> BellClass {
        Self::from_bits(self.x() ^ other.x(), self.z() ^ other.z())
    }

    /// Whether single-qubit outcomes on the two halves are opposite when both
    /// are measured in `basis`: Z exposes the bit-flip label, X the phase label.
    pub fn opposite_outcomes(self, basis: Basis) -> bool {
        match basis {
            Basis::Z => self.x(),
            Basis::X => self.z(),
        }
    }
}

impl fmt::Display for BellClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BellClass::PhiPlus => "Φ+",
            BellClass::PhiMinus => "Φ-",
            BellClass::PsiPlus => "Ψ+",
            BellClass::PsiMinus => "Ψ-",
        })
    }
}

impl FromStr for BellClass {
    type Err = BellAlgError;

    /// Accepts `Phi+`, `psi-` (any ASCII case) or the `Φ+` display form.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "phi+" | "Φ+" => Ok(BellClass::PhiPlus),
            "phi-" | "Φ-" => Ok(BellClass::PhiMinus),
            "psi+" | "Ψ+" => Ok(BellClass::PsiPlus),
            "psi-" | "Ψ-" => Ok(BellClass::PsiMinus),
            _ => Err(BellAlgError::UnknownBellClass(s.to_string())),
        }
    }
}

/// The four encoding operations `I, σx, iσy, σz`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PauliCode {
    I,
    X,
    #[serde(rename = "iY")]
    IY,
    Z,
}

impl PauliCode {
    /// Ordered by secret bits 00, 01, 10, 11.
    pub const ALL: [PauliCode; 4] = [PauliCode::I, PauliCode::X, PauliCode::IY, PauliCode::Z];

    /// Agreed codec: I → 00, σx → 01, iσy → 10, σz → 11.
    pub fn secret_bits(self) -> (bool, bool) {
        match self {
            PauliCode::I => (false, false),
            PauliCode::X => (false, true),
            PauliCode::IY => (true, false),
            PauliCode::Z => (true, true),
        }
    }

    pub fn from_secret_bits(first: bool, second: bool) -> Self {
        Self::ALL[(first as usize) << 1 | second as usize]
    }

    /// `(x, z)` action label: which Bell-class bits the operation flips.
    pub fn label(self) -> (bool, bool) {
        match self {
            PauliCode::I => (false, false),
            PauliCode::X => (true, false),
            PauliCode::IY => (true, true),
            PauliCode::Z => (false, true),
        }
    }

    pub fn from_label(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => PauliCode::I,
            (true, false) => PauliCode::X,
            (true, true) => PauliCode::IY,
            (false, true) => PauliCode::Z,
        }
    }

    /// Composition up to phase.
    pub fn compose(self, other: PauliCode) -> PauliCode {
        let (a, b) = (self.label(), other.label());
        Self::from_label(a.0 ^ b.0, a.1 ^ b.1)
    }

    pub fn bits_str(self) -> &'static str {
        match self {
            PauliCode::I => "00",
            PauliCode::X => "01",
            PauliCode::IY => "10",
            PauliCode::Z => "11",
        }
    }
}

impl fmt::Display for PauliCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PauliCode::I => "I",
            PauliCode::X => "σx",
            PauliCode::IY => "iσy",
            PauliCode::Z => "σz",
        })
    }
}

/// Announced entanglement-swapping outcome collection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Collection {
    C0,
    C1,
    C2,
    C3,
}

impl Collection {
    pub const ALL: [Collection; 4] = [Collection::C0, Collection::C1, Collection::C2, Collection::C3];

    /// `(x, z)` label: C0 = 00, C1 = 01, C2 = 10, C3 = 11.
    pub fn label(self) -> (bool, bool) {
        let i = self.index();
        (i & 2 != 0, i & 1 != 0)
    }

    pub fn from_label(x: bool, z: bool) -> Self {
        Self::ALL[(x as usize) << 1 | z as usize]
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// The four `(m_A, m_B)` outcome pairs belonging to this collection.
    pub fn members(self) -> [(BellClass, BellClass); 4] {
        MEMBERS[self.index()]
    }
}

impl fmt::Display for Collection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "C{}", self.index())
    }
}

impl FromStr for Collection {
    type Err = BellAlgError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "C0" | "c0" | "0" => Ok(Collection::C0),
            "C1" | "c1" | "1" => Ok(Collection::C1),
            "C2" | "c2" | "2" => Ok(Collection::C2),
            "C3" | "c3" | "3" => Ok(Collection::C3),
            other => Err(BellAlgError::UnknownCollection(other.to_string())),
        }
    }
}

use BellClass::{PhiMinus as FM, PhiPlus as FP, PsiMinus as SM, PsiPlus as SP};

// Outcome pairs (A1A2, B1B2) per collection, as listed for C0..C3.
const MEMBERS: [[(BellClass, BellClass); 4]; 4] = [
    [(FP, FP), (FM, FM), (SP, SP), (SM, SM)],
    [(FM, FP), (FP, FM), (SP, SM), (SM, SP)],
    [(FP, SP), (FM, SM), (SP, FP), (SM, FM)],
    [(FM, SP), (FP, SM), (SM, FP), (SP, FM)],
];

/// Swap-outcome table: row = class of (A1, B1), column = class of (A2, B2).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SwapTable {
    cells: [[Collection; 4]; 4],
}

impl SwapTable {
    pub const STANDARD: SwapTable = {
        use Collection::*;
        SwapTable {
            cells: [[C0, C1, C2, C3], [C1, C0, C3, C2], [C2, C3, C0, C1], [C3, C2, C1, C0]],
        }
    };

    pub fn from_cells(cells: [[Collection; 4]; 4]) -> Self {
        Self { cells }
    }

    /// Parses four whitespace-separated rows of four labels (`C0`..`C3`).
    /// Blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Result<Self, BellAlgError> {
        let rows: Vec<&str> = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty())
            .collect();
        if rows.len() != 4 {
            return Err(BellAlgError::TableShape(format!("found {} rows", rows.len())));
        }
        let mut cells = [[Collection::C0; 4]; 4];
        for (r, line) in rows.iter().enumerate() {
            let labels: Vec<&str> = line
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|t| !t.is_empty())
                .collect();
            if labels.len() != 4 {
                return Err(BellAlgError::TableShape(format!("row {r} has {} labels", labels.len())));
            }
            for (c, label) in labels.iter().enumerate() {
                cells[r][c] = label.parse()?;
            }
        }
        Ok(Self { cells })
    }

    pub fn collection(&self, first: BellClass, second: BellClass) -> Collection {
        self.cells[first.index()][second.index()]
    }

    /// Reads the partner's operation from the table: the row is the party's
    /// own encoded pair, the column whose cell matches the announcement is the
    /// partner's encoded pair, and the partner operation is whichever Pauli
    /// maps `initial` onto that column. `None` if the table row is not Latin.
    pub fn decode_partner(&self, announced: Collection, initial: BellClass, own_op: PauliCode) -> Option<PauliCode> {
        let own = pauli_action(initial, own_op);
        let mut hits = BellClass::ALL
            .into_iter()
            .filter(|&col| self.collection(own, col) == announced);
        let partner_class = hits.next()?;
        if hits.next().is_some() {
            return None;
        }
        PauliCode::ALL
            .into_iter()
            .find(|&u| pauli_action(initial, u) == partner_class)
    }

    /// Every row and column holds each collection exactly once.
    pub fn is_latin(&self) -> bool {
        (0..4).all(|i| {
            let mut row = [false; 4];
            let mut col = [false; 4];
            for j in 0..4 {
                row[self.cells[i][j].index()] = true;
                col[self.cells[j][i].index()] = true;
            }
            row.iter().all(|&b| b) && col.iter().all(|&b| b)
        })
    }
}

impl Default for SwapTable {
    fn default() -> Self {
        Self::STANDARD
    }
}

/// Bell class after applying `op` to either particle, ignoring global phase.
pub fn pauli_action(class: BellClass, op: PauliCode) -> BellClass {
    let (x, z) = op.label();
    BellClass::from_bits(class.x() ^ x, class.z() ^ z)
}

pub fn swap_collection(first: BellClass, second: BellClass) -> Collection {
    SwapTable::STANDARD.collection(first, second)
}

/// The collection whose member list contains `(m_a, m_b)`.
pub fn classify_outcome(m_a: BellClass, m_b: BellClass) -> Collection {
    Collection::ALL
        .into_iter()
        .find(|c| c.members().contains(&(m_a, m_b)))
        .expect("member lists cover all 16 outcome pairs")
}

pub fn decode_partner(announced: Collection, initial: BellClass, own_op: PauliCode) -> PauliCode {
    SwapTable::STANDARD
        .decode_partner(announced, initial, own_op)
        .expect("standard table rows are Latin")
}

/// Label arithmetic shortcut for [`decode_partner`]: partner = announced ⊕ own.
pub fn decode_partner_algebraic(announced: Collection, own_op: PauliCode) -> PauliCode {
    let (cx, cz) = announced.label();
    let (ox, oz) = own_op.label();
    PauliCode::from_label(cx ^ ox, cz ^ oz)
}
