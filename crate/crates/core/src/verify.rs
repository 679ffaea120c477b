//! Checks a swap table against explicit amplitude computation.

use std::fmt::Write as _;

use serde::Serialize;

use crate::bellalg::{pauli_action, BellClass, Collection, PauliCode, SwapTable};
use crate::qsim::{apply_single, compose, prepare_bell, QsimError, EXACT_TOL};

/// Joint probabilities `P(m_A, m_B)` of Bell-measuring `(A1, A2)` and
/// `(B1, B2)` on `|first>_{A1B1} |second>_{A2B2}`, indexed
/// `[m_A.index()][m_B.index()]`. Computed as explicit overlaps
/// `<m_A|_{A1A2} <m_B|_{B1B2} |ψ>` over all sixteen basis amplitudes.
pub fn joint_swap_probabilities(first: BellClass, second: BellClass) -> Result<[[f64; 4]; 4], QsimError> {
    let psi = compose(&[prepare_bell(first), prepare_bell(second)])?;
    let mut probs = [[0.0; 4]; 4];
    for ma in BellClass::ALL {
        let bra_a = prepare_bell(ma);
        for mb in BellClass::ALL {
            let bra_b = prepare_bell(mb);
            let mut amp = crate::qsim::C64::new(0.0, 0.0);
            // register order A1 B1 A2 B2, qubit 0 most significant
            for (idx, value) in psi.amplitudes().iter().enumerate() {
                let bit = |q: usize| (idx >> (3 - q)) & 1;
                let a = bit(0) << 1 | bit(2);
                let b = bit(1) << 1 | bit(3);
                amp += bra_a.amplitude(a).conj() * bra_b.amplitude(b).conj() * value;
            }
            probs[ma.index()][mb.index()] = amp.norm_sqr();
        }
    }
    Ok(probs)
}

/// Oracle verdict on one table cell.
#[derive(Debug, Clone, Serialize)]
pub struct CellCheck {
    pub first: BellClass,
    pub second: BellClass,
    pub table: Collection,
    /// Collection whose members carry all the probability, if any does.
    pub observed: Option<Collection>,
    /// Largest deviation from ¼ on a member or from 0 elsewhere.
    pub max_deviation: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PauliCheck {
    pub class: BellClass,
    pub op: PauliCode,
    pub expected: BellClass,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecodeCheck {
    pub initial: BellClass,
    pub alice: PauliCode,
    pub bob: PauliCode,
    pub announced: Collection,
    pub alice_reads: Option<PauliCode>,
    pub bob_reads: Option<PauliCode>,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub cells: Vec<CellCheck>,
    pub pauli: Vec<PauliCheck>,
    pub decode: Vec<DecodeCheck>,
    pub latin: bool,
}

fn probabilities_match(probs: &[[f64; 4]; 4], c: Collection) -> f64 {
    let mut worst: f64 = 0.0;
    for ma in BellClass::ALL {
        for mb in BellClass::ALL {
            let target = if c.members().contains(&(ma, mb)) { 0.25 } else { 0.0 };
            worst = worst.max((probs[ma.index()][mb.index()] - target).abs());
        }
    }
    worst
}

/// Runs every check against `table`.
pub fn verify_table(table: &SwapTable) -> Result<VerifyReport, QsimError> {
    let mut cells = Vec::with_capacity(16);
    for first in BellClass::ALL {
        for second in BellClass::ALL {
            let probs = joint_swap_probabilities(first, second)?;
            let expected = table.collection(first, second);
            let max_deviation = probabilities_match(&probs, expected);
            let observed = Collection::ALL
                .into_iter()
                .find(|&c| probabilities_match(&probs, c) < EXACT_TOL);
            cells.push(CellCheck {
                first,
                second,
                table: expected,
                observed,
                max_deviation,
                pass: max_deviation < EXACT_TOL,
            });
        }
    }

    let mut pauli = Vec::with_capacity(32);
    for class in BellClass::ALL {
        for op in PauliCode::ALL {
            let expected = pauli_action(class, op);
            let target = prepare_bell(expected);
            let pass = [0, 1].iter().all(|&q| {
                apply_single(op, q, &prepare_bell(class))
                    .map(|s| s.equals_up_to_phase(&target, EXACT_TOL))
                    .unwrap_or(false)
            });
            pauli.push(PauliCheck {
                class,
                op,
                expected,
                pass,
            });
        }
    }

    let mut decode = Vec::with_capacity(64);
    for initial in BellClass::ALL {
        for alice in PauliCode::ALL {
            for bob in PauliCode::ALL {
                let (ea, eb) = (pauli_action(initial, alice), pauli_action(initial, bob));
                let announced = table.collection(ea, eb);
                let alice_reads = table.decode_partner(announced, initial, alice);
                let bob_reads = table.decode_partner(announced, initial, bob);
                let pass = alice_reads == Some(bob) && bob_reads == Some(alice);
                decode.push(DecodeCheck {
                    initial,
                    alice,
                    bob,
                    announced,
                    alice_reads,
                    bob_reads,
                    pass,
                });
            }
        }
    }

    Ok(VerifyReport {
        cells,
        pauli,
        decode,
        latin: table.is_latin(),
    })
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.latin
            && self.cells.iter().all(|c| c.pass)
            && self.pauli.iter().all(|p| p.pass)
            && self.decode.iter().all(|d| d.pass)
    }

    pub fn failed_cells(&self) -> impl Iterator<Item = &CellCheck> {
        self.cells.iter().filter(|c| !c.pass)
    }

    /// Human-readable pass/fail matrix plus a line per failure.
    pub fn render(&self) -> String {
        let mut out = String::from("swap table (rows: A1B1, columns: A2B2)\n");
        out.push_str("        ");
        for c in BellClass::ALL {
            let _ = write!(out, "{:<10}", c.to_string());
        }
        out.push('\n');
        for (r, first) in BellClass::ALL.iter().enumerate() {
            let _ = write!(out, "{:<8}", first.to_string());
            for cell in &self.cells[4 * r..4 * r + 4] {
                let mark = if cell.pass { "ok" } else { "FAIL" };
                let _ = write!(out, "{:<10}", format!("{} {mark}", cell.table));
            }
            out.push('\n');
        }
        for cell in self.failed_cells() {
            let observed = cell.observed.map_or("none".to_string(), |c| c.to_string());
            let _ = writeln!(
                out,
                "cell ({}, {}) lists {} but amplitudes give {observed} (max deviation {:.3e})",
                cell.first, cell.second, cell.table, cell.max_deviation
            );
        }
        let count = |n: usize, total: usize| {
            if n == total {
                "pass".to_string()
            } else {
                format!("FAIL ({n}/{total})")
            }
        };
        let _ = writeln!(
            out,
            "pauli action: {}",
            count(self.pauli.iter().filter(|p| p.pass).count(), self.pauli.len())
        );
        for p in self.pauli.iter().filter(|p| !p.pass) {
            let _ = writeln!(out, "  {} on {} does not give {}", p.op, p.class, p.expected);
        }
        let _ = writeln!(
            out,
            "decode round trips: {}",
            count(self.decode.iter().filter(|d| d.pass).count(), self.decode.len())
        );
        for d in self.decode.iter().filter(|d| !d.pass).take(8) {
            let _ = writeln!(
                out,
                "  χ={} alice={} bob={} announced {}: alice reads {:?}, bob reads {:?}",
                d.initial, d.alice, d.bob, d.announced, d.alice_reads, d.bob_reads
            );
        }
        let _ = writeln!(out, "latin square: {}", if self.latin { "pass" } else { "FAIL" });
        let _ = writeln!(out, "overall: {}", if self.all_passed() { "PASS" } else { "FAIL" });
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use BellClass::*;

    #[test]
    fn standard_table_passes() {
        let r = verify_table(&SwapTable::STANDARD).unwrap();
        assert!(r.all_passed(), "{}", r.render());
        assert_eq!((r.cells.len(), r.pauli.len(), r.decode.len()), (16, 16, 64));
        let cell = r
            .cells
            .iter()
            .find(|c| c.first == PsiMinus && c.second == PsiMinus)
            .unwrap();
        assert_eq!(cell.observed, Some(Collection::C0));
    }

    #[test]
    fn joint_probabilities_normalized() {
        for a in BellClass::ALL {
            for b in BellClass::ALL {
                let p = joint_swap_probabilities(a, b).unwrap();
                let total: f64 = p.iter().flatten().sum();
                assert!((total - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn tampered_cell_is_named() {
        let text = "C0 C1 C2 C3\nC1 C0 C3 C2\nC2 C3 C0 C1\nC3 C2 C0 C1\n";
        let r = verify_table(&SwapTable::parse(text).unwrap()).unwrap();
        assert!(!r.all_passed());
        assert!(!r.latin);
        let failed: Vec<_> = r.failed_cells().map(|c| (c.first, c.second)).collect();
        assert_eq!(failed, vec![(PsiMinus, PsiPlus), (PsiMinus, PsiMinus)]);
        let text = r.render();
        assert!(text.contains("cell (Ψ-, Ψ+) lists C0 but amplitudes give C1"), "{text}");
        assert!(text.contains("overall: FAIL"));
    }
}
