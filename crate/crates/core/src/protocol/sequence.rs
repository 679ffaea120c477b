//! Building particle sequences and splicing check particles in and out.

use rand::seq::index;
use rand::Rng;

use super::{EncodingConvention, GroupRecord, Particle, ProtocolError, Side};
use crate::bellalg::BellClass;
use crate::qsim::{prepare_bell, BasisState, StateVector};

/// Output of the preparation step.
#[derive(Debug, Clone)]
pub struct Blocks {
    pub s_a: Vec<Particle>,
    pub s_b: Vec<Particle>,
    pub groups: Vec<GroupRecord>,
    /// One register per message pair, in preparation order.
    pub pairs: Vec<StateVector>,
}

/// Prepares 2N pairs, the two pairs of each group sharing one uniformly drawn
/// class, and splits them into S_A and S_B in order.
pub fn prepare_blocks<R: Rng + ?Sized>(
    groups: usize,
    convention: EncodingConvention,
    forced: Option<&[BellClass]>,
    rng: &mut R,
) -> Result<Blocks, ProtocolError> {
    if groups == 0 {
        return Err(ProtocolError::NoGroups);
    }
    if let Some(f) = forced {
        if f.len() != groups {
            return Err(ProtocolError::InitialCount { given: f.len(), groups });
        }
    }
    let mut blocks = Blocks {
        s_a: Vec::with_capacity(2 * groups),
        s_b: Vec::with_capacity(2 * groups),
        groups: Vec::with_capacity(groups),
        pairs: Vec::with_capacity(2 * groups),
    };
    for n in 0..groups {
        let class = match forced {
            Some(f) => f[n],
            None => BellClass::ALL[rng.random_range(0..4)],
        };
        blocks.groups.push(GroupRecord::new(n + 1, class, convention));
        for pair in [2 * n, 2 * n + 1] {
            blocks.pairs.push(prepare_bell(class));
            blocks.s_a.push(Particle::Message { pair, side: Side::A });
            blocks.s_b.push(Particle::Message { pair, side: Side::B });
        }
    }
    Ok(blocks)
}

/// Inserts `extra` (in order) at uniformly random positions of the combined
/// sequence. Returns the new sequence and the sorted positions of `extra`.
pub fn insert_at_random<T: Copy, R: Rng + ?Sized>(base: &[T], extra: &[T], rng: &mut R) -> (Vec<T>, Vec<usize>) {
    let total = base.len() + extra.len();
    let mut positions = index::sample(rng, total, extra.len()).into_vec();
    positions.sort_unstable();
    let mut out = Vec::with_capacity(total);
    let (mut b, mut e) = (base.iter(), extra.iter());
    let mut next = positions.iter().peekable();
    for slot in 0..total {
        if next.peek() == Some(&&slot) {
            next.next();
            out.push(*e.next().expect("one extra item per position"));
        } else {
            out.push(*b.next().expect("base items fill the remaining slots"));
        }
    }
    (out, positions)
}

/// Drops the entries at `positions`.
pub fn remove_positions<T: Copy>(seq: &[T], positions: &[usize]) -> Vec<T> {
    seq.iter()
        .enumerate()
        .filter(|(i, _)| positions.binary_search(i).is_err())
        .map(|(_, p)| *p)
        .collect()
}

#[derive(Debug, Clone)]
pub struct CheckPairInsertion {
    pub s_a: Vec<Particle>,
    pub s_b: Vec<Particle>,
    pub positions_a: Vec<usize>,
    pub positions_b: Vec<usize>,
    pub classes: Vec<BellClass>,
    pub pairs: Vec<StateVector>,
}

/// Adds `count` random-class check pairs, A halves into S_A and B halves into
/// S_B, each at independent random positions.
pub fn insert_check_pairs<R: Rng + ?Sized>(
    s_a: &[Particle],
    s_b: &[Particle],
    count: usize,
    rng: &mut R,
) -> CheckPairInsertion {
    let classes: Vec<BellClass> = (0..count).map(|_| BellClass::ALL[rng.random_range(0..4)]).collect();
    let halves = |side| {
        (0..count)
            .map(|pair| Particle::Sample { pair, side })
            .collect::<Vec<_>>()
    };
    let (new_a, positions_a) = insert_at_random(s_a, &halves(Side::A), rng);
    let (new_b, positions_b) = insert_at_random(s_b, &halves(Side::B), rng);
    CheckPairInsertion {
        s_a: new_a,
        s_b: new_b,
        positions_a,
        positions_b,
        pairs: classes.iter().map(|&c| prepare_bell(c)).collect(),
        classes,
    }
}

#[derive(Debug, Clone)]
pub struct DecoyInsertion {
    pub s_a: Vec<Particle>,
    pub positions: Vec<usize>,
    pub states: Vec<BasisState>,
}

/// Adds `count` decoys, each uniform over `|0>, |1>, |+>, |->`.
pub fn insert_decoys<R: Rng + ?Sized>(s_a: &[Particle], count: usize, rng: &mut R) -> DecoyInsertion {
    let states: Vec<BasisState> = (0..count).map(|_| BasisState::ALL[rng.random_range(0..4)]).collect();
    let decoys: Vec<Particle> = (0..count).map(|id| Particle::Decoy { id }).collect();
    let (new_a, positions) = insert_at_random(s_a, &decoys, rng);
    DecoyInsertion {
        s_a: new_a,
        positions,
        states,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn prepare_counts_and_pairing() {
        let b = prepare_blocks(3, EncodingConvention::OddFirst, None, &mut rng(1)).unwrap();
        assert_eq!((b.s_a.len(), b.s_b.len(), b.pairs.len()), (6, 6, 6));
        for g in &b.groups {
            let n = g.index - 1;
            assert_eq!(b.pairs[2 * n], prepare_bell(g.initial_class));
            assert_eq!(b.pairs[2 * n + 1], prepare_bell(g.initial_class));
        }
        assert_eq!(b.s_a[3], Particle::Message { pair: 3, side: Side::A });
        assert!(matches!(
            prepare_blocks(0, EncodingConvention::OddFirst, None, &mut rng(1)),
            Err(ProtocolError::NoGroups)
        ));
    }

    #[test]
    fn forced_classes() {
        let b = prepare_blocks(
            1,
            EncodingConvention::OddFirst,
            Some(&[BellClass::PsiMinus]),
            &mut rng(1),
        )
        .unwrap();
        assert_eq!(b.groups[0].initial_class, BellClass::PsiMinus);
        assert_eq!(b.pairs, vec![prepare_bell(BellClass::PsiMinus); 2]);
        assert!(prepare_blocks(
            2,
            EncodingConvention::OddFirst,
            Some(&[BellClass::PsiMinus]),
            &mut rng(1)
        )
        .is_err());
    }

    #[test]
    fn class_frequencies_are_uniform() {
        let b = prepare_blocks(10_000, EncodingConvention::OddFirst, None, &mut rng(2)).unwrap();
        let mut counts = [0usize; 4];
        for g in &b.groups {
            counts[g.initial_class.index()] += 1;
        }
        // chi-square with 3 dof; 16.27 is the 0.001 critical value
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - 2500.0).powi(2) / 2500.0).sum();
        assert!(chi2 < 16.27, "{counts:?}");
        for c in counts {
            assert!((c as f64 / 10_000.0 - 0.25).abs() < 0.02);
        }
    }

    #[test]
    fn check_pair_round_trip() {
        let b = prepare_blocks(2, EncodingConvention::OddFirst, None, &mut rng(3)).unwrap();
        let none = insert_check_pairs(&b.s_a, &b.s_b, 0, &mut rng(4));
        assert_eq!((none.s_a.clone(), none.s_b.clone()), (b.s_a.clone(), b.s_b.clone()));
        let ins = insert_check_pairs(&b.s_a, &b.s_b, 4, &mut rng(4));
        assert_eq!(ins.s_b.len(), 8);
        assert_eq!(remove_positions(&ins.s_a, &ins.positions_a), b.s_a);
        assert_eq!(remove_positions(&ins.s_b, &ins.positions_b), b.s_b);
        for (k, &p) in ins.positions_b.iter().enumerate() {
            assert_eq!(ins.s_b[p], Particle::Sample { pair: k, side: Side::B });
        }
    }

    #[test]
    fn decoy_round_trip_and_frequencies() {
        let b = prepare_blocks(2, EncodingConvention::OddFirst, None, &mut rng(5)).unwrap();
        assert_eq!(insert_decoys(&b.s_a, 0, &mut rng(6)).s_a, b.s_a);
        let ins = insert_decoys(&b.s_a, 10_000, &mut rng(6));
        assert_eq!(remove_positions(&ins.s_a, &ins.positions), b.s_a);
        let mut counts = [0usize; 4];
        for s in &ins.states {
            counts[BasisState::ALL.iter().position(|x| x == s).unwrap()] += 1;
        }
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - 2500.0).powi(2) / 2500.0).sum();
        assert!(chi2 < 16.27, "{counts:?}");
        for c in counts {
            assert!((c as f64 / 10_000.0 - 0.25).abs() < 0.02);
        }
    }
}
