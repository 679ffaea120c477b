//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Runs without the libtest harness so the lines always print.

use std::process::{Command, ExitCode};

use qdialogue::adversary::{detection_stats, AttackModel, CheckKind};
use qdialogue::analysis::{
    attack_eigenvalues, build_rho, conditional_entropy, eve_info, grid, leakage_audit, shannon_entropy,
    transcript_efficiency, von_neumann_info, AttackAnalysisParams,
};
use qdialogue::bellalg::{BellClass, Collection, PauliCode, SwapTable};
use qdialogue::protocol::{run_session, EncodingConvention, GroupTally, SecretMessage, SessionConfig};
use qdialogue::qsim::{collapse_bell, compose, prepare_bell, reduced_density, DensityMatrix};
use qdialogue::rng::{stream, Stream};
use qdialogue::verify::{joint_swap_probabilities, verify_table};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn swap_table_oracle() -> Outcome {
    let mut worst: f64 = 0.0;
    for first in BellClass::ALL {
        for second in BellClass::ALL {
            let cell = SwapTable::STANDARD.collection(first, second);
            let members = cell.members();
            let direct = joint_swap_probabilities(first, second).map_err(|e| e.to_string())?;
            // second route: sequential projection with the simulator
            let psi = compose(&[prepare_bell(first), prepare_bell(second)]).map_err(|e| e.to_string())?;
            for ma in BellClass::ALL {
                let (pa, rest) = collapse_bell(&psi, (0, 2), ma).map_err(|e| e.to_string())?;
                let pb = match rest {
                    Some(r) => r.bell_probabilities(0, 1).map_err(|e| e.to_string())?,
                    None => [0.0; 4],
                };
                for mb in BellClass::ALL {
                    let target = if members.contains(&(ma, mb)) { 0.25 } else { 0.0 };
                    let sequential = pa * pb[mb.index()];
                    let dev = (direct[ma.index()][mb.index()] - target)
                        .abs()
                        .max((sequential - target).abs());
                    worst = worst.max(dev);
                    ensure(dev < 1e-12, || {
                        format!("cell ({first}, {second}) outcome ({ma}, {mb}): deviation {dev:e}")
                    })?;
                }
            }
        }
    }
    let report = verify_table(&SwapTable::STANDARD).map_err(|e| e.to_string())?;
    ensure(report.all_passed(), || report.render())?;
    Ok(format!("16 cells, max deviation {worst:.1e}"))
}

fn dialogue_round_trip() -> Outcome {
    let mut cases = 0;
    let mut seed = 0;
    for convention in EncodingConvention::ALL {
        for chi in BellClass::ALL {
            for ua in PauliCode::ALL {
                for ub in PauliCode::ALL {
                    seed += 1;
                    let mut c = SessionConfig::new(1, seed);
                    c.convention = convention;
                    c.forced_initial = Some(vec![chi]);
                    c.alice_secret = Some(SecretMessage::from_ops(&[ua]));
                    c.bob_secret = Some(SecretMessage::from_ops(&[ub]));
                    let t = run_session(c).map_err(|e| e.to_string())?;
                    ensure(t.decoded_correctly(), || {
                        format!("{convention:?} χ={chi} alice={ua} bob={ub}: decoded {:?}", t.decoded)
                    })?;
                    cases += 1;
                }
            }
        }
    }
    let mut c = SessionConfig::new(1, 13);
    c.forced_initial = Some(vec![BellClass::PsiMinus]);
    c.alice_secret = Some("01".parse().unwrap());
    c.bob_secret = Some("11".parse().unwrap());
    let t = run_session(c).map_err(|e| e.to_string())?;
    let g = &t.groups[0];
    ensure(g.announced == Some(Collection::C3), || {
        format!("worked example announced {:?}", g.announced)
    })?;
    let by_alice = t.decoded.by_alice.as_ref().map(ToString::to_string);
    let by_bob = t.decoded.by_bob.as_ref().map(ToString::to_string);
    ensure(
        by_alice.as_deref() == Some("11") && by_bob.as_deref() == Some("01"),
        || format!("worked example decoded alice {by_alice:?}, bob {by_bob:?}"),
    )?;
    Ok(format!("{cases} cases; Ψ- with 01/11 announces C3, reads 11 and 01"))
}

fn eve_information_curve() -> Outcome {
    let ds = grid(0.01).map_err(|e| e.to_string())?;
    ensure(ds.len() == 101, || format!("grid has {} points", ds.len()))?;
    let mut worst: f64 = 0.0;
    let mut curve = Vec::with_capacity(ds.len());
    for &d in &ds {
        let closed = eve_info(d).map_err(|e| e.to_string())?;
        let ev = attack_eigenvalues(&AttackAnalysisParams::uniform(d).unwrap()).map_err(|e| e.to_string())?;
        let via_spectrum = von_neumann_info(&ev).map_err(|e| e.to_string())?;
        worst = worst.max((closed - via_spectrum).abs());
        curve.push(closed);
    }
    ensure(worst < 1e-9, || format!("closed form vs spectrum differ by {worst:e}"))?;
    ensure(curve[0] == 1.0 && curve[100] == 1.0 && curve[50] == 2.0, || {
        format!("endpoints/peak {} {} {}", curve[0], curve[100], curve[50])
    })?;
    ensure(curve[..=50].windows(2).all(|w| w[1] > w[0]), || {
        "not strictly increasing on [0, 1/2]".into()
    })?;
    for i in 0..=100 {
        ensure((curve[i] - curve[100 - i]).abs() < 1e-12, || {
            format!("asymmetric at d={}", ds[i])
        })?;
    }
    let priors = [
        [0.25; 4],
        [0.1, 0.2, 0.3, 0.4],
        [0.4, 0.1, 0.1, 0.4],
        [0.7, 0.05, 0.2, 0.05],
        [0.0, 0.5, 0.5, 0.0],
    ];
    let mut points = 0;
    let mut diag_worst: f64 = 0.0;
    for p in priors {
        for k in 0..=10 {
            let params = AttackAnalysisParams::new(p, k as f64 / 10.0).unwrap();
            let numeric = build_rho(&params).map_err(|e| e.to_string())?.eigenvalues();
            let mut closed = attack_eigenvalues(&params).map_err(|e| e.to_string())?.to_vec();
            closed.sort_by(f64::total_cmp);
            for (a, b) in numeric.iter().zip(&closed) {
                diag_worst = diag_worst.max((a - b).abs());
            }
            points += 1;
        }
    }
    ensure(diag_worst < 1e-9, || {
        format!("diagonalization differs by {diag_worst:e}")
    })?;
    Ok(format!(
        "101 grid points, route gap {worst:.1e}; {points} priors×d points, eigen gap {diag_worst:.1e}"
    ))
}

fn reduced_state_mixed() -> Outcome {
    let half = DensityMatrix::maximally_mixed(2);
    let mut worst: f64 = 0.0;
    for class in BellClass::ALL {
        for q in 0..2 {
            let rho = reduced_density(&prepare_bell(class), &[q]).map_err(|e| e.to_string())?;
            let diff = rho.max_abs_diff(&half);
            worst = worst.max(diff);
            ensure(diff < 1e-12, || format!("{class} particle {q}: deviation {diff:e}"))?;
        }
    }
    Ok(format!("8 reduced states, max deviation {worst:.1e}"))
}

fn detection_statistics() -> Outcome {
    let (mut samples, mut errors) = (0, 0);
    for seed in 0..50 {
        let mut c = SessionConfig::new(20, 1000 + seed);
        c.check_pairs = Some(100);
        c.decoys = Some(100);
        let t = run_session(c).map_err(|e| e.to_string())?;
        for check in &t.checks {
            samples += check.samples_tested;
            errors += check.mismatches;
        }
        ensure(!t.is_aborted(), || format!("attack-free session {seed} aborted"))?;
    }
    ensure(samples >= 10_000 && errors == 0, || {
        format!("{errors} errors in {samples} attack-free samples")
    })?;

    let mut rng = stream(2024, Stream::Attack);
    let trials = 10_000;
    let mut notes = vec![format!("attack-free 0/{samples}")];
    for (kind, name) in [(CheckKind::BellPairs, "check one"), (CheckKind::Decoys, "check two")] {
        let est = detection_stats(AttackModel::MeasureResend, kind, trials, &mut rng).map_err(|e| e.to_string())?;
        ensure((est.rate - 0.25).abs() <= 0.02, || {
            format!("measure-resend {name}: {}", est.rate)
        })?;
        notes.push(format!("measure-resend {name} {:.4}", est.rate));
    }
    for strength in [0.1, 0.3, 0.5] {
        let attack = AttackModel::entangle(strength).unwrap();
        let est = detection_stats(attack, CheckKind::ZDecoys, trials, &mut rng).map_err(|e| e.to_string())?;
        ensure((est.rate - strength).abs() <= 0.02, || {
            format!("entangle {strength}: flip rate {}", est.rate)
        })?;
        notes.push(format!("entangle {strength} flip {:.4}", est.rate));
    }
    Ok(notes.join(", "))
}

fn efficiency() -> Outcome {
    let mut transcripts = 0;
    for (groups, seed, convention) in [
        (1, 1, EncodingConvention::OddFirst),
        (8, 2, EncodingConvention::OddFirst),
        (8, 3, EncodingConvention::EvenFirst),
        (25, 4, EncodingConvention::OddFirst),
    ] {
        let mut c = SessionConfig::new(groups, seed);
        c.convention = convention;
        let t = run_session(c).map_err(|e| e.to_string())?;
        ensure(t.tallies.per_group.len() == groups, || {
            format!("{} tallies for {groups} groups", t.tallies.per_group.len())
        })?;
        ensure(
            t.tallies.per_group.iter().all(|g| {
                *g == GroupTally {
                    secret_bits: 4,
                    message_qubits: 4,
                    announcement_bits: 2,
                }
            }),
            || format!("per-group tallies {:?}", t.tallies.per_group),
        )?;
        let eta = transcript_efficiency(&t).map_err(|e| e.to_string())?.eta;
        ensure(eta == 2.0 / 3.0, || format!("eta {eta} for N={groups}"))?;
        transcripts += 1;
    }
    Ok(format!("{transcripts} transcripts, tallies (4,4,2), eta = 2/3"))
}

fn leakage() -> Outcome {
    let uniform: std::collections::BTreeMap<(u8, u8), f64> = (0..16).map(|x| ((x, 0), 1.0 / 16.0)).collect();
    let h_uniform = conditional_entropy(&uniform);
    ensure(
        (h_uniform - 4.0).abs() < 1e-12 && (shannon_entropy(&[1.0 / 16.0; 16]) - 4.0).abs() < 1e-12,
        || format!("uniform-16 entropy {h_uniform}"),
    )?;
    ensure(shannon_entropy(&[1.0, 0.0, 0.0]) == 0.0, || {
        "deterministic entropy nonzero".into()
    })?;
    let a = leakage_audit();
    ensure(a.cases == 64, || format!("{} cases", a.cases))?;
    ensure((a.total_probability - 1.0).abs() < 1e-12, || {
        format!("total probability {}", a.total_probability)
    })?;
    ensure((a.prior_entropy - 4.0).abs() < 1e-12, || {
        format!("prior entropy {}", a.prior_entropy)
    })?;
    ensure(a.conditional_entropy <= a.prior_entropy + 1e-12, || {
        "H(X|C) > H(X)".into()
    })?;
    ensure(
        (a.mutual_information - (a.prior_entropy - a.conditional_entropy)).abs() < 1e-12,
        || "mutual information inconsistent".into(),
    )?;
    ensure(a.claimed_conditional_entropy == 4.0, || {
        "claimed figure missing".into()
    })?;
    Ok(format!(
        "H(uA,uB)={}, H(uA,uB|C)={} (claimed {}), I={}",
        a.prior_entropy, a.conditional_entropy, a.claimed_conditional_entropy, a.mutual_information
    ))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut bytes = Vec::new();
    for run in 0..2 {
        let path = dir.path().join(format!("t{run}.json"));
        let status = Command::new(env!("CARGO_BIN_EXE_qdialogue"))
            .args([
                "run",
                "--groups",
                "6",
                "--seed",
                "77",
                "--attack",
                "entangle:0.2",
                "--threshold",
                "1",
            ])
            .arg("--output")
            .arg(&path)
            .output()
            .map_err(|e| e.to_string())?
            .status;
        ensure(status.code() == Some(0), || format!("run exited with {status}"))?;
        bytes.push(std::fs::read(&path).map_err(|e| e.to_string())?);
    }
    ensure(bytes[0] == bytes[1], || "transcripts differ".into())?;
    Ok(format!("two transcripts of {} bytes identical", bytes[0].len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("swap-table oracle equivalence", swap_table_oracle),
        ("dialogue round trip", dialogue_round_trip),
        ("eve information curve", eve_information_curve),
        ("reduced-state indistinguishability", reduced_state_mixed),
        ("detection statistics", detection_statistics),
        ("efficiency", efficiency),
        ("leakage audit", leakage),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {} {name}: PASS ({detail})", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({why})", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
