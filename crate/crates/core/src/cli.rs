//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 protocol abort,
//! 3 table verification failure.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::adversary::{detection_stats, AttackModel, AttackTarget, CheckKind, DetectionEstimate};
use crate::analysis::{emit_fig1, eve_info, fig1_csv, leakage_audit, transcript_efficiency, EfficiencyReport};
use crate::bellalg::{BellClass, SwapTable};
use crate::protocol::{run_session, EncodingConvention, SecretMessage, SessionConfig};
use crate::rng::{stream, Stream};
use crate::verify::verify_table;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_ABORT: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "qdialogue",
    version,
    about = "Bell-state entanglement-swapping quantum dialogue simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one seeded session and write its transcript.
    Run(RunArgs),
    /// Check the swap table against explicit amplitude computation.
    VerifyTable {
        /// Alternative table: four rows of four labels C0..C3.
        #[arg(long)]
        table: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Emit the information-versus-detection curve as CSV.
    Fig1 {
        #[arg(long, default_value_t = 0.01)]
        step: f64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Enumerate the announcement leakage and report the entropies.
    Audit {
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Monte Carlo detection rates for a list of attacks.
    Sweep {
        /// Comma-separated attack specs.
        #[arg(
            long,
            default_value = "none,measure-resend,intercept,entangle:0.1,entangle:0.3,entangle:0.5"
        )]
        attacks: String,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub groups: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// none | measure-resend | intercept | entangle:<beta2>
    #[arg(long, default_value = "none")]
    pub attack: String,
    /// both | sb | sa
    #[arg(long, default_value = "both")]
    pub attack_target: String,
    /// Check pairs in the first check (default 2N).
    #[arg(long)]
    pub check_pairs: Option<usize>,
    /// Decoys in the second check (default 2N).
    #[arg(long)]
    pub decoys: Option<usize>,
    #[arg(long, default_value_t = 0.0)]
    pub threshold: f64,
    /// odd-first | even-first
    #[arg(long, default_value = "odd-first")]
    pub convention: String,
    /// Comma-separated initial class per group, e.g. `Psi-,Phi+`.
    #[arg(long)]
    pub initial: Option<String>,
    /// Alice's secret as 2N bits.
    #[arg(long)]
    pub alice: Option<String>,
    /// Bob's secret as 2N bits.
    #[arg(long)]
    pub bob: Option<String>,
    /// Transcript path; stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

impl RunArgs {
    pub fn to_config(&self) -> Result<SessionConfig, String> {
        let mut c = SessionConfig::new(self.groups, self.seed);
        c.attack = self.attack.parse().map_err(|e| format!("{e}"))?;
        c.attack_target = self.attack_target.parse::<AttackTarget>().map_err(|e| format!("{e}"))?;
        c.check_pairs = self.check_pairs;
        c.decoys = self.decoys;
        c.threshold = self.threshold;
        c.convention = self
            .convention
            .parse::<EncodingConvention>()
            .map_err(|e| format!("{e}"))?;
        if let Some(list) = &self.initial {
            let classes = list
                .split(',')
                .map(str::parse::<BellClass>)
                .collect::<Result<Vec<_>, _>>();
            c.forced_initial = Some(classes.map_err(|e| format!("{e}"))?);
        }
        let secret = |s: &Option<String>| s.as_deref().map(str::parse::<SecretMessage>).transpose();
        c.alice_secret = secret(&self.alice).map_err(|e| format!("{e}"))?;
        c.bob_secret = secret(&self.bob).map_err(|e| format!("{e}"))?;
        c.validate().map_err(|e| format!("{e}"))?;
        Ok(c)
    }
}

/// Writes `text` to `path`, or to `stdout` when there is no path.
fn emit(path: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<(), String> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| format!("cannot write {}: {e}", p.display())),
        None => stdout.write_all(text.as_bytes()).map_err(|e| e.to_string()),
    }
}

fn cmd_run(args: &RunArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, String> {
    let config = args.to_config()?;
    let transcript = run_session(config).map_err(|e| e.to_string())?;
    let mut json = transcript.to_json();
    json.push('\n');
    emit(args.output.as_deref(), &json, out)?;
    if transcript.is_aborted() {
        let check = transcript.checks.last().expect("abort follows a check");
        let _ = writeln!(
            err,
            "aborted: security check {} found {} of {} samples wrong (error rate {:.4} > threshold {})",
            check.check_id, check.mismatches, check.samples_tested, check.error_rate, check.threshold
        );
        return Ok(EXIT_ABORT);
    }
    if args.output.is_some() {
        let eta = transcript_efficiency(&transcript).map(|e| e.eta).unwrap_or(0.0);
        let _ = writeln!(
            out,
            "completed {} groups; decoded correctly: {}; efficiency {:.4}",
            transcript.groups.len(),
            transcript.decoded_correctly(),
            eta
        );
    }
    Ok(EXIT_OK)
}

fn cmd_verify(table: Option<&Path>, output: Option<&Path>, out: &mut dyn Write) -> Result<i32, String> {
    let table = match table {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| format!("cannot read {}: {e}", p.display()))?;
            SwapTable::parse(&text).map_err(|e| e.to_string())?
        }
        None => SwapTable::STANDARD,
    };
    let report = verify_table(&table).map_err(|e| e.to_string())?;
    emit(output, &report.render(), out)?;
    Ok(if report.all_passed() { EXIT_OK } else { EXIT_VERIFY })
}

#[derive(Debug, Serialize)]
struct AuditDocument {
    audit: crate::analysis::LeakageAudit,
    efficiency: EfficiencyReport,
}

fn cmd_audit(output: Option<&Path>, out: &mut dyn Write) -> Result<i32, String> {
    let efficiency = crate::analysis::cabello_efficiency(4, 4, 2).map_err(|e| e.to_string())?;
    let doc = AuditDocument {
        audit: leakage_audit(),
        efficiency,
    };
    let mut json = serde_json::to_string_pretty(&doc).map_err(|e| e.to_string())?;
    json.push('\n');
    emit(output, &json, out)?;
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
pub struct SweepRow {
    pub attack: AttackModel,
    pub check_one: DetectionEstimate,
    pub check_two: DetectionEstimate,
    /// Entangle-measure only: `(d, empirical Z-decoy flip rate, I(d))`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub entangle: Option<(f64, f64, f64)>,
}

/// Detection rates for each attack, each drawn from its own seeded stream.
pub fn sweep(attacks: &[AttackModel], trials: usize, seed: u64) -> Result<Vec<SweepRow>, String> {
    let mut rng = stream(seed, Stream::Attack);
    let mut rows = Vec::with_capacity(attacks.len());
    for &attack in attacks {
        let run = |kind, rng: &mut _| detection_stats(attack, kind, trials, rng).map_err(|e| e.to_string());
        let check_one = run(CheckKind::BellPairs, &mut rng)?;
        let check_two = run(CheckKind::Decoys, &mut rng)?;
        let entangle = match attack {
            AttackModel::EntangleMeasure { strength } => {
                let z = run(CheckKind::ZDecoys, &mut rng)?;
                Some((strength, z.rate, eve_info(strength).map_err(|e| e.to_string())?))
            }
            _ => None,
        };
        rows.push(SweepRow {
            attack,
            check_one,
            check_two,
            entangle,
        });
    }
    Ok(rows)
}

fn cmd_sweep(
    attacks: &str,
    trials: usize,
    seed: u64,
    output: Option<&Path>,
    out: &mut dyn Write,
) -> Result<i32, String> {
    if trials == 0 {
        return Err("--trials must be at least 1".into());
    }
    let models = attacks
        .split(',')
        .map(|s| s.trim().parse::<AttackModel>().map_err(|e| e.to_string()))
        .collect::<Result<Vec<_>, _>>()?;
    let rows = sweep(&models, trials, seed)?;
    let mut json = serde_json::to_string_pretty(&rows).map_err(|e| e.to_string())?;
    json.push('\n');
    emit(output, &json, out)?;
    Ok(EXIT_OK)
}

fn cmd_fig1(step: f64, output: Option<&Path>, out: &mut dyn Write) -> Result<i32, String> {
    let rows = emit_fig1(step).map_err(|e| e.to_string())?;
    emit(output, &fig1_csv(&rows), out)?;
    Ok(EXIT_OK)
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match &cli.command {
        Command::Run(args) => cmd_run(args, out, err),
        Command::VerifyTable { table, output } => cmd_verify(table.as_deref(), output.as_deref(), out),
        Command::Fig1 { step, output } => cmd_fig1(*step, output.as_deref(), out),
        Command::Audit { output } => cmd_audit(output.as_deref(), out),
        Command::Sweep {
            attacks,
            trials,
            seed,
            output,
        } => cmd_sweep(attacks, *trials, *seed, output.as_deref(), out),
    };
    match result {
        Ok(code) => code,
        Err(msg) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
    }
}
