use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use quadrel::relations::{betti_report, periods_report, validate_cycles, verify_middle};
use quadrel::report::{cohomology_report, local_report, TextTable};
use quadrel::scenario::{parse_scenario, Scenario};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "quadrel", version, about = "Quadratic relations between periods of meromorphic connections on P1")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse the scenario and check the connection, pairing and cycles.
    Validate(Args),
    /// Newton polygons, formal decompositions and Stokes sectors at each singular point.
    Local(Args),
    /// de Rham cohomology, the middle basis and the pairing matrix S.
    Cohomology(Args),
    /// Cycle validation and the intersection matrix B.
    Betti(Args),
    /// Period matrices by both finite-part recipes.
    Periods(Args),
    /// The full middle-dimension quadratic relation.
    Verify(Args),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(clap::Args)]
struct Args {
    /// Scenario file.
    scenario: PathBuf,
    /// Working precision in decimal digits.
    #[arg(long)]
    precision: Option<u32>,
    /// Absolute tolerance on matrix entries.
    #[arg(long)]
    tolerance: Option<f64>,
    /// Pole bound for the de Rham section spaces.
    #[arg(long)]
    pole_bound: Option<u32>,
    /// Truncation order of the formal primitives.
    #[arg(long)]
    truncation: Option<i64>,
    /// Also write the JSON report to this file.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

/// Exit codes: 0 pass, 1 input error, 2 mathematical failure.
enum Outcome {
    Pass,
    Fail,
}

fn load(args: &Args) -> quadrel::Result<Scenario> {
    let src = std::fs::read_to_string(&args.scenario)
        .map_err(|e| quadrel::Error::Input(format!("cannot read {}: {e}", args.scenario.display())))?;
    let mut scn = parse_scenario(&src)?;
    if let Some(p) = args.precision {
        scn.policy.digits = p;
    }
    if let Some(t) = args.tolerance {
        scn.policy.tolerance = t;
    }
    if args.pole_bound.is_some() {
        scn.pole_bound = args.pole_bound;
    }
    if args.truncation.is_some() {
        scn.truncation = args.truncation;
    }
    scn.policy.validate()?;
    Ok(scn)
}

fn emit<R: Serialize + TextTable>(args: &Args, r: &R) -> anyhow::Result<()> {
    let json = serde_json::to_string_pretty(r)?;
    if let Some(path) = &args.report {
        std::fs::write(path, format!("{json}\n")).with_context(|| format!("writing {}", path.display()))?;
    }
    match args.format {
        Format::Text => print!("{}", r.text()),
        Format::Json => println!("{json}"),
    }
    Ok(())
}

#[derive(Serialize)]
struct ValidateReport {
    name: String,
    rank: usize,
    singular: Vec<String>,
    pairing: String,
    cycles: Vec<quadrel::relations::CycleCheck>,
    pass: bool,
}

impl TextTable for ValidateReport {
    fn text(&self) -> String {
        let mut out = format!(
            "scenario {} (rank {}, {} pairing)\nsingular points: {}\n",
            self.name,
            self.rank,
            self.pairing,
            self.singular.join(", ")
        );
        for c in &self.cycles {
            out += &format!(
                "  {:<4} {:<12} {:<4} defect {:.2e}{}\n",
                if c.ok { "ok" } else { "FAIL" },
                c.name,
                c.class,
                c.defect,
                c.error.as_ref().map(|e| format!("  {e}")).unwrap_or_default()
            );
        }
        out += if self.pass { "status: PASS\n" } else { "status: FAIL\n" };
        out
    }
}

fn run(cmd: &Command) -> quadrel::Result<anyhow::Result<Outcome>> {
    let outcome = |pass: bool| if pass { Outcome::Pass } else { Outcome::Fail };
    Ok(match cmd {
        Command::Validate(a) => {
            let scn = load(a)?;
            let cycles = validate_cycles(&scn)?;
            let pass = cycles.iter().all(|c| c.ok);
            let r = ValidateReport {
                name: scn.name.clone(),
                rank: scn.connection.rank(),
                singular: scn.connection.singular.iter().map(|p| p.to_string()).collect(),
                pairing: scn.connection.pairing.class_name().into(),
                cycles,
                pass,
            };
            emit(a, &r).map(|_| outcome(pass))
        }
        Command::Local(a) => {
            let r = local_report(&load(a)?)?;
            emit(a, &r).map(|_| Outcome::Pass)
        }
        Command::Cohomology(a) => {
            let r = cohomology_report(&load(a)?)?;
            emit(a, &r).map(|_| Outcome::Pass)
        }
        Command::Betti(a) => {
            let r = betti_report(&load(a)?)?;
            emit(a, &r).map(|_| outcome(r.pass))
        }
        Command::Periods(a) => {
            let r = periods_report(&load(a)?)?;
            emit(a, &r).map(|_| outcome(r.pass))
        }
        Command::Verify(a) => {
            let r = verify_middle(&load(a)?)?;
            emit(a, &r).map(|_| outcome(r.pass))
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(Ok(Outcome::Pass)) => ExitCode::SUCCESS,
        Ok(Ok(Outcome::Fail)) => ExitCode::from(2),
        Ok(Err(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error [{}]: {e}", e.kind());
            ExitCode::from(if e.is_input_error() { 1 } else { 2 })
        }
    }
}
