//! `gbal`: solve, generate, verify and benchmark restricted assignment
//! instances with two-machine heavy jobs.
//!
//! Exit codes: 0 success, 1 bad input or failed validation, 2 internal
//! invariant violation.

mod bench;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use gbal_core::certificate::Declaration;
use gbal_core::generate::{generate_adversarial_path, generate_general, generate_two_valued};
use gbal_core::model::{parse_fraction, IndexedInstance, Instance};
use gbal_core::oracle::{exact_opt, feasible_at, verify_certificate, verify_solution, Verdict};
use gbal_core::{
    parse_instance, solve, validate, ModeHint, OracleError, Rational, Solution, SolveError, SolveMode, SolveOptions,
};

#[derive(Debug)]
pub enum Failure {
    /// Unreadable files, malformed documents, failed validation.
    Input(anyhow::Error),
    Internal(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 1,
            Failure::Internal(_) => 2,
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Input(e)
    }
}

impl From<gbal_core::ModelError> for Failure {
    fn from(e: gbal_core::ModelError) -> Self {
        Failure::Input(e.into())
    }
}

impl From<SolveError> for Failure {
    fn from(e: SolveError) -> Self {
        match e {
            SolveError::Model(m) => Failure::Input(m.into()),
            other => Failure::Internal(other.into()),
        }
    }
}

impl From<OracleError> for Failure {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::Solve(s) => s.into(),
            other => Failure::Input(other.into()),
        }
    }
}

type CliResult<T = ()> = Result<T, Failure>;

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Auto,
    TwoValued,
    General,
}

impl From<ModeArg> for ModeHint {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Auto => ModeHint::Auto,
            ModeArg::TwoValued => ModeHint::TwoValued,
            ModeArg::General => ModeHint::General,
        }
    }
}

fn parse_beta(s: &str) -> Result<Rational, String> {
    parse_fraction(s).map_err(|e| e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "gbal", version, about = "Makespan minimization with two-machine heavy jobs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve an instance and print the solution as JSON.
    Solve {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "auto")]
        mode: ModeArg,
        /// Heavy-job threshold `p/q` in [4/7, 1); required in general mode.
        #[arg(long, value_parser = parse_beta)]
        beta: Option<Rational>,
        /// Write the JSON-lines event log here.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a seeded random or structured instance.
    Generate {
        #[command(subcommand)]
        family: Family,
    },
    /// Check a solution or a declaration against an instance.
    Verify { instance: PathBuf, document: PathBuf },
    /// Exact optimum, or feasibility at `--t`, by branch and bound.
    Oracle {
        instance: PathBuf,
        #[arg(long)]
        t: Option<i64>,
    },
    /// Solve every `*.json` instance in a directory and print a CSV summary.
    Bench {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long, value_enum, default_value = "auto")]
        mode: ModeArg,
        #[arg(long, value_parser = parse_beta)]
        beta: Option<Rational>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
enum Family {
    TwoValued {
        #[arg(long)]
        m: usize,
        /// Number of heavy jobs.
        #[arg(long)]
        heavy: usize,
        /// Number of light jobs.
        #[arg(long)]
        light: usize,
        /// Heavy weight.
        #[arg(long = "W")]
        big_w: i64,
        /// Light weight.
        #[arg(long = "w")]
        small_w: i64,
        /// Most machines a light job may list; defaults to `m`.
        #[arg(long)]
        max_degree: Option<usize>,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    General {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, value_parser = parse_beta)]
        beta: Rational,
        #[arg(long)]
        w_max: i64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    AdversarialPath {
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 100)]
        scale: i64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

pub fn read_instance(path: &Path) -> CliResult<Instance> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_instance(&text)
        .with_context(|| format!("{} is not a valid instance", path.display()))
        .map_err(Failure::Input)
}

/// Validates `instance` for the requested mode and returns it indexed.
pub fn resolve(instance: &Instance, mode: ModeArg, beta: Option<Rational>) -> CliResult<(IndexedInstance, SolveMode)> {
    let hint = match mode {
        ModeArg::Auto => instance.mode_hint,
        other => other.into(),
    };
    let mode = validate(instance, hint, beta)?.into_mode()?;
    Ok((instance.indexed()?, mode))
}

fn emit(text: &str, out: Option<&Path>) -> CliResult {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))?,
        None => println!("{}", text.trim_end()),
    }
    Ok(())
}

fn run_solve(
    file: &Path,
    mode: ModeArg,
    beta: Option<Rational>,
    trace: Option<&Path>,
    out: Option<&Path>,
) -> CliResult {
    let instance = read_instance(file)?;
    let (indexed, mode) = resolve(&instance, mode, beta)?;
    let report = solve(&indexed, mode, &SolveOptions { trace: trace.is_some() })?;
    let (valid, makespan) = verify_solution(&indexed, &report.solution.assignment);
    if !valid || makespan != report.solution.makespan {
        return Err(Failure::Internal(anyhow!("solver output does not verify")));
    }
    if let Some(path) = trace {
        fs::write(path, report.trace.to_json_lines()).with_context(|| format!("cannot write {}", path.display()))?;
    }
    emit(&report.solution.to_json(), out)
}

fn run_generate(family: Family) -> CliResult {
    let (instance, out) = match family {
        Family::TwoValued {
            m,
            heavy,
            light,
            big_w,
            small_w,
            max_degree,
            seed,
            out,
        } => (
            generate_two_valued(m, heavy, light, big_w, small_w, max_degree.unwrap_or(m), seed)?,
            out,
        ),
        Family::General {
            m,
            n,
            beta,
            w_max,
            seed,
            out,
        } => (generate_general(m, n, beta, w_max, seed)?, out),
        Family::AdversarialPath { k, scale, out } => (generate_adversarial_path(k, scale)?, out),
    };
    emit(&instance.to_json(), out.as_deref())
}

/// Confirmed, refuted, or settled by exhaustive search when the certificate
/// alone does not decide.
fn check_declaration(instance: &IndexedInstance, decl: &Declaration) -> CliResult<(bool, String)> {
    let verdict = verify_certificate(instance, decl)?;
    Ok(match verdict {
        Verdict::Confirmed => (true, "confirmed".into()),
        Verdict::Refuted(why) => (false, format!("refuted: {why}")),
        Verdict::NeedsExhaustive => {
            let feasible = feasible_at(instance, decl.t)?;
            (
                !feasible,
                format!("exhaustive search: feasible at {} is {feasible}", decl.t),
            )
        }
    })
}

fn run_verify(instance: &Path, document: &Path) -> CliResult {
    let instance = read_instance(instance)?.indexed()?;
    let text = fs::read_to_string(document).with_context(|| format!("cannot read {}", document.display()))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("{} is not JSON", document.display()))?;
    if value.get("assignment").is_some() {
        let solution: Solution = serde_json::from_value(value).context("malformed solution")?;
        let (valid, makespan) = verify_solution(&instance, &solution.assignment);
        if !valid {
            return Err(Failure::Input(anyhow!("assignment is not valid for this instance")));
        }
        if makespan != solution.makespan {
            return Err(Failure::Input(anyhow!(
                "makespan is {makespan}, the solution claims {}",
                solution.makespan
            )));
        }
        for decl in &solution.declarations {
            let (ok, note) = check_declaration(&instance, decl)?;
            if !ok {
                return Err(Failure::Input(anyhow!("declaration at t = {}: {note}", decl.t)));
            }
        }
        let ratio = match solution.lower_bound {
            0 => Rational::from_integer(1),
            lb => Rational::new(makespan, lb),
        };
        if solution.lower_bound > solution.t_star || solution.ratio_certified != ratio {
            return Err(Failure::Input(anyhow!("bounds or ratio are inconsistent")));
        }
        println!("valid: makespan {makespan}");
        Ok(())
    } else {
        let decl: Declaration = serde_json::from_value(value).context("malformed declaration")?;
        let (ok, note) = check_declaration(&instance, &decl)?;
        println!("{} at t = {}: {note}", decl.certificate.kind(), decl.t);
        if ok {
            Ok(())
        } else {
            Err(Failure::Input(anyhow!("declaration does not hold")))
        }
    }
}

fn run_oracle(instance: &Path, t: Option<i64>) -> CliResult {
    let instance = read_instance(instance)?.indexed()?;
    let value = match t {
        Some(t) => serde_json::json!({ "t": t, "feasible": feasible_at(&instance, t)? }),
        None => serde_json::json!({ "opt": exact_opt(&instance)? }),
    };
    println!("{value}");
    Ok(())
}

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Solve {
            file,
            mode,
            beta,
            trace,
            out,
        } => run_solve(&file, mode, beta, trace.as_deref(), out.as_deref()),
        Command::Generate { family } => run_generate(family),
        Command::Verify { instance, document } => run_verify(&instance, &document),
        Command::Oracle { instance, t } => run_oracle(&instance, t),
        Command::Bench {
            dir,
            jobs,
            mode,
            beta,
            out,
        } => {
            let rows = bench::run(&dir, jobs, mode, beta)?;
            emit(&bench::to_csv(&rows)?, out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let code = f.code();
            let (Failure::Input(e) | Failure::Internal(e)) = f;
            eprintln!("error: {e:#}");
            ExitCode::from(code)
        }
    }
}
