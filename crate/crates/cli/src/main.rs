//! `nnreach`: solve reachability instances, compile 3-CNF formulas into them
//! and cross-check the two.
//!
//! Exit codes: 0 for REACHABLE, SAT, a valid witness or success; 1 for
//! UNREACHABLE, UNSAT, an invalid witness or a roundtrip mismatch; 2 for
//! usage, input and parse errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use nnreach::cnf::{random_cnf, CnfFormula};
use nnreach::formats::{
    parse_dimacs, parse_network, parse_spec, parse_verdict, serialize_dimacs, serialize_verdict, SpecRole,
};
use nnreach::reductions::{write_artifacts, Reduction};
use nnreach::{brute_force_sat, check_witness, eval_network, solve, Instance, Mode, Rational, Verdict};

#[derive(Parser)]
#[command(name = "nnreach", version, about = "Exact reachability for ReLU networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether some valid input reaches a valid output.
    Solve(SolveArgs),
    /// Compile a DIMACS formula into network and specification files.
    Compile(CompileArgs),
    /// Compile, solve and compare with the SAT oracle.
    Roundtrip(RoundtripArgs),
    /// Write a seeded random 3-CNF formula.
    GenCnf(GenCnfArgs),
    /// Print the network's outputs on one input.
    Eval(EvalArgs),
    /// Check the input of a verdict file against an instance.
    CheckWitness(CheckWitnessArgs),
    /// Decide a DIMACS formula by enumeration.
    Oracle(OracleArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Enumerate,
    Branch,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Enumerate => Mode::Enumerate,
            ModeArg::Branch => Mode::Branch,
        }
    }
}

#[derive(Args)]
struct InstanceArgs {
    #[arg(long)]
    network: PathBuf,
    #[arg(long)]
    input_spec: PathBuf,
    #[arg(long)]
    output_spec: PathBuf,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long, value_enum, default_value = "branch")]
    mode: ModeArg,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    threads: u32,
    /// Report the first witness in search order regardless of scheduling.
    #[arg(long)]
    deterministic: bool,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[command(flatten)]
    search: SearchArgs,
    /// Append `stat <name> <value>` lines.
    #[arg(long)]
    stats: bool,
}

#[derive(Args)]
struct ReductionArgs {
    #[arg(long)]
    cnf: PathBuf,
    /// bool-star, single-layer, one-input-relu, restricted or no-zero.
    #[arg(long)]
    reduction: String,
    #[arg(long, allow_hyphen_values = true)]
    c: Option<Rational>,
    #[arg(long, allow_hyphen_values = true)]
    d: Option<Rational>,
}

#[derive(Args)]
struct CompileArgs {
    #[command(flatten)]
    reduction: ReductionArgs,
    #[arg(long)]
    out: PathBuf,
    /// Base name of the written files; defaults to the formula's file stem.
    #[arg(long)]
    stem: Option<String>,
}

#[derive(Args)]
struct RoundtripArgs {
    #[command(flatten)]
    reduction: ReductionArgs,
    #[command(flatten)]
    search: SearchArgs,
}

#[derive(Args)]
struct GenCnfArgs {
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    vars: u32,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    clauses: u32,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    network: PathBuf,
    /// Input coordinates.
    #[arg(allow_hyphen_values = true, num_args = 0..)]
    input: Vec<Rational>,
}

#[derive(Args)]
struct CheckWitnessArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// Verdict file whose `input` line is checked.
    #[arg(long)]
    witness: PathBuf,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    cnf: PathBuf,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load_instance(a: &InstanceArgs) -> Result<Instance> {
    let network = parse_network(&read(&a.network)?).with_context(|| a.network.display().to_string())?;
    let input_spec =
        parse_spec(&read(&a.input_spec)?, SpecRole::Input).with_context(|| a.input_spec.display().to_string())?;
    let output_spec =
        parse_spec(&read(&a.output_spec)?, SpecRole::Output).with_context(|| a.output_spec.display().to_string())?;
    Ok(Instance::new(network, input_spec, output_spec)?)
}

fn load_cnf(path: &Path) -> Result<CnfFormula> {
    parse_dimacs(&read(path)?).with_context(|| path.display().to_string())
}

fn reduction(a: &ReductionArgs) -> Result<Reduction> {
    Ok(Reduction::from_parts(&a.reduction, a.c.clone(), a.d.clone())?)
}

fn run_search(inst: &Instance, s: &SearchArgs) -> (Verdict, nnreach::SolveStats) {
    solve(inst, s.mode.into(), s.threads as usize, s.deterministic)
}

fn cmd_solve(a: &SolveArgs) -> Result<u8> {
    let inst = load_instance(&a.instance)?;
    let (verdict, stats) = run_search(&inst, &a.search);
    println!("{}", serialize_verdict(&verdict));
    if a.stats {
        print!("{}", stats.lines());
    }
    Ok(if verdict.is_reachable() { 0 } else { 1 })
}

fn cmd_compile(a: &CompileArgs) -> Result<u8> {
    let r = reduction(&a.reduction)?;
    let cnf = load_cnf(&a.reduction.cnf)?;
    let out = r.compile(&cnf)?;
    let stem = match &a.stem {
        Some(s) => s.clone(),
        None => a
            .reduction
            .cnf
            .file_stem()
            .and_then(|s| s.to_str())
            .context("cannot derive a file stem; pass --stem")?
            .to_string(),
    };
    write_artifacts(&out, &r, &a.out, &stem).with_context(|| format!("cannot write to {}", a.out.display()))?;
    Ok(0)
}

fn cmd_roundtrip(a: &RoundtripArgs) -> Result<u8> {
    let r = reduction(&a.reduction)?;
    let cnf = load_cnf(&a.reduction.cnf)?;
    let sat = brute_force_sat(&cnf)?;
    let out = r.compile(&cnf)?;
    let (verdict, _) = run_search(&out.instance, &a.search);
    println!("solver {}", if verdict.is_reachable() { "REACHABLE" } else { "UNREACHABLE" });
    println!("oracle {sat}");
    if let Verdict::Reachable { input, .. } = &verdict {
        if !check_witness(&out.instance, input)? {
            bail!("solver returned an input that is not a witness");
        }
    }
    let agree = verdict.is_reachable() == sat.is_sat();
    println!("{}", if agree { "agree" } else { "MISMATCH" });
    Ok(if agree { 0 } else { 1 })
}

fn cmd_gen_cnf(a: &GenCnfArgs) -> Result<u8> {
    let cnf = random_cnf(a.vars as usize, a.clauses as usize, a.seed);
    fs::write(&a.out, serialize_dimacs(&cnf)).with_context(|| format!("cannot write {}", a.out.display()))?;
    Ok(0)
}

fn cmd_eval(a: &EvalArgs) -> Result<u8> {
    let net = parse_network(&read(&a.network)?).with_context(|| a.network.display().to_string())?;
    let y = eval_network(&net, &a.input)?;
    let text: Vec<String> = y.iter().map(Rational::to_string).collect();
    println!("{}", text.join(" "));
    Ok(0)
}

fn cmd_check_witness(a: &CheckWitnessArgs) -> Result<u8> {
    let inst = load_instance(&a.instance)?;
    let verdict = parse_verdict(&read(&a.witness)?).with_context(|| a.witness.display().to_string())?;
    let Verdict::Reachable { input, .. } = verdict else {
        bail!("{} holds no witness", a.witness.display());
    };
    let ok = check_witness(&inst, &input)?;
    println!("{}", if ok { "valid" } else { "invalid" });
    Ok(if ok { 0 } else { 1 })
}

fn cmd_oracle(a: &OracleArgs) -> Result<u8> {
    let sat = brute_force_sat(&load_cnf(&a.cnf)?)?;
    println!("{sat}");
    Ok(if sat.is_sat() { 0 } else { 1 })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Compile(a) => cmd_compile(a),
        Command::Roundtrip(a) => cmd_roundtrip(a),
        Command::GenCnf(a) => cmd_gen_cnf(a),
        Command::Eval(a) => cmd_eval(a),
        Command::CheckWitness(a) => cmd_check_witness(a),
        Command::Oracle(a) => cmd_oracle(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
