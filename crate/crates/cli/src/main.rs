//! `hcr`: batch driver for Remez, Nikol'skii, Riesz-product, and
//! discretization experiments on trigonometric polynomials.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hcr::fuzz::CheckKind;
use serde_json::{json, Map, Value};

use commands::{CmdResult, Outcome};
use config::{parse_b_schedule, parse_bytes, parse_exponent, parse_u32_list, parse_u64_list, BSchedule};

const EXIT_CONFIG: u8 = 2;
const EXIT_VIOLATION: u8 = 3;
const EXIT_RESOURCE: u8 = 4;

/// Default memory budget for grid evaluations (4 GiB).
const DEFAULT_MEM_BUDGET: u64 = 4 << 30;

#[derive(Parser, Debug)]
#[command(name = "hcr", version, about = "Remez and Nikol'skii experiments on hyperbolic-cross polynomials", args_override_self = true)]
struct Cli {
    /// Line-based `key = value` file; its entries act as flags placed before
    /// the command-line ones.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Memory budget in bytes (suffixes K, M, G); `HCR_MEM_BUDGET` overrides it.
    #[arg(long = "mem-budget", global = true, value_parser = parse_bytes)]
    mem_budget: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Largest Remez ratio over random polynomials on the hyperbolic cross.
    RemezScan(RemezScanArgs),
    /// Nikol'skii ratio estimates against their rate.
    NikolskiiScan(NikolskiiScanArgs),
    /// Corrected layer kernels and Remez checks on hyperbolic layers.
    RieszVerify(RieszArgs),
    /// Discretization constants of the candidate point sets and shift certificates.
    DiscretizeVerify(DiscretizeArgs),
    /// Seeded corpus of implication checks.
    ImplicationFuzz(FuzzArgs),
    /// Norms of the hyperbolic de la Vallée Poussin kernels.
    KernelNorms(KernelArgs),
    /// Reruns serialized violations on a finer grid.
    Replay(ReplayArgs),
}

#[derive(Args, Debug)]
struct Output {
    /// CSV destination; a JSON sidecar is written to `<out>.json`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RemezScanArgs {
    #[arg(long, default_value_t = 1)]
    dim: usize,
    #[arg(long = "N-list", value_parser = parse_u64_list)]
    n_list: ::std::vec::Vec<u64>,
    /// Budgets `b1,b2,...` or `rule:c=<c>,k=<k>` for `c / (N log2(N)^k)`.
    #[arg(long = "b-list", value_parser = parse_b_schedule)]
    b_list: BSchedule,
    #[arg(long, default_value = "inf", value_parser = parse_exponent)]
    p: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 16)]
    draws: u64,
    #[arg(long, default_value_t = 4)]
    oversample: usize,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct NikolskiiScanArgs {
    #[arg(long, default_value_t = 1)]
    dim: usize,
    #[arg(long, default_value = "inf", value_parser = parse_exponent)]
    p: f64,
    #[arg(long, default_value = "1", value_parser = parse_exponent)]
    q: f64,
    #[arg(long = "N-list", value_parser = parse_u64_list)]
    n_list: ::std::vec::Vec<u64>,
    #[arg(long, default_value_t = 8)]
    draws: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 4)]
    oversample: usize,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct RieszArgs {
    /// Layers, e.g. `12,13,14`.
    #[arg(long, value_parser = parse_u32_list)]
    n: ::std::vec::Vec<u32>,
    #[arg(long, default_value_t = 2)]
    oversample: usize,
    /// Random layer polynomials checked against the layer Remez bound.
    #[arg(long, default_value_t = 0)]
    draws: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct DiscretizeArgs {
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, value_parser = parse_u32_list)]
    n: ::std::vec::Vec<u32>,
    #[arg(long, default_value_t = 4)]
    draws: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct FuzzArgs {
    #[arg(long, default_value_t = 1000)]
    draws: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Checks to run (default: the five implications).
    #[arg(long, value_parser = parse_checks)]
    checks: Option<::std::vec::Vec<CheckKind>>,
    #[arg(long, default_value_t = 2)]
    oversample: usize,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct KernelArgs {
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long = "N", value_parser = parse_u64_list)]
    n: ::std::vec::Vec<u64>,
    #[arg(long, default_value_t = 2)]
    oversample: usize,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct ReplayArgs {
    /// Violation file written by a previous run.
    file: PathBuf,
    #[command(flatten)]
    output: Output,
}

fn parse_checks(s: &str) -> Result<Vec<CheckKind>, String> {
    config::parse_list::<CheckKind>(s)
}

fn mem_budget(cli: &Cli) -> Result<u64, String> {
    match std::env::var("HCR_MEM_BUDGET") {
        Ok(v) => parse_bytes(&v).map_err(|e| format!("HCR_MEM_BUDGET: {e}")),
        Err(_) => Ok(cli.mem_budget.unwrap_or(DEFAULT_MEM_BUDGET)),
    }
}

fn exit_code(e: &hcr::Error) -> u8 {
    use hcr::Error::*;
    match e {
        MemoryBudget { .. } | SupportCap { .. } => EXIT_RESOURCE,
        Orthogonality { .. } | Reproduction { .. } | ShiftNotFound { .. } | ShiftUniformity { .. } | KernelConstruction(..) => EXIT_VIOLATION,
        _ => EXIT_CONFIG,
    }
}

fn main() -> ExitCode {
    let args = match config::merge_args(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let mem = match mem_budget(&cli) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    match run(&cli.command, mem) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn list<T: ToString>(v: &[T]) -> Value {
    Value::from(v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","))
}

fn run(cmd: &Command, mem: u64) -> CmdResult<u8> {
    let mut cfg = Map::new();
    let (name, outcome, out, persists) = match cmd {
        Command::RemezScan(a) => {
            cfg.extend([
                ("dim".into(), json!(a.dim)),
                ("N-list".into(), list(&a.n_list)),
                ("b-list".into(), json!(a.b_list.describe())),
                ("p".into(), json!(a.p.to_string())),
                ("seed".into(), json!(a.seed)),
                ("draws".into(), json!(a.draws)),
                ("oversample".into(), json!(a.oversample)),
                ("mem-budget".into(), json!(mem)),
            ]);
            let o = commands::remez_scan(a.dim, &a.n_list, &a.b_list, a.p, a.seed, a.draws, a.oversample, mem)?;
            ("remez-scan", o, &a.output.out, false)
        }
        Command::NikolskiiScan(a) => {
            cfg.extend([
                ("dim".into(), json!(a.dim)),
                ("p".into(), json!(a.p.to_string())),
                ("q".into(), json!(a.q.to_string())),
                ("N-list".into(), list(&a.n_list)),
                ("draws".into(), json!(a.draws)),
                ("seed".into(), json!(a.seed)),
                ("oversample".into(), json!(a.oversample)),
            ]);
            let o = commands::nikolskii_scan(a.dim, a.p, a.q, &a.n_list, a.draws, a.seed, a.oversample)?;
            ("nikolskii-scan", o, &a.output.out, false)
        }
        Command::RieszVerify(a) => {
            cfg.extend([
                ("n".into(), list(&a.n)),
                ("oversample".into(), json!(a.oversample)),
                ("draws".into(), json!(a.draws)),
                ("seed".into(), json!(a.seed)),
            ]);
            let o = commands::riesz_verify(&a.n, a.oversample, a.draws, a.seed)?;
            ("riesz-verify", o, &a.output.out, false)
        }
        Command::DiscretizeVerify(a) => {
            cfg.extend([
                ("dim".into(), json!(a.dim)),
                ("n".into(), list(&a.n)),
                ("draws".into(), json!(a.draws)),
                ("seed".into(), json!(a.seed)),
                ("mem-budget".into(), json!(mem)),
            ]);
            let o = commands::discretize_verify(a.dim, &a.n, a.draws, a.seed, mem)?;
            ("discretize-verify", o, &a.output.out, false)
        }
        Command::ImplicationFuzz(a) => {
            let kinds = a.checks.clone().unwrap_or_else(|| CheckKind::IMPLICATIONS.to_vec());
            cfg.extend([
                ("draws".into(), json!(a.draws)),
                ("seed".into(), json!(a.seed)),
                ("checks".into(), list(&kinds)),
                ("oversample".into(), json!(a.oversample)),
            ]);
            let o = commands::implication_fuzz(&kinds, a.draws, a.seed, a.oversample)?;
            ("implication-fuzz", o, &a.output.out, false)
        }
        Command::KernelNorms(a) => {
            cfg.extend([("dim".into(), json!(a.dim)), ("N".into(), list(&a.n)), ("oversample".into(), json!(a.oversample))]);
            let o = commands::kernel_norms_cmd(a.dim, &a.n, a.oversample)?;
            ("kernel-norms", o, &a.output.out, false)
        }
        Command::Replay(a) => {
            cfg.insert("file".into(), json!(a.file.display().to_string()));
            let (o, persists) = commands::replay(&a.file, mem)?;
            ("replay", o, &a.output.out, persists)
        }
    };
    let Outcome { table, constants, violations, failures } = outcome;
    output::emit(out.as_deref(), &table, name, cfg, constants).map_err(|e| hcr::Error::Parse(format!("cannot write output: {e}")))?;
    if !violations.is_empty() {
        let path = match out {
            Some(p) => {
                let mut s = p.as_os_str().to_owned();
                s.push(".violations.json");
                PathBuf::from(s)
            }
            None => PathBuf::from(format!("{name}.violations.json")),
        };
        let mut text = serde_json::to_string_pretty(&violations).expect("violations serialize");
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| hcr::Error::Parse(format!("cannot write {}: {e}", path.display())))?;
        eprintln!("{} violation(s); instances written to {}", violations.len(), path.display());
    }
    if failures > 0 {
        eprintln!("{failures} check(s) failed");
    }
    Ok(if !violations.is_empty() || failures > 0 || persists { EXIT_VIOLATION } else { 0 })
}
