//! `gca` command-line driver.
//!
//! Exit codes: 0 success, 1 property or verification failure, 2 usage,
//! I/O or parse error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use gca_core::format::{parse_instance, parse_result, verify_result, write_instance, write_result};
use gca_core::harness::{bench, gen_random_instance, parse_properties, run_batch, GenParams, Property, SeedRange};
use gca_core::mechanism::{run_mechanism, PaymentRule};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "gca", version, about = "Greedy combinatorial auction for hiring experts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the mechanism on an instance file and print the result file.
    Run(RunArgs),
    /// Generate a random instance file.
    Gen(GenArgs),
    /// Recheck a result file against its instance.
    Verify(VerifyArgs),
    /// Fuzz the mechanism's properties over a range of seeds.
    Fuzz(FuzzArgs),
    /// Time allocation and payment on synthetic instances of growing size.
    Bench(BenchArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    instance: PathBuf,
    #[arg(long, default_value = "literal")]
    rule: PaymentRule,
    /// Write the result here instead of stdout.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    max_bundle: usize,
    #[arg(long, default_value_t = 1.0)]
    lo: f64,
    #[arg(long, default_value_t = 100.0)]
    hi: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    instance: PathBuf,
    result: PathBuf,
}

#[derive(Args, Debug)]
struct FuzzArgs {
    #[arg(long, default_value = "critical")]
    rule: PaymentRule,
    /// Inclusive seed range, e.g. `1..1000`.
    #[arg(long, default_value = "1..100")]
    seeds: SeedRange,
    #[arg(long, default_value_t = 8)]
    n_max: usize,
    #[arg(long, default_value_t = 6)]
    m_max: usize,
    /// Comma-separated properties: ic, ir, mono, ratio, crit.
    #[arg(long, default_value = "ic,ir,mono,ratio")]
    check: String,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "2000,4000,8000")]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 64)]
    m: usize,
    #[arg(long, default_value_t = 8)]
    max_bundle: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 3)]
    reps: usize,
    /// Fail (exit 1) if time grows by more than this factor per doubling of n.
    #[arg(long)]
    max_factor: Option<f64>,
}

fn read(path: &Path) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn emit(out: &mut dyn Write, target: Option<&Path>, text: &str) -> Result<(), String> {
    match target {
        Some(p) => std::fs::write(p, text).map_err(|e| format!("{}: {e}", p.display())),
        None => out.write_all(text.as_bytes()).map_err(|e| e.to_string()),
    }
}

fn load_instance(path: &Path) -> Result<gca_core::Instance, String> {
    parse_instance(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))
}

/// Outcome of a subcommand: an exit code, or a usage/I-O/parse error.
type Outcome = Result<i32, String>;

fn cmd_run(args: RunArgs, out: &mut dyn Write) -> Outcome {
    let instance = load_instance(&args.instance)?;
    let result = run_mechanism(&instance, args.rule);
    emit(out, args.out.as_deref(), &write_result(&result))?;
    Ok(EXIT_OK)
}

fn cmd_gen(args: GenArgs, out: &mut dyn Write) -> Outcome {
    let params = GenParams {
        n: args.n,
        m: args.m,
        max_bundle: args.max_bundle,
        valuation_range: (args.lo, args.hi),
        seed: args.seed,
    };
    let instance = gen_random_instance(&params).map_err(|e| e.to_string())?;
    emit(out, args.out.as_deref(), &write_instance(&instance))?;
    Ok(EXIT_OK)
}

fn cmd_verify(args: VerifyArgs, out: &mut dyn Write) -> Outcome {
    let instance = load_instance(&args.instance)?;
    let file = parse_result(&read(&args.result)?).map_err(|e| format!("{}: {e}", args.result.display()))?;
    let issues = verify_result(&instance, &file);
    let mut text = String::new();
    for issue in &issues {
        text.push_str(&format!("mismatch: {issue}\n"));
    }
    text.push_str(if issues.is_empty() { "ok\n" } else { "FAILED\n" });
    emit(out, None, &text)?;
    Ok(if issues.is_empty() { EXIT_OK } else { EXIT_FAILED })
}

fn cmd_fuzz(args: FuzzArgs, out: &mut dyn Write) -> Outcome {
    let properties: Vec<Property> = parse_properties(&args.check)?;
    let params: Vec<GenParams> = args
        .seeds
        .iter()
        .map(|s| GenParams::for_seed(s, args.n_max, args.m_max))
        .collect();
    let report = run_batch(&params, &properties, args.rule).map_err(|e| e.to_string())?;
    let text = format!("{}summary {}\n", report.to_text(), report.to_json());
    emit(out, None, &text)?;
    Ok(if report.passed() { EXIT_OK } else { EXIT_FAILED })
}

fn cmd_bench(args: BenchArgs, out: &mut dyn Write) -> Outcome {
    let report = bench(&args.sizes, args.m, args.max_bundle, args.seed, args.reps).map_err(|e| e.to_string())?;
    emit(out, None, &report.to_text())?;
    let ok = args
        .max_factor
        .is_none_or(|limit| report.worst_doubling_factor() <= limit);
    Ok(if ok { EXIT_OK } else { EXIT_FAILED })
}

/// Parses `args` (including the program name) and runs the subcommand,
/// writing normal output to `out` and diagnostics to `err`.
pub fn cli_main<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let rendered = e.render().to_string();
            if code == 0 {
                let _ = out.write_all(rendered.as_bytes());
            } else {
                let _ = err.write_all(rendered.as_bytes());
            }
            return if code == 0 { EXIT_OK } else { EXIT_USAGE };
        }
    };
    let outcome = match cli.command {
        Command::Run(a) => cmd_run(a, out),
        Command::Gen(a) => cmd_gen(a, out),
        Command::Verify(a) => cmd_verify(a, out),
        Command::Fuzz(a) => cmd_fuzz(a, out),
        Command::Bench(a) => cmd_bench(a, out),
    };
    match outcome {
        Ok(code) => code,
        Err(msg) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
    }
}
