//! `parobs` — command-line front end for the obstacle-problem toolkit.
//!
//! Each subcommand reads a strict TOML config, runs the addressed library
//! operation, and writes CSV artifacts plus a `records.jsonl` stream into
//! `--out`. Exit codes: 0 ok, 2 config error, 3 numerical divergence,
//! 4 precondition failure; failures print one machine-parsable line on
//! stderr (`error kind=... message="..."`).

mod commands;
mod config;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use parobs::error::{Error, Result};
use parobs::exec;

use commands::Ctx;
use config::BareFile;

#[derive(Parser)]
#[command(name = "parobs", version, about = "Parabolic obstacle problem toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the discrete obstacle problem described by a TOML config.
    Solve(ConfigArgs),
    /// Corrected-energy scan `W = E - 2R` on a radius ladder.
    Weiss(ConfigArgs),
    /// Classify a vertex by its limiting energy.
    Classify(ConfigArgs),
    /// Frequency scan and projection onto the singular-profile cone.
    Singular(ConfigArgs),
    /// Integral moduli of the forcing in strip and cylinder geometry.
    Modulus(ConfigArgs),
    /// Whitney decomposition and first-order jet extension.
    Whitney(WhitneyArgs),
    /// Emit the frozen classification levels.
    Calibrate(OutArgs),
    /// Run the fixed regression battery.
    Report(OutArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML config; repeat for a batch (each entry writes to out/<stem>/).
    #[arg(long, required = true)]
    config: Vec<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct OutArgs {
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Optional config; may only pin `command` and `seed`.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct WhitneyArgs {
    /// Jet data file: rows `t x1..xn f g1..gn`.
    #[arg(long)]
    jet: PathBuf,
    /// Modulus of continuity `L,beta`, meaning `ω(d) = L·d^beta`.
    #[arg(long)]
    omega: String,
    /// Optional config for box, epsilon, depth, samples, seed.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
}

fn main() {
    std::process::exit(real_main());
}

fn real_main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            eprintln!("{}", fail_line("config", &e.to_string()));
            return 2;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", fail_line(e.kind(), &e.to_string()));
            e.exit_code() as i32
        }
    }
}

fn fail_line(kind: &str, message: &str) -> String {
    let flat = message
        .replace(['\n', '\r'], "; ")
        .replace('"', "'");
    format!("error kind={kind} message=\"{flat}\"")
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Solve(a) => run_batch("solve", &a),
        Command::Weiss(a) => run_batch("weiss", &a),
        Command::Classify(a) => run_batch("classify", &a),
        Command::Singular(a) => run_batch("singular", &a),
        Command::Modulus(a) => run_batch("modulus", &a),
        Command::Whitney(a) => {
            let cfg = match &a.config {
                Some(path) => {
                    let cfg: config::WhitneyFile = config::load(path)?;
                    config::check_command(&cfg.command, "whitney")?;
                    cfg
                }
                None => config::WhitneyFile::default(),
            };
            let base = base_dir(a.config.as_deref());
            let ctx = Ctx {
                out: &a.out,
                base: &base,
            };
            commands::whitney_cmd(cfg, &a.jet, &a.omega, &ctx)
        }
        Command::Calibrate(a) => {
            let cfg = load_bare(a.config.as_deref(), "calibrate")?;
            let base = base_dir(a.config.as_deref());
            commands::calibrate_cmd(
                cfg,
                &Ctx {
                    out: &a.out,
                    base: &base,
                },
            )
        }
        Command::Report(a) => {
            let cfg = load_bare(a.config.as_deref(), "report")?;
            let base = base_dir(a.config.as_deref());
            commands::report_cmd(
                cfg,
                &Ctx {
                    out: &a.out,
                    base: &base,
                },
            )
        }
    }
}

fn load_bare(path: Option<&Path>, command: &str) -> Result<BareFile> {
    match path {
        Some(p) => {
            let cfg: BareFile = config::load(p)?;
            config::check_command(&cfg.command, command)?;
            Ok(cfg)
        }
        None => Ok(BareFile::default()),
    }
}

fn base_dir(config: Option<&Path>) -> PathBuf {
    config
        .and_then(|p| p.parent())
        .filter(|p| !p.as_os_str().is_empty())
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."))
}

/// Runs one entry directly, or a batch of entries in the worker pool with
/// per-stem output directories. Entries are independent; the first failure
/// (in config order) decides the exit.
fn run_batch(command: &str, args: &ConfigArgs) -> Result<()> {
    if args.config.len() == 1 {
        return commands::run_entry(command, &args.config[0], &args.out);
    }
    let mut stems = Vec::with_capacity(args.config.len());
    for path in &args.config {
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .filter(|s| !s.is_empty())
            .ok_or_else(|| {
                Error::Config(format!("config {} has no usable file stem", path.display()))
            })?;
        if stems.iter().any(|existing| existing == stem) {
            return Err(Error::Config(format!(
                "batch entries share the stem `{stem}`; outputs would collide"
            )));
        }
        stems.push(stem.to_string());
    }
    let results = exec::map_indexed(args.config.len(), |i| {
        commands::run_entry(command, &args.config[i], &args.out.join(&stems[i]))
    });
    for (stem, result) in stems.iter().zip(results) {
        if let Err(e) = result {
            return Err(prefix_entry(stem, e));
        }
    }
    Ok(())
}

fn prefix_entry(stem: &str, e: Error) -> Error {
    match e {
        Error::Precondition(m) => Error::Precondition(format!("entry {stem}: {m}")),
        Error::NonIntegrable(m) => Error::NonIntegrable(format!("entry {stem}: {m}")),
        Error::Convergence {
            what,
            residual,
            iterations,
        } => Error::Convergence {
            what: format!("entry {stem}: {what}"),
            residual,
            iterations,
        },
        Error::Config(m) => Error::Config(format!("entry {stem}: {m}")),
        Error::Io(e) => Error::Config(format!("entry {stem}: {e}")),
    }
}
