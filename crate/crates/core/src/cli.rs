//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 for usage errors, 2 for runtime failures.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::code::RlcCode;
use crate::decoder::query_upper_bound;
use crate::sim::{emit_csv, parse_key_values, write_csv_file, SimError, Simulation, SweepConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "grand-mimo",
    version,
    about = "RLC + GRAND over zero-forcing massive MIMO"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sweep a grid of Eb/N0 points and write one CSV row per point.
    Sweep(SweepArgs),
    /// Simulate a single Eb/N0 point.
    Point(PointArgs),
    /// Print the worst-case number of non-trivial membership queries.
    Bound(BoundArgs),
    /// Generate a random code and print it in text form.
    Codegen(CodegenArgs),
}

#[derive(Debug, Args)]
struct LinkArgs {
    /// key=value file with sweep settings; explicit flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    /// QAM order: 4, 16 or 64.
    #[arg(long = "mod", value_parser = ["4", "16", "64"])]
    modulation: Option<String>,
    #[arg(long, value_parser = ["natural", "gray"])]
    mapping: Option<String>,
    /// Receive antennas.
    #[arg(long)]
    nr: Option<usize>,
    /// GRAND weight threshold.
    #[arg(long)]
    nb: Option<usize>,
    #[arg(long, value_parser = ["zf", "hardening", "uncoded"])]
    channel: Option<String>,
    /// Trial cap per point.
    #[arg(long)]
    trials: Option<u64>,
    /// Early-stop after this many block errors (0 disables).
    #[arg(long = "min-errors")]
    min_errors: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file, or `-` for standard output.
    #[arg(long, default_value = "-")]
    out: String,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    link: LinkArgs,
    /// Eb/N0 grid in dB as start:step:stop.
    #[arg(long, allow_hyphen_values = true)]
    ebno: Option<String>,
}

#[derive(Debug, Args)]
struct PointArgs {
    #[command(flatten)]
    link: LinkArgs,
    /// Eb/N0 in dB.
    #[arg(long, allow_hyphen_values = true)]
    ebno: Option<f64>,
}

#[derive(Debug, Args)]
struct BoundArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    nb: usize,
}

#[derive(Debug, Args)]
struct CodegenArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "-")]
    out: String,
}

/// Where CSV or code text goes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Output {
    Stdout,
    File(PathBuf),
}

impl Output {
    fn parse(s: &str) -> Self {
        if s == "-" {
            Output::Stdout
        } else {
            Output::File(PathBuf::from(s))
        }
    }
}

/// A fully resolved command line.
#[derive(Debug, Clone, PartialEq)]
pub enum Invocation {
    Sweep {
        config: SweepConfig,
        out: Output,
    },
    Point {
        config: SweepConfig,
        out: Output,
    },
    Bound {
        n: usize,
        n_b: usize,
    },
    Codegen {
        n: usize,
        k: usize,
        seed: u64,
        out: Output,
    },
}

#[derive(Debug)]
pub enum CliError {
    /// `--help` / `--version` output; not an error for the exit status.
    Display(String),
    Usage(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Display(_) => EXIT_OK,
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

fn link_config(link: &LinkArgs, ebno: Option<String>) -> Result<SweepConfig, CliError> {
    let mut map: BTreeMap<String, String> = match &link.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Runtime(format!("cannot read {}: {e}", path.display())))?;
            parse_key_values(&text)
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
        }
        None => BTreeMap::new(),
    };
    let mut set = |key: &str, value: Option<String>| {
        if let Some(v) = value {
            map.insert(key.to_string(), v);
        }
    };
    set("n", link.n.map(|v| v.to_string()));
    set("k", link.k.map(|v| v.to_string()));
    set("m", link.modulation.clone());
    set("mapping", link.mapping.clone());
    set("n_r", link.nr.map(|v| v.to_string()));
    set("n_b", link.nb.map(|v| v.to_string()));
    set("channel_model", link.channel.clone());
    set("trials_per_point", link.trials.map(|v| v.to_string()));
    set("min_block_errors", link.min_errors.map(|v| v.to_string()));
    set("master_seed", link.seed.map(|v| v.to_string()));
    set("ebno_grid_db", ebno);
    SweepConfig::from_map(&map).map_err(|e| CliError::Usage(flag_hint(e)))
}

/// Names the flag alongside the config key in "missing setting" messages.
fn flag_hint(err: SimError) -> String {
    let msg = err.to_string();
    let flags = [
        ("`n`", "--n"),
        ("`k`", "--k"),
        ("`m`", "--mod"),
        ("`n_r`", "--nr"),
        ("`n_b`", "--nb"),
        ("`ebno_grid_db`", "--ebno"),
    ];
    match flags
        .iter()
        .find(|(key, _)| msg.contains("missing") && msg.contains(key))
    {
        Some((_, flag)) => format!("{msg} (pass {flag} or set it in --config)"),
        None => msg,
    }
}

/// Parses `argv` (including the program name) into an invocation.
pub fn parse_args<I, T>(argv: I) -> Result<Invocation, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| match e.kind() {
        clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
            CliError::Display(e.to_string())
        }
        _ => CliError::Usage(e.to_string()),
    })?;
    Ok(match cli.command {
        Command::Sweep(a) => Invocation::Sweep {
            config: link_config(&a.link, a.ebno)?,
            out: Output::parse(&a.link.out),
        },
        Command::Point(a) => Invocation::Point {
            config: link_config(&a.link, a.ebno.map(|v| v.to_string()))?,
            out: Output::parse(&a.link.out),
        },
        Command::Bound(a) => {
            if a.nb > a.n {
                return Err(CliError::Usage(format!(
                    "--nb {} exceeds --n {}",
                    a.nb, a.n
                )));
            }
            Invocation::Bound { n: a.n, n_b: a.nb }
        }
        Command::Codegen(a) => {
            if a.k == 0 || a.k >= a.n {
                return Err(CliError::Usage(format!(
                    "need 0 < k < n (n={}, k={})",
                    a.n, a.k
                )));
            }
            Invocation::Codegen {
                n: a.n,
                k: a.k,
                seed: a.seed,
                out: Output::parse(&a.out),
            }
        }
    })
}

fn write_text(out: &Output, text: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    let io_err = |e: std::io::Error| CliError::Runtime(e.to_string());
    match out {
        Output::Stdout => stdout.write_all(text.as_bytes()).map_err(io_err),
        Output::File(path) => {
            let dir = path
                .parent()
                .filter(|p| !p.as_os_str().is_empty())
                .unwrap_or(".".as_ref());
            let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
            tmp.write_all(text.as_bytes()).map_err(io_err)?;
            tmp.persist(path).map_err(|e| io_err(e.error))?;
            Ok(())
        }
    }
}

/// Executes an invocation, writing results to `stdout` and progress to `stderr`.
pub fn execute(
    inv: Invocation,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    let runtime = |e: SimError| CliError::Runtime(e.to_string());
    match inv {
        Invocation::Bound { n, n_b } => writeln!(stdout, "{}", query_upper_bound(n, n_b))
            .map_err(|e| CliError::Runtime(e.to_string())),
        Invocation::Codegen { n, k, seed, out } => {
            let code = RlcCode::generate(n, k, &mut ChaCha8Rng::seed_from_u64(seed))
                .map_err(|e| CliError::Usage(e.to_string()))?;
            write_text(&out, &code.to_text(), stdout)
        }
        Invocation::Sweep { config, out } | Invocation::Point { config, out } => {
            let sim = Simulation::new(config).map_err(|e| CliError::Usage(e.to_string()))?;
            let results = sim
                .run_sweep_with(|p| {
                    let _ = writeln!(
                        stderr,
                        "Eb/N0 {:>7.2} dB: {} trials, {} block errors, BLER {:.3e}, avg queries {:.3}",
                        p.ebno_db, p.trials_run, p.block_errors, p.bler, p.avg_queries
                    );
                })
                .map_err(runtime)?;
            match out {
                Output::Stdout => emit_csv(&results, &mut *stdout).map_err(runtime),
                Output::File(path) => write_csv_file(&results, &path).map_err(runtime),
            }
        }
    }
}

/// Parses and executes; returns the process exit code.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let result = parse_args(argv).and_then(|inv| execute(inv, stdout, stderr));
    match result {
        Ok(()) => EXIT_OK,
        Err(err) => {
            let code = err.exit_code();
            match err {
                CliError::Display(text) => {
                    let _ = write!(stdout, "{text}");
                }
                CliError::Usage(msg) => {
                    let first = msg
                        .lines()
                        .next()
                        .unwrap_or("")
                        .trim_start_matches("error: ");
                    let _ = writeln!(stderr, "error: {first}");
                }
                CliError::Runtime(msg) => {
                    let _ = writeln!(stderr, "error: {msg}");
                }
            }
            code
        }
    }
}
