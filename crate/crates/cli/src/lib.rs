//! Command-line front end for the sphere-lab workbench.
//!
//! Every subcommand reads its parameters from `--key value` flags and an
//! optional flat `key = value` file (`--config`), with flags taking
//! precedence. Results go to a CSV file with a fixed column order per
//! schema, plus a JSON sidecar at `<out>.json`.

pub mod commands;
pub mod config;
pub mod report;

use std::path::PathBuf;
use std::time::Instant;

use clap::{Arg, ArgAction, ArgMatches, Command};
use thiserror::Error;

use crate::commands::{command_spec, run_command, COMMANDS};
use crate::config::{canonical_key, parse_config, Params, DEFAULT_SEED};
use crate::report::{emit_report, Sidecar};

/// Environment variable giving the default worker count.
pub const WORKERS_ENV: &str = "SPHERE_LAB_WORKERS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    #[error("i/o failure: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Validation(_) => 2,
            CliError::Capacity(_) | CliError::Io(_) => 3,
        }
    }
}

impl From<sphere_lab::Error> for CliError {
    fn from(e: sphere_lab::Error) -> Self {
        match e {
            sphere_lab::Error::Capacity(m) => CliError::Capacity(m),
            other => CliError::Validation(other.to_string()),
        }
    }
}

fn key_help(key: &str) -> &'static str {
    match key {
        "n" => "shell index n = x²+y²+z² (start of the range when n_max is given)",
        "n_max" => "last shell index of a sweep",
        "m" => "harmonic degree",
        "j" => "basis index (all indices when omitted)",
        "x" => "X, the size parameter",
        "h" => "window length H; omit for the full range [1, X]",
        "r" => "cap radius in radians",
        "rho" => "smoothing radius in radians; omit for sharp caps",
        "delta" => "exponent δ in σ = c·X^{δ/2}",
        "c" => "constant c in σ = c·X^{δ/2}, or the modulus for kloosterman",
        "method" => "spectral | exact | direct",
        "M" => "spectral truncation degree",
        "sampler" => "mc | quadrature (direct method)",
        "samples" => "Monte Carlo sample count",
        "seed" => "Monte Carlo seed",
        "n_theta" => "quadrature nodes in cos θ",
        "n_phi" => "quadrature nodes in φ",
        "N" => "coefficient cutoff",
        "s" => "real s > 1",
        "nx" => "Gauss–Legendre nodes in x per coset domain",
        "ny" => "Gauss–Legendre nodes in y per coset domain",
        "y_max" => "height where the cusp expansion takes over",
        "a" => "first Kloosterman argument",
        "b" => "second Kloosterman argument (defaults to a)",
        "c_max" => "largest modulus",
        "two_k" => "twice the weight (odd)",
        "complete_sum" => "sum over every n instead of eligible n only",
        _ => "",
    }
}

pub fn cli() -> Command {
    let mut cmd = Command::new("sphere-lab")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Lattice points on spheres: variance statistics and theta-series experiments")
        .subcommand_required(true)
        .arg_required_else_help(true);
    for spec in COMMANDS {
        let mut sub = Command::new(spec.name)
            .about(spec.about)
            .arg(Arg::new("config").long("config").value_name("FILE").help("flat key = value parameter file"))
            .arg(Arg::new("out").long("out").value_name("PATH").help("CSV output path (default <command>.csv)"))
            .arg(
                Arg::new("workers")
                    .long("workers")
                    .value_name("N")
                    .help(format!("worker threads (default ${WORKERS_ENV}, else all cores)")),
            );
        for &key in spec.keys {
            let long = key.replace('_', "-");
            let arg = Arg::new(key).long(long).help(key_help(key));
            sub = sub.arg(if key == "complete_sum" {
                arg.action(ArgAction::SetTrue)
            } else {
                arg.value_name("VALUE").allow_negative_numbers(true)
            });
        }
        cmd = cmd.subcommand(sub);
    }
    cmd
}

struct Invocation {
    command: &'static str,
    params: Params,
    out: PathBuf,
    workers: usize,
}

fn gather(name: &str, m: &ArgMatches) -> Result<Invocation, CliError> {
    let spec = command_spec(name).ok_or_else(|| CliError::Usage(format!("unknown command {name}")))?;
    let mut params = Params::default();
    if let Some(path) = m.get_one::<String>("config") {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Validation(format!("{path}: {e}")))?;
        params = parse_config(&text)?;
    }
    let mut flags = Params::default();
    for &key in spec.keys {
        if key == "complete_sum" {
            if m.get_flag(key) {
                flags.set(key, "true");
            }
        } else if let Some(v) = m.get_one::<String>(key) {
            flags.set(key, v.clone());
        }
    }
    for key in ["out", "workers"] {
        if let Some(v) = m.get_one::<String>(key) {
            flags.set(key, v.clone());
        }
    }
    params.merge(flags);
    if let Some(cmd) = params.remove("command") {
        if cmd != name {
            return Err(CliError::Usage(format!("config file is for {cmd}, not {name}")));
        }
    }
    let out = params.remove("out").map(PathBuf::from).unwrap_or_else(|| PathBuf::from(format!("{name}.csv")));
    let workers = match params.remove("workers") {
        Some(v) => parse_workers(&v)?,
        None => match std::env::var(WORKERS_ENV) {
            Ok(v) => parse_workers(&v)?,
            Err(_) => std::thread::available_parallelism().map_or(1, |n| n.get()),
        },
    };
    if let Some(bad) = params.keys().find(|k| !spec.keys.contains(k)) {
        return Err(CliError::Usage(format!("{name} does not take parameter {}", canonical_key(bad))));
    }
    Ok(Invocation { command: spec.name, params, out, workers })
}

fn parse_workers(v: &str) -> Result<usize, CliError> {
    match v.trim().parse::<usize>() {
        Ok(n) if n >= 1 => Ok(n),
        _ => Err(CliError::Validation(format!("worker count must be a positive integer, got {v:?}"))),
    }
}

/// Runs one invocation and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<String>,
{
    let args: Vec<String> = args.into_iter().map(Into::into).collect();
    let matches = match cli().try_get_matches_from(&args) {
        Ok(m) => m,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&args, &matches) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("sphere-lab: {e}");
            e.exit_code()
        }
    }
}

fn execute(args: &[String], matches: &ArgMatches) -> Result<(), CliError> {
    let (name, sub) = matches.subcommand().ok_or_else(|| CliError::Usage("missing command".into()))?;
    let inv = gather(name, sub)?;
    let spec = command_spec(inv.command).expect("command was validated");
    let start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(inv.workers)
        .build()
        .map_err(|e| CliError::Io(e.to_string()))?;
    let report = pool.install(|| run_command(inv.command, &inv.params))?;
    let seed = if spec.seeded { Some(inv.params.get_or("seed", DEFAULT_SEED)?) } else { None };
    let sidecar = Sidecar {
        schema: report.schema.to_string(),
        columns: report.columns().iter().map(|c| c.to_string()).collect(),
        rows: report.rows.len(),
        command: inv.command.to_string(),
        command_line: args.to_vec(),
        parameters: inv.params.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
        seed,
        workers: inv.workers,
        version: env!("CARGO_PKG_VERSION").to_string(),
        wall_time_seconds: start.elapsed().as_secs_f64(),
    };
    emit_report(&report, &sidecar, &inv.out)
}
