mod commands;
mod plain;

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use crnsign::textio::{parse_network_bytes, GRAMMAR};
use crnsign::Network;

/// Sign patterns of mass-action Jacobians and the sign-fixing construction.
#[derive(Debug, Parser)]
#[command(name = "crnsign", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Fix bad classes in this order (comma-separated class indices).
    #[arg(long, global = true, value_delimiter = ',')]
    pub order: Option<Vec<usize>>,
    /// Rate constant of every added reaction.
    #[arg(long, global = true, default_value_t = 1.0)]
    pub rate: f64,
    /// Random points used by sampled checks.
    #[arg(long, global = true, default_value_t = 200)]
    pub samples: usize,
    /// Seed for every randomized check.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// JSON report (the default).
    #[arg(long, global = true, conflicts_with = "plain")]
    pub json: bool,
    /// Human-readable summary instead of JSON.
    #[arg(long, global = true)]
    pub plain: bool,
    /// Write the main output here instead of stdout.
    #[arg(short, long, global = true)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Every check on one network.
    Analyze { input: PathBuf },
    /// Sign-fix a network; with -o the fixed network is written in input format.
    Signfix { input: PathBuf },
    /// One-shot alternative construction. Demonstration only: it breaks the
    /// correspondence of equilibria.
    Altfix { input: PathBuf },
    /// Complexes, linkage classes and deficiency before and after the fix.
    Deficiency { input: PathBuf },
    /// Find an equilibrium and carry it through the fix.
    Equilibria(EquilibriaArgs),
    /// Eigenvalues of the fixed Jacobian as the added rate grows.
    Spectra(SpectraArgs),
    /// Species-reaction graph in DOT.
    Graph {
        input: PathBuf,
        /// Draw the sign-fixed network.
        #[arg(long)]
        fixed: bool,
    },
    /// Factor the vector field through the complexes graph.
    Decompose {
        input: PathBuf,
        #[arg(long, value_delimiter = ',')]
        rates: Option<Vec<f64>>,
        /// Point at which the factorization is checked (default: seeded).
        #[arg(long, value_delimiter = ',')]
        x: Option<Vec<f64>>,
    },
}

#[derive(Debug, Args)]
pub struct EquilibriaArgs {
    pub input: PathBuf,
    #[arg(long, value_delimiter = ',')]
    pub rates: Option<Vec<f64>>,
    /// Starting point (default: all ones).
    #[arg(long, value_delimiter = ',')]
    pub x0: Option<Vec<f64>>,
    /// Accept equilibria on the boundary of the orthant.
    #[arg(long)]
    pub allow_boundary: bool,
    /// Species held at their starting values (comma-separated indices).
    #[arg(long, value_delimiter = ',')]
    pub fixed_species: Option<Vec<usize>>,
    /// Integrate from x0 and write the trajectory as CSV.
    #[arg(long)]
    pub trajectory: Option<PathBuf>,
    #[arg(long, default_value_t = 10.0)]
    pub t_end: f64,
    #[arg(long, default_value_t = 0.01)]
    pub dt: f64,
}

#[derive(Debug, Args)]
pub struct SpectraArgs {
    pub input: PathBuf,
    /// Log-spaced grid of added rates, `lo:hi:n`.
    #[arg(long, default_value = "1:1e6:7", value_parser = parse_grid)]
    pub k_grid: Grid,
    /// Only this fix step.
    #[arg(long)]
    pub step: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub rates: Option<Vec<f64>>,
    /// Positive point of the original network (default: seeded).
    #[arg(long, value_delimiter = ',')]
    pub x: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

fn parse_grid(s: &str) -> Result<Grid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, n] = parts[..] else {
        return Err("expected lo:hi:n".into());
    };
    let lo: f64 = lo.parse().map_err(|e| format!("lo: {e}"))?;
    let hi: f64 = hi.parse().map_err(|e| format!("hi: {e}"))?;
    let n: usize = n.parse().map_err(|e| format!("n: {e}"))?;
    if !(lo > 0.0 && hi > lo && n >= 2) {
        return Err("need 0 < lo < hi and n >= 2".into());
    }
    Ok(Grid { lo, hi, n })
}

/// Errors exit with status 2; use this for anything the user supplied.
pub fn input_error(msg: impl Into<String>) -> anyhow::Error {
    anyhow::anyhow!(msg.into())
}

pub fn read_network(path: &Path) -> anyhow::Result<Network> {
    let bytes = if path.as_os_str() == "-" {
        let mut buf = Vec::new();
        io::stdin()
            .read_to_end(&mut buf)
            .map_err(|e| input_error(format!("stdin: {e}")))?;
        buf
    } else {
        fs::read(path).map_err(|e| input_error(format!("{}: {e}", path.display())))?
    };
    parse_network_bytes(&bytes).map_err(|e| {
        input_error(format!(
            "{}: parse error at {e}\n\nexpected input:\n{GRAMMAR}",
            path.display()
        ))
    })
}

/// What a subcommand produced.
pub struct Outcome {
    pub report: serde_json::Value,
    /// Text written instead of the report (DOT).
    pub text: Option<String>,
    pub passed: bool,
}

fn emit(out: &Outcome, common: &Common, to_file: bool, plain_title: &str) -> anyhow::Result<()> {
    let body = match &out.text {
        Some(t) => t.clone(),
        None if common.plain => plain::render(plain_title, &out.report),
        None => {
            let mut s = serde_json::to_string_pretty(&out.report)?;
            s.push('\n');
            s
        }
    };
    match (&common.output, to_file) {
        (Some(path), true) => fs::write(path, body)
            .map_err(|e| input_error(format!("{}: {e}", path.display())))?,
        _ => io::stdout().write_all(body.as_bytes())?,
    }
    Ok(())
}

fn run(cli: &Cli) -> anyhow::Result<bool> {
    let common = &cli.common;
    let (out, title, report_to_file) = match &cli.command {
        Command::Analyze { input } => (commands::analyze(input, common)?, "analyze", true),
        Command::Signfix { input } => (commands::signfix(input, common)?, "signfix", false),
        Command::Altfix { input } => {
            eprintln!("warning: altfix is a demonstration; it breaks the correspondence of equilibria");
            (commands::altfix(input)?, "altfix", true)
        }
        Command::Deficiency { input } => (commands::deficiency(input, common)?, "deficiency", true),
        Command::Equilibria(args) => (commands::equilibria(args, common)?, "equilibria", true),
        Command::Spectra(args) => (commands::spectra(args, common)?, "spectra", true),
        Command::Graph { input, fixed } => (commands::graph(input, *fixed, common)?, "graph", true),
        Command::Decompose { input, rates, x } => (
            commands::decompose(input, rates.as_deref(), x.as_deref(), common)?,
            "decompose",
            true,
        ),
    };
    emit(&out, common, report_to_file, title)?;
    Ok(out.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
