use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod error;
mod output;

use commands::Ctx;
use config::{ConfigFile, DEFAULT_SEED};
use error::{CliError, CliResult};

/// Numerical experiments on value distribution in half-plane domains.
#[derive(Debug, Parser)]
#[command(name = "nevlab", version)]
struct Cli {
    /// RNG seed for Monte Carlo commands.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// JSON configuration file; flags take precedence over its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate λ at points of the upper half-plane.
    Lambda(commands::lambda::Flags),
    /// Audit a profile: log-integral verdict, tameness, tame replacements.
    Profile(commands::profile::Flags),
    /// Half-plane characteristics A, B, C, S and S_o of a test function.
    Char(commands::char::Flags),
    /// Diagnostics of the conformal map onto a graph domain.
    MapDiag(commands::map_diag::Flags),
    /// Scan of ∫₀² log⁺|λ(x+iy)| dx and the matching lattice sum.
    Lemmac(commands::lemmac::Flags),
    /// Harmonic-measure comparability ratios by walk on spheres.
    Claim5(commands::claim5::Flags),
    /// Witness experiment for a profile in direction a or b.
    Dichotomy(commands::dichotomy::Flags),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Lambda(_) => "lambda",
            Command::Profile(_) => "profile",
            Command::Char(_) => "char",
            Command::MapDiag(_) => "map-diag",
            Command::Lemmac(_) => "lemmac",
            Command::Claim5(_) => "claim5",
            Command::Dichotomy(_) => "dichotomy",
        }
    }
}

fn dispatch(cli: Cli) -> CliResult<()> {
    let file = match &cli.config {
        Some(p) => ConfigFile::read(p)?,
        None => ConfigFile::default(),
    };
    let name = cli.command.name();
    if let Some(c) = &file.command {
        if c != name {
            return Err(CliError::Parse(format!("config is for `{c}`, not `{name}`")));
        }
    }
    let seed = cli.seed.or(file.seed).unwrap_or(DEFAULT_SEED);
    let out = cli.out.clone().or(file.out.clone());
    let params = file.params.as_ref();
    match &cli.command {
        Command::Lambda(f) => {
            let (ctx, p) = Ctx::resolve(name, seed, out, params, &f.overrides()?)?;
            commands::lambda::run(&ctx, &p)
        }
        Command::Profile(f) => {
            let (ctx, p) = Ctx::resolve(name, seed, out, params, &f.overrides())?;
            commands::profile::run(&ctx, &p)
        }
        Command::Char(f) => {
            let (ctx, p) = Ctx::resolve(name, seed, out, params, &f.overrides()?)?;
            commands::char::run(&ctx, &p)
        }
        Command::MapDiag(f) => {
            let (ctx, p) = Ctx::resolve(name, seed, out, params, &f.overrides())?;
            commands::map_diag::run(&ctx, &p)
        }
        Command::Lemmac(f) => {
            let (ctx, p) = Ctx::resolve(name, seed, out, params, &f.overrides())?;
            commands::lemmac::run(&ctx, &p)
        }
        Command::Claim5(f) => {
            let (ctx, p) = Ctx::resolve(name, seed, out, params, &f.overrides()?)?;
            commands::claim5::run(&ctx, &p)
        }
        Command::Dichotomy(f) => {
            let (ctx, p) = Ctx::resolve(name, seed, out, params, &f.overrides())?;
            commands::dichotomy::run(&ctx, &p)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("nevlab: {e}");
            e.exit_code()
        }
    }
}
