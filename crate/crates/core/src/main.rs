use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use dirac_gbdt::cli::{self, grid::GridSpec, EvalTarget};
use dirac_gbdt::SystemKind;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KindArg {
    /// Self-adjoint discrete Dirac system.
    #[value(name = "sa", alias = "self_adjoint", alias = "self-adjoint")]
    Sa,
    /// Skew-self-adjoint discrete Dirac system.
    Skew,
}

impl From<KindArg> for SystemKind {
    fn from(value: KindArg) -> Self {
        match value {
            KindArg::Sa => SystemKind::SelfAdjoint,
            KindArg::Skew => SystemKind::SkewSelfAdjoint,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum WhatArg {
    Potential,
    Fundamental,
    Weyl,
    Reflection,
}

impl From<WhatArg> for EvalTarget {
    fn from(value: WhatArg) -> Self {
        match value {
            WhatArg::Potential => EvalTarget::Potential,
            WhatArg::Fundamental => EvalTarget::Fundamental,
            WhatArg::Weyl => EvalTarget::Weyl,
            WhatArg::Reflection => EvalTarget::Reflection,
        }
    }
}

/// Discrete Dirac systems from GBDT parameter triples: generation,
/// verification of the full invariant suite, and grid evaluation.
#[derive(Parser)]
#[command(name = "dirac-gbdt", version, about)]
struct Cli {
    /// Suppress progress output on stdout.
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a strongly admissible parameter triple and write it as JSON.
    Gen {
        #[arg(long, value_enum)]
        kind: KindArg,
        /// State dimension of A (n ≥ 1).
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        n: u32,
        /// First block size of the signature (m1 ≥ 1).
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        m1: u32,
        /// Second block size of the signature (m2 ≥ 1).
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        m2: u32,
        /// Seed for the deterministic sampler.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output triple JSON path.
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Run the full invariant suite on a triple file.
    Verify {
        /// Triple JSON path.
        triple: PathBuf,
        /// Recursion horizon for the per-step checks.
        #[arg(long, default_value_t = dirac_gbdt::gbdt::DEFAULT_HORIZON)]
        kmax: usize,
        /// Certification tolerance for the reflection/Weyl equality.
        #[arg(long, env = "DIRAC_GBDT_TOL", default_value_t = 1e-7)]
        tol: f64,
        /// Report JSON output path.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a quantity over a grid and write long-format CSV.
    Eval {
        /// Triple JSON path.
        triple: PathBuf,
        /// Quantity to evaluate.
        #[arg(long, value_enum)]
        what: WhatArg,
        /// Grid: real:START:STOP:COUNT, imag:START:STOP:COUNT or
        /// rect:RE0:RE1:NRE:IM0:IM1:NIM. Ignored for `potential`.
        #[arg(long, default_value = "real:-5:5:101")]
        grid: String,
        /// Step index k (used by `potential` and `fundamental`).
        #[arg(long, default_value_t = 0)]
        k: usize,
        /// Output CSV path.
        #[arg(short, long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Gen {
            kind,
            n,
            m1,
            m2,
            seed,
            out,
        } => cli::cmd_generate(
            kind.into(),
            n as usize,
            m1 as usize,
            m2 as usize,
            seed,
            &out,
            cli.quiet,
        ),
        Command::Verify {
            triple,
            kmax,
            tol,
            out,
        } => cli::cmd_verify(&triple, kmax, tol, out.as_deref(), cli.quiet),
        Command::Eval {
            triple,
            what,
            grid,
            k,
            out,
        } => match GridSpec::parse(&grid) {
            Ok(spec) => cli::cmd_eval(&triple, what.into(), &spec, k, &out, cli.quiet),
            Err(e) => {
                eprintln!("error: {e}");
                cli::EXIT_USAGE
            }
        },
    };
    ExitCode::from(code as u8)
}
