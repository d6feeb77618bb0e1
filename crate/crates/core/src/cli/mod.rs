//! Command-line front end: `tatpat <verb> --spec <file> [--out <dir>] [--threads <n>] [--seed <n>]`.

mod commands;
mod spec;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::{run_stage, Context, PhantomRecord, Stage};
pub use spec::{
    ExperimentSpec, GridBlock, IdentityBlock, InversionBlock, PhantomBlock, PriorName, QSource, SimulateBlock,
    SpectrumBlock, SpectrumSource, SpeedModelName, SweepBlock,
};

use crate::error::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_GUARD: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "tatpat", version, about = "TAT/PAT forward simulation, identity checks and reconstruction")]
pub struct Cli {
    #[command(subcommand)]
    pub verb: Verb,
    /// Experiment spec (TOML).
    #[arg(long, global = true)]
    pub spec: Option<PathBuf>,
    /// Output directory; overrides the spec's `output`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Seed for the sampling-lattice rotation.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Verb {
    /// Build the phantom and write its fields.
    Phantom,
    /// Run the wave solver and write boundary traces.
    Simulate,
    /// Write boundary spectra.
    Spectrum,
    /// Write the identity report.
    Verify,
    /// Reconstruct q, the speed and the source.
    Invert,
    /// Write CSV curves and SVG plots.
    Report,
}

impl Verb {
    pub fn stage(self) -> Stage {
        match self {
            Verb::Phantom => Stage::Phantom,
            Verb::Simulate => Stage::Simulate,
            Verb::Spectrum => Stage::Spectrum,
            Verb::Verify => Stage::Verify,
            Verb::Invert => Stage::Invert,
            Verb::Report => Stage::Report,
        }
    }
}

/// Exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_numerical_guard() {
        EXIT_GUARD
    } else if matches!(e, Error::Io(_)) {
        EXIT_IO
    } else {
        EXIT_VALIDATION
    }
}

/// Parses `args` (including the program name), runs the verb and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(files) => {
            for f in files {
                log::info!("wrote {}", f.display());
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn execute(cli: &Cli) -> crate::Result<Vec<PathBuf>> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::Spec("--threads must be at least 1".into()));
        }
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let path = cli.spec.as_ref().ok_or_else(|| Error::Spec("--spec is required".into()))?;
    let spec = ExperimentSpec::load(path)?;
    let out = cli
        .out
        .clone()
        .or_else(|| spec.output.clone())
        .ok_or_else(|| Error::Spec("no output directory: pass --out or set `output`".into()))?;
    let ctx = Context { spec, out, seed: cli.seed };
    run_stage(cli.verb.stage(), &ctx)
}
