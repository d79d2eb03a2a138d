//! `refocus`: design, score and analyze strongly modulating pulses under RF
//! inhomogeneity. Every artifact embeds the manifest of the run that wrote it.

mod artifact;
mod commands;
mod error;
mod inputs;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::*;
use crate::error::{CliError, EXIT_OK};

#[derive(Parser, Debug)]
#[command(name = "refocus", version, about = "Incoherence-compensated pulse design and ensemble spectra", propagate_version = true)]
struct Cli {
    /// Directory for output artifacts, created if missing
    #[arg(long, short, global = true, default_value = ".", value_name = "DIR")]
    out_dir: PathBuf,

    /// Worker threads for design and ensemble evaluation; 0 uses all cores
    #[arg(long, global = true, env = "REFOCUS_THREADS", default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Search for a pulse implementing a target gate (design.json, pulse.json)
    ///
    /// With a profile the search maximizes the ensemble fidelity, otherwise the
    /// nominal one. Exits with 2 when the best design stays below the
    /// configured fidelity floor; both files are still written.
    Design(DesignArgs),
    /// Nominal and ensemble fidelity of an existing pulse (score.json)
    Score(ScoreArgs),
    /// Fidelity against a uniform RF scale (sweep_scale.csv)
    ///
    /// CSV columns: scale, fidelity.
    SweepScale(SweepScaleArgs),
    /// Ensemble fidelity as the profile is stretched (sweep_width.csv)
    ///
    /// CSV columns: width_factor, fidelity. Width 0 collapses the profile to
    /// its mean scale.
    SweepWidth(SweepWidthArgs),
    /// Best design fidelity over static field and RF power caps (sweep_power.csv)
    ///
    /// CSV columns: b0_factor, max_amplitude_hz, fidelity. Cells where fidelity
    /// fell as field or power grew are listed in comment lines.
    SweepPower(SweepPowerArgs),
    /// Exact and first-order superoperator spectra (spectrum.json, spectrum.csv)
    ///
    /// CSV columns: re_exact, im_exact, re_approx, im_approx, pair_index. The
    /// first-order prediction is expanded around the peak bin of the profile.
    Spectrum(SpectrumArgs),
    /// RF profile from a nutation signal (profile.json, nutation_spectrum.csv, signal.csv)
    ///
    /// CSV columns: t_s, amplitude for signal.csv (simulated runs only);
    /// frequency_hz, magnitude for nutation_spectrum.csv.
    Nutation(NutationArgs),
    /// Three-input-state report for a gate set (protocol.json, protocol.csv)
    ///
    /// CSV columns: gate, variant, input, c, a, c_a. Inputs are the collective
    /// x, y and z magnetizations plus a per-gate mean row; attenuation is
    /// relative to the thermal state. Grand means appear as comment lines.
    Protocol(ProtocolArgs),
}

fn run(cli: &Cli) -> Result<(), CliError> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .map_err(|e| CliError::Validation(format!("thread pool: {e}")))?;
    }
    let out = &cli.out_dir;
    match &cli.command {
        Command::Design(a) => design(a, out),
        Command::Score(a) => score(a, out),
        Command::SweepScale(a) => sweep_scale(a, out),
        Command::SweepWidth(a) => sweep_width(a, out),
        Command::SweepPower(a) => sweep_power(a, out),
        Command::Spectrum(a) => spectrum(a, out),
        Command::Nutation(a) => nutation(a, out),
        Command::Protocol(a) => protocol(a, out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { error::EXIT_VALIDATION } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("refocus: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
