use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use refocus::designer::{design_pulse, pulse_fidelity, sweep_power_field, sweep_profile_width, sweep_rf_scale, DesignResult};
use refocus::ensemble::{extract_profile, nutation_spectrum, simulate_nutation, RfDistribution};
use refocus::gates::GateSpec;
use refocus::protocol::{run_protocol, GatePulses};
use refocus::spectra::{analyze_sequence, mean_unit_circle_distance};

use crate::artifact::{Outputs, RunManifest};
use crate::error::{CliError, CliResult, Context};
use crate::inputs::{load_config, load_pulse, load_system, target_unitary, Grid, ProfileArgs};

#[derive(Args, Debug, Serialize)]
pub struct DesignArgs {
    /// Spin system JSON, or builtin:one-spin, builtin:two-spin, builtin:three-spin
    #[arg(long, value_name = "FILE|BUILTIN")]
    pub system: String,

    /// Target gate such as x90@1,2 or identity
    #[arg(long)]
    pub target: GateSpec,

    #[command(flatten)]
    pub profile: ProfileArgs,

    /// Search configuration JSON; omitted fields take their defaults
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Overrides the configured optimizer seed
    #[arg(long)]
    pub seed: Option<u64>,

    /// Overrides the configured number of restarts
    #[arg(long)]
    pub restarts: Option<usize>,

    /// Overrides the configured iteration cap per restart
    #[arg(long)]
    pub iterations: Option<usize>,

    /// Name stored in the pulse file
    #[arg(long, default_value = "designed")]
    pub name: String,
}

/// Writes `design.json` and `pulse.json`. With a profile the search
/// maximizes the ensemble fidelity, otherwise the nominal one.
pub fn design(args: &DesignArgs, out: &Path) -> CliResult<()> {
    let mut m = RunManifest::new("design", out, args);
    let sys = load_system(&args.system, &mut m)?;
    let dist = args.profile.load(&mut m)?;
    let mut config = load_config(args.config.as_deref(), &mut m)?;
    if let Some(s) = args.seed {
        config.rng_seed = s;
    }
    if let Some(r) = args.restarts {
        config.n_restarts = r;
    }
    if let Some(i) = args.iterations {
        config.max_iterations = i;
    }
    config.validate().context(|| "search config".into())?;
    let m = m.with_seed(config.rng_seed);
    let target = target_unitary(&args.target, &sys)?;

    let mut result = design_pulse(&target, &sys, dist.as_ref(), &config).context(|| format!("designing {}", args.target))?;
    result.sequence.name = args.name.clone();
    result.sequence.target = Some(target);

    let mut files = Outputs::create(out)?;
    files.json("design.json", &m, &DesignArtifact { target: &args.target, config: &config, result: &result })?;
    files.json("pulse.json", &m, &result.sequence)?;
    if !result.converged {
        return Err(CliError::Unconverged { fidelity: result.fidelity, floor: config.fidelity_floor });
    }
    Ok(())
}

#[derive(Serialize)]
struct DesignArtifact<'a> {
    target: &'a GateSpec,
    config: &'a refocus::designer::SearchConfig,
    #[serde(flatten)]
    result: &'a DesignResult,
}

#[derive(Args, Debug, Serialize)]
pub struct ScoreArgs {
    /// Spin system JSON, or builtin:one-spin, builtin:two-spin, builtin:three-spin
    #[arg(long, value_name = "FILE|BUILTIN")]
    pub system: String,

    /// Pulse sequence JSON
    #[arg(long, value_name = "FILE")]
    pub pulse: PathBuf,

    /// Target gate such as x90@1,2 or identity
    #[arg(long)]
    pub target: GateSpec,

    #[command(flatten)]
    pub profile: ProfileArgs,
}

#[derive(Serialize)]
struct Score {
    target: String,
    duration_s: f64,
    nominal_fidelity: f64,
    ensemble_fidelity: Option<f64>,
}

/// Writes `score.json` with the nominal and, given a profile, ensemble fidelity.
pub fn score(args: &ScoreArgs, out: &Path) -> CliResult<()> {
    let mut m = RunManifest::new("score", out, args);
    let sys = load_system(&args.system, &mut m)?;
    let seq = load_pulse(&args.pulse, &mut m)?;
    let dist = args.profile.load(&mut m)?;
    let target = target_unitary(&args.target, &sys)?;
    let fid = |d: Option<&RfDistribution>| pulse_fidelity(&seq, &target, &sys, d).context(|| "scoring pulse".into());
    let s = Score {
        target: args.target.to_string(),
        duration_s: seq.total_duration(),
        nominal_fidelity: fid(None)?,
        ensemble_fidelity: dist.as_ref().map(|d| fid(Some(d))).transpose()?,
    };
    Outputs::create(out)?.json("score.json", &m, &s)?;
    Ok(())
}

#[derive(Args, Debug, Serialize)]
pub struct SweepScaleArgs {
    /// Spin system JSON, or builtin:one-spin, builtin:two-spin, builtin:three-spin
    #[arg(long, value_name = "FILE|BUILTIN")]
    pub system: String,

    /// Pulse sequence JSON
    #[arg(long, value_name = "FILE")]
    pub pulse: PathBuf,

    /// Target gate such as x90@1,2 or identity
    #[arg(long)]
    pub target: GateSpec,

    /// RF scale factors, as a,b,c or start:stop:count
    #[arg(long, default_value = "0.8:1.2:41")]
    pub scales: Grid,
}

#[derive(Serialize)]
struct ScaleRow {
    scale: f64,
    fidelity: f64,
}

/// Writes `sweep_scale.csv` with columns scale, fidelity.
pub fn sweep_scale(args: &SweepScaleArgs, out: &Path) -> CliResult<()> {
    let mut m = RunManifest::new("sweep-scale", out, args);
    let sys = load_system(&args.system, &mut m)?;
    let seq = load_pulse(&args.pulse, &mut m)?;
    let target = target_unitary(&args.target, &sys)?;
    let rows: Vec<ScaleRow> = sweep_rf_scale(&seq, &target, &sys, &args.scales.0)
        .context(|| "scale sweep".into())?
        .into_iter()
        .map(|(scale, fidelity)| ScaleRow { scale, fidelity })
        .collect();
    Outputs::create(out)?.csv("sweep_scale.csv", &m, &[], &rows)?;
    Ok(())
}

#[derive(Args, Debug, Serialize)]
pub struct SweepWidthArgs {
    /// Spin system JSON, or builtin:one-spin, builtin:two-spin, builtin:three-spin
    #[arg(long, value_name = "FILE|BUILTIN")]
    pub system: String,

    /// Pulse sequence JSON
    #[arg(long, value_name = "FILE")]
    pub pulse: PathBuf,

    /// Target gate such as x90@1,2 or identity
    #[arg(long)]
    pub target: GateSpec,

    /// Base profile, stretched about its mean; defaults to the synthetic profile
    #[command(flatten)]
    pub profile: ProfileArgs,

    /// Width factors relative to the base profile, as a,b,c or start:stop:count
    #[arg(long, default_value = "0:3:13")]
    pub widths: Grid,
}

#[derive(Serialize)]
struct WidthRow {
    width_factor: f64,
    fidelity: f64,
}

/// Writes `sweep_width.csv` with columns width_factor, fidelity.
pub fn sweep_width(args: &SweepWidthArgs, out: &Path) -> CliResult<()> {
    let mut m = RunManifest::new("sweep-width", out, args);
    let sys = load_system(&args.system, &mut m)?;
    let seq = load_pulse(&args.pulse, &mut m)?;
    let dist = args.profile.load_or_synthetic(&mut m)?;
    let target = target_unitary(&args.target, &sys)?;
    let rows: Vec<WidthRow> = sweep_profile_width(&seq, &target, &sys, &dist, &args.widths.0)
        .context(|| "width sweep".into())?
        .into_iter()
        .map(|(width_factor, fidelity)| WidthRow { width_factor, fidelity })
        .collect();
    Outputs::create(out)?.csv("sweep_width.csv", &m, &[], &rows)?;
    Ok(())
}

#[derive(Args, Debug, Serialize)]
pub struct SweepPowerArgs {
    /// Spin system JSON, or builtin:one-spin, builtin:two-spin, builtin:three-spin
    #[arg(long, value_name = "FILE|BUILTIN")]
    pub system: String,

    /// Target gate such as x90@1,2 or identity
    #[arg(long)]
    pub target: GateSpec,

    #[command(flatten)]
    pub profile: ProfileArgs,

    /// Search configuration JSON used for every cell
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Static field factors applied to the chemical shifts
    #[arg(long, default_value = "0.5,1,2")]
    pub b0: Grid,

    /// RF amplitude caps in Hz
    #[arg(long, default_value = "5000,10000,20000")]
    pub caps: Grid,
}

/// Writes `sweep_power.csv` with columns b0_factor, max_amplitude_hz, fidelity.
/// Cells where fidelity fell as field or power grew are listed as comments.
pub fn sweep_power(args: &SweepPowerArgs, out: &Path) -> CliResult<()> {
    let mut m = RunManifest::new("sweep-power", out, args);
    let sys = load_system(&args.system, &mut m)?;
    let dist = args.profile.load(&mut m)?;
    let config = load_config(args.config.as_deref(), &mut m)?;
    let m = m.with_seed(config.rng_seed);
    let target = target_unitary(&args.target, &sys)?;
    let grid = sweep_power_field(&target, &sys, dist.as_ref(), &args.b0.0, &args.caps.0, &config)
        .context(|| "power/field sweep".into())?;
    let notes: Vec<String> = grid.monotonicity_violations.iter().map(|v| format!("non-monotone: {v}")).collect();
    Outputs::create(out)?.csv("sweep_power.csv", &m, &notes, &grid.cells)?;
    Ok(())
}

#[derive(Args, Debug, Serialize)]
pub struct SpectrumArgs {
    /// Spin system JSON, or builtin:one-spin, builtin:two-spin, builtin:three-spin
    #[arg(long, value_name = "FILE|BUILTIN")]
    pub system: String,

    /// Pulse sequence JSON
    #[arg(long, value_name = "FILE")]
    pub pulse: PathBuf,

    /// Ensemble profile; defaults to the synthetic profile
    #[command(flatten)]
    pub profile: ProfileArgs,
}

#[derive(Serialize)]
struct SpectrumArtifact<'a> {
    mean_unit_circle_distance: f64,
    #[serde(flatten)]
    report: &'a refocus::spectra::SpectrumReport,
}

/// Writes `spectrum.json` and `spectrum.csv` with columns re_exact, im_exact,
/// re_approx, im_approx, pair_index: exact superoperator eigenvalues against
/// the matched first-order prediction around the peak bin.
pub fn spectrum(args: &SpectrumArgs, out: &Path) -> CliResult<()> {
    let mut m = RunManifest::new("spectrum", out, args);
    let sys = load_system(&args.system, &mut m)?;
    let seq = load_pulse(&args.pulse, &mut m)?;
    let dist = args.profile.load_or_synthetic(&mut m)?;
    let report = analyze_sequence(&sys, &seq, &dist).context(|| "spectrum analysis".into())?;
    let mut files = Outputs::create(out)?;
    let artifact = SpectrumArtifact { mean_unit_circle_distance: mean_unit_circle_distance(&report.exact), report: &report };
    files.json("spectrum.json", &m, &artifact)?;
    files.csv("spectrum.csv", &m, &[], &report.rows())?;
    Ok(())
}

#[derive(Args, Debug, Serialize)]
pub struct NutationArgs {
    /// Measured signal CSV with columns t_s, amplitude and uniform sampling;
    /// without it a signal is simulated from the profile
    #[arg(long, value_name = "FILE")]
    pub signal: Option<PathBuf>,

    /// Profile to simulate from; defaults to the synthetic profile
    #[command(flatten)]
    pub profile: ProfileArgs,

    /// Nominal RF amplitude in Hz
    #[arg(long, default_value_t = 10_000.0)]
    pub amplitude: f64,

    /// Dwell time of a simulated signal in seconds
    #[arg(long, default_value_t = 1e-5)]
    pub dwell: f64,

    /// Number of points of a simulated signal
    #[arg(long, default_value_t = 4096)]
    pub points: usize,

    /// Number of profile bins to extract
    #[arg(long, default_value_t = 9)]
    pub bins: usize,
}

#[derive(Serialize, Deserialize)]
struct SignalRow {
    t_s: f64,
    amplitude: f64,
}

#[derive(Serialize)]
struct SpectrumPoint {
    frequency_hz: f64,
    magnitude: f64,
}

#[derive(Serialize)]
struct NutationArtifact {
    extracted: RfDistribution,
    /// Total variation against the simulating profile, when bins line up.
    total_variation: Option<f64>,
}

/// Writes `profile.json` with the extracted distribution, `nutation_spectrum.csv`
/// with columns frequency_hz, magnitude, and for simulated runs `signal.csv`
/// with columns t_s, amplitude.
pub fn nutation(args: &NutationArgs, out: &Path) -> CliResult<()> {
    let mut m = RunManifest::new("nutation", out, args);
    let mut files;
    let (signal, dwell, source) = match &args.signal {
        Some(path) => {
            let (signal, dwell) = read_signal(path)?;
            m.read(path);
            files = Outputs::create(out)?;
            (signal, dwell, None)
        }
        None => {
            let dist = args.profile.load_or_synthetic(&mut m)?;
            let signal = simulate_nutation(args.amplitude, &dist, args.dwell, args.points).context(|| "nutation simulation".into())?;
            files = Outputs::create(out)?;
            let rows: Vec<SignalRow> = signal.iter().enumerate().map(|(i, &a)| SignalRow { t_s: i as f64 * args.dwell, amplitude: a }).collect();
            files.csv("signal.csv", &m, &[], &rows)?;
            (signal, args.dwell, Some(dist))
        }
    };
    let extracted = extract_profile(&signal, dwell, args.amplitude, args.bins).context(|| "profile extraction".into())?;
    let spectrum: Vec<SpectrumPoint> = nutation_spectrum(&signal, dwell)
        .into_iter()
        .map(|(frequency_hz, magnitude)| SpectrumPoint { frequency_hz, magnitude })
        .collect();
    files.csv("nutation_spectrum.csv", &m, &[], &spectrum)?;
    let total_variation = source.as_ref().and_then(|d| extracted.total_variation_by_index(d));
    files.json("profile.json", &m, &NutationArtifact { extracted, total_variation })?;
    Ok(())
}

fn read_signal(path: &Path) -> CliResult<(Vec<f64>, f64)> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::io(path, e))?;
    let rows: Vec<SignalRow> = r.deserialize().collect::<Result<_, _>>().map_err(|e| CliError::io(path, e))?;
    if rows.len() < 2 {
        return Err(CliError::io(path, "signal needs at least two samples"));
    }
    let dwell = rows[1].t_s - rows[0].t_s;
    let uniform = rows.windows(2).all(|w| ((w[1].t_s - w[0].t_s) - dwell).abs() <= 1e-9 * dwell.abs().max(1e-300));
    if !(dwell > 0.0) || !uniform {
        return Err(CliError::io(path, "t_s must increase with a constant step"));
    }
    Ok((rows.into_iter().map(|r| r.amplitude).collect(), dwell))
}

#[derive(Args, Debug, Serialize)]
pub struct ProtocolArgs {
    /// Spin system JSON, or builtin:one-spin, builtin:two-spin, builtin:three-spin
    #[arg(long, value_name = "FILE|BUILTIN")]
    pub system: String,

    /// Gate set JSON: {"gates": [{"gate", "compensated", "uncompensated"}]} with
    /// pulse paths relative to this file
    #[arg(long, value_name = "FILE")]
    pub gates: PathBuf,

    /// Ensemble profile; defaults to the synthetic profile
    #[command(flatten)]
    pub profile: ProfileArgs,
}

#[derive(Deserialize)]
struct GateSetFile {
    gates: Vec<GateEntry>,
}

#[derive(Deserialize)]
struct GateEntry {
    gate: GateSpec,
    compensated: PathBuf,
    uncompensated: PathBuf,
}

#[derive(Serialize)]
struct TableRow<'a> {
    gate: &'a str,
    variant: refocus::protocol::Variant,
    input: String,
    c: Option<f64>,
    a: f64,
    c_a: f64,
}

/// Writes `protocol.json` and `protocol.csv` with columns gate, variant,
/// input, c, a, c_a. Each gate also gets a row with input `mean`.
pub fn protocol(args: &ProtocolArgs, out: &Path) -> CliResult<()> {
    let mut m = RunManifest::new("protocol", out, args);
    let sys = load_system(&args.system, &mut m)?;
    let dist = args.profile.load_or_synthetic(&mut m)?;
    let text = fs::read_to_string(&args.gates).map_err(|e| CliError::io(&args.gates, e))?;
    m.read(&args.gates);
    let set: GateSetFile = serde_json::from_str(&text).map_err(|e| CliError::io(&args.gates, e))?;
    let base = args.gates.parent().unwrap_or(Path::new("."));
    let gates = set
        .gates
        .into_iter()
        .map(|g| {
            Ok(GatePulses {
                compensated: load_pulse(&base.join(&g.compensated), &mut m)?,
                uncompensated: load_pulse(&base.join(&g.uncompensated), &mut m)?,
                gate: g.gate,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let report = run_protocol(&sys, &gates, &dist).context(|| "protocol simulation".into())?;

    let mut table: Vec<TableRow> = Vec::new();
    for mean in &report.gate_means {
        let rows = report.rows.iter().filter(|r| r.gate == mean.gate && r.variant == mean.variant);
        table.extend(rows.map(|r| TableRow { gate: &r.gate, variant: r.variant, input: r.input.to_string(), c: r.c, a: r.a, c_a: r.c_a }));
        table.push(TableRow { gate: &mean.gate, variant: mean.variant, input: "mean".into(), c: mean.c, a: mean.a, c_a: mean.c_a });
    }
    let notes: Vec<String> = report
        .grand_means
        .iter()
        .map(|g| format!("grand mean {}: C {} A {:.6} C_A {:.6}", serde_json::to_string(&g.variant).unwrap().trim_matches('"'), g.c.map_or("n/a".into(), |c| format!("{c:.6}")), g.a, g.c_a))
        .collect();
    let mut files = Outputs::create(out)?;
    files.json("protocol.json", &m, &report)?;
    files.csv("protocol.csv", &m, &notes, &table)?;
    Ok(())
}
