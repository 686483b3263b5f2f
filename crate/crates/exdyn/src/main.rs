//! Command-line front end: simulate orbits, fit block maxima, run sweeps,
//! produce diagnostics, print tail predictions and Lyapunov spectra.
//!
//! Exit codes: 0 on success, 1 for configuration/usage errors, 2 for
//! numerical failures (divergent orbits, degenerate fits, ...).

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use exdyn::dynamics::{orbit, to_cartesian, Initial, Kind, OrbitConfig, SUBSTEPS_DEFAULT,
    TRANSIENT_DEFAULT};
use exdyn::extremes::block_maxima;
use exdyn::gevfit::{fit_gev, fit_with_uncertainty};
use exdyn::harness::diagnostics::{density_grid, kernel_density, qq_data, silverman_bandwidth};
use exdyn::harness::export::{
    format_float, read_series, report_to_json, sweep_to_csv, sweep_to_json, write_text,
};
use exdyn::harness::{
    assemble_config, infer_prediction, observable_from_arg, resolve_prediction, run_sweep,
    system_from_arg, ConfigOverrides, PredictionRequest, Profile,
};
use exdyn::{analysis, Error, Result};

#[derive(Parser)]
#[command(
    name = "exdyn",
    version,
    about = "Block-maxima extreme value analysis of chaotic maps and flows"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Emit an observable series along one orbit, one value per line.
    Simulate(SimulateArgs),
    /// Fit a GEV to the block maxima of a series file.
    Fit(FitArgs),
    /// Run a configured experiment or sweep and export the result rows.
    Sweep(SweepArgs),
    /// Kernel density and QQ diagnostics for a file of block maxima.
    Diagnose(DiagnoseArgs),
    /// Print the predicted tail index for a system/observable pair.
    Predict(PredictArgs),
    /// Lyapunov spectrum and Kaplan-Yorke dimension of a system.
    Lyapunov(LyapunovArgs),
}

#[derive(clap::Args)]
struct SimulateArgs {
    /// System id (thom, solenoid, henon, lozi, lorenz63, lorenz84) or JSON.
    #[arg(long)]
    system: String,
    /// Observable family name or JSON.
    #[arg(long)]
    observable: String,
    /// Number of samples to emit.
    #[arg(long, default_value_t = 1000)]
    n: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = TRANSIENT_DEFAULT)]
    transient: u64,
    /// Flow sample interval (defaults to the system's own).
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    substeps: Option<u32>,
    /// Output path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct FitArgs {
    /// Series file: one value per line, `#` comments allowed.
    #[arg(long = "in", value_name = "PATH")]
    input: PathBuf,
    /// Block length for the maxima.
    #[arg(long)]
    blocklen: u64,
    /// Keep only the first this-many blocks.
    #[arg(long)]
    bmax: Option<u64>,
    /// Number of subsamples for the uncertainty estimate.
    #[arg(long, default_value_t = 100)]
    nsamp: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct SweepArgs {
    /// Experiment config (JSON). Flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    system: Option<String>,
    #[arg(long)]
    observable: Option<String>,
    #[arg(long)]
    blocklen: Option<u64>,
    #[arg(long)]
    bmax: Option<u64>,
    #[arg(long)]
    nsamp: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    transient: Option<u64>,
    /// Run-length preset: fast or paper.
    #[arg(long)]
    profile: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
}

#[derive(clap::Args)]
struct DiagnoseArgs {
    /// Block-maxima file: one value per line, `#` comments allowed.
    #[arg(long = "in", value_name = "PATH")]
    input: PathBuf,
    /// Kernel bandwidth (Silverman's rule when omitted).
    #[arg(long)]
    bandwidth: Option<f64>,
    /// Number of density grid points.
    #[arg(long, default_value_t = 512)]
    grid: usize,
    /// Output path; for csv this is a prefix for `.kde.csv` and `.qq.csv`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    format: OutputFormat,
}

#[derive(clap::Args)]
struct PredictArgs {
    #[arg(long)]
    system: String,
    #[arg(long)]
    observable: String,
    /// Explicit prediction request (JSON); inferred when omitted.
    #[arg(long)]
    prediction: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct LyapunovArgs {
    #[arg(long)]
    system: String,
    /// Sample steps to average over (default: 10^6 for maps, 2*10^5 for flows).
    #[arg(long)]
    steps: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0u8,
                _ => 1u8,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        // A closed-stdout reader (exdyn ... | head) is not an error.
        Err(e) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn is_broken_pipe(err: &Error) -> bool {
    match err {
        Error::Io(e) => e.kind() == std::io::ErrorKind::BrokenPipe,
        Error::Stage { source, .. } | Error::SubsampleFit { source, .. } => is_broken_pipe(source),
        _ => false,
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Fit(args) => cmd_fit(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Diagnose(args) => cmd_diagnose(args),
        Command::Predict(args) => cmd_predict(args),
        Command::Lyapunov(args) => cmd_lyapunov(args),
    }
}

/// Print or write a finished text artifact.
fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => write_text(path, text),
        None => {
            let mut stdout = std::io::stdout().lock();
            if text.ends_with('\n') {
                write!(stdout, "{text}")?;
            } else {
                writeln!(stdout, "{text}")?;
            }
            Ok(())
        }
    }
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let system = system_from_arg(&args.system)?;
    let observable = observable_from_arg(&args.observable)?;
    let compiled = observable.compiled_for(system.state_dim())?;
    let cfg = OrbitConfig {
        initial: Initial::Seeded,
        transient: args.transient,
        n_samples: args.n,
        dt: args.dt,
        substeps: args.substeps.unwrap_or(SUBSTEPS_DEFAULT),
        seed: args.seed,
    };
    let orb = orbit(&system, &cfg)?;

    let mut w: BufWriter<Box<dyn Write>> = BufWriter::new(match &args.out {
        Some(path) => Box::new(File::create(path)?),
        None => Box::new(std::io::stdout().lock()),
    });
    writeln!(w, "# system: {system}")?;
    writeln!(w, "# observable: {}", observable.describe())?;
    writeln!(w, "# seed: {} transient: {} n: {}", args.seed, args.transient, args.n)?;
    for state in orb {
        let v = compiled.eval(to_cartesian(&system, state?));
        writeln!(w, "{}", format_float(v))?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_fit(args: FitArgs) -> Result<()> {
    let series = read_series(&args.input)?;
    let mut bm = block_maxima(&series, args.blocklen)?;
    if let Some(bmax) = args.bmax {
        if (bm.maxima.len() as u64) < bmax {
            return Err(Error::SeriesTooShort {
                needed: bmax.saturating_mul(args.blocklen),
                got: series.len() as u64,
            });
        }
        bm.maxima.truncate(bmax as usize);
    }
    let report = fit_with_uncertainty(&bm, args.nsamp)?;
    emit(&args.out, &report_to_json(&report)?)
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let file_text = match &args.config {
        Some(path) => Some(exdyn::harness::export::read_text(path)?),
        None => None,
    };
    let profile = args.profile.as_deref().map(str::parse::<Profile>).transpose()?;
    let overrides = ConfigOverrides {
        system: args.system,
        observable: args.observable,
        blocklen: args.blocklen,
        bmax: args.bmax,
        nsamp: args.nsamp,
        seed: args.seed,
        transient: args.transient,
        profile,
    };
    let cfg = assemble_config(file_text.as_deref(), &overrides)?;
    let rows = run_sweep(&cfg)?;
    let text = match args.format {
        OutputFormat::Csv => sweep_to_csv(&rows),
        OutputFormat::Json => sweep_to_json(&rows)?,
    };
    emit(&args.out, &text)
}

fn cmd_diagnose(args: DiagnoseArgs) -> Result<()> {
    let maxima = read_series(&args.input)?;
    let bandwidth = match args.bandwidth {
        Some(h) => h,
        None => silverman_bandwidth(&maxima)?,
    };
    let grid = density_grid(&maxima, bandwidth, 8.0, args.grid)?;
    let density = kernel_density(&maxima, bandwidth, &grid)?;
    let fit = fit_gev(&maxima)?;
    let qq = qq_data(&maxima, &fit)?;

    match args.format {
        OutputFormat::Json => {
            let (empirical, theoretical): (Vec<f64>, Vec<f64>) = qq.into_iter().unzip();
            let doc = serde_json::json!({
                "bandwidth": bandwidth,
                "fit": fit,
                "kde": { "x": grid, "density": density },
                "qq": { "empirical": empirical, "theoretical": theoretical },
            });
            emit(&args.out, &serde_json::to_string_pretty(&doc)?)
        }
        OutputFormat::Csv => {
            let prefix = args.out.ok_or_else(|| {
                Error::InvalidConfig("csv diagnostics need --out as a file prefix".into())
            })?;
            let mut kde_text = String::from("x,density\n");
            for (x, d) in grid.iter().zip(&density) {
                kde_text.push_str(&format!("{},{}\n", format_float(*x), format_float(*d)));
            }
            let mut qq_text = String::from("empirical,theoretical\n");
            for (e, t) in &qq {
                qq_text.push_str(&format!("{},{}\n", format_float(*e), format_float(*t)));
            }
            let with_suffix = |suffix: &str| -> PathBuf {
                let mut s = prefix.as_os_str().to_os_string();
                s.push(suffix);
                PathBuf::from(s)
            };
            write_text(&with_suffix(".kde.csv"), &kde_text)?;
            write_text(&with_suffix(".qq.csv"), &qq_text)
        }
    }
}

fn cmd_predict(args: PredictArgs) -> Result<()> {
    let system = system_from_arg(&args.system)?;
    let observable = observable_from_arg(&args.observable)?;
    let request: PredictionRequest = match &args.prediction {
        Some(text) => serde_json::from_str(text)?,
        None => infer_prediction(&system, &observable).ok_or_else(|| {
            Error::InvalidConfig(format!(
                "no prediction rule known for {system} with {}",
                observable.describe()
            ))
        })?,
    };
    let prediction = resolve_prediction(&request, &system, &observable)?;
    emit(&args.out, &serde_json::to_string_pretty(&prediction)?)
}

fn cmd_lyapunov(args: LyapunovArgs) -> Result<()> {
    let system = system_from_arg(&args.system)?;
    let steps = args.steps.unwrap_or(match system.kind() {
        Kind::Map => 1_000_000,
        Kind::Flow => 200_000,
    });
    let spectrum = analysis::lyapunov_spectrum(&system, steps, args.seed)?;
    let doc = serde_json::json!({
        "system": system,
        "exponents": spectrum.exponents,
        "n_steps": spectrum.n_steps,
        "skipped": spectrum.skipped,
        "dimension": spectrum.dimension(),
    });
    emit(&args.out, &serde_json::to_string_pretty(&doc)?)
}
