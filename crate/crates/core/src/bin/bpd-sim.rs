use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use bpd_core::dictionary::{build_dictionary, build_far_field_dictionary, build_grid, write_matrix};
use bpd_core::estimators::Estimator;
use bpd_core::harness::{
    emit_results, emit_trials, run_sweep_with, ExperimentConfig, OutputFormat, Preset, Sweep,
    SweepAxis, SweepOptions, TrialOptions,
};
use bpd_core::pattern::{build_pattern_tables, xi};
use bpd_core::{Error, Result};

#[derive(Parser)]
#[command(name = "bpd-sim", version, about = "Near-field wideband channel estimation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo NMSE sweep.
    Simulate(SimulateArgs),
    /// Pattern tables and the coherence function.
    Pattern {
        #[command(subcommand)]
        command: PatternCommand,
    },
    /// Dictionary matrices.
    Dictionary {
        #[command(subcommand)]
        command: DictionaryCommand,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        }
    }
}

#[derive(Args)]
struct ScaleArgs {
    /// Use the full-size system instead of the reduced default.
    #[arg(long)]
    paper_scale: bool,
    /// TOML file overriding configuration keys.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    scale: ScaleArgs,
    /// fig4 (distance), fig5 (bandwidth), fig6 (SNR) or fig7 (pilots).
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated estimator names.
    #[arg(long, value_delimiter = ',')]
    estimators: Option<Vec<String>>,
    /// Sweep axis: distance, bandwidth, snr or pilots.
    #[arg(long)]
    axis: Option<String>,
    /// Comma-separated sweep values (meters, Hz, dB or slots).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    values: Option<Vec<f64>>,
    #[arg(long, allow_hyphen_values = true)]
    snr_db: Option<f64>,
    #[arg(long)]
    bandwidth_hz: Option<f64>,
    #[arg(long)]
    pilots: Option<usize>,
    #[arg(long)]
    max_paths: Option<usize>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Also write one row per trial next to the output file.
    #[arg(long)]
    per_trial: bool,
    /// Record mean wall time per estimator (makes output run-dependent).
    #[arg(long)]
    timing: bool,
    /// Fail when greedy residuals grow or lose orthogonality.
    #[arg(long)]
    check_invariants: bool,
    /// Suppress progress messages.
    #[arg(long, short)]
    quiet: bool,
}

#[derive(Subcommand)]
enum PatternCommand {
    /// Write the coherence heatmap and both drift tables as CSV.
    Dump(PatternDumpArgs),
}

#[derive(Args)]
struct PatternDumpArgs {
    #[command(flatten)]
    scale: ScaleArgs,
    /// Heatmap output (gamma, zeta, value).
    #[arg(long)]
    out: PathBuf,
    /// Angle table output; defaults to `<out stem>_angle.csv`.
    #[arg(long)]
    angle_out: Option<PathBuf>,
    /// Ring table output; defaults to `<out stem>_ring.csv`.
    #[arg(long)]
    ring_out: Option<PathBuf>,
    #[arg(long, default_value_t = 2.0)]
    gamma_max: f64,
    #[arg(long, default_value_t = 4.0)]
    zeta_max: f64,
    /// Samples per axis, covering [-max, max].
    #[arg(long, default_value_t = 81)]
    steps: usize,
}

#[derive(Subcommand)]
enum DictionaryCommand {
    /// Write the polar (or far-field) dictionary in the binary matrix format.
    Export {
        #[command(flatten)]
        scale: ScaleArgs,
        #[arg(long)]
        out: PathBuf,
        /// Export the angle-only far-field dictionary.
        #[arg(long)]
        far_field: bool,
    },
}

fn base_config(scale: &ScaleArgs) -> Result<ExperimentConfig> {
    let base = if scale.paper_scale {
        ExperimentConfig::paper_scale()
    } else {
        ExperimentConfig::desk_scale()
    };
    match &scale.config {
        Some(path) => base.merge_file(path).map_err(|e| match e {
            Error::Io { path, source } => Error::Config(format!("{}: {source}", path.display())),
            other => other,
        }),
        None => Ok(base),
    }
}

fn simulate_config(args: &SimulateArgs) -> Result<ExperimentConfig> {
    let mut cfg = if args.scale.paper_scale {
        ExperimentConfig::paper_scale()
    } else {
        ExperimentConfig::desk_scale()
    };
    if let Some(p) = &args.preset {
        cfg.apply_preset(p.parse::<Preset>()?);
    }
    if let Some(path) = &args.scale.config {
        cfg = cfg.merge_file(path).map_err(|e| match e {
            Error::Io { path, source } => Error::Config(format!("{}: {source}", path.display())),
            other => other,
        })?;
    }
    if let Some(t) = args.trials {
        cfg.trials = t;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(names) = &args.estimators {
        cfg.estimators = names
            .iter()
            .map(|n| n.trim().parse::<Estimator>())
            .collect::<Result<_>>()?;
    }
    if let Some(v) = args.snr_db {
        cfg.snr_db = v;
    }
    if let Some(v) = args.bandwidth_hz {
        cfg.bandwidth_hz = v;
    }
    if let Some(v) = args.pilots {
        cfg.pilots = v;
    }
    if let Some(v) = args.max_paths {
        cfg.max_paths = v;
    }
    match (&args.axis, &args.values) {
        (Some(axis), Some(values)) => {
            cfg.sweep = Some(Sweep {
                axis: axis.parse::<SweepAxis>()?,
                values: values.clone(),
            })
        }
        (None, Some(values)) => {
            let sweep = cfg
                .sweep
                .as_mut()
                .ok_or_else(|| Error::Config("--values needs --axis or a preset".into()))?;
            sweep.values = values.clone();
        }
        (Some(_), None) => return Err(Error::Config("--axis needs --values".into())),
        (None, None) => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

fn simulate(args: &SimulateArgs) -> Result<()> {
    let cfg = simulate_config(args)?;
    let options = SweepOptions {
        trial: TrialOptions {
            check_invariants: args.check_invariants,
        },
        timing: args.timing,
    };
    let quiet = args.quiet;
    let out = run_sweep_with(&cfg, options, |point, total| {
        if !quiet {
            eprintln!("point {}/{} done", point + 1, total);
        }
    })?;
    let format = OutputFormat::from(args.format);
    emit_results(&out.rows, format, &args.out)?;
    if args.per_trial {
        let ext = match format {
            OutputFormat::Csv => ".trials.csv",
            OutputFormat::Json => ".trials.json",
        };
        emit_trials(&out.trials, format, &sibling(&args.out, ext))?;
    }
    Ok(())
}

fn write_csv<P: AsRef<Path>>(path: P, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| Error::Format {
            path: path.into(),
            message: e.to_string(),
        })?;
    let fail = |e: csv::Error| Error::Format {
        path: path.into(),
        message: e.to_string(),
    };
    w.write_record(header).map_err(fail)?;
    for row in rows {
        w.write_record(&row).map_err(fail)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn pattern_dump(args: &PatternDumpArgs) -> Result<()> {
    let cfg = base_config(&args.scale)?;
    cfg.validate()?;
    if args.steps < 2 || !(args.gamma_max > 0.0 && args.zeta_max > 0.0) {
        return Err(Error::Config("heatmap needs at least 2 steps and positive ranges".into()));
    }
    let system = cfg.system()?;
    let grid = build_grid(&system, cfg.num_angles, cfg.num_rings, cfg.beta)?;
    let tables = build_pattern_tables(&system, &grid);

    let n = args.steps;
    let axis = |max: f64, i: usize| -max + 2.0 * max * i as f64 / (n - 1) as f64;
    let (gmax, zmax) = (args.gamma_max, args.zeta_max);
    write_csv(
        &args.out,
        &["gamma", "zeta", "value"],
        (0..n).flat_map(|i| {
            (0..n).map(move |j| {
                let (g, z) = (axis(gmax, i), axis(zmax, j));
                vec![g.to_string(), z.to_string(), xi(g, z).to_string()]
            })
        }),
    )?;

    let m_count = tables.num_subcarriers();
    let angle_out = args.angle_out.clone().unwrap_or_else(|| sibling(&args.out, "_angle.csv"));
    let ring_out = args.ring_out.clone().unwrap_or_else(|| sibling(&args.out, "_ring.csv"));
    let header = ["index", "m", "mapped_index"];
    write_csv(
        angle_out,
        &header,
        (0..tables.num_angles()).flat_map(|a| {
            let t = &tables;
            (0..m_count).map(move |m| vec![a.to_string(), m.to_string(), t.angle(a, m).to_string()])
        }),
    )?;
    write_csv(
        ring_out,
        &header,
        (0..tables.num_rings()).flat_map(|r| {
            let t = &tables;
            (0..m_count).map(move |m| vec![r.to_string(), m.to_string(), t.ring(r, m).to_string()])
        }),
    )
}

fn dictionary_export(scale: &ScaleArgs, out: &Path, far_field: bool) -> Result<()> {
    let cfg = base_config(scale)?;
    cfg.validate()?;
    let system = cfg.system()?;
    let grid = build_grid(&system, cfg.num_angles, cfg.num_rings, cfg.beta)?;
    let dict = if far_field {
        build_far_field_dictionary(&system, &grid)
    } else {
        build_dictionary(&system, &grid)
    };
    write_matrix(out, &dict.matrix)
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Simulate(args) => simulate(args),
        Command::Pattern {
            command: PatternCommand::Dump(args),
        } => pattern_dump(args),
        Command::Dictionary {
            command: DictionaryCommand::Export { scale, out, far_field },
        } => dictionary_export(scale, out, *far_field),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                ExitCode::from(2)
            } else if e.is_numerical() {
                ExitCode::from(3)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
