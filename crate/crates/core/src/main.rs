use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use risloc::config::{load_config, ScenarioConfig};
use risloc::dsp::estimate;
use risloc::experiments::{diagnostic_run, run_study, ParamValue, Placement, StudyParameter, SweepStudy};
use risloc::io;
use risloc::localization::LocalizationEstimate;

/// RIS-aided FMCW radar self-localization toolkit.
#[derive(Parser)]
#[command(name = "risloc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a beat cube from a scenario.
    Simulate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Output cube file.
        #[arg(long)]
        out: PathBuf,
        /// Also write an int16 capture (`<out>.iq` + `<out>.json`).
        #[arg(long)]
        capture: bool,
    },
    /// Run the estimator on a cube and write per-angle and summary CSVs.
    Estimate {
        /// Cube file produced by `simulate` or `ingest`.
        cube: PathBuf,
        /// Scenario supplying the pipeline settings and RIS geometry.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output CSV (per-angle rows); the summary goes to `<stem>_summary.csv`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Write map, beam-profile and distance-profile CSVs for one run.
    Diagnose {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Only emit map rows with |v| up to this many m/s.
        #[arg(long)]
        velocity_limit: Option<f64>,
    },
    /// Monte Carlo error study over one parameter.
    Study(StudyArgs),
    /// Convert an int16 I/Q capture into a cube file.
    Ingest {
        /// Raw capture file.
        data: PathBuf,
        /// JSON sidecar; defaults to the data path with a `.json` extension.
        #[arg(long)]
        meta: Option<PathBuf>,
        /// Frame range `a:b` to keep (half-open).
        #[arg(long)]
        trim: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario TOML; omitted fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct StudyArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// tx_power (dBm), beam_step (deg) or n_ris_elements (AZxEL).
    #[arg(long)]
    sweep_param: StudyParameter,
    /// Comma-separated values, e.g. `5,10,15` or `4x4,16x4`.
    #[arg(long)]
    values: String,
    #[arg(long, default_value_t = 100)]
    runs: usize,
    /// Draw the true azimuth uniformly per run.
    #[arg(long)]
    randomize_aod: bool,
    /// Half-width of the randomized azimuth range, degrees.
    #[arg(long, default_value_t = 15.0)]
    aod_range: f64,
    /// Also write per-run records to `<stem>_runs.csv`.
    #[arg(long)]
    records: bool,
    #[arg(long)]
    out: PathBuf,
}

fn scenario(path: Option<&Path>) -> Result<ScenarioConfig> {
    match path {
        Some(p) => load_config(p).with_context(|| format!("loading {}", p.display())),
        None => Ok(ScenarioConfig::default()),
    }
}

fn sibling(path: &Path, suffix: &str, ext: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}.{ext}"))
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Simulate { scenario: args, out, capture } => {
            let cfg = scenario(args.config.as_deref())?;
            let cube = cfg.synthesize(args.seed)?;
            io::write_cube(&cube, &out)?;
            if capture {
                io::export_capture(&cube, out.with_extension("iq"), out.with_extension("json"), None)?;
            }
        }
        Command::Estimate { cube, config, out } => {
            let cfg = scenario(config.as_deref())?;
            let cube = io::read_cube(&cube)?;
            let result = estimate(&cube, &cfg.pipeline()?)?;
            let loc = LocalizationEstimate::from_sweep(&result, cfg.ris_position(), &cfg.ris_orientation()?)?;
            io::write_sweep_csv(&result, &out)?;
            io::write_estimate_csv(&result, sibling(&out, "_summary", "csv"))?;
            println!(
                "azimuth {:.3} deg, distance {:.4} m, velocity {:.4} m/s, position [{:.4}, {:.4}, {:.4}]",
                result.aod.azimuth.to_degrees(),
                loc.distance,
                loc.velocity,
                loc.position.x,
                loc.position.y,
                loc.position.z
            );
        }
        Command::Diagnose { scenario: args, out, velocity_limit } => {
            let cfg = scenario(args.config.as_deref())?;
            let diag = diagnostic_run(&cfg, args.seed)?;
            io::write_diagnostics(&diag, &out, velocity_limit)?;
        }
        Command::Study(a) => {
            let base = scenario(a.scenario.config.as_deref())?;
            let values = ParamValue::parse_list(a.sweep_param, &a.values)?;
            if values.is_empty() {
                bail!("--values is empty");
            }
            let mut study = SweepStudy::new(a.sweep_param, values, a.runs, base, a.scenario.seed);
            if a.randomize_aod {
                study.placement = Placement::RandomAod { half_range_deg: a.aod_range };
            }
            study.keep_records = a.records;
            let result = run_study(&study)?;
            io::write_study_csv(&result, &a.out)?;
            if a.records {
                io::write_study_records_csv(&result, sibling(&a.out, "_runs", "csv"))?;
            }
            for p in &result.points {
                if let Some(e) = &p.error {
                    eprintln!("{} = {}: {} failed run(s): {e}", result.parameter, p.value, p.failures);
                }
            }
        }
        Command::Ingest { data, meta, trim, out } => {
            let meta = meta.unwrap_or_else(|| data.with_extension("json"));
            let trim = match trim {
                Some(t) => Some(io::parse_trim(&t, io::read_capture_meta(&meta)?.frames)?),
                None => None,
            };
            let cube = io::ingest_capture(&data, &meta, trim)?;
            io::write_cube(&cube, &out)?;
        }
    }
    Ok(())
}
