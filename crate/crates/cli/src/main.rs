use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use zeno_cli::config::{ConfigErrors, RunConfig};
use zeno_cli::presets;
use zeno_cli::run::{self, parse_axis, parse_axis_value, sweep_csv};

const EXIT_CONFIG: u8 = 2;
const EXIT_FIT_REJECTED: u8 = 3;

#[derive(Parser)]
#[command(
    name = "zeno",
    version,
    about = "Zeno-slowed Auger decay under π-pulse trains"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Source {
    /// Configuration file (`section.key = value unit` lines)
    #[arg(long)]
    config: Option<PathBuf>,

    /// Preset to start from (overrides `preset =` in the file)
    #[arg(long)]
    preset: Option<String>,

    /// Extra `key=value` assignments, applied after the file
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Propagate one configuration and write its outputs
    Run {
        #[command(flatten)]
        source: Source,
        /// Output directory
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run one configuration per value of a parameter, concurrently
    Sweep {
        #[command(flatten)]
        source: Source,
        /// Omega2 (eV²), intensity (TW/cm²), t_m (fs), dt_delay (fs) or omega (eV)
        #[arg(long)]
        axis: String,
        /// Comma-separated values; unit suffixes allowed
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        #[arg(long, default_value = "sweep")]
        out: PathBuf,
        /// Concurrent runs [default: available cores]
        #[arg(long, env = "ZENO_WORKERS")]
        workers: Option<usize>,
    },
    /// Check a configuration and its grid without propagating
    Validate {
        #[command(flatten)]
        source: Source,
    },
    /// List presets, or print one fully expanded
    Presets { name: Option<String> },
}

fn load(source: &Source) -> anyhow::Result<RunConfig> {
    Ok(RunConfig::load(
        source.config.as_deref(),
        source.preset.as_deref(),
        &source.overrides,
    )?
    .1)
}

fn real_main() -> anyhow::Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { source, out } => {
            let config = load(&source)?;
            let result = run::execute(&config)?;
            run::write_outputs(&out, &config, &result)?;
            let s = &result.summary;
            match &s.fit {
                Some(f) => println!(
                    "tau_eff = {:.4} fs (1/e: {}), r² = {:.5}{}",
                    f.tau_eff_envelope_fs,
                    f.tau_eff_1e_fs
                        .map_or("n/a".into(), |t| format!("{t:.4} fs")),
                    f.r_squared,
                    if f.accepted {
                        ""
                    } else {
                        " [rejected: non-exponential]"
                    }
                ),
                None => println!("no lifetime fit: {}", s.fit_error.as_deref().unwrap_or("")),
            }
            println!("outputs in {}", out.display());
            Ok(if s.fit_accepted() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_FIT_REJECTED)
            })
        }
        Command::Sweep {
            source,
            axis,
            values,
            out,
            workers,
        } => {
            let config = load(&source)?;
            let axis = parse_axis(&axis, config.dipole)?;
            let values = values
                .iter()
                .map(|v| parse_axis_value(axis, v))
                .collect::<anyhow::Result<Vec<_>>>()?;
            let workers = workers
                .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
            std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            let rows = run::sweep(&config, axis, &values, Some(&out), workers)?;
            let mut csv = sweep_csv(axis, &rows);
            csv.write(&out.join("sweep.csv"))?;
            print!("{}", csv.as_str());
            let failed = rows.iter().filter(|r| r.outcome.is_err()).count();
            if failed > 0 {
                eprintln!("{failed} of {} points failed", rows.len());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { source } => {
            let config = load(&source)?;
            let setup = run::prepare(&config)?;
            for r in &setup.resolution {
                println!(
                    "{}: recurrence {:.2} fs, {:.2} points per linewidth",
                    r.region.name(),
                    zeno_core::units::to_fs(r.recurrence_time),
                    r.points_per_linewidth
                );
                for i in &r.issues {
                    println!("  {:?}: {}", i.severity, i.message);
                }
            }
            println!("ok");
            Ok(ExitCode::SUCCESS)
        }
        Command::Presets { name: None } => {
            for name in presets::NAMES {
                println!("{name:14} {}", presets::describe(name).unwrap_or(""));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Presets { name: Some(name) } => {
            let config = RunConfig::load(None, Some(&name), &[])?.1;
            print!("{}", config.echo());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<ConfigErrors>().is_some() {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
