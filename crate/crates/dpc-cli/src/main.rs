use clap::{Parser, Subcommand, ValueEnum};
use dpc_cli::bench::{run_benchmark, write_outputs};
use dpc_cli::commands::{cmd_ptf, cmd_reconstruct, cmd_sensor, cmd_simulate, StackChoice};
use dpc_cli::config::{usage, RunConfig, UsageError};
use dpc::optics::SourceGeometry;
use std::path::PathBuf;

/// Quantitative differential phase contrast: simulation, reconstruction,
/// and benchmarking.
#[derive(Parser)]
#[command(name = "dpc", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum StackArg {
    Noisy,
    Clean,
}

impl From<StackArg> for StackChoice {
    fn from(value: StackArg) -> Self {
        match value {
            StackArg::Noisy => StackChoice::Noisy,
            StackArg::Clean => StackChoice::Clean,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum GeometryArg {
    HalfDisc,
    HalfAnnulus,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a phantom, its DPC stack, and a noisy copy, plus a manifest.
    Simulate {
        /// JSON simulation config.
        #[arg(long)]
        config: PathBuf,
        /// Output directory (created if missing).
        #[arg(long)]
        out: PathBuf,
    },
    /// Reconstruct phase from a simulated stack.
    Reconstruct {
        /// Manifest written by `simulate`.
        #[arg(long)]
        manifest: PathBuf,
        /// One of: tikhonov, tv, dsp-hqs, dsp-rld.
        #[arg(long)]
        method: String,
        /// Override the sensor-derived alpha.
        #[arg(long)]
        alpha: Option<f64>,
        /// Override the sensor-derived beta.
        #[arg(long)]
        beta: Option<f64>,
        /// Which stored stack to read.
        #[arg(long, value_enum, default_value = "noisy")]
        stack: StackArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the full phantom x SNR x method x trial sweep.
    Benchmark {
        /// JSON run config; omit to use the built-in Table-1-style sweep.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads (default: DPC_JOBS or the core count).
        #[arg(long)]
        jobs: Option<usize>,
        /// Reduced preset: 256x256 targets, 3 trials.
        #[arg(long)]
        quick: bool,
        /// Master seed override.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Dump a transfer function as real/imaginary PFM planes.
    Ptf {
        /// JSON optical config.
        #[arg(long)]
        config: PathBuf,
        /// Illumination axis, e.g. top-bottom or angle:0.785.
        #[arg(long, default_value = "top-bottom")]
        axis: String,
        #[arg(long, value_enum, default_value = "half-disc")]
        geometry: GeometryArg,
        /// Annulus inner radius as a fraction of the pupil cutoff.
        #[arg(long, default_value_t = 0.9)]
        inner_factor: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the noise estimate and derived penalties for a stack.
    Sensor {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, value_enum, default_value = "noisy")]
        stack: StackArg,
    },
}

fn default_jobs() -> usize {
    if let Ok(v) = std::env::var("DPC_JOBS") {
        if let Ok(n) = v.parse::<usize>() {
            return n.max(1);
        }
    }
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Simulate { config, out } => cmd_simulate(&config, &out),
        Command::Reconstruct { manifest, method, alpha, beta, stack, out } => {
            cmd_reconstruct(&manifest, &method, alpha, beta, stack.into(), &out)
        }
        Command::Benchmark { config, out, jobs, quick, seed } => {
            let mut run_config: RunConfig = match &config {
                Some(path) => {
                    let text = match std::fs::read_to_string(path) {
                        Ok(t) => t,
                        Err(e) => {
                            return usage(format!("cannot read config {}: {e}", path.display()))
                        }
                    };
                    match serde_json::from_str(&text) {
                        Ok(c) => c,
                        Err(e) => return usage(format!("invalid run config: {e}")),
                    }
                }
                None => dpc_cli::bench::standard_run_config(20260809),
            };
            if let Some(seed) = seed {
                run_config.master_seed = seed;
            }
            if quick {
                run_config = run_config.quick();
            }
            let jobs = jobs.unwrap_or_else(default_jobs);
            let (records, summary) = run_benchmark(&run_config, jobs)?;
            write_outputs(&out, &records, &summary)?;
            let failed = summary.failed_records;
            let total = summary.total_records;
            eprintln!("benchmark: {total} records, {failed} failed");
            if failed * 10 > total {
                anyhow::bail!("{failed} of {total} cells failed");
            }
            Ok(())
        }
        Command::Ptf { config, axis, geometry, inner_factor, out } => {
            let geometry = match geometry {
                GeometryArg::HalfDisc => SourceGeometry::HalfDisc,
                GeometryArg::HalfAnnulus => SourceGeometry::HalfAnnulus { inner_factor },
            };
            cmd_ptf(&config, &axis, geometry, &out)
        }
        Command::Sensor { manifest, stack } => {
            let report = cmd_sensor(&manifest, stack.into())?;
            println!("{report}");
            Ok(())
        }
    }
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => {}
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = if err.downcast_ref::<UsageError>().is_some() { 2 } else { 1 };
            std::process::exit(code);
        }
    }
}
