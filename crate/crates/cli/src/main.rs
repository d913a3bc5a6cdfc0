use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use vrti_cli::commands::{self, TrackSource};
use vrti_cli::config::{Overrides, ScenarioConfig};

/// Variance-based radio tomographic imaging: simulate link measurements,
/// reconstruct motion images and track a moving person.
#[derive(Parser)]
#[command(name = "vrti", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Scenario file (TOML). Built-in defaults are used without one.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed for channels, losses and trajectory jitter.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Per-transmission token loss probability.
    #[arg(long, global = true)]
    loss: Option<f64>,
    /// Tracker motion variance.
    #[arg(long, global = true)]
    vm: Option<f64>,
    /// Tracker measurement variance.
    #[arg(long, global = true)]
    vn: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a measurement campaign; writes trace.csv and truth.csv or spots.csv.
    Simulate {
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Reconstruct one image per token round of a trace.
    Reconstruct {
        /// Trace CSV (`time_s,tx,rx,rss_db`).
        #[arg(long)]
        trace: PathBuf,
        /// Frame directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Track the image peak with a Kalman filter; writes track.csv.
    Track {
        /// Frame directory written by `reconstruct`.
        #[arg(long, conflicts_with = "trace", required_unless_present = "trace")]
        frames: Option<PathBuf>,
        /// Trace CSV, reconstructed on the fly.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// `time_s,x,y` markers of the true path.
        #[arg(long)]
        truth: Option<PathBuf>,
        /// `spot,start_s,end_s,x,y` known positions.
        #[arg(long)]
        spots: Option<PathBuf>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Variance of a log-Ricean variable against K (dB).
    Theory {
        /// Lowest K in dB.
        #[arg(long, default_value_t = -10.0, allow_negative_numbers = true)]
        min: f64,
        /// Highest K in dB.
        #[arg(long, default_value_t = 30.0, allow_negative_numbers = true)]
        max: f64,
        /// K step in dB.
        #[arg(long, default_value_t = 1.0)]
        step: f64,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate, reconstruct and track in one pass.
    Run {
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
}

fn load(g: &Global) -> Result<ScenarioConfig> {
    let mut cfg = ScenarioConfig::load(g.config.as_deref())?;
    cfg.apply(&Overrides {
        seed: g.seed,
        loss: g.loss,
        vm: g.vm,
        vn: g.vn,
    });
    Ok(cfg)
}

fn print_track(r: &commands::TrackReport) {
    println!("frames={}", r.frames);
    if let Some(e) = r.avg_error {
        println!("avg_error_ft={e}");
    }
    if let Some(z) = r.zeta {
        println!("zeta_ft={z}");
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("VRTI_LOG", "warn")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain()
        .filter_map(|c| c.downcast_ref::<std::io::Error>())
        .any(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
}

fn execute(cli: &Cli) -> Result<()> {
    let g = &cli.global;
    match &cli.command {
        Command::Simulate { out } => {
            let r = commands::simulate(&load(g)?, out)?;
            println!("samples={} rounds={}", r.samples, r.rounds);
        }
        Command::Reconstruct { trace, out } => {
            let n = commands::reconstruct(&load(g)?, trace, out)?;
            println!("frames={n}");
        }
        Command::Track {
            frames,
            trace,
            truth,
            spots,
            out,
        } => {
            let source = match (frames, trace) {
                (Some(f), _) => TrackSource::Frames(f),
                (None, Some(t)) => TrackSource::Trace(t),
                (None, None) => unreachable!("clap requires one source"),
            };
            let r = commands::track(&load(g)?, source, truth.as_deref(), spots.as_deref(), out)?;
            print_track(&r);
        }
        Command::Theory { min, max, step, out } => match out {
            Some(p) => {
                let f = std::io::BufWriter::new(std::fs::File::create(p)?);
                commands::theory(f, *min, *max, *step)?;
            }
            None => {
                let stdout = std::io::stdout().lock();
                commands::theory(stdout, *min, *max, *step)?;
            }
        },
        Command::Run { out } => {
            let r = commands::run(&load(g)?, out)?;
            println!("samples={} rounds={}", r.simulate.samples, r.simulate.rounds);
            print_track(&r.track);
        }
    }
    std::io::stdout().flush()?;
    Ok(())
}
