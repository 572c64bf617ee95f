use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use drishti::runtime::{
    build_stages, format_latency_table, load_config, read_events, report_latency, run_pipeline,
    RuntimeError, TtsModeName,
};
use drishti::synth::write_currency_fixtures;
use drishti::vision::{StageKind, DEFAULT_CLASSES};
use tokio_util::sync::CancellationToken;

#[path = "common/camsim_args.rs"]
mod camsim_args;

#[derive(Parser)]
#[command(
    name = "drishti",
    version,
    about = "Camera to speech assistive-vision pipeline"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the pipeline against a stream or a directory of frames.
    Run(RunArgs),
    /// Print per-stage latency statistics from an event log.
    Report {
        #[arg(long)]
        events: PathBuf,
    },
    /// Serve a directory of JPEGs as an MJPEG camera.
    Camsim(camsim_args::CamsimArgs),
    /// Write synthetic banknote images as `<out>/<class>/<n>.jpg`.
    Fixtures {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 10)]
        per_class: u64,
        /// First variant number; pick a different one for held-out sets.
        #[arg(long, default_value_t = 0)]
        first_variant: u64,
    },
}

#[derive(Parser)]
struct RunArgs {
    #[arg(long, env = "DRISHTI_CONFIG")]
    config: PathBuf,
    /// Overrides the configured source (http://... or dir://path).
    #[arg(long)]
    source: Option<String>,
    #[arg(long, value_delimiter = ',')]
    stages: Option<Vec<StageKind>>,
    #[arg(long)]
    max_frames: Option<u64>,
    #[arg(long)]
    events: Option<PathBuf>,
    #[arg(long, value_enum)]
    tts: Option<TtsArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum TtsArg {
    Offline,
    Http,
}

async fn run(args: RunArgs) -> Result<(), RuntimeError> {
    let mut config = load_config(&args.config)?;
    if let Some(source) = args.source {
        config.source = source;
    }
    if let Some(stages) = args.stages {
        config.stages = stages;
    }
    if let Some(n) = args.max_frames {
        config.max_frames = Some(n);
    }
    if let Some(events) = args.events {
        config.events_path = events;
    }
    if let Some(tts) = args.tts {
        config.tts.mode = match tts {
            TtsArg::Offline => TtsModeName::Offline,
            TtsArg::Http => TtsModeName::Http,
        };
    }
    config.validate()?;
    let stages = build_stages(&config)?;

    let cancel = CancellationToken::new();
    let on_signal = cancel.clone();
    tokio::spawn(async move {
        if tokio::signal::ctrl_c().await.is_ok() {
            on_signal.cancel();
        }
    });

    let summary = run_pipeline(&config, stages, cancel).await?;
    println!(
        "frames_processed={} frames_dropped={} announcements_made={}",
        summary.frames_processed, summary.frames_dropped, summary.announcements_made
    );
    if !summary.latency.is_empty() {
        print!("{}", format_latency_table(&summary.latency));
    }
    Ok(())
}

fn report(events: PathBuf) -> Result<(), RuntimeError> {
    let events = read_events(&events).map_err(|source| RuntimeError::Io {
        path: events,
        source,
    })?;
    print!("{}", format_latency_table(&report_latency(&events)?));
    Ok(())
}

#[tokio::main]
async fn main() {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args).await,
        Command::Report { events } => report(events),
        Command::Camsim(args) => std::process::exit(camsim_args::run(args).await),
        Command::Fixtures {
            out,
            per_class,
            first_variant,
        } => write_currency_fixtures(&out, &DEFAULT_CLASSES, per_class, first_variant)
            .map_err(|source| RuntimeError::Io { path: out, source }),
    };
    if let Err(e) = result {
        eprintln!("drishti: {e}");
        std::process::exit(e.exit_code());
    }
}
