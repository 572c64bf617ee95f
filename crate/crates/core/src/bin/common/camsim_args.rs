use std::path::PathBuf;
use std::time::Duration;

use clap::Args;
use drishti::camsim::wire::DEFAULT_BOUNDARY;
use drishti::camsim::{self, CamState, StreamConfig};

#[derive(Debug, Args)]
pub struct CamsimArgs {
    /// Directory of .jpg/.jpeg files, served in lexicographic order.
    #[arg(long)]
    pub dir: PathBuf,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value_t = 500)]
    pub interval_ms: u64,
    /// Stop after one pass instead of wrapping around.
    #[arg(long)]
    pub no_loop: bool,
    #[arg(long, default_value = DEFAULT_BOUNDARY)]
    pub boundary: String,
}

/// Returns the process exit code.
pub async fn run(args: CamsimArgs) -> i32 {
    let source = match camsim::load_source_set(&args.dir) {
        Ok(s) => s
            .with_loop(!args.no_loop)
            .with_interval(Duration::from_millis(args.interval_ms)),
        Err(e) => {
            eprintln!("camsim: {e}");
            return 3;
        }
    };
    let config = StreamConfig {
        boundary: args.boundary,
        port: args.port,
        ..StreamConfig::default()
    };
    let state = match CamState::new(source, config) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("camsim: {e}");
            return 2;
        }
    };
    let listener = match tokio::net::TcpListener::bind(("0.0.0.0", args.port)).await {
        Ok(l) => l,
        Err(e) => {
            eprintln!("camsim: cannot bind port {}: {e}", args.port);
            return 4;
        }
    };
    if let Ok(addr) = listener.local_addr() {
        eprintln!("camsim listening on http://{addr}");
    }
    tokio::select! {
        r = camsim::serve(listener, state) => match r {
            Ok(()) => 0,
            Err(e) => {
                eprintln!("camsim: {e}");
                4
            }
        },
        _ = tokio::signal::ctrl_c() => 0,
    }
}
