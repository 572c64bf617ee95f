use clap::Parser;

#[path = "common/camsim_args.rs"]
mod camsim_args;

#[derive(Parser)]
#[command(
    name = "camsim",
    about = "Serve a directory of JPEGs as an MJPEG camera"
)]
struct Cli {
    #[command(flatten)]
    args: camsim_args::CamsimArgs,
}

#[tokio::main]
async fn main() {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    std::process::exit(camsim_args::run(cli.args).await);
}
