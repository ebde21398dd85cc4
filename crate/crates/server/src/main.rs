use std::io::Write;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::Parser;
use hypocanvas_server::{serve, ProviderMode, ServerConfig};

/// Serves the canvas and generation API.
#[derive(Parser)]
#[command(version)]
struct Args {
    #[arg(long, env = "HYPOCANVAS_LISTEN", default_value = "127.0.0.1:8080")]
    listen: SocketAddr,
    #[arg(long, env = "HYPOCANVAS_DATA_DIR", default_value = "hypocanvas-data")]
    data_dir: PathBuf,
    #[arg(long, env = "HYPOCANVAS_PROVIDER", value_enum, default_value = "rules")]
    provider: ProviderMode,
    #[arg(long, env = "HYPOCANVAS_MAX_JOBS", default_value_t = hypocanvas_server::config::DEFAULT_MAX_JOBS)]
    max_jobs: usize,
    #[arg(long, env = "HYPOCANVAS_MAX_QUEUED", default_value_t = hypocanvas_server::config::DEFAULT_MAX_QUEUED)]
    max_queued: usize,
    /// Fail jobs instead of answering with the rules generator.
    #[arg(long, env = "HYPOCANVAS_NO_FALLBACK")]
    no_fallback: bool,
    #[arg(long, env = "HYPOCANVAS_MAX_UPLOAD_BYTES", default_value_t = hypocanvas_server::config::DEFAULT_MAX_UPLOAD_BYTES)]
    max_upload_bytes: usize,
    /// Script for `--provider mock`.
    #[arg(long, env = "HYPOCANVAS_MOCK_FIXTURE")]
    mock_fixture: Option<PathBuf>,
    #[arg(long, env = "HYPOCANVAS_MOCK_DELAY_MS", default_value_t = 0)]
    mock_delay_ms: u64,
}

#[tokio::main]
async fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .with_writer(std::io::stderr)
        .init();
    let args = Args::parse();
    let mut config = ServerConfig::new(args.data_dir);
    config.listen = args.listen;
    config.provider = args.provider;
    config.max_jobs = args.max_jobs;
    config.max_queued = args.max_queued;
    config.allow_fallback = !args.no_fallback;
    config.max_upload_bytes = args.max_upload_bytes;
    config.mock_fixture = args.mock_fixture;
    config.mock_delay = Duration::from_millis(args.mock_delay_ms);

    let shutdown = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    // the bound address goes to stdout so scripts can find an ephemeral port
    let announce = |addr: SocketAddr| {
        println!("listening on http://{addr}");
        let _ = std::io::stdout().flush();
    };
    match serve(config, announce, shutdown).await {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hypocanvas-server: {e}");
            ExitCode::FAILURE
        }
    }
}
