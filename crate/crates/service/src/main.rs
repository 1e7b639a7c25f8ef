use clap::Parser;

use hhl_core::backend::{SolverConfig, DEFAULT_TIMEOUT_MS};
use hhl_service::{app, AppState, DEFAULT_PORT};

#[derive(Parser)]
#[command(name = "hhl-serve", version, about = "Serve the verifier over HTTP on 127.0.0.1")]
struct Args {
    #[arg(long, default_value_t = DEFAULT_PORT)]
    port: u16,
    /// Per-VC solver timeout in milliseconds.
    #[arg(long, default_value_t = DEFAULT_TIMEOUT_MS)]
    timeout: u64,
    /// Solver processes allowed at once across all requests.
    #[arg(long)]
    jobs: Option<usize>,
}

#[tokio::main]
async fn main() -> std::io::Result<()> {
    let args = Args::parse();
    let jobs = args.jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let cfg = SolverConfig { timeout_ms: args.timeout, ..SolverConfig::default() };
    let listener = tokio::net::TcpListener::bind(("127.0.0.1", args.port)).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, app(AppState::new(cfg, jobs))).await
}
