//! `nosqlab` — a deliberately vulnerable NoSQL-injection laboratory.
//! Serve the target service, scan it, or run the scripted demo that
//! reproduces every attack and shows every hardened twin resisting it.
//!
//! Exit codes: 0 clean, 1 findings or reproduction failure, 2
//! operational error.

mod demo;

use clap::{Parser, Subcommand};
use nosqlab_scanner::{render_report, ReportFormat, Scanner, TargetConfig};
use nosqlab_service::{RestMode, Service, ServiceConfig};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "nosqlab", version, about = "NoSQL-injection laboratory: vulnerable target service and DAST scanner. Lab use only — never deploy.")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the lab target service until interrupted
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// REST insert mode: `open` (CSRF-prone) or `json-only`
        #[arg(long, default_value = "open")]
        rest_mode: String,
        /// Expose GET /__state/{collection} for test oracles
        #[arg(long)]
        enable_state_endpoint: bool,
    },
    /// Scan a target described by a JSON config file
    Scan {
        #[arg(long)]
        config: PathBuf,
        /// Report format: `json` or `text`
        #[arg(long, default_value = "text")]
        format: String,
        /// Write the report here instead of stdout
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Serve and scan in-process, narrating all four attack classes
    Demo {
        /// Test hook: break the cast mitigation to watch the demo fail
        #[arg(long, hide = true)]
        disable_cast_mitigation: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .expect("runtime builds");
    let code = match cli.command {
        Command::Serve { port, rest_mode, enable_state_endpoint } => {
            runtime.block_on(run_serve(port, &rest_mode, enable_state_endpoint))
        }
        Command::Scan { config, format, output } => {
            runtime.block_on(run_scan(&config, &format, output.as_deref()))
        }
        Command::Demo { disable_cast_mitigation } => {
            runtime.block_on(demo::run_demo(disable_cast_mitigation))
        }
    };
    ExitCode::from(code)
}

async fn run_serve(port: u16, rest_mode: &str, enable_state_endpoint: bool) -> u8 {
    let Some(rest_mode) = RestMode::parse(rest_mode) else {
        eprintln!("unknown rest mode {rest_mode:?}; expected open or json-only");
        return 2;
    };
    let config = ServiceConfig {
        rest_mode,
        enable_state_endpoint,
        ..ServiceConfig::default()
    };
    let listener = match tokio::net::TcpListener::bind(("127.0.0.1", port)).await {
        Ok(listener) => listener,
        Err(e) => {
            eprintln!("cannot bind 127.0.0.1:{port}: {e}");
            return 2;
        }
    };
    let addr = listener.local_addr().expect("bound socket has an address");
    let service = Service::seeded(config);
    println!(
        "nosqlab target listening on http://{addr} (rest-mode: {}, state endpoint: {})",
        rest_mode.as_str(),
        if enable_state_endpoint { "on" } else { "off" },
    );
    println!("this service is vulnerable on purpose — keep it on loopback");
    match nosqlab_service::serve(listener, service.router()).await {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("server error: {e}");
            2
        }
    }
}

async fn run_scan(config_path: &std::path::Path, format: &str, output: Option<&std::path::Path>) -> u8 {
    let Some(format) = ReportFormat::parse(format) else {
        eprintln!("unknown report format {format:?}; expected json or text");
        return 2;
    };
    let raw = match std::fs::read_to_string(config_path) {
        Ok(raw) => raw,
        Err(e) => {
            eprintln!("cannot read {}: {e}", config_path.display());
            return 2;
        }
    };
    let config = match TargetConfig::from_json(&raw) {
        Ok(config) => config,
        Err(e) => {
            eprintln!("{e}");
            return 2;
        }
    };
    let report = match Scanner::new(config).scan().await {
        Ok(report) => report,
        Err(e) => {
            eprintln!("scan failed: {e}");
            return 2;
        }
    };
    let rendered = render_report(&report, format);
    match output {
        None => println!("{rendered}"),
        Some(path) => {
            if let Err(e) = std::fs::write(path, &rendered) {
                eprintln!("cannot write {}: {e}", path.display());
                return 2;
            }
        }
    }
    report.exit_code() as u8
}
