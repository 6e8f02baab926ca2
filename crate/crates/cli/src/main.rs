//! `keelson`: scenario runs, demos and artifact export.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |---|---|
//! | 0 | success |
//! | 1 | runtime failure (I/O, diverging simulation, bind error) |
//! | 2 | invalid arguments or input files |
//! | 3 | dwa-demo: collision |
//! | 4 | dwa-demo: no feasible trajectory |
//! | 5 | dwa-demo: timeout before the goal |

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

pub use commands::CliError;

#[derive(Debug, Parser)]
#[command(name = "keelson", version, about = "Deterministic surface-vessel simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Output directory.
    #[arg(long, env = "KEELSON_OUT", default_value = "out")]
    pub out: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the integration step (s).
    #[arg(long)]
    pub dt: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a scenario and write its trajectory CSV and summary JSON.
    Run {
        /// Scenario file or `builtin:<name>`.
        #[arg(long)]
        scenario: String,
        #[command(flatten)]
        common: Common,
    },
    /// Hold a target speed with a PID controller and log every 0.1 s tick.
    PidDemo {
        /// Vessel model file; the bundled example ferry when omitted.
        #[arg(long)]
        vessel: Option<PathBuf>,
        #[arg(long, default_value_t = 0.51)]
        target: f64,
        /// `kp,ki,kd`.
        #[arg(long, value_delimiter = ',', default_values_t = [1.5, 1.0, 0.2])]
        gains: Vec<f64>,
        #[arg(long, default_value_t = 120.0)]
        duration: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Render radar frames at the rotation schedule from a scan file or a live scenario.
    RadarRender(commands::RadarArgs),
    /// Closed-loop DWA transit; exit code reports the outcome.
    DwaDemo {
        #[arg(long, default_value = "builtin:channel-dwa")]
        scenario: String,
        /// Replace the route with a single goal `x,y`.
        #[arg(long, value_delimiter = ',')]
        goal: Option<Vec<f64>>,
        /// Overrides the scenario duration (s).
        #[arg(long)]
        max_time: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Generate a channel and write its polylines as CSV and SVG.
    PcgPreview(commands::PcgArgs),
    /// Run the JSON-line RPC service.
    Serve {
        #[arg(long, env = "KEELSON_PORT", default_value_t = 7878)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Step the simulation only on request (default).
        #[arg(long, conflicts_with = "realtime")]
        lockstep: bool,
        /// Step the simulation on the wall clock.
        #[arg(long)]
        realtime: bool,
        /// Preload vessel and world from a scenario.
        #[arg(long)]
        scenario: Option<String>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { scenario, common } => commands::run(&scenario, &common),
        Command::PidDemo { vessel, target, gains, duration, common } => match <[f64; 3]>::try_from(gains) {
            Ok(gains) => commands::pid_demo(vessel.as_deref(), target, gains, duration, &common),
            Err(_) => Err(CliError::Invalid("--gains takes kp,ki,kd".into())),
        },
        Command::RadarRender(args) => commands::radar_render(&args),
        Command::DwaDemo { scenario, goal, max_time, common } => match goal.map(<[f64; 2]>::try_from).transpose() {
            Ok(goal) => commands::dwa_demo(&scenario, goal, max_time, &common),
            Err(_) => Err(CliError::Invalid("--goal takes x,y".into())),
        },
        Command::PcgPreview(args) => commands::pcg_preview(&args),
        Command::Serve { port, host, realtime, scenario, .. } => {
            commands::serve(&host, port, realtime, scenario.as_deref())
        }
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
