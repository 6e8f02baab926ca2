use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Args, ValueEnum};
use keelson::control::{run_pid_demo, PidDemoConfig};
use keelson::dwa::TransitOutcome;
use keelson::dynamics::{load_model, DynamicsError, EXAMPLE_FERRY};
use keelson::radar::{rasterize, write_pgm, write_png, ExtentMode, RadarConfig, RadarError, RadarMetadata};
use keelson::rl::RlError;
use keelson::scenario::{run_scenario, Scenario, ScenarioError, ScenarioRun};
use keelson::service::{serve as serve_rpc, Mode, Session, SessionConfig};
use keelson::world::{raycast_scan, write_preview_csv, write_preview_svg, ChannelLayout, PcgParams, WorldError};
use keelson::{Point, Pose};
use thiserror::Error;

use crate::Common;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("{context}: {source}")]
    Io { context: String, source: std::io::Error },
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Invalid(_) => 2,
            Self::Scenario(e) if is_runtime(e) => 1,
            Self::Scenario(_) => 2,
            Self::Io { .. } | Self::Runtime(_) => 1,
        }
    }
}

fn is_runtime(e: &ScenarioError) -> bool {
    let dyn_runtime = |d: &DynamicsError| matches!(d, DynamicsError::Diverged { .. });
    match e {
        ScenarioError::Dynamics(d) => dyn_runtime(d),
        ScenarioError::Rl(RlError::Dynamics(d)) => dyn_runtime(d),
        _ => false,
    }
}

fn io(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> CliError {
    let context = context.into();
    move |source| CliError::Io { context, source }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(io(format!("cannot create {}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(io(format!("cannot write {}", path.display())))
}

fn out_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(io(format!("cannot create {}", dir.display())))
}

/// `trajectory.csv` + `vc0.25` → `trajectory_vc0.25.csv`.
fn labelled(dir: &Path, name: &str, label: &str) -> PathBuf {
    if label.is_empty() {
        return dir.join(name);
    }
    match name.rsplit_once('.') {
        Some((stem, ext)) => dir.join(format!("{stem}_{label}.{ext}")),
        None => dir.join(format!("{name}_{label}")),
    }
}

fn load_scenario(reference: &str, common: &Common) -> Result<Scenario, CliError> {
    let mut s = Scenario::load(reference)?;
    if let Some(seed) = common.seed {
        s = s.with_seed(seed)?;
    }
    if let Some(dt) = common.dt {
        s = s.with_dt(dt)?;
    }
    Ok(s)
}

fn write_run(s: &Scenario, run: &ScenarioRun, dir: &Path) -> Result<(), CliError> {
    let outputs = &s.doc.outputs;
    let path = labelled(dir, &outputs.trajectory, &run.label);
    run.write_trajectory(create(&path)?).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    let summary = serde_json::to_string_pretty(&run.summary).expect("summary serializes");
    write_text(&labelled(dir, &outputs.summary, &run.label), &(summary + "\n"))?;
    if let (Some(name), Some(text)) = (&outputs.candidates, &run.candidates) {
        write_text(&labelled(dir, name, &run.label), text)?;
    }
    if let (Some(stem), Some((steps, episodes))) = (&outputs.episodes, &run.episode_logs) {
        write_text(&labelled(dir, &format!("{stem}_steps.csv"), &run.label), steps)?;
        write_text(&labelled(dir, &format!("{stem}_episodes.csv"), &run.label), episodes)?;
    }
    Ok(())
}

pub fn run(reference: &str, common: &Common) -> Result<ExitCode, CliError> {
    let s = load_scenario(reference, common)?;
    let runs = run_scenario(&s)?;
    out_dir(&common.out)?;
    for r in &runs {
        write_run(&s, r, &common.out)?;
        let label = if r.label.is_empty() { String::new() } else { format!(" [{}]", r.label) };
        println!(
            "{}{label}: {} samples, t = {:.2} s, final ({:.3}, {:.3}) psi {:.4}{}",
            s.doc.name,
            r.summary.samples,
            r.summary.final_t,
            r.summary.final_x,
            r.summary.final_y,
            r.summary.final_psi,
            r.summary.outcome.as_deref().map(|o| format!(", outcome {o}")).unwrap_or_default()
        );
    }
    Ok(ExitCode::SUCCESS)
}

pub fn pid_demo(
    vessel: Option<&Path>,
    target: f64,
    gains: [f64; 3],
    duration: f64,
    common: &Common,
) -> Result<ExitCode, CliError> {
    let text = match vessel {
        Some(p) => fs::read_to_string(p).map_err(|e| CliError::Invalid(format!("cannot read vessel {}: {e}", p.display())))?,
        None => EXAMPLE_FERRY.to_string(),
    };
    let params = load_model(&text).map_err(|e| CliError::Invalid(e.to_string()))?;
    if !(target.is_finite() && duration > 0.0 && gains.iter().all(|g| g.is_finite())) {
        return Err(CliError::Invalid("target, gains and duration must be finite, duration > 0".into()));
    }
    let mut cfg = PidDemoConfig { gains, target_speed: target, duration, ..Default::default() };
    if let Some(dt) = common.dt {
        cfg.dt = dt;
    }
    let samples = run_pid_demo(&params, &cfg).map_err(|e| match e {
        DynamicsError::Diverged { .. } => CliError::Runtime(e.to_string()),
        other => CliError::Invalid(other.to_string()),
    })?;
    out_dir(&common.out)?;
    let path = common.out.join("pid.csv");
    let mut w = csv::Writer::from_writer(create(&path)?);
    let csv_err = |e: csv::Error| CliError::Runtime(format!("{}: {e}", path.display()));
    w.write_record(["t", "speed", "thrust"]).map_err(csv_err)?;
    for s in &samples {
        println!("t={:7.2} speed={:.4} thrust={:.4}", s.t, s.speed, s.thrust);
        w.write_record([s.t, s.speed, s.thrust].map(|v| v.to_string())).map_err(csv_err)?;
    }
    w.flush().map_err(io(format!("cannot write {}", path.display())))?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Extent {
    FixedMetric,
    PaperNormalized,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("input").required(true).args(["scan", "scenario"])))]
pub struct RadarArgs {
    /// CSV with columns `frame,origin_x,origin_y,x,y`; one row per hit, empty x/y for a frame without hits.
    #[arg(long)]
    pub scan: Option<PathBuf>,
    /// Scenario to simulate; frames are sampled from its trajectory.
    #[arg(long)]
    pub scenario: Option<String>,
    /// Frames to render from a live scenario.
    #[arg(long, default_value_t = 10)]
    pub frames: usize,
    #[arg(long, default_value_t = 512)]
    pub image_size: usize,
    #[arg(long, default_value_t = 100.0)]
    pub max_range: f64,
    /// Horizontal beam width (degrees).
    #[arg(long, default_value_t = 2.0)]
    pub alpha_deg: f64,
    /// Range-resolution scalar (rad).
    #[arg(long, default_value_t = 0.02)]
    pub beta: f64,
    #[arg(long, default_value_t = 36.0)]
    pub rpm: f64,
    #[arg(long, value_enum, default_value_t = Extent::FixedMetric)]
    pub extent: Extent,
    /// Ray-cast beams per live frame.
    #[arg(long, default_value_t = 720)]
    pub beams: usize,
    #[command(flatten)]
    pub common: Common,
}

struct ScanInput {
    origin: Point,
    points: Vec<Point>,
}

fn read_scan_file(path: &Path) -> Result<Vec<ScanInput>, CliError> {
    let invalid = |msg: String| CliError::Invalid(format!("{}: {msg}", path.display()));
    let mut reader = csv::Reader::from_path(path).map_err(|e| invalid(e.to_string()))?;
    let mut frames: Vec<ScanInput> = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| invalid(e.to_string()))?;
        let line = i + 2;
        let field = |k: usize, name: &str| -> Result<Option<f64>, CliError> {
            match rec.get(k).map(str::trim) {
                None | Some("") => Ok(None),
                Some(v) => v
                    .parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .map(Some)
                    .ok_or_else(|| invalid(format!("line {line}: bad `{name}` value `{v}`"))),
            }
        };
        let frame = rec
            .get(0)
            .and_then(|v| v.trim().parse::<usize>().ok())
            .ok_or_else(|| invalid(format!("line {line}: bad `frame`")))?;
        if frame != frames.len() && frame + 1 != frames.len() {
            return Err(invalid(format!("line {line}: frames must be numbered 0, 1, 2, ... in order")));
        }
        let ox = field(1, "origin_x")?.ok_or_else(|| invalid(format!("line {line}: missing origin_x")))?;
        let oy = field(2, "origin_y")?.ok_or_else(|| invalid(format!("line {line}: missing origin_y")))?;
        if frame == frames.len() {
            frames.push(ScanInput { origin: Point::new(ox, oy), points: Vec::new() });
        }
        match (field(3, "x")?, field(4, "y")?) {
            (Some(x), Some(y)) => frames[frame].points.push(Point::new(x, y)),
            (None, None) => {}
            _ => return Err(invalid(format!("line {line}: x and y must both be set or both empty"))),
        }
    }
    Ok(frames)
}

fn radar_err(e: RadarError) -> CliError {
    match e {
        RadarError::InvalidConfig(_) => CliError::Invalid(e.to_string()),
        other => CliError::Runtime(other.to_string()),
    }
}

pub fn radar_render(args: &RadarArgs) -> Result<ExitCode, CliError> {
    let config = RadarConfig {
        image_size: args.image_size,
        alpha: args.alpha_deg.to_radians(),
        beta: args.beta,
        max_range: args.max_range,
        rotation_rpm: args.rpm,
        extent_mode: match args.extent {
            Extent::FixedMetric => ExtentMode::FixedMetric,
            Extent::PaperNormalized => ExtentMode::PaperNormalized,
        },
    };
    config.validate().map_err(radar_err)?;
    let period = config.frame_period();

    let inputs = match (&args.scan, &args.scenario) {
        (Some(path), _) => read_scan_file(path)?,
        (None, Some(reference)) => {
            let s = load_scenario(reference, &args.common)?;
            let run = run_scenario(&s)?.remove(0);
            let mut inputs = Vec::new();
            for k in 0..args.frames {
                let t = k as f64 * period;
                let Some(row) = run.rows.iter().rev().find(|r| r.t <= t + 1e-9) else { break };
                if t > run.rows.last().map_or(0.0, |r| r.t) + 1e-9 {
                    break;
                }
                let pose = Pose::new(row.x, row.y, row.psi);
                let scan = raycast_scan(&s.world, &pose, args.beams, config.max_range);
                inputs.push(ScanInput { origin: Point::new(pose.x, pose.y), points: scan.points().collect() });
            }
            inputs
        }
        (None, None) => unreachable!("clap requires one input"),
    };

    let dir = &args.common.out;
    out_dir(dir)?;
    for (k, input) in inputs.iter().enumerate() {
        let mut frame = rasterize(&input.points, input.origin, &config).map_err(radar_err)?;
        frame.timestamp = k as f64 * period;
        let stem = format!("radar_{k:04}");
        let pgm = dir.join(format!("{stem}.pgm"));
        let mut w = create(&pgm)?;
        write_pgm(&frame, &mut w).map_err(io(format!("cannot write {}", pgm.display())))?;
        w.flush().map_err(io(format!("cannot write {}", pgm.display())))?;
        let png = dir.join(format!("{stem}.png"));
        write_png(&frame, &png).map_err(|e| CliError::Runtime(format!("{}: {e}", png.display())))?;
        write_text(&dir.join(format!("{stem}.toml")), &RadarMetadata::new(&frame, &config).to_toml())?;
        println!("{stem}: t = {:.4} s, {} points, {} pixels set", frame.timestamp, input.points.len(), frame.count_set());
    }
    Ok(ExitCode::SUCCESS)
}

pub fn dwa_demo(
    reference: &str,
    goal: Option<[f64; 2]>,
    max_time: Option<f64>,
    common: &Common,
) -> Result<ExitCode, CliError> {
    let mut s = load_scenario(reference, common)?;
    if !matches!(s.doc.controller, keelson::scenario::Controller::Dwa { .. }) {
        return Err(CliError::Invalid(format!("scenario `{}` does not use the dwa controller", s.doc.name)));
    }
    if let Some([x, y]) = goal {
        if !(x.is_finite() && y.is_finite()) {
            return Err(CliError::Invalid("goal must be finite".into()));
        }
        s.world.goal = Point::new(x, y);
        s.layout = None;
    }
    if let Some(t) = max_time {
        if !(t > 0.0 && t.is_finite()) {
            return Err(CliError::Invalid("max-time must be > 0".into()));
        }
        s.doc.duration = t;
    }
    if s.doc.outputs.candidates.is_none() {
        s.doc.outputs.candidates = Some("candidates.csv".into());
    }
    let run = run_scenario(&s)?.remove(0);
    out_dir(&common.out)?;
    write_run(&s, &run, &common.out)?;
    let clearance = run.summary.min_clearance.map(|c| format!("{c:.2} m")).unwrap_or_else(|| "n/a".into());
    match run.dwa_outcome.expect("dwa run reports an outcome") {
        TransitOutcome::Reached { t } => {
            println!("goal reached at t = {t:.2} s, min clearance {clearance}");
            Ok(ExitCode::SUCCESS)
        }
        TransitOutcome::Collision { t } => {
            eprintln!("collision at t = {t:.2} s");
            Ok(ExitCode::from(3))
        }
        TransitOutcome::NoFeasibleTrajectory { plan_index } => {
            eprintln!("no feasible trajectory at planning step {plan_index}");
            Ok(ExitCode::from(4))
        }
        TransitOutcome::Timeout => {
            let last = run.rows.last();
            eprintln!(
                "timeout after {:.1} s: goal ({:.1}, {:.1}) not reached, vessel at ({:.1}, {:.1})",
                s.doc.duration,
                s.world.goal.x,
                s.world.goal.y,
                last.map_or(f64::NAN, |r| r.x),
                last.map_or(f64::NAN, |r| r.y)
            );
            Ok(ExitCode::from(5))
        }
    }
}

#[derive(Debug, Args)]
pub struct PcgArgs {
    /// Take generation parameters and moorings from a scenario's `[pcg]` section.
    #[arg(long, conflicts_with = "params")]
    pub scenario: Option<String>,
    /// TOML file with generation parameters.
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long)]
    pub n_segments: Option<usize>,
    #[command(flatten)]
    pub common: Common,
}

fn world_err(e: WorldError) -> CliError {
    CliError::Invalid(e.to_string())
}

pub fn pcg_preview(args: &PcgArgs) -> Result<ExitCode, CliError> {
    let (mut pcg, moored) = match (&args.scenario, &args.params) {
        (Some(reference), _) => {
            let s = Scenario::load(reference)?;
            let pcg = s
                .doc
                .pcg
                .ok_or_else(|| CliError::Invalid(format!("scenario `{}` has no [pcg] section", s.doc.name)))?;
            (pcg, s.doc.moored)
        }
        (None, Some(path)) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Invalid(format!("cannot read {}: {e}", path.display())))?;
            let pcg: PcgParams =
                toml::from_str(&text).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
            (pcg, Vec::new())
        }
        (None, None) => (PcgParams::default(), Vec::new()),
    };
    if let Some(seed) = args.common.seed {
        pcg.seed = seed;
    }
    if let Some(n) = args.n_segments {
        pcg.n_segments = n;
    }
    let layout = ChannelLayout::generate(&pcg).map_err(world_err)?;
    let world = layout.to_world_with_moorings(&moored).map_err(world_err)?;
    let dir = &args.common.out;
    out_dir(dir)?;
    let csv_path = dir.join("channel.csv");
    write_preview_csv(create(&csv_path)?, Some(&layout), &world)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", csv_path.display())))?;
    let svg_path = dir.join("channel.svg");
    let mut svg = create(&svg_path)?;
    write_preview_svg(&mut svg, Some(&layout), &world).map_err(io(format!("cannot write {}", svg_path.display())))?;
    svg.flush().map_err(io(format!("cannot write {}", svg_path.display())))?;
    println!(
        "seed {}: {} sections, {} obstacles -> {}, {}",
        pcg.seed,
        layout.n_sections(),
        world.obstacles().len(),
        csv_path.display(),
        svg_path.display()
    );
    Ok(ExitCode::SUCCESS)
}

pub fn serve(host: &str, port: u16, realtime: bool, scenario: Option<&str>) -> Result<ExitCode, CliError> {
    let mut config = match scenario {
        Some(reference) => {
            let s = Scenario::load(reference)?;
            let mut config = SessionConfig::new(s.params, s.world);
            if let keelson::scenario::Controller::RlPolicy { env, .. } = s.doc.controller {
                config.env = env;
            }
            config.env.dt = s.dt;
            config
        }
        None => SessionConfig::new(keelson::VesselParams::example_ferry(), keelson::rl::open_world()),
    };
    config.mode = if realtime { Mode::Realtime } else { Mode::Lockstep };
    let session = Session::new(config).map_err(|e| CliError::Invalid(e.to_string()))?;
    let handle = serve_rpc((host, port), session).map_err(io(format!("cannot bind {host}:{port}")))?;
    println!("listening on {}", handle.local_addr());
    std::io::stdout().flush().ok();
    handle.join();
    Ok(ExitCode::SUCCESS)
}
