//! `pursuit`: classify, simulate, bound and sweep pursuit-evasion scenarios.
//!
//! Exit codes: 0 success (evasion for `classify`), 2 pursuit regime from
//! `classify`, 3 failed verification, 1 any error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use pursuit_core::export::{capture_summary, events_json, trajectory_csv, trajectory_svg};
use pursuit_core::generators;
use pursuit_core::theta::{check_capture_bound, CaptureBoundReport};
use pursuit_core::{
    classify, estimate_theta, evasion_control, make_test_control, simulate, ControlSpec,
    EvaderControl, PursuerControlRecord, PursuerMode, PursuitFrame, Regime, Scenario,
    SimulationOptions, ThetaOptions,
};

const EXIT_PURSUIT: u8 = 2;
const EXIT_VERIFY_FAILED: u8 = 3;

#[derive(Parser)]
#[command(
    name = "pursuit",
    version,
    about = "Simple-motion pursuit-evasion toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide the regime and print the certificate JSON (exit 0 evasion, 2 pursuit).
    Classify {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Integrate one game and write a trajectory CSV plus capture sidecar.
    Simulate(SimulateArgs),
    /// Estimate the worst-case closure rate and its certified lower bound.
    Theta {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value_t = 16)]
        starts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        grid_step: Option<f64>,
    },
    /// Check capture by the certified time bound against evader controls.
    Verify {
        #[arg(long)]
        scenario: PathBuf,
        /// Evader control spec; repeat for several runs.
        #[arg(long = "control", alias = "evader", required = true)]
        controls: Vec<String>,
        #[arg(long, default_value_t = 0.01)]
        dt: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        grid_step: Option<f64>,
    },
    /// Expand a grid over (m, n, seed) into many runs.
    Sweep {
        /// JSON config: `{"m": [..], "n": [..], "seeds": [..], ...}`.
        #[arg(long)]
        config: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// `constant:[..]`, `sphere:seed=S,scale=F`, `rotate:plane=(i,j),rate=W`
    /// or `witness` (the classifier's escape direction).
    #[arg(long)]
    evader: String,
    /// `paper` or `file:PATH` with recorded pursuer controls.
    #[arg(long, default_value = "paper")]
    pursuers: String,
    #[arg(long, default_value_t = 0.01)]
    dt: f64,
    #[arg(long, default_value_t = 10.0)]
    horizon: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Capture distance for recorded pursuers.
    #[arg(long, default_value_t = 1e-9)]
    capture_tol: f64,
    /// Trajectory CSV; the sidecar and manifest are written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
    /// One-based coordinate pair for the SVG projection.
    #[arg(long, default_value = "1,2")]
    svg_axes: String,
}

#[derive(Serialize)]
struct RunManifest {
    command: String,
    scenario: Option<String>,
    options: Value,
    seed: u64,
    version: &'static str,
    outputs: Vec<String>,
    duration_ms: u64,
}

impl RunManifest {
    fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)? + "\n";
        fs::write(path, text).with_context(|| format!("writing {}", path.display()))
    }
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map_or_else(String::new, |s| s.to_string_lossy().into_owned());
    path.with_file_name(format!("{stem}{suffix}"))
}

fn load_frame(path: &Path) -> Result<(Scenario, PursuitFrame)> {
    let scenario = Scenario::load(path).with_context(|| format!("loading {}", path.display()))?;
    let frame = scenario.validate()?;
    Ok((scenario, frame))
}

fn evader_from_spec(
    spec: &str,
    frame: &PursuitFrame,
    dt: f64,
    horizon: f64,
    seed: u64,
) -> Result<EvaderControl> {
    if spec.trim() == "witness" {
        let cert = classify(frame)?;
        let Some(p) = cert.witness else {
            bail!("scenario is in the pursuit regime; no witness direction exists");
        };
        return Ok(evasion_control(&p)?.with_label("witness"));
    }
    let parsed: ControlSpec = spec.parse()?;
    Ok(make_test_control(&parsed, frame.dim, dt, horizon, seed)?)
}

fn cmd_classify(scenario: &Path) -> Result<u8> {
    let (_, frame) = load_frame(scenario)?;
    let cert = classify(&frame)?;
    println!("{}", cert.to_json());
    Ok(match cert.regime {
        Regime::Evasion => 0,
        Regime::Pursuit => EXIT_PURSUIT,
    })
}

fn cmd_simulate(a: &SimulateArgs) -> Result<u8> {
    let started = Instant::now();
    let (_, frame) = load_frame(&a.scenario)?;
    let opts = SimulationOptions {
        capture_tolerance: a.capture_tol,
        ..SimulationOptions::new(a.dt, a.horizon)
    };
    opts.validate()?;
    let evader = evader_from_spec(&a.evader, &frame, a.dt, a.horizon, a.seed)?;
    let mode = match a.pursuers.as_str() {
        "paper" => PursuerMode::PaperStrategy,
        other => match other.strip_prefix("file:") {
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
                PursuerMode::Recorded(PursuerControlRecord::from_json_str(&text)?)
            }
            None => bail!("--pursuers must be `paper` or `file:PATH`, got `{other}`"),
        },
    };
    let result = simulate(&frame, &evader, &mode, &opts)?;
    println!("{}", capture_summary(&result));

    let mut outputs = Vec::new();
    if let Some(svg) = &a.svg {
        let axes = parse_axes(&a.svg_axes, frame.dim)?;
        fs::write(svg, trajectory_svg(&result, axes))
            .with_context(|| format!("writing {}", svg.display()))?;
        outputs.push(svg.display().to_string());
    }
    if let Some(out) = &a.out {
        fs::write(out, trajectory_csv(&result))
            .with_context(|| format!("writing {}", out.display()))?;
        let events = sibling(out, ".events.json");
        fs::write(&events, events_json(&result))
            .with_context(|| format!("writing {}", events.display()))?;
        outputs.insert(0, out.display().to_string());
        outputs.insert(1, events.display().to_string());
        RunManifest {
            command: "simulate".into(),
            scenario: Some(a.scenario.display().to_string()),
            options: json!({
                "evader": evader.label(),
                "pursuers": a.pursuers,
                "dt": a.dt,
                "horizon": a.horizon,
                "capture_tol": a.capture_tol,
            }),
            seed: a.seed,
            version: env!("CARGO_PKG_VERSION"),
            outputs,
            duration_ms: started.elapsed().as_millis() as u64,
        }
        .write(&sibling(out, ".manifest.json"))?;
    }
    Ok(0)
}

fn parse_axes(text: &str, dim: usize) -> Result<(usize, usize)> {
    let (i, j) = text.split_once(',').context("--svg-axes must be `i,j`")?;
    let (i, j): (usize, usize) = (i.trim().parse()?, j.trim().parse()?);
    if dim == 1 {
        return Ok((0, 0));
    }
    if i == 0 || j == 0 || i > dim || j > dim {
        bail!("--svg-axes ({i},{j}) outside dimension {dim}");
    }
    Ok((i - 1, j - 1))
}

fn cmd_theta(scenario: &Path, starts: usize, seed: u64, grid_step: Option<f64>) -> Result<u8> {
    let (_, frame) = load_frame(scenario)?;
    let report = estimate_theta(
        &frame,
        &ThetaOptions {
            starts,
            seed,
            grid_step,
            ..ThetaOptions::default()
        },
    )?;
    println!("{}", report.to_json());
    Ok(0)
}

fn cmd_verify(
    scenario: &Path,
    specs: &[String],
    dt: f64,
    seed: u64,
    grid_step: Option<f64>,
) -> Result<u8> {
    let (_, frame) = load_frame(scenario)?;
    let opts = SimulationOptions::new(dt, 0.0);
    opts.validate()?;
    // Generated controls must span the whole run, which ends by eta.
    let theta = estimate_theta(
        &frame,
        &ThetaOptions {
            grid_step,
            ..ThetaOptions::default()
        },
    )?;
    let horizon = theta.eta_upper.unwrap_or(1.0) + 1.0;
    let controls = specs
        .iter()
        .map(|s| evader_from_spec(s, &frame, dt, horizon, seed))
        .collect::<Result<Vec<_>>>()?;
    let report = check_capture_bound(&frame, &controls, &opts, grid_step)?;
    println!("{}", serde_json::to_string(&report)?);
    let (code, msg) = verify_verdict(&report);
    if let Some(msg) = msg {
        eprintln!("{msg}");
    }
    Ok(code)
}

fn verify_verdict(report: &CaptureBoundReport) -> (u8, Option<String>) {
    match report.first_failure() {
        None => (0, None),
        Some(f) => (
            EXIT_VERIFY_FAILED,
            Some(format!(
                "verification failed for control `{}`: tau = {:?}, eta = {}",
                f.control, f.tau, report.eta_upper
            )),
        ),
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepConfig {
    #[serde(default)]
    m: Vec<usize>,
    #[serde(default)]
    n: Vec<usize>,
    #[serde(default)]
    seeds: Vec<u64>,
    #[serde(default = "default_dt")]
    dt: f64,
    #[serde(default = "default_horizon")]
    horizon: f64,
    #[serde(default = "default_starts")]
    starts: usize,
    /// Evader control in pursuit-regime runs; evasion runs use the witness.
    #[serde(default = "default_evader")]
    evader: String,
}

fn default_dt() -> f64 {
    0.01
}
fn default_horizon() -> f64 {
    20.0
}
fn default_starts() -> usize {
    8
}
fn default_evader() -> String {
    "sphere:scale=1".into()
}

struct SweepRow {
    m: usize,
    n: usize,
    seed: u64,
    regime: Regime,
    theta_est: f64,
    theta_lb: Option<f64>,
    tau: Option<f64>,
    eta: Option<f64>,
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, |v| format!("{v:?}"))
}

impl SweepRow {
    fn csv(&self) -> String {
        let regime = match self.regime {
            Regime::Pursuit => "pursuit",
            Regime::Evasion => "evasion",
        };
        let slack = self.eta.zip(self.tau).map(|(e, t)| e - t);
        format!(
            "{},{},{},{},{:?},{},{},{},{}",
            self.m,
            self.n,
            self.seed,
            regime,
            self.theta_est,
            opt(self.theta_lb),
            opt(self.tau),
            opt(self.eta),
            opt(slack)
        )
    }
}

/// Scenario seed for one grid cell; mixes (m, n) into the user seed.
fn cell_seed(seed: u64, m: usize, n: usize) -> u64 {
    seed ^ ((m as u64) << 32) ^ ((n as u64) << 48)
}

fn sweep_run(cfg: &SweepConfig, dir: &Path, m: usize, n: usize, seed: u64) -> Result<SweepRow> {
    let started = Instant::now();
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut rng = generators::seeded(cell_seed(seed, m, n));
    let scenario = generators::random_scenario(&mut rng, n, m)?;
    let frame = scenario.validate()?;
    let cert = classify(&frame)?;
    let theta = estimate_theta(
        &frame,
        &ThetaOptions {
            starts: cfg.starts,
            seed,
            ..ThetaOptions::default()
        },
    )?;

    let (evader, horizon) = match &cert.witness {
        Some(p) => (evasion_control(p)?.with_label("witness"), cfg.horizon),
        None => {
            let h = theta.eta_upper.map_or(cfg.horizon, |eta| {
                eta + pursuit_core::theta::CAPTURE_BOUND_SLACK
            });
            (evader_from_spec(&cfg.evader, &frame, cfg.dt, h, seed)?, h)
        }
    };
    let opts = SimulationOptions::new(cfg.dt, horizon);
    let result = simulate(&frame, &evader, &PursuerMode::PaperStrategy, &opts)?;

    let files = [
        ("scenario.json", scenario.to_json_string()),
        ("certificate.json", cert.to_json() + "\n"),
        ("theta.json", theta.to_json() + "\n"),
        ("trajectory.csv", trajectory_csv(&result)),
        ("events.json", events_json(&result)),
    ];
    let mut outputs = Vec::new();
    for (name, text) in files {
        let path = dir.join(name);
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        outputs.push(path.display().to_string());
    }
    RunManifest {
        command: "sweep-run".into(),
        scenario: Some(dir.join("scenario.json").display().to_string()),
        options: json!({
            "m": m,
            "n": n,
            "dt": cfg.dt,
            "horizon": horizon,
            "starts": cfg.starts,
            "evader": evader.label(),
        }),
        seed,
        version: env!("CARGO_PKG_VERSION"),
        outputs,
        duration_ms: started.elapsed().as_millis() as u64,
    }
    .write(&dir.join("manifest.json"))?;

    Ok(SweepRow {
        m,
        n,
        seed,
        regime: cert.regime,
        theta_est: theta.theta_estimate,
        theta_lb: theta.theta_lower_bound,
        tau: result.capture.as_ref().map(|c| c.time),
        eta: theta.eta_upper,
    })
}

fn cmd_sweep(config: &Path, out: &Path, jobs: usize) -> Result<u8> {
    let started = Instant::now();
    let text =
        fs::read_to_string(config).with_context(|| format!("reading {}", config.display()))?;
    let cfg: SweepConfig = serde_json::from_str(&text).context("parsing sweep config")?;
    if jobs == 0 {
        bail!("--jobs must be positive");
    }
    let mut cells = Vec::new();
    for &m in &cfg.m {
        for &n in &cfg.n {
            for &seed in &cfg.seeds {
                if m == 0 || n == 0 {
                    bail!("grid values of m and n must be positive");
                }
                cells.push((m, n, seed));
            }
        }
    }
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?;
    let rows: Vec<Result<SweepRow>> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(m, n, seed)| {
                let dir = out.join(format!("m{m}_n{n}_s{seed}"));
                sweep_run(&cfg, &dir, m, n, seed)
                    .with_context(|| format!("run m={m} n={n} seed={seed}"))
            })
            .collect()
    });

    let mut aggregate = String::from("m,n,seed,regime,theta_est,theta_lb,tau,eta,slack\n");
    for row in rows {
        aggregate.push_str(&row?.csv());
        aggregate.push('\n');
    }
    let agg_path = out.join("aggregate.csv");
    fs::write(&agg_path, aggregate).with_context(|| format!("writing {}", agg_path.display()))?;
    RunManifest {
        command: "sweep".into(),
        scenario: None,
        options: json!({
            "config": config.display().to_string(),
            "runs": cells.len(),
            "jobs": jobs,
        }),
        seed: 0,
        version: env!("CARGO_PKG_VERSION"),
        outputs: vec![agg_path.display().to_string()],
        duration_ms: started.elapsed().as_millis() as u64,
    }
    .write(&out.join("manifest.json"))?;
    println!("{} runs, aggregate at {}", cells.len(), agg_path.display());
    Ok(0)
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Classify { scenario } => cmd_classify(&scenario),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Theta {
            scenario,
            starts,
            seed,
            grid_step,
        } => cmd_theta(&scenario, starts, seed, grid_step),
        Command::Verify {
            scenario,
            controls,
            dt,
            seed,
            grid_step,
        } => cmd_verify(&scenario, &controls, dt, seed, grid_step),
        Command::Sweep { config, out, jobs } => cmd_sweep(&config, &out, jobs),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Keep 2 reserved for the pursuit verdict.
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
