//! `qca`: probe, sweep, simulate and monitor the quantum control attack.

use std::fs;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qca_core::attack::{mu_grid, sweep_feasibility};
use qca_core::countermeasures::{click_statistics_monitor, coincidence_monitor};
use qca_core::{
    baseline_stats, clicklog, report, simulate, simulate_with_log, solve_matching, MonitorConfig,
    MonitorError, MuSpec, ReportRecord, ReportValue, ResolvedConfig, Scenario, ScenarioConfig,
    StrategyParams,
};

#[derive(Parser)]
#[command(
    name = "qca",
    version,
    about = "Quantum control attack on two-state QKD"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Outcome probabilities, δ and λ_max for (w, eve_mu).
    Probe(Common),
    /// CSV of probabilities, gain and feasibility over a μ grid.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 50)]
        steps: usize,
    },
    /// Monte Carlo run of the attack (or honest traffic).
    Simulate(SimulateArgs),
    /// Click-rate and coincidence monitors over a click log.
    Monitor(MonitorArgs),
}

#[derive(Args, Clone, Default)]
struct Common {
    /// JSON scenario file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    w: Option<f64>,
    /// Number, "usd" or "breidbart".
    #[arg(long)]
    eve_mu: Option<MuSpec>,
    #[arg(long)]
    bob_mu: Option<MuSpec>,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of pulses.
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    transmittance: Option<f64>,
    #[arg(long)]
    efficiency: Option<f64>,
    #[arg(long)]
    dark: Option<f64>,
    #[arg(long)]
    intrinsic_error: Option<f64>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    /// Override the solved resend throttle.
    #[arg(long)]
    xi: Option<f64>,
    /// Override the solved flip probability.
    #[arg(long)]
    zeta: Option<f64>,
    #[arg(long)]
    fake_click_prob: Option<f64>,
    /// Simulate honest traffic with no eavesdropper.
    #[arg(long)]
    honest: bool,
    /// Write the per-pulse click log (CSV) here.
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Args)]
struct MonitorArgs {
    #[command(flatten)]
    common: Common,
    /// Click log written by `simulate --log`.
    #[arg(long)]
    log: PathBuf,
    #[arg(long, default_value_t = 100_000)]
    window: u64,
    #[arg(long, default_value_t = 4.0)]
    z_threshold: f64,
}

/// A failure with its process exit code.
struct Failure {
    exit: u8,
    code: &'static str,
    message: String,
}

impl Failure {
    fn validation(code: &'static str, message: impl Into<String>) -> Self {
        Self {
            exit: 2,
            code,
            message: message.into(),
        }
    }

    fn io(code: &'static str, message: impl Into<String>) -> Self {
        Self {
            exit: 4,
            code,
            message: message.into(),
        }
    }
}

impl From<qca_core::ConfigError> for Failure {
    fn from(e: qca_core::ConfigError) -> Self {
        Failure::validation(e.code, e.message)
    }
}

fn load_config(common: &Common) -> Result<ScenarioConfig, Failure> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::io("io", format!("{}: {e}", path.display())))?;
            ScenarioConfig::from_json(&text).map_err(|e| match e.classify() {
                serde_json::error::Category::Data => {
                    Failure::validation("invalid_config", e.to_string())
                }
                _ => Failure::io("parse", format!("{}: {e}", path.display())),
            })?
        }
        None => ScenarioConfig::default(),
    };
    macro_rules! apply {
        ($($flag:ident => $field:ident),*) => {
            $(if let Some(v) = common.$flag { cfg.$field = v; })*
        };
    }
    apply!(w => w, eve_mu => eve_mu, bob_mu => bob_mu, seed => seed, n => pulses,
        transmittance => transmittance, efficiency => efficiency, dark => dark_count_prob,
        intrinsic_error => intrinsic_error);
    Ok(cfg)
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, bytes)
            .map_err(|e| Failure::io("io", format!("{}: {e}", path.display()))),
        None => io::stdout()
            .write_all(bytes)
            .map_err(|e| Failure::io("io", e.to_string())),
    }
}

fn record_err(e: qca_core::ReportError) -> Failure {
    Failure::validation("non_finite", e.to_string())
}

fn baseline(cfg: &ResolvedConfig) -> Result<qca_core::BaselineStats, Failure> {
    baseline_stats(&cfg.channel, cfg.bob_mu, cfg.w, cfg.intrinsic_error)
        .map_err(|e| Failure::validation("out_of_range", e.to_string()))
}

fn cmd_probe(common: &Common) -> Result<u8, Failure> {
    let cfg = load_config(common)?.resolve()?;
    let record = report::probe(cfg.w, cfg.eve_mu)
        .map_err(|e| Failure::validation("constraint_violated", e.to_string()))?;
    emit(common.out.as_deref(), record.to_json().as_bytes())?;
    Ok(0)
}

fn cmd_sweep(common: &Common, steps: usize) -> Result<u8, Failure> {
    let cfg = load_config(common)?.resolve()?;
    let grid =
        mu_grid(cfg.w, steps).map_err(|e| Failure::validation("out_of_range", e.to_string()))?;
    let rows = sweep_feasibility(cfg.w, &grid, &baseline(&cfg)?, &cfg.channel);
    let mut buf = Vec::new();
    report::write_sweep_csv(&mut buf, &rows).map_err(|e| Failure::io("io", e.to_string()))?;
    emit(common.out.as_deref(), &buf)?;
    Ok(0)
}

fn cmd_simulate(args: &SimulateArgs) -> Result<u8, Failure> {
    let mut file = load_config(&args.common)?;
    file.xi = args.xi.or(file.xi);
    file.zeta = args.zeta.or(file.zeta);
    file.fake_click_prob = args.fake_click_prob.unwrap_or(file.fake_click_prob);
    let cfg = file.resolve()?;
    let base = baseline(&cfg)?;

    let eve = if args.honest {
        None
    } else {
        // Without a matching solution, Eve falls back to resending everything.
        let solved = solve_matching(cfg.w, cfg.eve_mu, &base, &cfg.channel, cfg.fake_click_prob)
            .unwrap_or(StrategyParams {
                fake_click_prob: cfg.fake_click_prob,
                ..StrategyParams::full_resend(cfg.eve_mu)
            });
        Some(StrategyParams {
            resend_throttle_xi: cfg.xi.unwrap_or(solved.resend_throttle_xi),
            flip_prob_zeta: cfg.zeta.unwrap_or(solved.flip_prob_zeta),
            ..solved
        })
    };
    let scenario = Scenario {
        w: cfg.w,
        channel: cfg.channel,
        bob_mu: cfg.bob_mu,
        intrinsic_error: cfg.intrinsic_error,
        eve,
        seed: cfg.seed,
    };
    let sim_err = |e: qca_core::AttackError| Failure::validation("out_of_range", e.to_string());
    let (sim, log) = if args.log.is_some() {
        simulate_with_log(&scenario).map_err(sim_err)?
    } else {
        (simulate(&scenario).map_err(sim_err)?, Vec::new())
    };

    if let Some(path) = &args.log {
        let file = fs::File::create(path)
            .map_err(|e| Failure::io("io", format!("{}: {e}", path.display())))?;
        clicklog::write_log(file, &log)
            .map_err(|e| Failure::io("io", format!("{}: {e}", path.display())))?;
    }

    let mut record = ReportRecord::new("simulate");
    record.extend_from("", &sim).map_err(record_err)?;
    record.extend_from("", &base).map_err(record_err)?;
    record
        .insert(
            "mode",
            ReportValue::Text(if args.honest { "honest" } else { "attack" }.into()),
        )
        .map_err(record_err)?;
    record
        .insert("seed", ReportValue::Int(cfg.seed))
        .map_err(record_err)?;
    if let Some(s) = eve {
        record.extend_from("strategy_", &s).map_err(record_err)?;
    }
    emit(args.common.out.as_deref(), record.to_json().as_bytes())?;

    if !args.honest && !sim.feasibility {
        eprintln!("error: infeasible: no (xi, zeta) reproduces the baseline for this scenario");
        return Ok(3);
    }
    Ok(0)
}

fn monitor_err(e: MonitorError) -> Failure {
    match e {
        MonitorError::InsufficientData(m) => Failure::validation("insufficient_data", m),
        MonitorError::InvalidConfig(m) => Failure::validation("out_of_range", m),
    }
}

fn cmd_monitor(args: &MonitorArgs) -> Result<u8, Failure> {
    let cfg = load_config(&args.common)?.resolve()?;
    let monitor = MonitorConfig {
        window_size: args.window,
        rate_z_threshold: args.z_threshold,
        coincidence_z_threshold: args.z_threshold,
    };
    monitor.validate().map_err(monitor_err)?;
    let base = baseline(&cfg)?;

    let file = fs::File::open(&args.log)
        .map_err(|e| Failure::io("io", format!("{}: {e}", args.log.display())))?;
    let log = clicklog::read_log(BufReader::new(file))
        .map_err(|e| Failure::io("malformed_log", format!("{}: {e}", args.log.display())))?;

    let expected_rate = base.gain_gb / cfg.channel.pulses as f64;
    let rate = click_statistics_monitor(&log, &monitor, expected_rate).map_err(monitor_err)?;
    let coincidence = coincidence_monitor(&log, &monitor).map_err(monitor_err)?;

    let mut record = ReportRecord::new("monitor");
    record
        .insert("pulses", ReportValue::Int(log.len() as u64))
        .map_err(record_err)?;
    record
        .float("expected_click_rate", expected_rate)
        .map_err(record_err)?;
    record.extend_from("rate_", &rate).map_err(record_err)?;
    record
        .extend_from("coincidence_", &coincidence)
        .map_err(record_err)?;
    emit(args.common.out.as_deref(), record.to_json().as_bytes())?;
    Ok(0)
}

fn init_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var("QCA_THREADS") else {
        return Ok(());
    };
    let n: usize = value.trim().parse().map_err(|_| {
        Failure::validation(
            "out_of_range",
            format!("QCA_THREADS = {value:?} is not a count"),
        )
    })?;
    // 0 lets rayon pick the default.
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::io("threads", e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = init_threads().and_then(|()| match &cli.command {
        Command::Probe(common) => cmd_probe(common),
        Command::Sweep { common, steps } => cmd_sweep(common, *steps),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Monitor(args) => cmd_monitor(args),
    });
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}: {}", f.code, f.message.replace('\n', " "));
            ExitCode::from(f.exit)
        }
    }
}
