//! Quantum control attack on two-state QKD: POVM construction, Kraus
//! feed-forward, feasibility and matching, Monte Carlo simulation and
//! detector-side monitors.

pub mod attack;
pub mod clicklog;
pub mod config;
pub mod countermeasures;
pub mod feed_forward;
pub mod linalg;
pub mod report;
pub mod states;
pub mod tolerance;

pub use attack::{
    baseline_stats, simulate, simulate_with_log, solve_matching, AttackError, BaselineStats,
    ChannelModel, Infeasibility, PulseAction, PulseRecord, Scenario, SimulationReport, SweepRecord,
};
pub use config::{ConfigError, MuSpec, ResolvedConfig, ScenarioConfig};
pub use countermeasures::{MonitorConfig, MonitorError, MonitorVerdict};
pub use feed_forward::{EveOutcome, FeedForwardError, KrausSet, StrategyParams};
pub use linalg::{ComplexMatrix, LinalgError};
pub use report::{ReportError, ReportRecord, ReportValue};
pub use states::{OutcomeProbs, PovmError, StateLabel, StatePair, TwoStatePovm};
