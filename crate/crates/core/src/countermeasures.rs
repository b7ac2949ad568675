//! Detector-side monitors for blinding-style attacks.
//!
//! Two statistics over Bob's click log:
//!
//! * click rate per window against the expected rate (two-sided z-score,
//!   maximum over windows). A rate-matched attack passes this by construction.
//! * coincidences between Bob's two detectors. Honest weak pulses are
//!   Poisson-thinned, so given Alice's bit the two detectors fire
//!   independently and double clicks occur at the product rate. Faked states
//!   drive exactly one detector, suppressing coincidences.
//!
//! The coincidence expectation is conditioned on Alice's bit, which Alice
//! and Bob reveal for the sample used in parameter estimation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attack::PulseRecord;
use crate::states::StateLabel;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MonitorError {
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("invalid monitor configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonitorConfig {
    /// Pulses per window; at least 100.
    pub window_size: u64,
    /// Two-sided z threshold for the click-rate monitor.
    pub rate_z_threshold: f64,
    /// Two-sided z threshold for the coincidence monitor.
    pub coincidence_z_threshold: f64,
}

impl Default for MonitorConfig {
    fn default() -> Self {
        Self {
            window_size: 100_000,
            rate_z_threshold: 4.0,
            coincidence_z_threshold: 4.0,
        }
    }
}

impl MonitorConfig {
    pub fn validate(&self) -> Result<(), MonitorError> {
        if self.window_size < 100 {
            return Err(MonitorError::InvalidConfig(format!(
                "window_size {} < 100",
                self.window_size
            )));
        }
        for (name, z) in [
            ("rate_z_threshold", self.rate_z_threshold),
            ("coincidence_z_threshold", self.coincidence_z_threshold),
        ] {
            if !(z.is_finite() && z > 0.0) {
                return Err(MonitorError::InvalidConfig(format!(
                    "{name} = {z} must be > 0"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonitorVerdict {
    pub flagged: bool,
    pub statistic: f64,
    pub threshold: f64,
    pub window_count: u64,
}

impl MonitorVerdict {
    fn new(statistic: f64, threshold: f64, window_count: u64) -> Self {
        Self {
            flagged: statistic > threshold,
            statistic,
            threshold,
            window_count,
        }
    }
}

fn full_windows(len: usize, config: &MonitorConfig) -> Result<u64, MonitorError> {
    config.validate()?;
    let windows = len as u64 / config.window_size;
    if windows == 0 {
        return Err(MonitorError::InsufficientData(format!(
            "{len} pulses < window size {}",
            config.window_size
        )));
    }
    Ok(windows)
}

/// Largest |z| of the per-window click count against `expected_rate`.
pub fn click_statistics_monitor(
    log: &[PulseRecord],
    config: &MonitorConfig,
    expected_rate: f64,
) -> Result<MonitorVerdict, MonitorError> {
    if !(0.0..=1.0).contains(&expected_rate) {
        return Err(MonitorError::InvalidConfig(format!(
            "expected_rate {expected_rate} outside [0, 1]"
        )));
    }
    let windows = full_windows(log.len(), config)?;
    let n = config.window_size as f64;
    let mean = n * expected_rate;
    let sd = (n * expected_rate * (1.0 - expected_rate)).sqrt();
    let mut worst = 0.0_f64;
    for chunk in log.chunks_exact(config.window_size as usize) {
        let clicks = chunk.iter().filter(|p| p.bob_click).count() as f64;
        let z = if sd > 0.0 {
            (clicks - mean) / sd
        } else if clicks == mean {
            0.0
        } else {
            f64::INFINITY
        };
        worst = worst.max(z.abs());
    }
    Ok(MonitorVerdict::new(worst, config.rate_z_threshold, windows))
}

/// |z| of the observed double-click count against the product-rate
/// expectation, conditioned on Alice's bit. Uses every full window.
pub fn coincidence_monitor(
    log: &[PulseRecord],
    config: &MonitorConfig,
) -> Result<MonitorVerdict, MonitorError> {
    let windows = full_windows(log.len(), config)?;
    let used = &log[..(windows * config.window_size) as usize];

    let mut observed = 0u64;
    let mut expected = 0.0;
    let mut variance = 0.0;
    for label in [StateLabel::U, StateLabel::V] {
        let (mut n, mut a, mut b) = (0u64, 0u64, 0u64);
        for p in used.iter().filter(|p| p.alice == label) {
            n += 1;
            a += u64::from(p.detector_a);
            b += u64::from(p.detector_b);
            observed += u64::from(p.detector_a && p.detector_b);
        }
        if n == 0 {
            continue;
        }
        let q = (a as f64 / n as f64) * (b as f64 / n as f64);
        expected += n as f64 * q;
        variance += n as f64 * q * (1.0 - q);
    }
    if expected <= 0.0 {
        return Err(MonitorError::InsufficientData(
            "no clicks on one of the detectors; coincidence rate undefined".into(),
        ));
    }
    let z = (observed as f64 - expected) / variance.sqrt();
    Ok(MonitorVerdict::new(
        z.abs(),
        config.coincidence_z_threshold,
        windows,
    ))
}
