//! Scenario configuration as read from JSON files and command-line flags.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::attack::{AttackError, ChannelModel};
use crate::states::{self, SpecialMu};

/// A regime parameter given either numerically or by name.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MuSpec {
    Value(f64),
    Named(MuName),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MuName {
    Usd,
    Breidbart,
}

impl MuSpec {
    pub fn resolve(&self, w: f64) -> Result<f64, ConfigError> {
        match *self {
            MuSpec::Value(mu) => Ok(mu),
            MuSpec::Named(MuName::Usd) => special(w, SpecialMu::Usd),
            MuSpec::Named(MuName::Breidbart) => special(w, SpecialMu::MinError),
        }
    }
}

fn special(w: f64, kind: SpecialMu) -> Result<f64, ConfigError> {
    states::special_mu(w, kind).map_err(|e| ConfigError::new("out_of_range", e.to_string()))
}

impl FromStr for MuSpec {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "usd" => Ok(MuSpec::Named(MuName::Usd)),
            "breidbart" => Ok(MuSpec::Named(MuName::Breidbart)),
            _ => s
                .parse::<f64>()
                .map(MuSpec::Value)
                .map_err(|_| format!("expected a number, \"usd\" or \"breidbart\", got {s:?}")),
        }
    }
}

impl fmt::Display for MuSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MuSpec::Value(v) => write!(f, "{v}"),
            MuSpec::Named(MuName::Usd) => f.write_str("usd"),
            MuSpec::Named(MuName::Breidbart) => f.write_str("breidbart"),
        }
    }
}

/// Validation failure with a short machine-readable code.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError {
    pub code: &'static str,
    pub message: String,
}

impl ConfigError {
    pub fn new(code: &'static str, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

impl std::error::Error for ConfigError {}

/// Scenario file schema. Missing fields take the defaults of the matched
/// lossy-link scenario; unknown fields are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub w: f64,
    pub bob_mu: MuSpec,
    pub eve_mu: MuSpec,
    pub transmittance: f64,
    pub efficiency: f64,
    pub dark_count_prob: f64,
    pub pulses: u64,
    pub xi: Option<f64>,
    pub zeta: Option<f64>,
    pub fake_click_prob: f64,
    pub seed: u64,
    pub intrinsic_error: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            w: 0.6,
            bob_mu: MuSpec::Value(0.5),
            eve_mu: MuSpec::Value(0.5),
            transmittance: 0.1,
            efficiency: 0.2,
            dark_count_prob: 1e-5,
            pulses: 1_000_000,
            xi: None,
            zeta: None,
            fake_click_prob: 1.0,
            seed: 0,
            intrinsic_error: 0.01,
        }
    }
}

/// A validated configuration with named μ values resolved.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResolvedConfig {
    pub w: f64,
    pub bob_mu: f64,
    pub eve_mu: f64,
    pub channel: ChannelModel,
    pub xi: Option<f64>,
    pub zeta: Option<f64>,
    pub fake_click_prob: f64,
    pub seed: u64,
    pub intrinsic_error: f64,
}

fn attack_err(e: AttackError) -> ConfigError {
    let code = match &e {
        AttackError::Povm(states::PovmError::ConstraintViolated { .. }) => "constraint_violated",
        _ => "out_of_range",
    };
    ConfigError::new(code, e.to_string())
}

fn povm_err(which: &str, e: states::PovmError) -> ConfigError {
    let code = match e {
        states::PovmError::ConstraintViolated { .. } => "constraint_violated",
        _ => "out_of_range",
    };
    ConfigError::new(code, format!("{which}: {e}"))
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Checks every module precondition and resolves named μ values.
    pub fn resolve(&self) -> Result<ResolvedConfig, ConfigError> {
        let w = self.w;
        if !(0.0..1.0).contains(&w) {
            return Err(ConfigError::new(
                "out_of_range",
                format!("w = {w} is outside [0, 1)"),
            ));
        }
        let bob_mu = self.bob_mu.resolve(w)?;
        let eve_mu = self.eve_mu.resolve(w)?;
        states::calibrate_delta(w, bob_mu).map_err(|e| povm_err("bob_mu", e))?;
        states::calibrate_delta(w, eve_mu).map_err(|e| povm_err("eve_mu", e))?;
        let channel = ChannelModel {
            transmittance: self.transmittance,
            efficiency: self.efficiency,
            dark_count_prob: self.dark_count_prob,
            pulses: self.pulses,
        };
        channel.validate().map_err(attack_err)?;
        let range = |name: &str, v: f64, lo: f64, hi: f64, lo_open: bool| {
            let ok = if lo_open {
                v > lo && v <= hi
            } else {
                v >= lo && v <= hi
            };
            if ok {
                Ok(())
            } else {
                Err(ConfigError::new(
                    "out_of_range",
                    format!("{name} = {v} is outside range"),
                ))
            }
        };
        if let Some(xi) = self.xi {
            range("xi", xi, 0.0, 1.0, false)?;
        }
        if let Some(zeta) = self.zeta {
            range("zeta", zeta, 0.0, 0.5, false)?;
        }
        range("fake_click_prob", self.fake_click_prob, 0.0, 1.0, true)?;
        range("intrinsic_error", self.intrinsic_error, 0.0, 0.5, false)?;
        Ok(ResolvedConfig {
            w,
            bob_mu,
            eve_mu,
            channel,
            xi: self.xi,
            zeta: self.zeta,
            fake_click_prob: self.fake_click_prob,
            seed: self.seed,
            intrinsic_error: self.intrinsic_error,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_resolve() {
        let r = ScenarioConfig::default().resolve().unwrap();
        assert_eq!(r.eve_mu, 0.5);
        assert_eq!(r.channel.pulses, 1_000_000);
    }

    #[test]
    fn named_mu_from_json_and_flags() {
        let cfg = ScenarioConfig::from_json(r#"{"w": 0.6, "eve_mu": "breidbart", "bob_mu": 0.4}"#)
            .unwrap();
        let r = cfg.resolve().unwrap();
        assert!((r.eve_mu - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.bob_mu, 0.4);
        assert_eq!("usd".parse::<MuSpec>().unwrap(), MuSpec::Named(MuName::Usd));
        assert_eq!("0.25".parse::<MuSpec>().unwrap(), MuSpec::Value(0.25));
        assert!("fast".parse::<MuSpec>().is_err());
    }

    #[test]
    fn unknown_fields_rejected() {
        assert!(ScenarioConfig::from_json(r#"{"w": 0.6, "colour": 1}"#).is_err());
    }

    #[test]
    fn constraint_violation_is_reported() {
        let cfg = ScenarioConfig {
            eve_mu: MuSpec::Value(0.2),
            ..ScenarioConfig::default()
        };
        let err = cfg.resolve().unwrap_err();
        assert_eq!(err.code, "constraint_violated");
        assert!(err.message.starts_with("eve_mu"));
    }

    #[test]
    fn range_checks() {
        for cfg in [
            ScenarioConfig {
                w: 1.0,
                ..Default::default()
            },
            ScenarioConfig {
                pulses: 0,
                ..Default::default()
            },
            ScenarioConfig {
                zeta: Some(0.7),
                ..Default::default()
            },
            ScenarioConfig {
                fake_click_prob: 0.0,
                ..Default::default()
            },
            ScenarioConfig {
                transmittance: 0.0,
                ..Default::default()
            },
        ] {
            assert_eq!(cfg.resolve().unwrap_err().code, "out_of_range");
        }
    }
}
