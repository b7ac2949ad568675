//! Baseline channel model, feasibility, rate/error matching and the Monte
//! Carlo engine for the full intercept-resend-with-blinding attack.
//!
//! # Bob's baseline
//!
//! Bob measures Alice's states with the same two-state POVM family, using his
//! own regime parameter `bob_mu`. Per pulse the signal reaches him and gives a
//! conclusive click with probability `s = T·η·(p_correct + p_error)`; a dark
//! count fires on any other slot with probability `d`. Hence
//!
//! ```text
//! G_B = N·(s + (1 − s)·d)
//! E_B = (s·e_bob + (1 − s)·d/2) / (s + (1 − s)·d)
//! e_bob = e_sig·(1 − ε) + (1 − e_sig)·ε,   e_sig = p_error / (p_correct + p_error)
//! ```
//!
//! with `ε` the intrinsic (misalignment) error. Dark-count bits are uniform.
//!
//! # Attack
//!
//! Eve replaces the channel, measures every pulse with her POVM, blocks
//! inconclusive slots, and resends conclusive ones as faked states that make
//! Bob's addressed detector click with probability `fake_click_prob`. The
//! throttle `ξ` and flip probability `ζ` are solved so that Bob's expected
//! click count and error count equal the baseline ones.
//!
//! # Reproducibility
//!
//! Pulses are processed in chunks of [`CHUNK_PULSES`]. Chunk `k` draws from
//! `ChaCha8Rng::seed_from_u64(seed)` switched to stream `k`. Results depend
//! only on the seed, never on the number of worker threads.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::feed_forward::{
    feed_forward, EveOutcome, FeedForwardError, OutcomeKind, StrategyParams,
};
use crate::states::{
    outcome_probs_closed_form, special_mu, OutcomeProbs, PovmError, SpecialMu, StateLabel,
};

/// Pulses per independently seeded chunk.
pub const CHUNK_PULSES: u64 = 1 << 16;

const MATCH_SLACK: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AttackError {
    #[error("{name} = {value} is outside {range}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("attack infeasible: {0}")]
    Infeasible(Infeasibility),
    #[error(transparent)]
    Povm(#[from] PovmError),
    #[error(transparent)]
    Strategy(#[from] FeedForwardError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Infeasibility {
    /// Eve's conclusive rate cannot sustain Bob's expected click rate.
    Rate { required_xi: f64 },
    /// Eve's own error rate already exceeds what Bob expects (or the target
    /// needs more than half the bits flipped).
    Error { eve_error: f64, target_error: f64 },
}

impl std::fmt::Display for Infeasibility {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Infeasibility::Rate { required_xi } => {
                write!(f, "rate (required throttle {required_xi} > 1)")
            }
            Infeasibility::Error {
                eve_error,
                target_error,
            } => {
                write!(f, "error (Eve error {eve_error} vs target {target_error})")
            }
        }
    }
}

/// Channel and detector parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    pub transmittance: f64,
    pub efficiency: f64,
    /// Dark-count probability per gate (either detector).
    pub dark_count_prob: f64,
    pub pulses: u64,
}

impl ChannelModel {
    pub fn validate(&self) -> Result<(), AttackError> {
        let unit_open = |name, v: f64| {
            if v > 0.0 && v <= 1.0 {
                Ok(())
            } else {
                Err(AttackError::InvalidParameter {
                    name,
                    value: v,
                    range: "(0, 1]",
                })
            }
        };
        unit_open("transmittance", self.transmittance)?;
        unit_open("efficiency", self.efficiency)?;
        if !(0.0..1.0).contains(&self.dark_count_prob) {
            return Err(AttackError::InvalidParameter {
                name: "dark_count_prob",
                value: self.dark_count_prob,
                range: "[0, 1)",
            });
        }
        if self.pulses == 0 {
            return Err(AttackError::InvalidParameter {
                name: "pulses",
                value: 0.0,
                range: ">= 1",
            });
        }
        Ok(())
    }

    /// Per-detector dark probability so that either of two detectors fires
    /// with `dark_count_prob`.
    pub fn per_detector_dark(&self) -> f64 {
        1.0 - (1.0 - self.dark_count_prob).sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineStats {
    /// Expected detections over the run.
    pub gain_gb: f64,
    pub qber_eb: f64,
}

fn check_intrinsic(intrinsic_error: f64) -> Result<(), AttackError> {
    if !(0.0..=0.5).contains(&intrinsic_error) {
        return Err(AttackError::InvalidParameter {
            name: "intrinsic_error",
            value: intrinsic_error,
            range: "[0, 0.5]",
        });
    }
    Ok(())
}

/// Error rate of Bob's conclusive signal clicks after misalignment.
fn misaligned(e_sig: f64, intrinsic_error: f64) -> f64 {
    e_sig * (1.0 - intrinsic_error) + (1.0 - e_sig) * intrinsic_error
}

/// Expected gain and QBER without Eve (see module docs for the formula).
pub fn baseline_stats(
    channel: &ChannelModel,
    bob_mu: f64,
    w: f64,
    intrinsic_error: f64,
) -> Result<BaselineStats, AttackError> {
    channel.validate()?;
    check_intrinsic(intrinsic_error)?;
    let probs = outcome_probs_closed_form(w, bob_mu)?;
    let s = channel.transmittance * channel.efficiency * probs.conclusive();
    let d = channel.dark_count_prob;
    let click = s + (1.0 - s) * d;
    let e_bob = misaligned(probs.conditional_error(), intrinsic_error);
    let qber_eb = if click > 0.0 {
        (s * e_bob + (1.0 - s) * d * 0.5) / click
    } else {
        0.0
    };
    Ok(BaselineStats {
        gain_gb: channel.pulses as f64 * click,
        qber_eb,
    })
}

/// `G_E = N·(p_correct + p_error)`
pub fn eve_gain(w: f64, mu: f64, pulses: u64) -> Result<f64, AttackError> {
    let probs = outcome_probs_closed_form(w, mu)?;
    Ok(pulses as f64 * probs.conclusive())
}

/// `G_E ≥ G_B`, boundary inclusive.
pub fn attack_feasible(
    w: f64,
    mu: f64,
    baseline: &BaselineStats,
    pulses: u64,
) -> Result<bool, AttackError> {
    Ok(eve_gain(w, mu, pulses)? >= baseline.gain_gb)
}

/// Flip probability turning Eve's conditional error `eve_error` into `target`:
/// solves `e(1−ζ) + (1−e)ζ = target`.
pub fn flip_probability_for(eve_error: f64, target: f64) -> Result<f64, AttackError> {
    let infeasible = || {
        AttackError::Infeasible(Infeasibility::Error {
            eve_error,
            target_error: target,
        })
    };
    if target < eve_error - MATCH_SLACK {
        return Err(infeasible());
    }
    let denom = 1.0 - 2.0 * eve_error;
    if denom <= f64::EPSILON {
        // Eve's bits are already coin flips; only a 0.5 target is reachable.
        return if (target - 0.5).abs() <= MATCH_SLACK {
            Ok(0.0)
        } else {
            Err(infeasible())
        };
    }
    let zeta = (target - eve_error) / denom;
    if zeta > 0.5 + MATCH_SLACK {
        return Err(infeasible());
    }
    Ok(zeta.clamp(0.0, 0.5))
}

/// Solves the throttle `ξ` and flip probability `ζ` so that Bob's expected
/// clicks and errors under attack equal the baseline.
///
/// Bob clicks on a faked state with probability `fake_click_prob` and dark
/// counts fire on every slot without a faked click. Writing `g = G_B/N`,
/// `c = G_E/N` and `d` for the dark probability, the faked-click rate must be
/// `f = (g − d)/(1 − d)`, so `ξ = f/(c·fake_click_prob)`. Faked clicks then
/// need error rate `(E_B·g − d(1 − f)/2)/f`, reached by flipping. With no
/// dark counts and deterministic clicks this is `ξ = G_B/G_E` and
/// `ζ = (E_B − e_E)/(1 − 2e_E)`.
pub fn solve_matching(
    w: f64,
    mu: f64,
    baseline: &BaselineStats,
    channel: &ChannelModel,
    fake_click_prob: f64,
) -> Result<StrategyParams, AttackError> {
    channel.validate()?;
    let probs = outcome_probs_closed_form(w, mu)?;
    let n = channel.pulses as f64;
    let g = baseline.gain_gb / n;
    let d = channel.dark_count_prob;
    let c = probs.conclusive();
    let f = ((g - d) / (1.0 - d)).max(0.0);

    let xi = if f == 0.0 {
        0.0
    } else {
        f / (c * fake_click_prob)
    };
    if !xi.is_finite() || xi > 1.0 + MATCH_SLACK {
        return Err(AttackError::Infeasible(Infeasibility::Rate {
            required_xi: xi,
        }));
    }
    let eve_error = probs.conditional_error();
    let zeta = if f == 0.0 {
        0.0
    } else {
        let target = (baseline.qber_eb * g - 0.5 * d * (1.0 - f)) / f;
        flip_probability_for(eve_error, target)?
    };
    let strategy = StrategyParams {
        mu,
        resend_throttle_xi: xi.min(1.0),
        flip_prob_zeta: zeta,
        fake_click_prob,
    };
    strategy.validate(w)?;
    Ok(strategy)
}

/// One point of a μ sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRecord {
    pub mu: f64,
    /// `None` when μ is outside the valid range for `w`.
    pub probs: Option<OutcomeProbs>,
    pub eve_gain: f64,
    pub ge_per_pulse: f64,
    pub feasible: bool,
    pub eve_error: f64,
    /// Flip probability from [`solve_matching`], `None` if matching fails.
    pub zeta: Option<f64>,
}

/// Evaluates gain, feasibility and matching over a μ grid. Invalid μ values
/// yield a record with `probs = None` rather than an error.
pub fn sweep_feasibility(
    w: f64,
    mu_grid: &[f64],
    baseline: &BaselineStats,
    channel: &ChannelModel,
) -> Vec<SweepRecord> {
    mu_grid
        .iter()
        .map(|&mu| match outcome_probs_closed_form(w, mu) {
            Ok(probs) => {
                let n = channel.pulses as f64;
                let eve_gain = n * probs.conclusive();
                SweepRecord {
                    mu,
                    probs: Some(probs),
                    eve_gain,
                    ge_per_pulse: probs.conclusive(),
                    feasible: eve_gain >= baseline.gain_gb,
                    eve_error: probs.conditional_error(),
                    zeta: solve_matching(w, mu, baseline, channel, 1.0)
                        .ok()
                        .map(|s| s.flip_prob_zeta),
                }
            }
            Err(_) => SweepRecord {
                mu,
                probs: None,
                eve_gain: f64::NAN,
                ge_per_pulse: f64::NAN,
                feasible: false,
                eve_error: f64::NAN,
                zeta: None,
            },
        })
        .collect()
}

/// `steps` evenly spaced μ values from the minimum-error point to the USD
/// point (`μ = w`), both endpoints included exactly.
pub fn mu_grid(w: f64, steps: usize) -> Result<Vec<f64>, AttackError> {
    if steps < 2 {
        return Err(AttackError::InvalidParameter {
            name: "steps",
            value: steps as f64,
            range: ">= 2",
        });
    }
    let lo = special_mu(w, SpecialMu::MinError)?;
    let hi = special_mu(w, SpecialMu::Usd)?;
    let last = (steps - 1) as f64;
    Ok((0..steps)
        .map(|i| match i {
            0 => lo,
            i if i == steps - 1 => hi,
            i => lo + (hi - lo) * i as f64 / last,
        })
        .collect())
}

/// What Eve did to a slot, as seen in the click log.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PulseAction {
    Resend(StateLabel),
    Block,
    /// No eavesdropper: the signal went straight to Bob.
    Pass,
}

/// Per-pulse record. Detector A registers bit 0 (`u`), detector B bit 1 (`v`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PulseRecord {
    pub alice: StateLabel,
    pub eve: Option<EveOutcome>,
    pub action: PulseAction,
    pub bob_click: bool,
    pub bob_bit: Option<u8>,
    pub detector_a: bool,
    pub detector_b: bool,
}

/// A full simulation scenario. `eve = None` simulates honest traffic.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub w: f64,
    pub channel: ChannelModel,
    pub bob_mu: f64,
    pub intrinsic_error: f64,
    pub eve: Option<StrategyParams>,
    pub seed: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub pulses: u64,
    pub eve_correct: u64,
    pub eve_error: u64,
    pub eve_inconclusive: u64,
    /// Conclusive outcomes, i.e. Eve's realized gain.
    pub eve_gain_ge: u64,
    pub resends: u64,
    pub blocked: u64,
    pub flips: u64,
    pub fake_clicks: u64,
    /// Clicks on slots without a faked click (dark counts; for honest
    /// traffic, every click not caused by the signal).
    pub dark_clicks: u64,
    pub double_clicks: u64,
    pub bob_clicks: u64,
    pub bob_errors: u64,
    pub observed_qber: f64,
    pub eve_known_bits: u64,
    pub eve_key_knowledge_fraction: f64,
    pub feasibility: bool,
}

#[derive(Default)]
struct Tally {
    eve_correct: u64,
    eve_error: u64,
    eve_inconclusive: u64,
    resends: u64,
    blocked: u64,
    flips: u64,
    fake_clicks: u64,
    dark_clicks: u64,
    double_clicks: u64,
    bob_clicks: u64,
    bob_errors: u64,
    eve_known_bits: u64,
    eve_guessed_clicks: u64,
}

impl Tally {
    fn merge(mut self, o: Tally) -> Tally {
        self.eve_correct += o.eve_correct;
        self.eve_error += o.eve_error;
        self.eve_inconclusive += o.eve_inconclusive;
        self.resends += o.resends;
        self.blocked += o.blocked;
        self.flips += o.flips;
        self.fake_clicks += o.fake_clicks;
        self.dark_clicks += o.dark_clicks;
        self.double_clicks += o.double_clicks;
        self.bob_clicks += o.bob_clicks;
        self.bob_errors += o.bob_errors;
        self.eve_known_bits += o.eve_known_bits;
        self.eve_guessed_clicks += o.eve_guessed_clicks;
        self
    }
}

/// Precomputed per-pulse probabilities.
enum Model {
    Attack {
        eve: OutcomeProbs,
        strategy: StrategyParams,
        dark: f64,
    },
    /// Poisson-thinned honest traffic: each detector fires independently.
    Honest {
        /// Per-photon routing to the correct / wrong detector times mean
        /// detected photon number, as Poisson means.
        mean_correct: f64,
        mean_wrong: f64,
        dark: f64,
    },
}

/// Bob's bit from detector clicks; double clicks get a random bit.
fn resolve_bit<R: Rng>(a: bool, b: bool, rng: &mut R) -> Option<u8> {
    match (a, b) {
        (true, true) => Some(u8::from(rng.gen::<bool>())),
        (true, false) => Some(0),
        (false, true) => Some(1),
        (false, false) => None,
    }
}

fn simulate_pulse<R: Rng>(model: &Model, rng: &mut R, tally: &mut Tally) -> PulseRecord {
    let alice = if rng.gen::<f64>() < 0.5 {
        StateLabel::U
    } else {
        StateLabel::V
    };
    match model {
        Model::Attack {
            eve,
            strategy,
            dark,
        } => {
            let r = rng.gen::<f64>();
            let kind = if r < eve.p_correct {
                tally.eve_correct += 1;
                OutcomeKind::Correct
            } else if r < eve.p_correct + eve.p_error {
                tally.eve_error += 1;
                OutcomeKind::Error
            } else {
                tally.eve_inconclusive += 1;
                OutcomeKind::Inconclusive
            };
            let outcome = kind.eve_outcome(alice);
            let action = feed_forward(outcome, strategy, rng);
            if action.flip {
                tally.flips += 1;
            }
            let (mut det_a, mut det_b) = (false, false);
            let mut faked = false;
            let pulse_action = match action.resend {
                Some(label) => {
                    tally.resends += 1;
                    if rng.gen::<f64>() < strategy.fake_click_prob {
                        faked = true;
                        tally.fake_clicks += 1;
                        match label {
                            StateLabel::U => det_a = true,
                            StateLabel::V => det_b = true,
                        }
                    }
                    PulseAction::Resend(label)
                }
                None => {
                    tally.blocked += 1;
                    PulseAction::Block
                }
            };
            if !faked {
                det_a = rng.gen::<f64>() < *dark;
                det_b = rng.gen::<f64>() < *dark;
            }
            let bob_bit = resolve_bit(det_a, det_b, rng);
            if let Some(bit) = bob_bit {
                tally.bob_clicks += 1;
                if bit != alice.bit() {
                    tally.bob_errors += 1;
                }
                if det_a && det_b {
                    tally.double_clicks += 1;
                }
                if faked {
                    // Eve's guess of Bob's bit is the label she resent.
                    tally.eve_guessed_clicks += 1;
                    if let PulseAction::Resend(label) = pulse_action {
                        if label.bit() == bit {
                            tally.eve_known_bits += 1;
                        }
                    }
                } else {
                    tally.dark_clicks += 1;
                }
            }
            PulseRecord {
                alice,
                eve: Some(outcome),
                action: pulse_action,
                bob_click: bob_bit.is_some(),
                bob_bit,
                detector_a: det_a,
                detector_b: det_b,
            }
        }
        Model::Honest {
            mean_correct,
            mean_wrong,
            dark,
        } => {
            let hit_correct = rng.gen::<f64>() < 1.0 - (-mean_correct).exp();
            let hit_wrong = rng.gen::<f64>() < 1.0 - (-mean_wrong).exp();
            let dark_a = rng.gen::<f64>() < *dark;
            let dark_b = rng.gen::<f64>() < *dark;
            let (sig_a, sig_b) = match alice {
                StateLabel::U => (hit_correct, hit_wrong),
                StateLabel::V => (hit_wrong, hit_correct),
            };
            let det_a = sig_a || dark_a;
            let det_b = sig_b || dark_b;
            let bob_bit = resolve_bit(det_a, det_b, rng);
            if let Some(bit) = bob_bit {
                tally.bob_clicks += 1;
                if bit != alice.bit() {
                    tally.bob_errors += 1;
                }
                if det_a && det_b {
                    tally.double_clicks += 1;
                }
                if !(sig_a || sig_b) {
                    tally.dark_clicks += 1;
                }
            }
            PulseRecord {
                alice,
                eve: None,
                action: PulseAction::Pass,
                bob_click: bob_bit.is_some(),
                bob_bit,
                detector_a: det_a,
                detector_b: det_b,
            }
        }
    }
}

fn build_model(scenario: &Scenario) -> Result<(Model, bool), AttackError> {
    let channel = &scenario.channel;
    channel.validate()?;
    check_intrinsic(scenario.intrinsic_error)?;
    let baseline = baseline_stats(
        channel,
        scenario.bob_mu,
        scenario.w,
        scenario.intrinsic_error,
    )?;
    let dark = channel.per_detector_dark();
    match scenario.eve {
        Some(strategy) => {
            strategy.validate(scenario.w)?;
            let eve = outcome_probs_closed_form(scenario.w, strategy.mu)?;
            let feasible = solve_matching(
                scenario.w,
                strategy.mu,
                &baseline,
                channel,
                strategy.fake_click_prob,
            )
            .is_ok();
            Ok((
                Model::Attack {
                    eve,
                    strategy,
                    dark,
                },
                feasible,
            ))
        }
        None => {
            let bob = outcome_probs_closed_form(scenario.w, scenario.bob_mu)?;
            let conclusive = bob.conclusive();
            let s = channel.transmittance * channel.efficiency * conclusive;
            // Mean detected photons λ with P(no signal click) = e^{−λ·conclusive} = 1 − s.
            let total = if s >= 1.0 {
                f64::INFINITY
            } else {
                -(1.0 - s).ln()
            };
            let eps = scenario.intrinsic_error;
            let (correct, wrong) = if conclusive > 0.0 {
                let pc = bob.p_correct * (1.0 - eps) + bob.p_error * eps;
                let pe = bob.p_error * (1.0 - eps) + bob.p_correct * eps;
                (pc / conclusive, pe / conclusive)
            } else {
                (0.0, 0.0)
            };
            let mean = |share: f64| if share == 0.0 { 0.0 } else { total * share };
            Ok((
                Model::Honest {
                    mean_correct: mean(correct),
                    mean_wrong: mean(wrong),
                    dark,
                },
                false,
            ))
        }
    }
}

fn run(
    scenario: &Scenario,
    keep_log: bool,
) -> Result<(SimulationReport, Vec<PulseRecord>), AttackError> {
    let (model, feasibility) = build_model(scenario)?;
    let pulses = scenario.channel.pulses;
    let chunks = pulses.div_ceil(CHUNK_PULSES);
    let parts: Vec<(Tally, Vec<PulseRecord>)> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
            rng.set_stream(k);
            let start = k * CHUNK_PULSES;
            let len = CHUNK_PULSES.min(pulses - start);
            let mut tally = Tally::default();
            let mut log = Vec::with_capacity(if keep_log { len as usize } else { 0 });
            for _ in 0..len {
                let rec = simulate_pulse(&model, &mut rng, &mut tally);
                if keep_log {
                    log.push(rec);
                }
            }
            (tally, log)
        })
        .collect();

    let mut log = Vec::with_capacity(if keep_log { pulses as usize } else { 0 });
    let mut tally = Tally::default();
    for (t, l) in parts {
        tally = tally.merge(t);
        log.extend(l);
    }
    let report = SimulationReport {
        pulses,
        eve_correct: tally.eve_correct,
        eve_error: tally.eve_error,
        eve_inconclusive: tally.eve_inconclusive,
        eve_gain_ge: tally.eve_correct + tally.eve_error,
        resends: tally.resends,
        blocked: tally.blocked,
        flips: tally.flips,
        fake_clicks: tally.fake_clicks,
        dark_clicks: tally.dark_clicks,
        double_clicks: tally.double_clicks,
        bob_clicks: tally.bob_clicks,
        bob_errors: tally.bob_errors,
        observed_qber: ratio(tally.bob_errors, tally.bob_clicks),
        eve_known_bits: tally.eve_known_bits,
        eve_key_knowledge_fraction: ratio(tally.eve_known_bits, tally.eve_guessed_clicks),
        feasibility,
    };
    Ok((report, log))
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Runs the scenario and returns aggregate tallies.
pub fn simulate(scenario: &Scenario) -> Result<SimulationReport, AttackError> {
    run(scenario, false).map(|(r, _)| r)
}

/// As [`simulate`], also returning the per-pulse click log.
pub fn simulate_with_log(
    scenario: &Scenario,
) -> Result<(SimulationReport, Vec<PulseRecord>), AttackError> {
    run(scenario, true)
}
