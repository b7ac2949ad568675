//! Eve's post-measurement machinery.
//!
//! Each POVM element `A_x` gets a Kraus operator `K_x = V_x √A_x` whose
//! unitary factor re-prepares the state after the outcome is known. On the
//! finite ancilla space this is exercised as real matrices; towards Bob the
//! re-preparation is operational ([`FeedForwardAction`]): conclusive outcomes
//! are resent as a faked state strong enough to click Bob's detector,
//! inconclusive outcomes are replaced by vacuum.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, inner, is_unitary, norm, psd_sqrt, ComplexMatrix, LinalgError};
use crate::states::{self, PovmError, StateLabel, StatePair, TwoStatePovm};
use crate::tolerance;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeedForwardError {
    #[error("feed-forward operator for outcome {index} is not unitary (residual {residual:e})")]
    NotUnitary { index: usize, residual: f64 },
    #[error("outcome has probability {probability:e}; post-measurement state undefined")]
    ZeroProbabilityOutcome { probability: f64 },
    #[error("{elements} POVM elements but {unitaries} unitaries")]
    CountMismatch { elements: usize, unitaries: usize },
    #[error("{name} = {value} is outside {range}")]
    InvalidStrategy {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error(transparent)]
    Povm(#[from] PovmError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Eve's measurement result.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EveOutcome {
    U,
    V,
    Inconclusive,
}

impl EveOutcome {
    pub fn conclusive(label: StateLabel) -> Self {
        match label {
            StateLabel::U => EveOutcome::U,
            StateLabel::V => EveOutcome::V,
        }
    }

    pub fn label(self) -> Option<StateLabel> {
        match self {
            EveOutcome::U => Some(StateLabel::U),
            EveOutcome::V => Some(StateLabel::V),
            EveOutcome::Inconclusive => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EveOutcome::U => "u",
            EveOutcome::V => "v",
            EveOutcome::Inconclusive => "inconclusive",
        }
    }
}

/// Outcome relative to the state that was actually sent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutcomeKind {
    Correct,
    Error,
    Inconclusive,
}

impl OutcomeKind {
    pub fn eve_outcome(self, sent: StateLabel) -> EveOutcome {
        match self {
            OutcomeKind::Correct => EveOutcome::conclusive(sent),
            OutcomeKind::Error => EveOutcome::conclusive(sent.other()),
            OutcomeKind::Inconclusive => EveOutcome::Inconclusive,
        }
    }
}

#[derive(Clone, Debug)]
pub struct KrausRecord {
    pub label: String,
    pub kraus: ComplexMatrix,
    pub unitary_factor: ComplexMatrix,
    pub psd_root: ComplexMatrix,
}

#[derive(Clone, Debug)]
pub struct KrausSet {
    pub records: Vec<KrausRecord>,
}

impl KrausSet {
    /// `K_x = V_x √A_x` for every element. Missing unitaries default to identity.
    pub fn from_elements(
        labels: &[&str],
        elements: &[ComplexMatrix],
        unitaries: Option<&[ComplexMatrix]>,
    ) -> Result<Self, FeedForwardError> {
        assert_eq!(labels.len(), elements.len(), "one label per element");
        if let Some(us) = unitaries {
            if us.len() != elements.len() {
                return Err(FeedForwardError::CountMismatch {
                    elements: elements.len(),
                    unitaries: us.len(),
                });
            }
            for (index, u) in us.iter().enumerate() {
                if !is_unitary(u, tolerance::UNITARY) {
                    let residual =
                        (&u.adjoint() * u).max_abs_diff(&ComplexMatrix::identity(u.dim()));
                    return Err(FeedForwardError::NotUnitary { index, residual });
                }
            }
        }
        let mut records = Vec::with_capacity(elements.len());
        for (i, (label, element)) in labels.iter().zip(elements).enumerate() {
            let psd_root = psd_sqrt(element)?;
            let unitary_factor = match unitaries {
                Some(us) => us[i].clone(),
                None => ComplexMatrix::identity(element.dim()),
            };
            records.push(KrausRecord {
                label: (*label).to_string(),
                kraus: &unitary_factor * &psd_root,
                unitary_factor,
                psd_root,
            });
        }
        Ok(Self { records })
    }

    /// `max |Σ K†K − I|`
    pub fn trace_residual(&self) -> f64 {
        let dim = self.records[0].kraus.dim();
        let sum = self
            .records
            .iter()
            .fold(ComplexMatrix::zeros(dim), |acc, r| {
                &acc + &(&r.kraus.adjoint() * &r.kraus)
            });
        sum.max_abs_diff(&ComplexMatrix::identity(dim))
    }
}

/// Kraus set for the two-state POVM, outcomes ordered `u`, `v`, inconclusive.
pub fn kraus_from_povm(
    povm: &TwoStatePovm,
    unitaries: Option<&[ComplexMatrix; 3]>,
) -> Result<KrausSet, FeedForwardError> {
    let elements = povm.elements().map(Clone::clone);
    KrausSet::from_elements(
        &["u", "v", "inconclusive"],
        &elements,
        unitaries.map(|u| u.as_slice()),
    )
}

/// Eve's ancilla after an outcome, renormalized.
#[derive(Clone, Debug)]
pub struct PostMeasurementState {
    pub outcome: OutcomeKind,
    pub eve_state: [Complex64; 2],
    pub norm_prob: f64,
}

/// `√A_x |Ψ^sent⟩ / √p_x`
pub fn post_measurement_state(
    povm: &TwoStatePovm,
    pair: &StatePair,
    sent: StateLabel,
    outcome: OutcomeKind,
) -> Result<PostMeasurementState, FeedForwardError> {
    let element = match outcome.eve_outcome(sent) {
        EveOutcome::U => &povm.a_u,
        EveOutcome::V => &povm.a_v,
        EveOutcome::Inconclusive => &povm.a_inconclusive,
    };
    let root = psd_sqrt(element)?;
    let unnormalized = root.mul_vec(pair.state(sent));
    let probability = norm(&unnormalized).powi(2);
    if probability <= tolerance::MIN_OUTCOME_PROBABILITY {
        return Err(FeedForwardError::ZeroProbabilityOutcome { probability });
    }
    let scale = 1.0 / probability.sqrt();
    Ok(PostMeasurementState {
        outcome,
        eve_state: [unnormalized[0] * scale, unnormalized[1] * scale],
        norm_prob: probability,
    })
}

/// Eve's strategy knobs.
///
/// `resend_throttle_xi` is the probability a conclusive outcome is actually
/// resent (rate matching); `flip_prob_zeta` the probability the resent label
/// is inverted (error matching); `fake_click_prob` the probability a faked
/// state makes Bob's addressed detector click.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategyParams {
    pub mu: f64,
    pub resend_throttle_xi: f64,
    pub flip_prob_zeta: f64,
    pub fake_click_prob: f64,
}

impl StrategyParams {
    /// Resend every conclusive outcome unchanged.
    pub fn full_resend(mu: f64) -> Self {
        Self {
            mu,
            resend_throttle_xi: 1.0,
            flip_prob_zeta: 0.0,
            fake_click_prob: 1.0,
        }
    }

    /// Checks ranges and the POVM constraint for overlap `w`.
    pub fn validate(&self, w: f64) -> Result<(), FeedForwardError> {
        let check = |name, value: f64, ok: bool, range| {
            if ok {
                Ok(())
            } else {
                Err(FeedForwardError::InvalidStrategy { name, value, range })
            }
        };
        let xi = self.resend_throttle_xi;
        let zeta = self.flip_prob_zeta;
        let pf = self.fake_click_prob;
        check("xi", xi, (0.0..=1.0).contains(&xi), "[0, 1]")?;
        check("zeta", zeta, (0.0..=0.5).contains(&zeta), "[0, 0.5]")?;
        check("fake_click_prob", pf, pf > 0.0 && pf <= 1.0, "(0, 1]")?;
        states::calibrate_delta(w, self.mu)?;
        Ok(())
    }
}

/// What Eve sends towards Bob after one measurement.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeedForwardAction {
    /// `None` means the slot is blocked (vacuum).
    pub resend: Option<StateLabel>,
    /// Faked-pulse amplitude relative to the level that clicks Bob's detector
    /// deterministically; 0 for vacuum.
    pub amplitude_scale: f64,
    pub flip: bool,
}

impl FeedForwardAction {
    pub const BLOCK: Self = Self {
        resend: None,
        amplitude_scale: 0.0,
        flip: false,
    };
}

/// Relative amplitude of a resent faked state.
pub const BLINDING_AMPLITUDE: f64 = 1.0;

/// Decides the resend for one outcome.
///
/// Randomness is drawn in a fixed order: one uniform for the throttle, then
/// (only if resent) one for the flip. Inconclusive outcomes draw nothing.
pub fn feed_forward<R: Rng + ?Sized>(
    outcome: EveOutcome,
    strategy: &StrategyParams,
    rng: &mut R,
) -> FeedForwardAction {
    let Some(measured) = outcome.label() else {
        return FeedForwardAction::BLOCK;
    };
    if rng.gen::<f64>() >= strategy.resend_throttle_xi {
        return FeedForwardAction::BLOCK;
    }
    let flip = rng.gen::<f64>() < strategy.flip_prob_zeta;
    FeedForwardAction {
        resend: Some(if flip { measured.other() } else { measured }),
        amplitude_scale: BLINDING_AMPLITUDE,
        flip,
    }
}

/// Product state `|channel⟩ ⊗ |ancilla⟩`.
pub fn joint_state(channel: &[Complex64], ancilla: &[Complex64]) -> Vec<Complex64> {
    linalg::kron_vec(channel, ancilla)
}

/// `|⟨a₁|a₂⟩ − ⟨b₁|b₂⟩|` for joint states before (`a`) and after (`b`) feed-forward.
///
/// For product states `⟨a₁|a₂⟩ = ⟨c₁|c₂⟩⟨e₁|e₂⟩`, so this is the overlap
/// identity a single unitary on the joint space must satisfy.
pub fn overlap_preservation_check(
    before: (&[Complex64], &[Complex64]),
    after: (&[Complex64], &[Complex64]),
) -> f64 {
    (inner(before.0, before.1) - inner(after.0, after.1)).norm()
}
