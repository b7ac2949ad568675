//! Two-state discrimination: the μ/δ-parameterized three-outcome POVM.
//!
//! Eve's post-interaction ancillas `|Ψ^u⟩`, `|Ψ^v⟩` with real overlap `w`
//! are embedded as `(1, 0)` and `(w, √(1−w²))`. The conclusive elements are
//! built from the unnormalized vectors
//!
//! ```text
//! φ_u = Ψ^u − μ Ψ^v        φ_v = μ Ψ^u − Ψ^v
//! A_u = |φ_u⟩⟨φ_u| / δ     A_v = |φ_v⟩⟨φ_v| / δ     A_? = I − A_u − A_v
//! ```
//!
//! and `δ = (1−w)(1+μ)²` pins the largest eigenvalue of `A_u + A_v` to one,
//! which is the smallest `δ` keeping `A_?` positive. That eigenvalue is the
//! top one only while `2μ/(1+μ²) ≥ w`, so μ is restricted to
//! `[μ_min_error(w), 1]`. The endpoints are the minimum-error (no inconclusive
//! outcome) measurement and, at `μ = w`, unambiguous discrimination.
//!
//! Outcome probabilities are available in closed form and through the Born
//! rule on the explicit matrices; the two routes are kept independent so one
//! can check the other.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{hermitian_eig, ComplexMatrix, LinalgError};
use crate::tolerance;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PovmError {
    #[error("{name} = {value} is outside {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("positivity constraint violated: 2mu/(1+mu^2) = {lhs} < w = {w}")]
    ConstraintViolated { lhs: f64, w: f64 },
    #[error("POVM elements have mismatched dimensions ({expected} vs {actual})")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("POVM has no elements")]
    Empty,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Which of Alice's two states (equivalently, which of Eve's ancillas).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateLabel {
    U,
    V,
}

impl StateLabel {
    pub fn other(self) -> Self {
        match self {
            StateLabel::U => StateLabel::V,
            StateLabel::V => StateLabel::U,
        }
    }

    /// Key bit carried by the state: `u → 0`, `v → 1`.
    pub fn bit(self) -> u8 {
        match self {
            StateLabel::U => 0,
            StateLabel::V => 1,
        }
    }

    pub fn from_bit(bit: u8) -> Self {
        if bit == 0 {
            StateLabel::U
        } else {
            StateLabel::V
        }
    }
}

/// Two unit vectors in a fixed real embedding.
#[derive(Clone, Debug, PartialEq)]
pub struct StatePair {
    pub overlap_w: f64,
    pub psi_u: [Complex64; 2],
    pub psi_v: [Complex64; 2],
}

impl StatePair {
    pub fn state(&self, label: StateLabel) -> &[Complex64; 2] {
        match label {
            StateLabel::U => &self.psi_u,
            StateLabel::V => &self.psi_v,
        }
    }
}

/// Parameters of a calibrated POVM.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PovmParams {
    pub mu: f64,
    pub delta: f64,
    pub w: f64,
}

#[derive(Clone, Debug)]
pub struct TwoStatePovm {
    pub a_u: ComplexMatrix,
    pub a_v: ComplexMatrix,
    pub a_inconclusive: ComplexMatrix,
    pub params: PovmParams,
}

impl TwoStatePovm {
    /// Element for a conclusive result naming `label`.
    pub fn conclusive(&self, label: StateLabel) -> &ComplexMatrix {
        match label {
            StateLabel::U => &self.a_u,
            StateLabel::V => &self.a_v,
        }
    }

    /// Elements in the order `u`, `v`, inconclusive.
    pub fn elements(&self) -> [&ComplexMatrix; 3] {
        [&self.a_u, &self.a_v, &self.a_inconclusive]
    }
}

/// Probabilities conditioned on the state that was sent.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeProbs {
    pub p_correct: f64,
    pub p_error: f64,
    pub p_inconclusive: f64,
}

impl OutcomeProbs {
    pub fn conclusive(&self) -> f64 {
        self.p_correct + self.p_error
    }

    /// Error fraction among conclusive outcomes; zero when nothing is conclusive.
    pub fn conditional_error(&self) -> f64 {
        let c = self.conclusive();
        if c > 0.0 {
            self.p_error / c
        } else {
            0.0
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (self.p_correct - other.p_correct)
            .abs()
            .max((self.p_error - other.p_error).abs())
            .max((self.p_inconclusive - other.p_inconclusive).abs())
    }
}

/// Named points of the μ family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpecialMu {
    /// Unambiguous discrimination, `μ = w`.
    Usd,
    /// Minimum-error (Breidbart) measurement, no inconclusive outcome.
    MinError,
}

fn check_w(w: f64) -> Result<(), PovmError> {
    if !(0.0..1.0).contains(&w) {
        return Err(PovmError::OutOfRange {
            name: "w",
            value: w,
            range: "[0, 1)",
        });
    }
    Ok(())
}

fn check_mu(w: f64, mu: f64) -> Result<(), PovmError> {
    check_w(w)?;
    if !(0.0..=1.0).contains(&mu) {
        return Err(PovmError::OutOfRange {
            name: "mu",
            value: mu,
            range: "[0, 1]",
        });
    }
    let lhs = positivity_lhs(mu);
    if lhs < w - tolerance::CONSTRAINT {
        return Err(PovmError::ConstraintViolated { lhs, w });
    }
    Ok(())
}

/// `2μ/(1+μ²)`, which must dominate `w`.
pub fn positivity_lhs(mu: f64) -> f64 {
    2.0 * mu / (1.0 + mu * mu)
}

pub fn embed_states(w: f64) -> Result<StatePair, PovmError> {
    check_w(w)?;
    Ok(StatePair {
        overlap_w: w,
        psi_u: [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
        psi_v: [
            Complex64::new(w, 0.0),
            Complex64::new((1.0 - w * w).sqrt(), 0.0),
        ],
    })
}

/// `(φ_u, φ_v)` for the given regime parameter.
pub fn phi_vectors(pair: &StatePair, mu: f64) -> ([Complex64; 2], [Complex64; 2]) {
    let (u, v) = (&pair.psi_u, &pair.psi_v);
    let phi_u = [u[0] - v[0] * mu, u[1] - v[1] * mu];
    let phi_v = [u[0] * mu - v[0], u[1] * mu - v[1]];
    (phi_u, phi_v)
}

/// `δ = (1−w)(1+μ)²`, the normalization giving `λ_max(A_u + A_v) = 1`.
pub fn calibrate_delta(w: f64, mu: f64) -> Result<f64, PovmError> {
    check_mu(w, mu)?;
    Ok((1.0 - w) * (1.0 + mu).powi(2))
}

/// Assembles `[A_u, A_v, A_?]` for an arbitrary `δ`, with no constraint checks.
pub fn povm_elements(pair: &StatePair, mu: f64, delta: f64) -> [ComplexMatrix; 3] {
    let (phi_u, phi_v) = phi_vectors(pair, mu);
    let a_u = ComplexMatrix::outer(&phi_u, &phi_u).scale(1.0 / delta);
    let a_v = ComplexMatrix::outer(&phi_v, &phi_v).scale(1.0 / delta);
    let a_q = &(&ComplexMatrix::identity(2) - &a_u) - &a_v;
    [a_u, a_v, a_q]
}

pub fn build_povm(w: f64, mu: f64) -> Result<TwoStatePovm, PovmError> {
    let delta = calibrate_delta(w, mu)?;
    let pair = embed_states(w)?;
    let [a_u, a_v, a_inconclusive] = povm_elements(&pair, mu, delta);
    Ok(TwoStatePovm {
        a_u,
        a_v,
        a_inconclusive,
        params: PovmParams { mu, delta, w },
    })
}

/// Closed-form outcome probabilities.
///
/// The inconclusive probability is taken as the complement of the two
/// conclusive ones; [`inconclusive_closed_form`] gives the same value
/// directly.
pub fn outcome_probs_closed_form(w: f64, mu: f64) -> Result<OutcomeProbs, PovmError> {
    let delta = calibrate_delta(w, mu)?;
    let p_correct = (1.0 - mu * w).powi(2) / delta;
    let p_error = (w - mu).powi(2) / delta;
    Ok(OutcomeProbs {
        p_correct,
        p_error,
        p_inconclusive: (1.0 - p_correct - p_error).max(0.0),
    })
}

/// `(1+w)(1+μ²)(2μ/(1+μ²) − w) / ((1−w)(1+μ)²)`
pub fn inconclusive_closed_form(w: f64, mu: f64) -> Result<f64, PovmError> {
    let delta = calibrate_delta(w, mu)?;
    Ok((1.0 + w) * (1.0 + mu * mu) * (positivity_lhs(mu) - w) / delta)
}

/// Born-rule probabilities `⟨Ψ|A|Ψ⟩` on the explicit POVM matrices.
pub fn outcome_probs_born(povm: &TwoStatePovm, pair: &StatePair, sent: StateLabel) -> OutcomeProbs {
    let psi = pair.state(sent);
    OutcomeProbs {
        p_correct: povm.conclusive(sent).expectation(psi),
        p_error: povm.conclusive(sent.other()).expectation(psi),
        p_inconclusive: povm.a_inconclusive.expectation(psi),
    }
}

pub fn special_mu(w: f64, kind: SpecialMu) -> Result<f64, PovmError> {
    check_w(w)?;
    Ok(match kind {
        SpecialMu::Usd => w,
        // (1 − √(1−w²))/w, rationalized so w → 0 is well behaved.
        SpecialMu::MinError => w / (1.0 + (1.0 - w * w).sqrt()),
    })
}

/// Completeness and positivity diagnostics for an arbitrary POVM.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PovmValidation {
    /// `max |Σ A_x − I|`
    pub completeness_residual: f64,
    /// Smallest eigenvalue of (the Hermitian part of) each element.
    pub min_eigenvalues: Vec<f64>,
    /// Largest `max |A_x − A_x†|` over elements.
    pub hermitian_residual: f64,
    pub passed: bool,
}

pub fn validate_povm(elements: &[ComplexMatrix]) -> Result<PovmValidation, PovmError> {
    let first = elements.first().ok_or(PovmError::Empty)?;
    let dim = first.dim();
    let mut sum = ComplexMatrix::zeros(dim);
    let mut min_eigenvalues = Vec::with_capacity(elements.len());
    let mut hermitian_residual = 0.0_f64;
    for el in elements {
        if el.dim() != dim {
            return Err(PovmError::DimensionMismatch {
                expected: dim,
                actual: el.dim(),
            });
        }
        sum = &sum + el;
        hermitian_residual = hermitian_residual.max(el.hermitian_residual());
        let hermitian_part = (el + &el.adjoint()).scale(0.5);
        let eig = hermitian_eig(&hermitian_part)?;
        min_eigenvalues.push(*eig.eigenvalues.last().expect("dim >= 1"));
    }
    let completeness_residual = sum.max_abs_diff(&ComplexMatrix::identity(dim));
    let tol = tolerance::POVM;
    let passed = completeness_residual <= tol
        && hermitian_residual <= tol
        && min_eigenvalues.iter().all(|&l| l >= -tol);
    Ok(PovmValidation {
        completeness_residual,
        min_eigenvalues,
        hermitian_residual,
        passed,
    })
}
