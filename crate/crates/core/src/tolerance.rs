//! Default numeric tolerances.
//!
//! Every threshold used by the library lives here so callers can audit or
//! override them in one place.

/// Symmetry tolerance `max |m - m†|` accepted by the Hermitian eigensolver.
pub const HERMITIAN: f64 = 1e-10;

/// Eigenvalues in `[-PSD_CLAMP, 0)` are treated as rounding noise and clamped to zero.
pub const PSD_CLAMP: f64 = 1e-10;

/// Completeness and positivity tolerance for POVM validation.
pub const POVM: f64 = 1e-10;

/// Unitarity tolerance for caller-supplied feed-forward unitaries.
pub const UNITARY: f64 = 1e-10;

/// Slack on the positivity constraint `2μ/(1+μ²) ≥ w`.
pub const CONSTRAINT: f64 = 1e-12;

/// Smallest Born probability for which a post-measurement state is defined.
pub const MIN_OUTCOME_PROBABILITY: f64 = 1e-15;

/// Jacobi sweeps allowed before reporting non-convergence.
pub const MAX_JACOBI_SWEEPS: usize = 64;

/// Collected tolerances, for callers that want to pass them around as a value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub hermitian: f64,
    pub psd_clamp: f64,
    pub povm: f64,
    pub unitary: f64,
    pub constraint: f64,
    pub min_outcome_probability: f64,
    pub max_jacobi_sweeps: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hermitian: HERMITIAN,
            psd_clamp: PSD_CLAMP,
            povm: POVM,
            unitary: UNITARY,
            constraint: CONSTRAINT,
            min_outcome_probability: MIN_OUTCOME_PROBABILITY,
            max_jacobi_sweeps: MAX_JACOBI_SWEEPS,
        }
    }
}
