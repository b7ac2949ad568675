//! Machine-readable report records and the sweep CSV.

use std::collections::BTreeMap;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attack::SweepRecord;
use crate::linalg::hermitian_eig;
use crate::states::{
    build_povm, embed_states, outcome_probs_born, outcome_probs_closed_form, positivity_lhs,
    PovmError, StateLabel,
};

pub const SCHEMA_VERSION: u32 = 1;

pub const SWEEP_HEADER: &str = "mu,p_correct,p_error,p_inconclusive,ge_per_pulse,feasible,zeta";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReportError {
    #[error("field {0} is not finite")]
    NonFinite(String),
    #[error("field {0} has a type that cannot be stored in a flat record")]
    Unsupported(String),
    #[error("invalid report JSON: {0}")]
    Parse(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ReportValue {
    Bool(bool),
    Int(u64),
    Float(f64),
    Text(String),
}

/// Flat key/value record. Keys are sorted, so serialization is deterministic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRecord {
    pub schema_version: u32,
    pub kind: String,
    pub fields: BTreeMap<String, ReportValue>,
}

impl ReportRecord {
    pub fn new(kind: &str) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            kind: kind.to_owned(),
            fields: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, key: &str, value: ReportValue) -> Result<(), ReportError> {
        if let ReportValue::Float(x) = value {
            if !x.is_finite() {
                return Err(ReportError::NonFinite(key.to_owned()));
            }
        }
        self.fields.insert(key.to_owned(), value);
        Ok(())
    }

    pub fn float(&mut self, key: &str, x: f64) -> Result<(), ReportError> {
        self.insert(key, ReportValue::Float(x))
    }

    pub fn get_float(&self, key: &str) -> Option<f64> {
        match self.fields.get(key)? {
            ReportValue::Float(x) => Some(*x),
            ReportValue::Int(n) => Some(*n as f64),
            _ => None,
        }
    }

    /// Adds every scalar field of a serializable struct, keys prefixed with
    /// `prefix` when non-empty. `None` fields are skipped.
    pub fn extend_from<T: Serialize>(
        &mut self,
        prefix: &str,
        value: &T,
    ) -> Result<(), ReportError> {
        let json =
            serde_json::to_value(value).map_err(|e| ReportError::Unsupported(e.to_string()))?;
        let serde_json::Value::Object(map) = json else {
            return Err(ReportError::Unsupported(prefix.to_owned()));
        };
        for (k, v) in map {
            let key = if prefix.is_empty() {
                k
            } else {
                format!("{prefix}{k}")
            };
            let value = match v {
                serde_json::Value::Bool(b) => ReportValue::Bool(b),
                serde_json::Value::Number(n) => match n.as_u64() {
                    Some(u) => ReportValue::Int(u),
                    None => ReportValue::Float(
                        n.as_f64()
                            .ok_or_else(|| ReportError::Unsupported(key.clone()))?,
                    ),
                },
                serde_json::Value::String(s) => ReportValue::Text(s),
                // serde_json maps NaN and infinities to null
                serde_json::Value::Null => return Err(ReportError::NonFinite(key)),
                _ => return Err(ReportError::Unsupported(key)),
            };
            self.insert(&key, value)?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("flat record always serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, ReportError> {
        let record: Self =
            serde_json::from_str(text).map_err(|e| ReportError::Parse(e.to_string()))?;
        for (k, v) in &record.fields {
            if let ReportValue::Float(x) = v {
                if !x.is_finite() {
                    return Err(ReportError::NonFinite(k.clone()));
                }
            }
        }
        Ok(record)
    }
}

/// Closed-form and Born probabilities, `δ`, `λ_max(A_u + A_v)` and the
/// positivity constraint for one `(w, μ)`.
pub fn probe(w: f64, mu: f64) -> Result<ReportRecord, PovmError> {
    let povm = build_povm(w, mu)?;
    let pair = embed_states(w)?;
    let closed = outcome_probs_closed_form(w, mu)?;
    let born = outcome_probs_born(&povm, &pair, StateLabel::U);
    let born_v = outcome_probs_born(&povm, &pair, StateLabel::V);
    let residual = closed.max_abs_diff(&born).max(closed.max_abs_diff(&born_v));
    let lambda_max = hermitian_eig(&(&povm.a_u + &povm.a_v))?.eigenvalues[0];

    let mut r = ReportRecord::new("probe");
    let mut put = |k: &str, x: f64| {
        r.float(k, x).map_err(|_| PovmError::OutOfRange {
            name: "report field",
            value: x,
            range: "finite",
        })
    };
    put("w", w)?;
    put("eve_mu", mu)?;
    put("delta", povm.params.delta)?;
    put("lambda_max", lambda_max)?;
    put("constraint_lhs", positivity_lhs(mu))?;
    put("p_correct", closed.p_correct)?;
    put("p_error", closed.p_error)?;
    put("p_inconclusive", closed.p_inconclusive)?;
    put("born_p_correct", born.p_correct)?;
    put("born_p_error", born.p_error)?;
    put("born_p_inconclusive", born.p_inconclusive)?;
    put("born_residual", residual)?;
    put(
        "probability_sum",
        closed.p_correct + closed.p_error + closed.p_inconclusive,
    )?;
    r.fields
        .insert("constraint_satisfied".into(), ReportValue::Bool(true));
    Ok(r)
}

fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

/// One row per record, floats with 17 significant digits, LF endings.
pub fn write_sweep_csv<W: Write>(out: W, rows: &[SweepRecord]) -> io::Result<()> {
    let mut out = io::BufWriter::new(out);
    writeln!(out, "{SWEEP_HEADER}")?;
    for row in rows {
        let (pc, pe, pq) = row.probs.map_or((f64::NAN, f64::NAN, f64::NAN), |p| {
            (p.p_correct, p.p_error, p.p_inconclusive)
        });
        let zeta = row.zeta.map_or_else(|| "infeasible".to_owned(), sci);
        writeln!(
            out,
            "{},{},{},{},{},{},{zeta}",
            sci(row.mu),
            sci(pc),
            sci(pe),
            sci(pq),
            sci(row.ge_per_pulse),
            row.feasible
        )?;
    }
    out.flush()
}
