//! Per-pulse click log, CSV.
//!
//! ```text
//! pulse_index,alice_bit,eve_outcome,action,bob_click,bob_bit,detector_a_click,detector_b_click
//! 0,1,v,resend_v,1,1,0,1
//! 1,0,inconclusive,block,0,-,0,0
//! ```
//!
//! `eve_outcome` is `u`, `v`, `inconclusive` or `none` (honest traffic);
//! `action` is `resend_u`, `resend_v`, `block` or `pass`; `bob_bit` is `-`
//! when Bob saw no click. Lines end in LF.

use std::io::{self, BufRead, Write};

use thiserror::Error;

use crate::attack::{PulseAction, PulseRecord};
use crate::feed_forward::EveOutcome;
use crate::states::StateLabel;

pub const HEADER: &str =
    "pulse_index,alice_bit,eve_outcome,action,bob_click,bob_bit,detector_a_click,detector_b_click";

#[derive(Debug, Error)]
pub enum ClickLogError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn flag(b: bool) -> char {
    if b {
        '1'
    } else {
        '0'
    }
}

pub fn write_log<W: Write>(out: W, log: &[PulseRecord]) -> io::Result<()> {
    let mut out = io::BufWriter::new(out);
    writeln!(out, "{HEADER}")?;
    for (i, p) in log.iter().enumerate() {
        let eve = p.eve.map_or("none", EveOutcome::as_str);
        let action = match p.action {
            PulseAction::Resend(StateLabel::U) => "resend_u",
            PulseAction::Resend(StateLabel::V) => "resend_v",
            PulseAction::Block => "block",
            PulseAction::Pass => "pass",
        };
        let bob_bit = match p.bob_bit {
            Some(0) => '0',
            Some(_) => '1',
            None => '-',
        };
        writeln!(
            out,
            "{i},{},{eve},{action},{},{bob_bit},{},{}",
            p.alice.bit(),
            flag(p.bob_click),
            flag(p.detector_a),
            flag(p.detector_b)
        )?;
    }
    out.flush()
}

pub fn read_log<R: BufRead>(input: R) -> Result<Vec<PulseRecord>, ClickLogError> {
    let mut lines = input.lines();
    let malformed = |line: usize, message: String| ClickLogError::Malformed { line, message };
    let header = lines.next().transpose()?;
    if header.as_deref().map(|h| h.trim_end_matches('\r')) != Some(HEADER) {
        return Err(malformed(1, "missing or unexpected header".into()));
    }
    let mut log = Vec::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line?;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            return Err(malformed(
                line_no,
                format!("expected 8 fields, got {}", fields.len()),
            ));
        }
        let bit = |s: &str, name: &str| match s {
            "0" => Ok(false),
            "1" => Ok(true),
            _ => Err(malformed(
                line_no,
                format!("{name}: expected 0 or 1, got {s:?}"),
            )),
        };
        let index: usize = fields[0]
            .parse()
            .map_err(|_| malformed(line_no, format!("bad pulse_index {:?}", fields[0])))?;
        if index != log.len() {
            return Err(malformed(
                line_no,
                format!("pulse_index {index}, expected {}", log.len()),
            ));
        }
        let alice = if bit(fields[1], "alice_bit")? {
            StateLabel::V
        } else {
            StateLabel::U
        };
        let eve = match fields[2] {
            "u" => Some(EveOutcome::U),
            "v" => Some(EveOutcome::V),
            "inconclusive" => Some(EveOutcome::Inconclusive),
            "none" => None,
            s => return Err(malformed(line_no, format!("bad eve_outcome {s:?}"))),
        };
        let action = match fields[3] {
            "resend_u" => PulseAction::Resend(StateLabel::U),
            "resend_v" => PulseAction::Resend(StateLabel::V),
            "block" => PulseAction::Block,
            "pass" => PulseAction::Pass,
            s => return Err(malformed(line_no, format!("bad action {s:?}"))),
        };
        let bob_click = bit(fields[4], "bob_click")?;
        let bob_bit = match fields[5] {
            "-" => None,
            s => Some(u8::from(bit(s, "bob_bit")?)),
        };
        let detector_a = bit(fields[6], "detector_a_click")?;
        let detector_b = bit(fields[7], "detector_b_click")?;
        if bob_click != (detector_a || detector_b) || bob_click != bob_bit.is_some() {
            return Err(malformed(line_no, "click fields are inconsistent".into()));
        }
        log.push(PulseRecord {
            alice,
            eve,
            action,
            bob_click,
            bob_bit,
            detector_a,
            detector_b,
        });
    }
    Ok(log)
}
