//! Text grammar for sequences in run configurations:
//!
//! ```text
//! harmonic:<c>         c / i
//! logharmonic:<c>      c / (i · ln(i + 1))
//! const:<c>            c
//! power:<c>:<p>        c / i^p
//! file:<path>          one decimal radius per line
//! bprime(<base>)       derived sequence of <base>
//! ```

use std::fmt;

use num_rational::Ratio;
use num_traits::{Signed, ToPrimitive};

use super::{SequenceError, TargetSequence};
use crate::fixedpoint::parse_rational;

/// A parsed sequence reference, before any horizon is known.
#[derive(Clone, Debug, PartialEq)]
pub enum SequenceSpec {
    Base(TargetSequence),
    BPrime(TargetSequence),
}

impl SequenceSpec {
    pub fn base(&self) -> &TargetSequence {
        match self {
            SequenceSpec::Base(s) | SequenceSpec::BPrime(s) => s,
        }
    }

    pub fn is_derived(&self) -> bool {
        matches!(self, SequenceSpec::BPrime(_))
    }
}

impl fmt::Display for SequenceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use super::Targets;
        match self {
            SequenceSpec::Base(s) => f.write_str(&s.label()),
            SequenceSpec::BPrime(s) => write!(f, "bprime({})", s.label()),
        }
    }
}

fn coefficient(text: &str) -> Result<Ratio<u64>, SequenceError> {
    let bad = || SequenceError::Grammar(format!("bad coefficient {text:?}"));
    let r = parse_rational(text.trim()).ok_or_else(bad)?;
    if r.is_negative() {
        return Err(bad());
    }
    let num = r.numer().to_u64().ok_or_else(bad)?;
    let den = r.denom().to_u64().ok_or_else(bad)?;
    Ok(Ratio::new(num, den))
}

pub fn parse_sequence(text: &str) -> Result<SequenceSpec, SequenceError> {
    let text = text.trim();
    if let Some(inner) = text.strip_prefix("bprime(").and_then(|s| s.strip_suffix(')')) {
        return match parse_sequence(inner)? {
            SequenceSpec::Base(b) => Ok(SequenceSpec::BPrime(b)),
            SequenceSpec::BPrime(_) => Err(SequenceError::Grammar("nested bprime".into())),
        };
    }
    let bad = || SequenceError::Grammar(format!("cannot parse {text:?}"));
    let (head, rest) = text.split_once(':').ok_or_else(bad)?;
    let seq = match head {
        "harmonic" => TargetSequence::harmonic(coefficient(rest)?),
        "const" => TargetSequence::constant(coefficient(rest)?),
        "power" => {
            let (c, p) = rest.split_once(':').ok_or_else(bad)?;
            TargetSequence::power(coefficient(c)?, p.trim().parse().map_err(|_| bad())?)
        }
        "logharmonic" => {
            let c: f64 = rest.trim().parse().map_err(|_| bad())?;
            if !(c.is_finite() && c >= 0.0) {
                return Err(bad());
            }
            TargetSequence::log_harmonic(c)
        }
        "file" => {
            let path = rest.trim();
            let body = std::fs::read_to_string(path)
                .map_err(|e| SequenceError::Io { path: path.into(), message: e.to_string() })?;
            let values = body
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(coefficient)
                .collect::<Result<Vec<_>, _>>()?;
            if values.is_empty() {
                return Err(SequenceError::Grammar(format!("{path}: no values")));
            }
            TargetSequence::explicit(values, path)
        }
        _ => return Err(bad()),
    };
    Ok(SequenceSpec::Base(seq))
}
