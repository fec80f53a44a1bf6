//! Parameter sweeps of the aggregate success probabilities.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::homodyne::{HomodyneError, HomodyneModel};
use crate::protocol::{success_probabilities, SuccessProbabilities};

pub const SWEEP_HEADER: [&str; 9] = ["axis_value", "p1suc", "p2suc", "P1", "P2", "P31", "P32", "P33", "warning"];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SweepError {
    #[error("a sweep needs at least two points (got {0})")]
    TooFewPoints(usize),
    #[error("unknown sweep axis {0:?}; expected D, z or theta")]
    UnknownAxis(String),
    #[error(transparent)]
    Model(#[from] HomodyneError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepAxis {
    Dissipation,
    Amplitude,
    Phase,
}

impl FromStr for SweepAxis {
    type Err = SweepError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "d" | "dissipation" => Ok(SweepAxis::Dissipation),
            "z" | "amplitude" => Ok(SweepAxis::Amplitude),
            "theta" | "phase" => Ok(SweepAxis::Phase),
            _ => Err(SweepError::UnknownAxis(s.to_string())),
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepAxis::Dissipation => "D",
            SweepAxis::Amplitude => "z",
            SweepAxis::Phase => "theta",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub probabilities: SuccessProbabilities,
}

impl SweepRow {
    pub fn fields(&self) -> Vec<String> {
        let p = &self.probabilities;
        let c = &p.components;
        let mut out: Vec<String> = [self.value, p.p1suc, p.p2suc, c.p1, c.p2, c.p31, c.p32, c.p33]
            .iter()
            .map(|&x| format_sig(x, 12))
            .collect();
        out.push(p.warning.to_string());
        out
    }
}

/// `x` with `digits` significant digits, trailing zeros trimmed.
pub fn format_sig(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let s = format!("{:.*e}", digits.saturating_sub(1), x);
    let value: f64 = s.parse().expect("formatted float parses");
    format!("{value}")
}

/// `steps` evenly spaced points from `from` to `to` along `axis`, the other
/// parameters taken from `base`.
pub fn sweep(
    base: &HomodyneModel,
    axis: SweepAxis,
    from: f64,
    to: f64,
    steps: usize,
) -> Result<Vec<SweepRow>, SweepError> {
    if steps < 2 {
        return Err(SweepError::TooFewPoints(steps));
    }
    (0..steps)
        .map(|i| {
            let value = from + (to - from) * i as f64 / (steps - 1) as f64;
            let model = match axis {
                SweepAxis::Dissipation => base.with_dissipation(value)?,
                SweepAxis::Amplitude => HomodyneModel::new(value, base.theta(), base.dissipation())?,
                SweepAxis::Phase => HomodyneModel::new(base.z(), value, base.dissipation())?,
            };
            Ok(SweepRow { value, probabilities: success_probabilities(&model) })
        })
        .collect()
}
