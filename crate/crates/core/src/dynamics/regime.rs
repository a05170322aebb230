use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

use super::lyapunov::LyapunovSpectrum;

pub const DEFAULT_EPS: f64 = 0.005;

/// Dynamical regime read off a Lyapunov spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegimeLabel {
    Hyperchaotic,
    Chaotic,
    QuasiPeriodic,
    Periodic,
    Divergent,
}

impl RegimeLabel {
    pub const ALL: [RegimeLabel; 5] = [
        RegimeLabel::Hyperchaotic,
        RegimeLabel::Chaotic,
        RegimeLabel::QuasiPeriodic,
        RegimeLabel::Periodic,
        RegimeLabel::Divergent,
    ];

    /// Short code used in CSV output.
    pub fn code(self) -> &'static str {
        match self {
            RegimeLabel::Hyperchaotic => "HCH",
            RegimeLabel::Chaotic => "CH",
            RegimeLabel::QuasiPeriodic => "QP",
            RegimeLabel::Periodic => "P",
            RegimeLabel::Divergent => "DIV",
        }
    }
}

impl fmt::Display for RegimeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for RegimeLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RegimeLabel::ALL
            .into_iter()
            .find(|l| l.code() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown regime code `{s}`")))
    }
}

/// Classifies a spectrum. Non-finite spectra map to [`RegimeLabel::Divergent`].
pub fn classify_regime(ls: &LyapunovSpectrum, eps: f64) -> RegimeLabel {
    if !ls.is_finite() {
        return RegimeLabel::Divergent;
    }
    let (l1, l2) = (ls.lambda1, ls.lambda2);
    if l1 > eps {
        if l2 > eps {
            RegimeLabel::Hyperchaotic
        } else {
            RegimeLabel::Chaotic
        }
    } else if l1 >= -eps {
        RegimeLabel::QuasiPeriodic
    } else {
        RegimeLabel::Periodic
    }
}

/// Classifies the outcome of an estimate, mapping any error to `Divergent`.
pub fn classify_outcome(outcome: &Result<LyapunovSpectrum>, eps: f64) -> RegimeLabel {
    match outcome {
        Ok(ls) => classify_regime(ls, eps),
        Err(_) => RegimeLabel::Divergent,
    }
}
