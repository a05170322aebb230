//! Named parameter sets with their published reference values.

use crate::cipher::CipherKey;
use crate::dynamics::RegimeLabel;
use crate::error::{Error, Result};
use crate::neuron::{MhdnnParams, MhdnnState};

/// A firing-pattern row: `(z0, m, c)` over `a = -3.4, b = 3, h = 1.3`, `x0 = y0 = 0.1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiringPreset {
    pub name: &'static str,
    pub pattern: &'static str,
    pub z0: f64,
    pub m: f64,
    pub c: f64,
    pub lyapunov: [f64; 3],
    pub regime: RegimeLabel,
}

impl FiringPreset {
    pub fn params(&self) -> MhdnnParams {
        MhdnnParams::new(-3.4, 3.0, self.c, 1.3, self.m)
    }

    pub fn initial_state(&self) -> MhdnnState {
        MhdnnState::new(0.1, 0.1, self.z0)
    }
}

const fn row(
    name: &'static str,
    pattern: &'static str,
    (z0, m, c): (f64, f64, f64),
    lyapunov: [f64; 3],
    regime: RegimeLabel,
) -> FiringPreset {
    FiringPreset { name, pattern, z0, m, c, lyapunov, regime }
}

pub const FIRING: [FiringPreset; 8] = [
    row("table2-row1", "Hyperchaotic bursting", (1.0, -0.3, 0.3), [0.3255, 0.3255, 0.0], RegimeLabel::Hyperchaotic),
    row(
        "table2-row2",
        "Post-spike hyperchaotic oscillation",
        (1.0, -0.3, 0.2),
        [0.3239, 0.3239, 0.0],
        RegimeLabel::Hyperchaotic,
    ),
    row("table2-row3", "Transient chaotic bursting", (0.1, -0.2, 0.2), [0.9312, 0.0, -0.2664], RegimeLabel::Chaotic),
    row(
        "table2-row4",
        "Transient quasi-period bursting",
        (0.1, -0.2, 1.0),
        [0.0, -0.3154, -1.1226],
        RegimeLabel::QuasiPeriodic,
    ),
    row("table2-row5", "Quasi-period spiking", (0.3, -0.15, 1.0), [0.0, -0.1197, -1.6945], RegimeLabel::QuasiPeriodic),
    row("table2-row6", "Chaotic spiking", (0.1, -0.25, 0.8), [0.7007, 0.0, -1.3964], RegimeLabel::Chaotic),
    row("table2-row7", "Chaotic bursting", (0.1, 0.16, 0.2), [1.2523, 0.0, -1.8683], RegimeLabel::Chaotic),
    row("table2-row8", "Period spiking", (0.3, -0.1, -0.1), [-0.0457, -0.1507, -6.4387], RegimeLabel::Periodic),
];

pub fn firing(name: &str) -> Result<&'static FiringPreset> {
    FIRING
        .iter()
        .find(|p| p.name == name)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown preset `{name}`")))
}

/// Two-neuron synchronization cases; `m` is supplied per run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyncCase {
    pub name: &'static str,
    pub a: f64,
    pub h: f64,
    pub b: f64,
    pub c: f64,
    /// Published `(m, r)` pairs.
    pub reference: [(f64, f64); 4],
}

impl SyncCase {
    pub fn params(&self, m: f64) -> MhdnnParams {
        MhdnnParams::new(self.a, self.b, self.c, self.h, m)
    }
}

pub const SYNC_INITIAL: MhdnnState = MhdnnState { x: 0.1, y: 0.1, z: 0.1 };
pub const SYNC_TRANSIENT: usize = 1000;
pub const SYNC_SAMPLES: usize = 10_000;

pub const SYNC_CASES: [SyncCase; 2] = [
    SyncCase {
        name: "case1",
        a: -3.4,
        h: 1.3,
        b: 3.0,
        c: 0.3,
        reference: [(0.2, 0.14214), (0.1, -0.06170), (-0.3, 0.74059), (-0.4, 0.99704)],
    },
    SyncCase {
        name: "case2",
        a: 2.0,
        h: -0.2,
        b: 2.0,
        c: -0.3,
        reference: [(0.0, 0.06252), (0.1, 0.77166), (0.2, 0.93236), (0.5, 0.98921)],
    },
];

pub fn sync_case(name: &str) -> Result<&'static SyncCase> {
    SYNC_CASES
        .iter()
        .find(|c| c.name == name)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown case `{name}`")))
}

/// Bifurcation over `a` with `h = 1.3, b = 1.5, c = -1.5, m = 0.2`.
pub fn scan_a_params(a: f64) -> MhdnnParams {
    MhdnnParams::new(a, 1.5, -1.5, 1.3, 0.2)
}

/// Bifurcation over `m` with `(a, h, b, c) = (-3.4, 2, 1.4, -1.5)`.
pub fn scan_m_params(m: f64) -> MhdnnParams {
    MhdnnParams::new(-3.4, 1.4, -1.5, 2.0, m)
}

pub const DEFAULT_INITIAL: MhdnnState = MhdnnState { x: 0.1, y: 0.1, z: 0.1 };

/// Generator parameters `(a, h, b, m, c) = (-3.4, 1.3, 1.5, 0.2, 4.28)`.
pub fn prng_params() -> MhdnnParams {
    MhdnnParams::new(-3.4, 1.5, 4.28, 1.3, 0.2)
}

/// Used only if the printed generator parameters diverge.
pub fn prng_fallback_params() -> MhdnnParams {
    MhdnnParams::new(-3.4, 1.5, -1.5, 1.3, 0.2)
}

/// `(x0, y0, z0, a, b, c, h, m) = (0.1, 0.1, 0.1, -3.4, -1.5, -1.5, 3, 0.5)`.
pub fn reference_key() -> CipherKey {
    CipherKey { x0: 0.1, y0: 0.1, z0: 0.1, a: -3.4, b: -1.5, c: -1.5, h: 3.0, m: 0.5 }
}
