//! Discrete memristor, the two 1-D neuron maps and the coupled three-dimensional map.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Magnitude above which any state component is treated as escaped.
pub const DIVERGENCE_BOUND: f64 = 1e8;

/// Flux-controlled discrete memristor with memductance `tanh(phi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemristorState {
    pub phi: f64,
}

impl MemristorState {
    pub fn new(phi: f64) -> Self {
        Self { phi }
    }

    /// Applies current `i` for one step, returning the voltage and advancing the flux.
    pub fn apply(&mut self, i: f64) -> f64 {
        let (v, next) = memristor_step(self.phi, i);
        self.phi = next;
        v
    }
}

/// One forward-Euler step of the memristor: `v = tanh(phi) * i`, `phi' = phi + i`.
pub fn memristor_step(phi: f64, i: f64) -> (f64, f64) {
    (phi.tanh() * i, phi + i)
}

/// Drives the memristor with `i_n = amplitude * sin(omega * n)` for `n = 0..n` and
/// returns the `(i, v)` trace.
pub fn memristor_drive(amplitude: f64, omega: f64, phi0: f64, n: usize) -> Vec<(f64, f64)> {
    let mut mem = MemristorState::new(phi0);
    (0..n)
        .map(|k| {
            let i = amplitude * (omega * k as f64).sin();
            (i, mem.apply(i))
        })
        .collect()
}

/// Mean absolute enclosed area of the half-loops of a v-i trace.
///
/// The trace is split into maximal runs where the current keeps its sign; each run is
/// closed through its endpoints and measured with the shoelace formula.
pub fn hysteresis_lobe_area(trace: &[(f64, f64)]) -> f64 {
    let mut areas = Vec::new();
    let mut start = 0;
    for k in 1..=trace.len() {
        let boundary = k == trace.len() || (trace[k].0 >= 0.0) != (trace[start].0 >= 0.0);
        if boundary {
            let run = &trace[start..k];
            // Runs cut by the window edges are incomplete.
            if start > 0 && k < trace.len() && run.len() >= 3 {
                areas.push(shoelace(run).abs());
            }
            start = k;
        }
    }
    if areas.is_empty() {
        0.0
    } else {
        areas.iter().sum::<f64>() / areas.len() as f64
    }
}

fn shoelace(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len();
    let twice: f64 = (0..n)
        .map(|k| {
            let (x0, y0) = pts[k];
            let (x1, y1) = pts[(k + 1) % n];
            x0 * y1 - x1 * y0
        })
        .sum();
    twice / 2.0
}

/// `x' = a / (1 + x^2) + h`
pub fn map1_step(x: f64, a: f64, h: f64) -> f64 {
    a / (1.0 + x * x) + h
}

/// `x' = c x^2 e^(b - x) + k`
pub fn map2_step(x: f64, b: f64, c: f64, k: f64) -> f64 {
    c * x * x * (b - x).exp() + k
}

/// Derivative of [`map1_step`] with respect to `x`.
pub fn map1_derivative(x: f64, a: f64) -> f64 {
    let d = 1.0 + x * x;
    -2.0 * a * x / (d * d)
}

/// Derivative of [`map2_step`] with respect to `x`.
pub fn map2_derivative(x: f64, b: f64, c: f64) -> f64 {
    c * (b - x).exp() * (2.0 * x - x * x)
}

/// Parameters of the coupled map. `k` is the additive constant of the y-equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MhdnnParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub h: f64,
    /// Coupling strength between the two neurons.
    pub m: f64,
    pub k: f64,
}

impl MhdnnParams {
    pub const DEFAULT_K: f64 = 3.0;

    pub fn new(a: f64, b: f64, c: f64, h: f64, m: f64) -> Self {
        Self { a, b, c, h, m, k: Self::DEFAULT_K }
    }

    pub fn with_k(self, k: f64) -> Self {
        Self { k, ..self }
    }

    pub fn is_finite(&self) -> bool {
        [self.a, self.b, self.c, self.h, self.m, self.k].iter().all(|v| v.is_finite())
    }

    pub fn get(&self, p: Param) -> f64 {
        match p {
            Param::A => self.a,
            Param::B => self.b,
            Param::C => self.c,
            Param::H => self.h,
            Param::M => self.m,
            Param::K => self.k,
        }
    }

    pub fn set(&mut self, p: Param, value: f64) {
        match p {
            Param::A => self.a = value,
            Param::B => self.b = value,
            Param::C => self.c = value,
            Param::H => self.h = value,
            Param::M => self.m = value,
            Param::K => self.k = value,
        }
    }
}

/// Name of a scalar map parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Param {
    A,
    B,
    C,
    H,
    M,
    K,
}

impl Param {
    pub const ALL: [Param; 6] = [Param::A, Param::B, Param::C, Param::H, Param::M, Param::K];

    pub fn name(self) -> &'static str {
        match self {
            Param::A => "a",
            Param::B => "b",
            Param::C => "c",
            Param::H => "h",
            Param::M => "m",
            Param::K => "k",
        }
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Param {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Param::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown parameter `{s}`")))
    }
}

/// Phase point: two membrane potentials and the memristor flux.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MhdnnState {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl MhdnnState {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// True when a component is non-finite or beyond [`DIVERGENCE_BOUND`].
    pub fn is_divergent(&self) -> bool {
        [self.x, self.y, self.z].iter().any(|v| !v.is_finite() || v.abs() > DIVERGENCE_BOUND)
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn from_array(v: [f64; 3]) -> Self {
        Self::new(v[0], v[1], v[2])
    }
}

/// One synchronous step of the coupled map.
pub fn mhdnn_step(s: MhdnnState, p: &MhdnnParams) -> MhdnnState {
    let diff = s.y - s.x;
    let coupling = p.m * s.z.tanh() * diff;
    MhdnnState {
        x: map1_step(s.x, p.a, p.h) + coupling,
        y: p.c * s.y * s.y * (p.b - s.y).exp() + coupling + p.k,
        z: s.z + diff,
    }
}

/// Analytic Jacobian of [`mhdnn_step`], row-major `d(x', y', z') / d(x, y, z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jacobian3(pub [[f64; 3]; 3]);

impl Jacobian3 {
    pub fn rows(&self) -> &[[f64; 3]; 3] {
        &self.0
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    pub fn mul_vec(&self, v: [f64; 3]) -> [f64; 3] {
        let m = &self.0;
        [
            m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
            m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
            m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
        ]
    }
}

pub fn jacobian(s: MhdnnState, p: &MhdnnParams) -> Jacobian3 {
    let t = s.z.tanh();
    // sech^2 via tanh keeps large |z| well-behaved.
    let sech2 = 1.0 - t * t;
    let mt = p.m * t;
    let dz = p.m * sech2 * (s.y - s.x);
    Jacobian3([
        [map1_derivative(s.x, p.a) - mt, mt, dz],
        [-mt, map2_derivative(s.y, p.b, p.c) + mt, dz],
        [-1.0, 1.0, 1.0],
    ])
}

/// Central-difference estimate of the Jacobian with step `step` in each coordinate.
pub fn finite_difference_jacobian(s: MhdnnState, p: &MhdnnParams, step: f64) -> Jacobian3 {
    let mut out = [[0.0; 3]; 3];
    for col in 0..3 {
        let (mut plus, mut minus) = (s.to_array(), s.to_array());
        plus[col] += step;
        minus[col] -= step;
        let fp = mhdnn_step(MhdnnState::from_array(plus), p).to_array();
        let fm = mhdnn_step(MhdnnState::from_array(minus), p).to_array();
        for row in 0..3 {
            out[row][col] = (fp[row] - fm[row]) / (2.0 * step);
        }
    }
    Jacobian3(out)
}

/// Largest entrywise gap between the analytic and finite-difference Jacobians,
/// relative to `max(1, |entry|)`.
pub fn jacobian_error(s: MhdnnState, p: &MhdnnParams, step: f64) -> f64 {
    let (j, fd) = (jacobian(s, p), finite_difference_jacobian(s, p, step));
    let mut worst = 0.0f64;
    for r in 0..3 {
        for c in 0..3 {
            worst = worst.max((j.0[r][c] - fd.0[r][c]).abs() / j.0[r][c].abs().max(1.0));
        }
    }
    worst
}

/// A recorded stretch of trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Orbit {
    pub states: Vec<MhdnnState>,
    pub params: MhdnnParams,
    pub transient_len: usize,
    pub kept_len: usize,
}

impl Orbit {
    pub fn last(&self) -> MhdnnState {
        *self.states.last().expect("orbit holds at least one state")
    }

    pub fn xs(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.x).collect()
    }

    pub fn ys(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.y).collect()
    }

    pub fn zs(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.z).collect()
    }
}

/// Runs `n_transient` discarded steps, then records `n_keep` states.
///
/// Step indices in [`Error::Divergent`] are 1-based over the whole run, transient included.
pub fn iterate(p: &MhdnnParams, s0: MhdnnState, n_transient: usize, n_keep: usize) -> Result<Orbit> {
    if n_keep == 0 {
        return Err(Error::InvalidArgument("n_keep must be at least 1".into()));
    }
    if !s0.is_finite() || !p.is_finite() {
        return Err(Error::NonFinite);
    }
    let mut s = s0;
    for step in 1..=n_transient {
        s = mhdnn_step(s, p);
        if s.is_divergent() {
            return Err(Error::Divergent { step });
        }
    }
    let mut states = Vec::with_capacity(n_keep);
    for k in 1..=n_keep {
        s = mhdnn_step(s, p);
        if s.is_divergent() {
            return Err(Error::Divergent { step: n_transient + k });
        }
        states.push(s);
    }
    Ok(Orbit { states, params: *p, transient_len: n_transient, kept_len: n_keep })
}
