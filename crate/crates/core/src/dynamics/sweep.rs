//! One- and two-parameter sweeps. Cells are independent and evaluated in parallel;
//! output order follows the grid regardless of scheduling.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::neuron::{self, MhdnnParams, MhdnnState, Param};
use crate::report::sig9;

use super::lyapunov::{lyapunov_spectrum, LyapunovSpectrum};
use super::regime::{classify_outcome, RegimeLabel};

pub const SCAN_TRANSIENT: usize = 5000;
pub const SCAN_SAMPLES: usize = 300;
pub const SCAN_LE_ITER: usize = 20_000;
pub const GRID_TRANSIENT: usize = 2000;
pub const GRID_LE_ITER: usize = 10_000;

/// A sweepable quantity: a map parameter or an initial-condition component.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Param(Param),
    X0,
    Y0,
    Z0,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::Param(p) => p.name(),
            Axis::X0 => "x0",
            Axis::Y0 => "y0",
            Axis::Z0 => "z0",
        }
    }

    /// Writes `value` into the parameter set or initial state.
    pub fn apply(self, value: f64, p: &mut MhdnnParams, s0: &mut MhdnnState) {
        match self {
            Axis::Param(q) => p.set(q, value),
            Axis::X0 => s0.x = value,
            Axis::Y0 => s0.y = value,
            Axis::Z0 => s0.z = value,
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x0" => Ok(Axis::X0),
            "y0" => Ok(Axis::Y0),
            "z0" => Ok(Axis::Z0),
            other => other.parse::<Param>().map(Axis::Param),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisSpec {
    pub axis: Axis,
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl AxisSpec {
    pub fn new(axis: Axis, lo: f64, hi: f64, steps: usize) -> Result<Self> {
        let spec = Self { axis, lo, hi, steps };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        if !self.lo.is_finite() || !self.hi.is_finite() {
            return Err(Error::NonFinite);
        }
        match self.steps {
            0 => Err(Error::InvalidArgument(format!("axis {}: steps must be positive", self.axis))),
            1 if self.lo != self.hi => Err(Error::InvalidArgument(format!(
                "axis {}: a single step needs lo == hi",
                self.axis
            ))),
            1 => Ok(()),
            _ if self.lo >= self.hi => {
                Err(Error::InvalidArgument(format!("axis {}: need lo < hi", self.axis)))
            }
            _ => Ok(()),
        }
    }

    /// Evenly spaced values from `lo` to `hi` inclusive.
    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.lo];
        }
        let last = (self.steps - 1) as f64;
        (0..self.steps)
            .map(|i| {
                if i + 1 == self.steps {
                    self.hi
                } else {
                    self.lo + (self.hi - self.lo) * i as f64 / last
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BifurcationColumn {
    pub value: f64,
    /// Post-transient x samples; empty when the orbit diverged.
    pub samples: Vec<f64>,
    pub spectrum: Option<LyapunovSpectrum>,
    pub label: RegimeLabel,
    pub divergent_at: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BifurcationScan {
    pub axis: Axis,
    pub columns: Vec<BifurcationColumn>,
}

impl BifurcationScan {
    pub fn values(&self) -> Vec<f64> {
        self.columns.iter().map(|c| c.value).collect()
    }

    /// `<axis>,label,lambda1,lambda2,lambda3`
    pub fn spectrum_csv(&self) -> String {
        let mut out = format!("{},label,lambda1,lambda2,lambda3\n", self.axis);
        for col in &self.columns {
            out.push_str(&spectrum_row(&[col.value], col.label, col.spectrum));
        }
        out
    }

    /// `<axis>,x` with one row per retained sample.
    pub fn samples_csv(&self) -> String {
        let mut out = format!("{},x\n", self.axis);
        for col in &self.columns {
            for &x in &col.samples {
                out.push_str(&format!("{},{}\n", sig9(col.value), sig9(x)));
            }
        }
        out
    }
}

fn spectrum_row(coords: &[f64], label: RegimeLabel, sp: Option<LyapunovSpectrum>) -> String {
    let mut fields: Vec<String> = coords.iter().map(|&v| sig9(v)).collect();
    fields.push(label.code().to_string());
    match sp {
        Some(s) => fields.extend(s.to_array().iter().map(|&v| sig9(v))),
        None => fields.extend(std::iter::repeat_n("nan".to_string(), 3)),
    }
    let mut row = fields.join(",");
    row.push('\n');
    row
}

/// Sweeps one axis, restarting every column from `s0`.
pub fn bifurcation_scan(
    p_base: &MhdnnParams,
    axis: AxisSpec,
    s0: MhdnnState,
    eps: f64,
) -> Result<BifurcationScan> {
    axis.validate()?;
    let columns = axis
        .values()
        .into_par_iter()
        .map(|value| {
            let mut p = *p_base;
            let mut s = s0;
            axis.axis.apply(value, &mut p, &mut s);
            let orbit = neuron::iterate(&p, s, SCAN_TRANSIENT, SCAN_SAMPLES);
            let spectrum = lyapunov_spectrum(&p, s, SCAN_TRANSIENT, SCAN_LE_ITER);
            let divergent_at = match (&orbit, &spectrum) {
                (Err(Error::Divergent { step }), _) | (_, Err(Error::Divergent { step })) => Some(*step),
                _ => None,
            };
            let label = if divergent_at.is_some() {
                RegimeLabel::Divergent
            } else {
                classify_outcome(&spectrum, eps)
            };
            let samples = match (&orbit, divergent_at) {
                (Ok(o), None) => o.xs(),
                _ => Vec::new(),
            };
            BifurcationColumn {
                value,
                samples,
                spectrum: spectrum.ok().filter(|_| divergent_at.is_none()),
                label,
                divergent_at,
            }
        })
        .collect();
    Ok(BifurcationScan { axis: axis.axis, columns })
}

/// Regime labels and largest exponents over a two-axis grid. Row `i` follows `axis1`,
/// column `j` follows `axis2`.
#[derive(Debug, Clone, PartialEq)]
pub struct BasinGrid {
    pub axis1: AxisSpec,
    pub axis2: AxisSpec,
    pub labels: Vec<Vec<RegimeLabel>>,
    pub lambda1: Vec<Vec<f64>>,
    pub spectra: Vec<Vec<Option<LyapunovSpectrum>>>,
}

impl BasinGrid {
    pub fn to_csv(&self) -> String {
        let mut out = format!("{},{},label,lambda1,lambda2,lambda3\n", self.axis1.axis, self.axis2.axis);
        let (v1, v2) = (self.axis1.values(), self.axis2.values());
        for (i, a) in v1.iter().enumerate() {
            for (j, b) in v2.iter().enumerate() {
                out.push_str(&spectrum_row(&[*a, *b], self.labels[i][j], self.spectra[i][j]));
            }
        }
        out
    }
}

/// Evaluates one grid cell.
pub fn basin_cell(
    p_base: &MhdnnParams,
    s0_base: MhdnnState,
    cell: &[(Axis, f64)],
    eps: f64,
) -> (RegimeLabel, Option<LyapunovSpectrum>) {
    let mut p = *p_base;
    let mut s = s0_base;
    for &(axis, v) in cell {
        axis.apply(v, &mut p, &mut s);
    }
    let outcome = lyapunov_spectrum(&p, s, GRID_TRANSIENT, GRID_LE_ITER);
    let label = classify_outcome(&outcome, eps);
    (label, outcome.ok())
}

pub fn basin_grid(
    p_base: &MhdnnParams,
    s0_base: MhdnnState,
    axis1: AxisSpec,
    axis2: AxisSpec,
    eps: f64,
) -> Result<BasinGrid> {
    axis1.validate()?;
    axis2.validate()?;
    let (v1, v2) = (axis1.values(), axis2.values());
    let cells: Vec<(usize, usize)> =
        (0..v1.len()).flat_map(|i| (0..v2.len()).map(move |j| (i, j))).collect();
    let results: Vec<_> = cells
        .par_iter()
        .map(|&(i, j)| basin_cell(p_base, s0_base, &[(axis1.axis, v1[i]), (axis2.axis, v2[j])], eps))
        .collect();

    let mut labels = vec![Vec::with_capacity(v2.len()); v1.len()];
    let mut lambda1 = vec![Vec::with_capacity(v2.len()); v1.len()];
    let mut spectra = vec![Vec::with_capacity(v2.len()); v1.len()];
    for (&(i, _), (label, sp)) in cells.iter().zip(results) {
        labels[i].push(label);
        lambda1[i].push(sp.map_or(f64::NAN, |s| s.lambda1));
        spectra[i].push(sp);
    }
    Ok(BasinGrid { axis1, axis2, labels, lambda1, spectra })
}
