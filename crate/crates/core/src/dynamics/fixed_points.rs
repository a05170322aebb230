//! Equilibria on the `x* = y*` line and their linear stability.
//!
//! Roots solve `c x^4 e^(b-x) + c x^2 e^(b-x) - a = 0` as printed; the flux coordinate is
//! a free constant `d`. The structural unit eigenvalue is not used for classification.

use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::neuron::{self, MhdnnParams};

pub const ROOT_TOLERANCE: f64 = 1e-12;
pub const DEDUP_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stability {
    /// Stable fixed point.
    Sfp,
    /// Unstable node point.
    Unp,
    /// Unstable saddle point.
    Usp,
}

impl Stability {
    pub fn code(self) -> &'static str {
        match self {
            Stability::Sfp => "SFP",
            Stability::Unp => "UNP",
            Stability::Usp => "USP",
        }
    }
}

impl fmt::Display for Stability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPoint {
    pub x_star: f64,
    pub z_free: f64,
    pub residual: f64,
    pub lambda2: Complex64,
    pub lambda3: Complex64,
    pub stability: Stability,
}

/// Left-hand side of the fixed-point condition.
pub fn fixed_point_residual(x: f64, p: &MhdnnParams) -> f64 {
    let x2 = x * x;
    p.c * (x2 * x2 + x2) * (p.b - x).exp() - p.a
}

/// Roots of the fixed-point condition in `[lo, hi]` by bracketing over `n_seeds`
/// subintervals and bisection. Touching roots are found by minimizing `|f|` inside
/// intervals without a sign change.
pub fn fixed_point_roots(p: &MhdnnParams, x_range: (f64, f64), n_seeds: usize) -> Result<Vec<f64>> {
    let (lo, hi) = x_range;
    if !lo.is_finite() || !hi.is_finite() || lo >= hi {
        return Err(Error::InvalidArgument(format!("bad range [{lo}, {hi}]")));
    }
    if n_seeds < 2 {
        return Err(Error::InvalidArgument("n_seeds must be at least 2".into()));
    }
    let f = |x: f64| fixed_point_residual(x, p);
    let width = (hi - lo) / n_seeds as f64;
    let grid: Vec<f64> = (0..=n_seeds)
        .map(|i| if i == n_seeds { hi } else { lo + i as f64 * width })
        .collect();
    let values: Vec<f64> = grid.iter().map(|&x| f(x)).collect();

    let mut roots = Vec::new();
    for i in 0..n_seeds {
        let (a, b) = (grid[i], grid[i + 1]);
        let (fa, fb) = (values[i], values[i + 1]);
        if fa == 0.0 {
            roots.push(a);
        } else if fb == 0.0 {
            // picked up as the next interval's left end
        } else if fa.signum() != fb.signum() {
            roots.push(bisect(&f, a, b, fa));
        } else if let Some(x) = touching_root(&f, a, b) {
            roots.push(x);
        }
    }
    if values[n_seeds] == 0.0 {
        roots.push(hi);
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() < DEDUP_TOLERANCE);
    Ok(roots)
}

fn bisect(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, mut fa: f64) -> f64 {
    loop {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            return if fa.abs() <= f(b).abs() { a } else { b };
        }
        let fm = f(mid);
        if fm.abs() < ROOT_TOLERANCE * 1e-3 || fm == 0.0 {
            return mid;
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
}

fn touching_root(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> Option<f64> {
    // Golden-section search on |f|; only accepted when it actually reaches zero.
    let g = |x: f64| f(x).abs();
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    for _ in 0..100 {
        if g(c) < g(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - inv_phi * (b - a);
        d = a + inv_phi * (b - a);
    }
    let x = 0.5 * (a + b);
    (g(x) < ROOT_TOLERANCE).then_some(x)
}

/// Non-trivial eigenvalues of the Jacobian at `(x*, x*, d)` and the stability class.
pub fn eigenvalues_at(x_star: f64, d: f64, p: &MhdnnParams) -> (Complex64, Complex64, Stability) {
    let mt = p.m * d.tanh();
    let j11 = neuron::map1_derivative(x_star, p.a) - mt;
    let j22 = neuron::map2_derivative(x_star, p.b, p.c) + mt;
    let trace = j11 + j22;
    let det = j11 * j22 + mt * mt;
    let disc = Complex64::new(trace * trace - 4.0 * det, 0.0).sqrt();
    let lambda2 = (Complex64::new(trace, 0.0) - disc) / 2.0;
    let lambda3 = (Complex64::new(trace, 0.0) + disc) / 2.0;
    let outside = [lambda2, lambda3].iter().filter(|l| l.norm() > 1.0).count();
    let stability = match outside {
        0 => Stability::Sfp,
        1 => Stability::Usp,
        _ => Stability::Unp,
    };
    (lambda2, lambda3, stability)
}

/// Roots in `x_range` with eigenvalues evaluated at flux constant `d`.
pub fn fixed_points(
    p: &MhdnnParams,
    x_range: (f64, f64),
    n_seeds: usize,
    d: f64,
) -> Result<Vec<FixedPoint>> {
    Ok(fixed_point_roots(p, x_range, n_seeds)?
        .into_iter()
        .map(|x| {
            let (lambda2, lambda3, stability) = eigenvalues_at(x, d, p);
            FixedPoint {
                x_star: x,
                z_free: d,
                residual: fixed_point_residual(x, p).abs(),
                lambda2,
                lambda3,
                stability,
            }
        })
        .collect())
}
