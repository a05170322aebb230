//! Tangent-space Lyapunov estimation with per-step Gram-Schmidt re-orthonormalization.

use std::fmt;

use crate::error::{Error, Result};
use crate::neuron::{self, MhdnnParams, MhdnnState, DIVERGENCE_BOUND};

/// A three-dimensional map with an analytic Jacobian.
pub trait TangentMap {
    fn advance(&self, s: [f64; 3]) -> [f64; 3];
    fn tangent(&self, s: [f64; 3]) -> [[f64; 3]; 3];
}

impl TangentMap for MhdnnParams {
    fn advance(&self, s: [f64; 3]) -> [f64; 3] {
        neuron::mhdnn_step(MhdnnState::from_array(s), self).to_array()
    }

    fn tangent(&self, s: [f64; 3]) -> [[f64; 3]; 3] {
        neuron::jacobian(MhdnnState::from_array(s), self).0
    }
}

/// Exponents sorted descending, in natural-log units per iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovSpectrum {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
}

impl LyapunovSpectrum {
    /// Sorts the three values descending.
    pub fn from_unsorted(mut v: [f64; 3]) -> Self {
        v.sort_by(|a, b| b.total_cmp(a));
        Self { lambda1: v[0], lambda2: v[1], lambda3: v[2] }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.lambda1, self.lambda2, self.lambda3]
    }

    pub fn sum(&self) -> f64 {
        self.lambda1 + self.lambda2 + self.lambda3
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

impl fmt::Display for LyapunovSpectrum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.4}, {:.4}, {:.4})", self.lambda1, self.lambda2, self.lambda3)
    }
}

/// Spectrum plus the orbit average of `ln|det J|`, which must equal the exponent sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovEstimate {
    pub spectrum: LyapunovSpectrum,
    pub mean_log_det: f64,
    pub final_state: [f64; 3],
}

pub const MIN_ITERATIONS: usize = 1000;

// Keeps a degenerate stretch from producing -inf.
const MIN_STRETCH: f64 = 1e-300;

/// Lyapunov spectrum of the coupled map from `s0`.
pub fn lyapunov_spectrum(
    p: &MhdnnParams,
    s0: MhdnnState,
    n_transient: usize,
    n_iter: usize,
) -> Result<LyapunovSpectrum> {
    estimate(p, s0.to_array(), n_transient, n_iter).map(|e| e.spectrum)
}

/// Generic estimator. The frame starts as (e_z, e_x, e_y) so that an invariant flux
/// direction with unit multiplier is tracked exactly.
pub fn estimate<T: TangentMap + ?Sized>(
    map: &T,
    s0: [f64; 3],
    n_transient: usize,
    n_iter: usize,
) -> Result<LyapunovEstimate> {
    if n_iter < MIN_ITERATIONS {
        return Err(Error::InvalidArgument(format!(
            "n_iter must be at least {MIN_ITERATIONS}, got {n_iter}"
        )));
    }
    let escaped = |s: &[f64; 3]| s.iter().any(|v| !v.is_finite() || v.abs() > DIVERGENCE_BOUND);

    let mut s = s0;
    for step in 1..=n_transient {
        s = map.advance(s);
        if escaped(&s) {
            return Err(Error::Divergent { step });
        }
    }

    let mut frame = [[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
    let mut acc = [0.0f64; 3];
    let mut log_det = 0.0;
    for k in 1..=n_iter {
        let j = map.tangent(s);
        log_det += det3(&j).abs().max(MIN_STRETCH).ln();
        let mut w = frame.map(|v| mat_vec(&j, v));
        let norms = gram_schmidt(&mut w);
        for (a, n) in acc.iter_mut().zip(norms) {
            *a += n.max(MIN_STRETCH).ln();
        }
        frame = w;
        s = map.advance(s);
        if escaped(&s) {
            return Err(Error::Divergent { step: n_transient + k });
        }
    }
    let n = n_iter as f64;
    Ok(LyapunovEstimate {
        spectrum: LyapunovSpectrum::from_unsorted(acc.map(|a| a / n)),
        mean_log_det: log_det / n,
        final_state: s,
    })
}

/// LE of a 1-D map, averaging `ln|f'(x)|` along the orbit.
pub fn lyapunov_1d(
    f: impl Fn(f64) -> f64,
    df: impl Fn(f64) -> f64,
    x0: f64,
    n_transient: usize,
    n_iter: usize,
) -> Result<f64> {
    if n_iter == 0 {
        return Err(Error::InvalidArgument("n_iter must be positive".into()));
    }
    let mut x = x0;
    for step in 1..=n_transient {
        x = f(x);
        if !x.is_finite() || x.abs() > DIVERGENCE_BOUND {
            return Err(Error::Divergent { step });
        }
    }
    let mut acc = 0.0;
    for k in 1..=n_iter {
        acc += df(x).abs().max(MIN_STRETCH).ln();
        x = f(x);
        if !x.is_finite() || x.abs() > DIVERGENCE_BOUND {
            return Err(Error::Divergent { step: n_transient + k });
        }
    }
    Ok(acc / n_iter as f64)
}

/// LE of `x' = a/(1+x^2) + h`.
pub fn map1_lyapunov(a: f64, h: f64, x0: f64, n_iter: usize) -> Result<f64> {
    lyapunov_1d(|x| neuron::map1_step(x, a, h), |x| neuron::map1_derivative(x, a), x0, 0, n_iter)
}

/// LE of `x' = c x^2 e^(b-x) + k`.
pub fn map2_lyapunov(b: f64, c: f64, k: f64, x0: f64, n_iter: usize) -> Result<f64> {
    lyapunov_1d(
        |x| neuron::map2_step(x, b, c, k),
        |x| neuron::map2_derivative(x, b, c),
        x0,
        0,
        n_iter,
    )
}

fn mat_vec(m: &[[f64; 3]; 3], v: [f64; 3]) -> [f64; 3] {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Modified Gram-Schmidt in place; returns the stretch factors (diagonal of R).
fn gram_schmidt(w: &mut [[f64; 3]; 3]) -> [f64; 3] {
    let mut norms = [0.0; 3];
    for i in 0..3 {
        for j in 0..i {
            let (head, tail) = w.split_at_mut(i);
            let proj = dot(&tail[0], &head[j]);
            for d in 0..3 {
                tail[0][d] -= proj * head[j][d];
            }
        }
        let n = dot(&w[i], &w[i]).sqrt();
        norms[i] = n;
        if n > 0.0 {
            for c in w[i].iter_mut() {
                *c /= n;
            }
        }
    }
    norms
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Diagonal(f64, f64);

    impl TangentMap for Diagonal {
        fn advance(&self, s: [f64; 3]) -> [f64; 3] {
            [self.0 * s[0], self.1 * s[1], s[2]]
        }
        fn tangent(&self, _: [f64; 3]) -> [[f64; 3]; 3] {
            [[self.0, 0.0, 0.0], [0.0, self.1, 0.0], [0.0, 0.0, 1.0]]
        }
    }

    #[test]
    fn linear_diagonal_map_exact() {
        let e = estimate(&Diagonal(0.5, 0.9), [0.0; 3], 0, 2000).unwrap();
        let want = LyapunovSpectrum::from_unsorted([0.5f64.ln(), 0.9f64.ln(), 0.0]);
        for (g, w) in e.spectrum.to_array().iter().zip(want.to_array()) {
            assert!((g - w).abs() < 1e-9, "{g} vs {w}");
        }
    }

    #[test]
    fn rejects_short_runs() {
        let p = MhdnnParams::new(-3.4, 3.0, 0.2, 1.3, 0.16);
        assert!(lyapunov_spectrum(&p, MhdnnState::new(0.1, 0.1, 0.1), 0, 999).is_err());
    }

    #[test]
    fn sorted_descending() {
        let s = LyapunovSpectrum::from_unsorted([-1.0, 2.0, 0.0]);
        assert_eq!(s.to_array(), [2.0, 0.0, -1.0]);
    }

    #[test]
    fn decoupled_map_splits_into_one_d_exponents() {
        let p = MhdnnParams::new(-3.4, 3.0, 0.2, 1.3, 0.0);
        let s0 = MhdnnState::new(0.1, 0.1, 0.1);
        let n = 5000;
        let sp = lyapunov_spectrum(&p, s0, 100, n).unwrap();
        // Same orbit, 1-D oracles.
        let orbit = neuron::iterate(&p, s0, 99, 1).unwrap();
        let start = orbit.last();
        let l1 = lyapunov_1d(|x| neuron::map1_step(x, p.a, p.h), |x| neuron::map1_derivative(x, p.a), start.x, 0, n).unwrap();
        let l2 = lyapunov_1d(
            |y| neuron::map2_step(y, p.b, p.c, p.k),
            |y| neuron::map2_derivative(y, p.b, p.c),
            start.y,
            0,
            n,
        )
        .unwrap();
        let want = LyapunovSpectrum::from_unsorted([l1, l2, 0.0]);
        for (g, w) in sp.to_array().iter().zip(want.to_array()) {
            assert!((g - w).abs() < 1e-12, "{g} vs {w}");
        }
        assert!(sp.to_array().contains(&0.0));
    }

    #[test]
    fn sum_matches_log_determinant() {
        let p = MhdnnParams::new(-2.0, 1.5, -1.5, 1.3, 0.2);
        let e = estimate(&p, [0.1, 0.1, 0.1], 1000, 10_000).unwrap();
        assert!((e.spectrum.sum() - e.mean_log_det).abs() < 1e-3);
    }
}
