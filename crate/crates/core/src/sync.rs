//! Synchrony between the two membrane-potential series.

use crate::error::{Error, Result};
use crate::report::sig9;

/// Normalized cross-correlation over lags `-tau_max..=tau_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossCorrelogram {
    pub lags: Vec<i64>,
    pub values: Vec<f64>,
}

impl CrossCorrelogram {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("tau,r\n");
        for (t, v) in self.lags.iter().zip(&self.values) {
            out.push_str(&format!("{t},{}\n", sig9(*v)));
        }
        out
    }
}

/// Pearson product-moment correlation.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidArgument(format!(
            "series lengths differ: {} vs {}",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 2 {
        return Err(Error::TooShort { needed: 2, got: xs.len() });
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::UndefinedCorrelation("first series is constant"));
    }
    if syy == 0.0 {
        return Err(Error::UndefinedCorrelation("second series is constant"));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// `R(tau) = sum_n x(n) y(n + tau) / sqrt(sum x^2 * sum y^2)`, summed over the overlap.
///
/// Positive `tau` pairs `x` with later `y`; a peak at negative `tau` means `y` leads.
/// Zero-energy inputs give an all-zero correlogram.
pub fn cross_correlation(xs: &[f64], ys: &[f64], tau_max: usize) -> Result<CrossCorrelogram> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidArgument(format!(
            "series lengths differ: {} vs {}",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() <= tau_max {
        return Err(Error::TooShort { needed: tau_max + 1, got: xs.len() });
    }
    let n = xs.len() as i64;
    let ex: f64 = xs.iter().map(|v| v * v).sum();
    let ey: f64 = ys.iter().map(|v| v * v).sum();
    let norm = (ex * ey).sqrt();
    let tau_max = tau_max as i64;
    let lags: Vec<i64> = (-tau_max..=tau_max).collect();
    let values = lags
        .iter()
        .map(|&tau| {
            if norm == 0.0 {
                return 0.0;
            }
            let lo = 0.max(-tau);
            let hi = n.min(n - tau);
            let s: f64 = (lo..hi).map(|i| xs[i as usize] * ys[(i + tau) as usize]).sum();
            (s / norm).clamp(-1.0, 1.0)
        })
        .collect();
    Ok(CrossCorrelogram { lags, values })
}

/// Lag of largest `|R|`; ties go to the smallest `|tau|`, then to negative `tau`.
pub fn best_lag(c: &CrossCorrelogram) -> Result<(i64, f64)> {
    c.lags
        .iter()
        .zip(&c.values)
        .map(|(&t, &v)| (t, v))
        .reduce(|best, cur| {
            let (bm, cm) = (best.1.abs(), cur.1.abs());
            let better = cm > bm
                || (cm == bm && (cur.0.abs() < best.0.abs() || (cur.0.abs() == best.0.abs() && cur.0 < best.0)));
            if better { cur } else { best }
        })
        .ok_or_else(|| Error::InvalidArgument("empty correlogram".into()))
}
