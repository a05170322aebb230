use std::collections::HashMap;

use crate::error::{Error, Result};

/// Shannon entropy (nats, unnormalized) of ordinal patterns of `order` samples spaced
/// `delay` apart. Equal values keep their index order.
pub fn permutation_entropy(series: &[f64], order: usize, delay: usize) -> Result<f64> {
    if !(2..=7).contains(&order) {
        return Err(Error::InvalidArgument(format!("order must be in 2..=7, got {order}")));
    }
    if delay == 0 {
        return Err(Error::InvalidArgument("delay must be positive".into()));
    }
    let needed = order * delay + 1;
    if series.len() < needed {
        return Err(Error::TooShort { needed, got: series.len() });
    }
    let span = (order - 1) * delay;
    let windows = series.len() - span;
    let mut counts: HashMap<Vec<u8>, usize> = HashMap::new();
    let mut idx: Vec<u8> = Vec::with_capacity(order);
    for start in 0..windows {
        idx.clear();
        idx.extend(0..order as u8);
        idx.sort_by(|&i, &j| {
            let a = series[start + i as usize * delay];
            let b = series[start + j as usize * delay];
            a.total_cmp(&b)
        });
        *counts.entry(idx.clone()).or_insert(0) += 1;
    }
    let n = windows as f64;
    Ok(counts
        .values()
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn monotone_series_has_zero_entropy() {
        let s: Vec<f64> = (0..50).map(|i| i as f64).collect();
        for order in 2..=5 {
            assert_eq!(permutation_entropy(&s, order, 1).unwrap(), 0.0);
        }
    }

    #[test]
    fn repeating_pattern_hand_count() {
        // [1,3,2,1,3,2,1,...] windows of 3 cycle through (1,3,2) (3,2,1) (2,1,3).
        let s: Vec<f64> = (0..30).map(|i| [1.0, 3.0, 2.0][i % 3]).collect();
        let windows = 28usize;
        // 28 = 10 + 9 + 9
        let counts = [10.0, 9.0, 9.0];
        let expected: f64 = counts.iter().map(|c| -(c / windows as f64) * (c / windows as f64).ln()).sum();
        let got = permutation_entropy(&s, 3, 1).unwrap();
        assert!((got - expected).abs() < 1e-15);
    }

    #[test]
    fn too_short_and_bad_order() {
        assert!(matches!(permutation_entropy(&[1.0, 2.0, 3.0], 3, 1), Err(Error::TooShort { .. })));
        assert!(permutation_entropy(&[0.0; 100], 8, 1).is_err());
        assert!(permutation_entropy(&[0.0; 100], 1, 1).is_err());
    }

    proptest! {
        #[test]
        fn bounded_by_log_factorial(v in prop::collection::vec(-10.0f64..10.0, 20..200), order in 2usize..5) {
            let h = permutation_entropy(&v, order, 1).unwrap();
            let max = (1..=order).map(|k| (k as f64).ln()).sum::<f64>();
            prop_assert!(h >= 0.0 && h <= max + 1e-12);
        }
    }
}
