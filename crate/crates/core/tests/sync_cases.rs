//! Correlogram behaviour of the two coupled-neuron cases.

use mhdnn::neuron;
use mhdnn::presets::{self, SYNC_INITIAL, SYNC_SAMPLES, SYNC_TRANSIENT};
use mhdnn::sync::{best_lag, cross_correlation};

fn series(case: &str, m: f64) -> (Vec<f64>, Vec<f64>) {
    let c = presets::sync_case(case).unwrap();
    let orbit = neuron::iterate(&c.params(m), SYNC_INITIAL, SYNC_TRANSIENT, SYNC_SAMPLES).unwrap();
    (orbit.xs(), orbit.ys())
}

#[test]
fn case2_strong_coupling_peaks_high_near_zero_lag() {
    let (xs, ys) = series("case2", 0.5);
    let (tau, value) = best_lag(&cross_correlation(&xs, &ys, 50).unwrap()).unwrap();
    assert!(tau.abs() <= 5, "peak at tau {tau}");
    assert!(value > 0.9, "peak value {value}");
}

#[test]
fn case1_partial_coupling_peaks_at_negative_lag() {
    let (xs, ys) = series("case1", -0.3);
    let (tau, _) = best_lag(&cross_correlation(&xs, &ys, 50).unwrap()).unwrap();
    assert!(tau < 0, "peak at tau {tau}");
}
