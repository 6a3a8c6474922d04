//! Shared inputs for the criterion benchmarks.
use std::f64::consts::PI;

/// Damped two-tone test signal on `k` samples of `[0, length)`.
pub fn test_signal(k: usize, length: f64) -> Vec<f64> {
    (0..k)
        .map(|j| {
            let t = j as f64 * length / k as f64;
            (-0.3 * t).exp() * ((2.0 * PI * t / length).sin() + 0.4 * (6.0 * PI * t / length).cos())
        })
        .collect()
}
