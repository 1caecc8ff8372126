//! Median-of-k wall-clock timing.

use std::hint::black_box;
use std::time::Instant;

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Timing {
    pub median_s: f64,
    pub samples_s: Vec<f64>,
}

/// Runs `f` `warmup` times untimed, then `repeats` times timed, and reports the median.
pub fn median_time<R>(warmup: usize, repeats: usize, mut f: impl FnMut() -> R) -> Timing {
    for _ in 0..warmup {
        black_box(f());
    }
    let mut samples_s: Vec<f64> = (0..repeats.max(1))
        .map(|_| {
            let start = Instant::now();
            black_box(f());
            start.elapsed().as_secs_f64()
        })
        .collect();
    let mut sorted = samples_s.clone();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let median_s = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    };
    samples_s.shrink_to_fit();
    Timing { median_s, samples_s }
}

/// Single timed call.
pub fn time_once<R>(f: impl FnOnce() -> R) -> (R, f64) {
    let start = Instant::now();
    let r = f();
    (r, start.elapsed().as_secs_f64())
}
