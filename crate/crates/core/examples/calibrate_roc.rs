//! Sweep (t_rtla, t_frpla) over a noisy generated suite and print the ROC
//! table as CSV. Ground truth comes from brute-force revelation.

use tnt::engine::EngineConfig;
use tnt::report::calibrate::{calibrate, roc_csv};
use tnt::sim::gen::clean_suite;
use tnt::sim::with_return_noise;

fn main() {
    let seed: u64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(7);
    let suite: Vec<_> = clean_suite()
        .iter()
        .enumerate()
        .map(|(i, t)| with_return_noise(t, seed + i as u64, 0.3, 3))
        .collect();
    let points = calibrate(&suite, EngineConfig::default(), 0..=4);
    print!("{}", roc_csv(&points));
}
