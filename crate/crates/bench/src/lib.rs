//! Shared fixtures for the benchmarks.

use invacc_core::simulator::{synthesize_trace, SynthesisOptions};
use invacc_core::units::{KPA, MM_PER_MIN};
use invacc_core::{ActuatorParams, ForceTrace};

/// One noisy synthetic trace per bench operating point.
pub fn bench_traces(seed: u64) -> Vec<ForceTrace> {
    let params = ActuatorParams::prototype();
    let opts = SynthesisOptions::default();
    [
        (-34.0, 100.0),
        (-34.0, 500.0),
        (-34.0, 2500.0),
        (-51.0, 100.0),
        (-81.0, 100.0),
    ]
    .iter()
    .enumerate()
    .map(|(i, &(p1, rate))| {
        synthesize_trace(
            p1 * KPA,
            rate * MM_PER_MIN,
            &params,
            0.3,
            seed + i as u64,
            &opts,
        )
        .expect("valid synthesis inputs")
    })
    .collect()
}
