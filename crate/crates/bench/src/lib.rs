//! Shared fixtures for the benchmarks.

use twopoint_core::{ArrivalDist, JourneyDist, SimConfig, SurveyWindows};

/// Uniform 6–9 upstream, 7–10 downstream, six-hour cap.
pub fn case1_windows() -> SurveyWindows {
    SurveyWindows::new(6.0, 9.0, 7.0, 10.0, 0.0, 6.0).expect("valid windows")
}

pub fn sim_config(journey: JourneyDist, population: usize, seed: u64) -> SimConfig {
    SimConfig {
        windows: case1_windows(),
        journey,
        arrival: ArrivalDist::uniform(6.0, 9.0).expect("valid window"),
        population,
        seed,
    }
}
