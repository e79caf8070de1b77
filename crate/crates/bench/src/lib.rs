//! Shared fixtures for the benchmark targets.

use upin_core::simulate::{simulate, Model, PathBatch};
use upin_core::vol::{RoughBergomiParams, TruncationReading};
use upin_core::TimeGrid;

pub fn truncated_model() -> Model {
    Model::TruncatedRoughBergomi {
        params: RoughBergomiParams::new(0.2, 0.5, 0.2, -0.3).unwrap(),
        level: 5.0,
        reading: TruncationReading::Variance,
    }
}

pub fn grid(n_steps: usize) -> TimeGrid {
    upin_core::gaussian::build_grid(0.25, n_steps).unwrap()
}

pub fn small_batch(n_paths: usize, n_steps: usize) -> PathBatch {
    simulate(&truncated_model(), 0.25, n_steps, n_paths, 10f64.ln(), 42).unwrap()
}
