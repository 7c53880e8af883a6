//! The three-state, one-input, two-output demonstration problem used by the
//! examples, the CLI defaults and the acceptance tests.
//!
//! Entries are given to four significant digits. The noise is
//! `V_w = 0.1 I_3`, `V_v = 0.1 I_2` and the weights are `Q = 100 I_2`, `R = 10`.

use crate::linalg::Mat;
use crate::plant::{CostWeights, NoiseSpec, Plant, Problem};

const A: [f64; 9] = [
    0.7349, 0.1195, 0.3545, //
    0.08005, 0.961, -0.1506, //
    0.3654, -0.1217, 0.5076,
];
const B: [f64; 3] = [-0.1158, 0.0, -0.5297];
const C: [f64; 6] = [
    -0.2326, -0.5851, 0.9771, //
    -0.1116, 0.0, 0.6755,
];

pub fn plant() -> Plant {
    Plant::new(
        Mat::from_row_slice(3, 3, &A),
        Mat::from_row_slice(3, 1, &B),
        Mat::from_row_slice(2, 3, &C),
    )
    .expect("benchmark plant is well formed")
}

pub fn noise() -> NoiseSpec {
    NoiseSpec::strict(Mat::identity(3, 3) * 0.1, Mat::identity(2, 2) * 0.1).expect("valid noise")
}

pub fn weights() -> CostWeights {
    CostWeights::new(Mat::identity(2, 2) * 100.0, Mat::identity(1, 1) * 10.0).expect("valid weights")
}

pub fn problem() -> Problem {
    Problem::new(plant(), noise(), weights()).expect("consistent benchmark")
}

/// Contents of `data/benchmark_plant.json`.
pub const PROBLEM_JSON: &str = include_str!("../data/benchmark_plant.json");
