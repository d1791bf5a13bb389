//! Shared fixtures for the benchmarks.

use fplap_core::{make_initial_data, Field, GridSpec, InitialKind, ModelParams, OperatorContext};

/// The reference model: `s = 1/2`, `p = 2`, `q = 4`, `r = 3`.
pub fn reference_params() -> ModelParams {
    ModelParams::new(0.5, 2.0, 4.0, 3.0)
}

pub fn line_grid(n: usize) -> GridSpec {
    GridSpec::line(0.0, 1.0, n).expect("valid grid")
}

pub fn square_grid(n: usize) -> GridSpec {
    GridSpec::rect([0.0, 0.0], [1.0, 1.0], n).expect("valid grid")
}

/// Context and seeded random field on `grid`.
pub fn fixture(grid: &GridSpec, params: &ModelParams) -> (OperatorContext, Field) {
    let ctx = OperatorContext::new(grid, params).expect("context");
    let u = make_initial_data(&InitialKind::Random { amplitude: 1.0, seed: 7 }, grid).expect("field");
    (ctx, u)
}
