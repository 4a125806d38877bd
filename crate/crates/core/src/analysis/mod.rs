//! Scoring of candidate gains: stability, LQR/LQG costs, L2 gains and the
//! quantization-aware cost that the swarm minimizes.

mod cost;
mod gain;
mod pid;

pub use cost::{
    lqg_cost_matrix, lqg_cost_norm, lqr_cost_matrix, lqr_cost_norm, output_gains, AnalysisReport,
    Baseline, CostContext, CostWeights, Metrics,
};
pub use gain::{is_hurwitz, l2_gain, l2_gain_with_grid, DEFAULT_GRID, HURWITZ_MARGIN};
pub use pid::{
    closed_loop_response, open_loop_response, settling_and_peak, stability_margins, MarginLoop,
    Margins, PidCostContext, PidReport,
    MARGIN_GRID,
};
