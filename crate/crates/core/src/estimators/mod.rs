//! Measurement layer: Hadamard-test shots, canonical and unbiased amplitude
//! estimation, and the per-node quadrature pipelines built on them.

mod ae;
mod hadamard;
mod pipelines;
mod report;
pub mod rng;

pub use ae::{
    ae_error_bound, ae_estimate, ae_outcome, ae_sample, median_reps, outcome_probability, r_for_precision,
    unbiased_ae_sample, unbiased_depth, AeConfig, UnbiasedAe,
};
pub use hadamard::{hadamard_mean, hadamard_shot, shot_mean, shot_probability, Part};
pub use pipelines::{
    hadamard_shots, pipeline_hadamard, pipeline_hs_ae, AeSchedule, AeVariant, PipelineConfig, Prepared, UnbiasedPlan,
};
pub use report::{EstimateReport, Pipeline};
