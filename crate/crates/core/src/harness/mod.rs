//! Experiment configuration, deterministic parallel runners and report files.

mod config;
mod normalizer;
mod report;
mod runner;

pub use config::{Checks, CrossValidation, Experiment, ExperimentConfig, LilSettings, Reference};
pub use normalizer::NormalizerPlan;
pub use report::{
    emit_reports, CellSummary, CheckOutcome, KsRow, LilRow, MarginalRow, ReferenceRow, ReportBundle, Summary,
    KS_HEADER, LIL_HEADER, MARGINALS_HEADER, REFERENCE_HEADER,
};
pub use runner::run_experiment;

use serde::Serialize;

use crate::rng::stream_id;

/// Streams used by the replicates of one experiment cell.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeedLine {
    pub cell: u32,
    pub a: Option<f64>,
    pub replicates: u32,
    pub first_stream: u64,
    pub last_stream: u64,
}

/// The replicate streams of the simulation cells, as `run` derives them
/// from `master_seed`.
pub fn seed_plan(config: &ExperimentConfig) -> Vec<SeedLine> {
    let n = if config.experiment.is_lil() { 1 } else { config.n_replicates as u32 };
    let line = |cell: u32, a: Option<f64>| SeedLine {
        cell,
        a,
        replicates: n,
        first_stream: stream_id(cell, 0),
        last_stream: stream_id(cell, n.saturating_sub(1)),
    };
    match config.experiment {
        Experiment::LilPerpetuity | Experiment::LilSuprema | Experiment::LilBmFunctional => vec![line(0, None)],
        Experiment::CrossValidateLimitLaws => (0..config.cross_validation.betas.len() as u32 + 3)
            .map(|c| line(c, None))
            .collect(),
        _ => config
            .a_grid
            .iter()
            .enumerate()
            .map(|(i, &a)| line(i as u32, Some(a)))
            .collect(),
    }
}
