//! Goodness-of-fit tests and iterated-logarithm diagnostics.

mod ks;
mod lil;

pub use ks::{kolmogorov_critical, ks_one_sample, ks_two_sample, Ecdf, KsMode, KsReport, DEFAULT_ALPHA};
pub use lil::{
    geometric_counts, geometric_discounts, lil_trace_bm_functional, lil_trace_perpetuity, lil_trace_suprema,
    Checkpoint, LilNormalization, LimsupTrace,
};
