//! Marginals of the three limit processes: the supremum of a drifted
//! Brownian motion, the supremum over a drifted Poisson random measure with
//! Pareto marks, and the mixed supremum combining both; plus the exponential
//! functional of Brownian motion.

mod bm;
mod exp_functional;
mod mixed;
mod ppp;

pub use bm::{bm_sup_cdf, BmSupLaw};
pub use exp_functional::{exp_functional_bm, log_exp_functional_bm, log_exp_functional_grid};
pub use mixed::{mixed_sup_cdf_mc, mixed_sup_cdf_mc_grid, sample_mixed_sup, MixedCdfEstimate, MixedSupLaw};
pub use ppp::{ppp_sup_cdf, sample_ppp_sup, PppSupLaw};

use crate::error::{Error, Result};

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::param(name, v, "must be finite and > 0"))
    }
}
