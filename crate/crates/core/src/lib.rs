//! Monte Carlo simulation of discounted convergent perpetuities
//! `Y(a) = sum_k exp(S_k - a k) eta_{k+1}` and the supremum process
//! `Z(a) = sup_k (S_k - a k + log eta_{k+1})`, the three heavy-traffic
//! limit laws that describe them as `a -> 0+`, and the statistics used to
//! compare the two.

pub mod distributions;
pub mod error;
pub mod harness;
pub mod limit_laws;
pub mod perpetuity;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use rng::{derive_replicate_seed, RandomStream};
