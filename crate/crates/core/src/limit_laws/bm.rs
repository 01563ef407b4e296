use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use super::positive;
use crate::error::Result;

/// Law of `sup_{s >= 0} (sigma B(s) - u s)`: exponential with rate `2u / sigma^2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BmSupLaw {
    sigma: f64,
    u: f64,
}

impl BmSupLaw {
    pub fn new(sigma: f64, u: f64) -> Result<Self> {
        positive("sigma", sigma)?;
        positive("u", u)?;
        Ok(BmSupLaw { sigma, u })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn u(&self) -> f64 {
        self.u
    }

    pub fn rate(&self) -> f64 {
        2.0 * self.u / (self.sigma * self.sigma)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            -(-self.rate() * x).exp_m1()
        }
    }

    pub fn quantile(&self, p: f64) -> f64 {
        -(-p).ln_1p() / self.rate()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let e: f64 = Exp1.sample(rng);
        e / self.rate()
    }
}

pub fn bm_sup_cdf(law: &BmSupLaw, x: f64) -> f64 {
    law.cdf(x)
}
