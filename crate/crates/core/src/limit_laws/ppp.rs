use rand::Rng;
use rand_distr::{Distribution, Open01};
use serde::{Deserialize, Serialize};

use super::positive;
use crate::distributions::sample_poisson;
use crate::error::{Error, Result};

/// Quantile level used to place the thinning threshold of the point-process sampler.
const THIN_QUANTILE: f64 = 1e-4;
/// Expected number of points that could still matter when the point-process sampler stops.
const HORIZON_MISS: f64 = 1e-6;

/// Law of `sup_k (j_k - u t_k)` over the atoms `(t_k, j_k)`, `t_k <= T`, of a
/// Poisson random measure with intensity `dt x lambda beta j^(-beta-1) dj`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PppSupLaw {
    lambda: f64,
    beta: f64,
    u: f64,
    /// `None` is an infinite horizon.
    horizon: Option<f64>,
}

impl PppSupLaw {
    pub fn new(lambda: f64, beta: f64, u: f64, horizon: Option<f64>) -> Result<Self> {
        positive("lambda", lambda)?;
        positive("u", u)?;
        if let Some(t) = horizon {
            positive("horizon", t)?;
        }
        if !(beta.is_finite() && (1.0..=2.0).contains(&beta)) {
            return Err(Error::param("beta", beta, "must lie in [1, 2]"));
        }
        if beta == 1.0 && horizon.is_none() {
            return Err(Error::Hypothesis {
                hypothesis: "beta = 1 on an infinite horizon",
                detail: "the supremum is +inf almost surely, so its distribution function is 0 everywhere".into(),
            });
        }
        Ok(PppSupLaw {
            lambda,
            beta,
            u,
            horizon,
        })
    }

    pub fn infinite(lambda: f64, beta: f64, u: f64) -> Result<Self> {
        Self::new(lambda, beta, u, None)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn u(&self) -> f64 {
        self.u
    }

    pub fn horizon(&self) -> Option<f64> {
        self.horizon
    }

    /// `log P{sup <= x}`.
    pub fn log_cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return f64::NEG_INFINITY;
        }
        if x == f64::INFINITY {
            return 0.0;
        }
        let (l, b, u) = (self.lambda, self.beta, self.u);
        if b == 1.0 {
            let t = self.horizon.expect("checked at construction");
            return -(l / u) * (u * t / x).ln_1p();
        }
        let c = l / (u * (b - 1.0));
        let near = x.powf(1.0 - b);
        match self.horizon {
            None => -c * near,
            Some(t) => -c * (near - (x + u * t).powf(1.0 - b)),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.log_cdf(x).exp()
    }

    /// Inverse of [`cdf`](Self::cdf) on `(0, 1)`.
    pub fn quantile(&self, p: f64) -> f64 {
        if p <= 0.0 {
            return 0.0;
        }
        if p >= 1.0 {
            return f64::INFINITY;
        }
        let (l, b, u) = (self.lambda, self.beta, self.u);
        let target = p.ln();
        if b == 1.0 {
            let t = self.horizon.expect("checked at construction");
            // (x / (x + uT))^(l/u) = p
            let q = (target * u / l).exp();
            return u * t * q / (1.0 - q);
        }
        let c = l / (u * (b - 1.0));
        let x_inf = (c / -target).powf(1.0 / (b - 1.0));
        if self.horizon.is_none() {
            return x_inf;
        }
        // the finite-horizon cdf dominates the infinite one, so x_inf bounds from above
        let mut hi = x_inf;
        let mut lo = x_inf * 0.5;
        while self.log_cdf(lo) > target {
            hi = lo;
            lo *= 0.5;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.log_cdf(mid) > target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Exact inverse-CDF draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let p: f64 = Open01.sample(rng);
        self.quantile(p)
    }

    /// Draw by simulating the point process itself.
    ///
    /// Only atoms that can exceed `delta = quantile(1e-4) / 4` are generated:
    /// time is cut into slices `[t, 2t)` and a slice keeps the atoms with
    /// `j > delta + u t`, which is exact for the supremum on `{sup > delta}`.
    /// Draws with no atom above `delta` are rejected. On an infinite horizon
    /// the slices stop once fewer than `1e-6` relevant atoms remain in expectation.
    pub fn sample_point_process<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let delta = self.quantile(THIN_QUANTILE) / 4.0;
        loop {
            let best = self.point_process_max(delta, rng);
            if best > delta {
                return best;
            }
        }
    }

    fn point_process_max<R: Rng + ?Sized>(&self, delta: f64, rng: &mut R) -> f64 {
        let (l, b, u) = (self.lambda, self.beta, self.u);
        let end = self.horizon.unwrap_or(f64::INFINITY);
        let mut best = f64::NEG_INFINITY;
        let mut start = 0.0;
        let mut stop = delta / u;
        while start < end {
            let theta = delta + u * start;
            if self.horizon.is_none() && l * theta.powf(1.0 - b) / (u * (b - 1.0)) < HORIZON_MISS {
                break;
            }
            let stop_c = stop.min(end);
            let width = stop_c - start;
            let n = sample_poisson(l * theta.powf(-b) * width, rng);
            for _ in 0..n {
                let t = start + width * rng.random::<f64>();
                let v: f64 = Open01.sample(rng);
                let j = theta * v.powf(-1.0 / b);
                best = best.max(j - u * t);
            }
            start = stop_c;
            stop = 2.0 * stop_c;
        }
        best
    }
}

pub fn ppp_sup_cdf(law: &PppSupLaw, x: f64) -> f64 {
    law.cdf(x)
}

/// Inverse-CDF draw from the supremum law.
pub fn sample_ppp_sup<R: Rng + ?Sized>(law: &PppSupLaw, rng: &mut R) -> f64 {
    law.sample(rng)
}
