use rand::{Rng, RngCore};
use rand_distr::{Distribution, Exp1, Open01, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::positive;
use crate::error::{Error, Result};
use crate::rng::RandomStream;

/// Probability that a Brownian bridge overshoots the larger endpoint by the
/// refinement allowance.
const BRIDGE_OVERSHOOT: f64 = 1e-8;
/// Expected number of relevant atoms left beyond the sampler's horizon.
const HORIZON_MISS: f64 = 1e-6;
/// Mean atom count at which a cell is accepted without further splitting.
const LEAF_COUNT: f64 = 4.0;

/// Law of `sup_k (sigma B(t_k) - u t_k + j_k)` where `(t_k, j_k)` are the
/// atoms of a Poisson random measure with intensity `dt x 2 lambda j^(-3) dj`
/// independent of the Brownian motion `B`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixedSupLaw {
    sigma: f64,
    lambda: f64,
    u: f64,
    /// Base grid step of the CDF estimator; `None` picks `1e-3 min(1, x / u)`.
    step: Option<f64>,
    /// Simulated horizon of the CDF estimator; `None` picks a default.
    horizon: Option<f64>,
}

/// Monte Carlo value of the distribution function at one point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixedCdfEstimate {
    pub x: f64,
    pub estimate: f64,
    pub stderr: f64,
    /// Set when more than 1% of the surviving mass may still be killed after the horizon.
    pub horizon_warning: bool,
}

impl MixedSupLaw {
    pub fn new(sigma: f64, lambda: f64, u: f64) -> Result<Self> {
        positive("sigma", sigma)?;
        positive("lambda", lambda)?;
        positive("u", u)?;
        Ok(MixedSupLaw {
            sigma,
            lambda,
            u,
            step: None,
            horizon: None,
        })
    }

    pub fn with_step(mut self, h: f64) -> Result<Self> {
        positive("step", h)?;
        self.step = Some(h);
        Ok(self)
    }

    pub fn with_horizon(mut self, t: f64) -> Result<Self> {
        positive("horizon", t)?;
        self.horizon = Some(t);
        Ok(self)
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn u(&self) -> f64 {
        self.u
    }

    /// Length scale of the law: the larger of the Brownian and the jump scale.
    fn scale(&self) -> f64 {
        (self.sigma * self.sigma / (2.0 * self.u)).max(self.lambda / self.u)
    }

    fn estimator_horizon(&self) -> f64 {
        self.horizon.unwrap_or_else(|| 1000.0 * self.scale().max(1.0) / self.u)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        Sampler::new(self).run(rng)
    }
}

/// Draw from the mixed supremum law.
///
/// The Brownian part `X = sigma B - u t` is laid down exactly on a geometric
/// coarse grid, refined by bridge midpoints only where atoms can matter, and
/// evaluated at the atom times by exact Brownian-bridge interpolation. Atoms
/// whose mark cannot lift them above the running maximum are never drawn.
/// The result undershoots the true supremum by at most `1e-3` of the law's
/// scale.
pub fn sample_mixed_sup<R: Rng + ?Sized>(law: &MixedSupLaw, rng: &mut R) -> f64 {
    law.sample(rng)
}

struct Sampler {
    sigma: f64,
    lambda: f64,
    u: f64,
    delta: f64,
    w0: f64,
    w_min: f64,
    overshoot: f64,
    level: f64,
    best: f64,
}

impl Sampler {
    fn new(law: &MixedSupLaw) -> Self {
        let s = law.scale();
        let tau = s / law.u;
        Sampler {
            sigma: law.sigma,
            lambda: law.lambda,
            u: law.u,
            delta: 1e-3 * s,
            w0: 1e-2 * tau,
            w_min: 1e-12 * tau,
            overshoot: (BRIDGE_OVERSHOOT.recip().ln() / 2.0).sqrt() * law.sigma,
            level: 0.0,
            best: f64::NEG_INFINITY,
        }
    }

    fn run<R: Rng + ?Sized>(&mut self, rng: &mut R) -> f64 {
        let var = self.sigma * self.sigma;
        let walk_allowance = var * HORIZON_MISS.recip().ln() / self.u;
        let jump_allowance = 2.0 * self.lambda / (self.u * HORIZON_MISS);

        let mut nodes = vec![(0.0f64, 0.0f64)];
        let (mut t, mut x) = (0.0f64, 0.0f64);
        self.level = 0.0;
        loop {
            let w = self.w0.max(0.05 * t);
            let z: f64 = StandardNormal.sample(rng);
            x += self.sigma * w.sqrt() * z - self.u * w;
            t += w;
            nodes.push((t, x));
            self.level = self.level.max(x);
            if self.level - x > walk_allowance + jump_allowance {
                break;
            }
        }

        self.best = self.level;
        for pair in nodes.windows(2) {
            let ((t0, x0), (t1, x1)) = (pair[0], pair[1]);
            self.refine(t0, x0, t1, x1, rng);
        }
        let e: f64 = Exp1.sample(rng);
        self.best.max(x + e * var / (2.0 * self.u))
    }

    fn refine<R: Rng + ?Sized>(&mut self, t0: f64, x0: f64, t1: f64, x1: f64, rng: &mut R) {
        let w = t1 - t0;
        let reach = self.level - x0.max(x1) - self.overshoot * w.sqrt();
        let theta = reach.max(self.delta);
        if self.lambda * w / (theta * theta) <= LEAF_COUNT || w <= self.w_min {
            self.leaf(t0, x0, t1, x1, theta, rng);
            return;
        }
        let tm = 0.5 * (t0 + t1);
        let z: f64 = StandardNormal.sample(rng);
        let xm = 0.5 * (x0 + x1) + 0.5 * self.sigma * w.sqrt() * z;
        self.level = self.level.max(xm);
        self.best = self.best.max(xm);
        self.refine(t0, x0, tm, xm, rng);
        self.refine(tm, xm, t1, x1, rng);
    }

    fn leaf<R: Rng + ?Sized>(&mut self, t0: f64, x0: f64, t1: f64, x1: f64, theta: f64, rng: &mut R) {
        let rate = self.lambda / (theta * theta);
        let (mut tp, mut xp) = (t0, x0);
        let mut t = t0;
        loop {
            let e: f64 = Exp1.sample(rng);
            t += e / rate;
            if t >= t1 {
                break;
            }
            let span = t1 - tp;
            let z: f64 = StandardNormal.sample(rng);
            let mean = xp + (x1 - xp) * (t - tp) / span;
            let sd = self.sigma * ((t - tp) * (t1 - t) / span).sqrt();
            let xt = mean + sd * z;
            let v: f64 = Open01.sample(rng);
            let j = theta / v.sqrt();
            self.best = self.best.max(xt + j).max(self.bridge_max(xp, xt, t - tp, rng));
            self.level = self.level.max(xt);
            tp = t;
            xp = xt;
        }
        self.best = self.best.max(self.bridge_max(xp, x1, t1 - tp, rng));
    }

    fn bridge_max<R: Rng + ?Sized>(&self, a: f64, b: f64, span: f64, rng: &mut R) -> f64 {
        let v: f64 = Open01.sample(rng);
        let d = b - a;
        0.5 * (a + b + (d * d - 2.0 * self.sigma * self.sigma * span * v.ln()).sqrt())
    }
}

/// Estimate `E exp(-lambda int_0^inf dt / ((x - sigma B(t) + u t)^+)^2)`.
///
/// A path contributes 0 once `x - sigma B + u t` reaches 0.
pub fn mixed_sup_cdf_mc(law: &MixedSupLaw, x: f64, n_paths: usize, rng: &mut RandomStream) -> Result<MixedCdfEstimate> {
    Ok(mixed_sup_cdf_mc_grid(law, &[x], n_paths, rng)?[0])
}

/// [`mixed_sup_cdf_mc`] on a sorted grid of `x` values, with every path
/// shared by the whole grid.
///
/// The path is stepped with exact Gaussian increments on an adaptive grid
/// (base step `h`, growing with the distance to the kill boundary), the
/// integral is taken by the trapezoid rule, each step is weighted by the
/// probability that the bridge between the nodes does not touch the kill
/// boundary, and the part after the horizon is added in closed form.
pub fn mixed_sup_cdf_mc_grid(
    law: &MixedSupLaw,
    xs: &[f64],
    n_paths: usize,
    rng: &mut RandomStream,
) -> Result<Vec<MixedCdfEstimate>> {
    if xs.is_empty() {
        return Err(Error::Empty { what: "x grid" });
    }
    if n_paths < 2 {
        return Err(Error::param("n_paths", n_paths as f64, "must be >= 2"));
    }
    for &x in xs {
        positive("x", x)?;
    }
    if xs.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("x grid must be strictly increasing".into()));
    }
    let x_min = xs[0];
    let h0 = law.step.unwrap_or(1e-3 * (x_min / law.u).min(1.0));
    let horizon = law.estimator_horizon();
    let key = rng.next_u64();

    let per_path: Vec<(Vec<f64>, f64)> = (0..n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut prng = RandomStream::new(key, i);
            cdf_path(law, xs, h0, horizon, &mut prng)
        })
        .collect();

    let n = n_paths as f64;
    let mut out = Vec::with_capacity(xs.len());
    for (ix, &x) in xs.iter().enumerate() {
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        let mut late_kill = 0.0;
        let mut alive = 0usize;
        for (w, kill) in &per_path {
            sum += w[ix];
            sum_sq += w[ix] * w[ix];
            if ix == 0 && w[ix] > 0.0 {
                late_kill += kill;
                alive += 1;
            }
        }
        let mean = sum / n;
        let var = ((sum_sq / n - mean * mean) * n / (n - 1.0)).max(0.0);
        out.push(MixedCdfEstimate {
            x,
            estimate: mean,
            stderr: (var / n).sqrt(),
            horizon_warning: ix == 0 && alive > 0 && late_kill / alive as f64 > 0.01,
        });
    }
    let warn = out[0].horizon_warning;
    for e in &mut out {
        e.horizon_warning = warn;
    }
    if warn {
        log::warn!("mixed CDF estimator: horizon {horizon} leaves more than 1% of paths exposed to late killing");
    }
    Ok(out)
}

/// Per-`x` path weights and the post-horizon kill probability at the smallest `x`.
fn cdf_path(law: &MixedSupLaw, xs: &[f64], h0: f64, horizon: f64, rng: &mut RandomStream) -> (Vec<f64>, f64) {
    let (sigma, u, lambda) = (law.sigma, law.u, law.lambda);
    let var = sigma * sigma;
    let n = xs.len();
    let mut integral = vec![0.0; n];
    let mut survive = vec![1.0; n];
    let mut inv_sq_prev: Vec<f64> = xs.iter().map(|x| 1.0 / (x * x)).collect();
    // lowest index still alive; grid is sorted, so paths die from the left
    let mut first_alive = 0usize;
    let mut x_walk = 0.0f64;
    let mut t = 0.0f64;
    while t < horizon && first_alive < n {
        let d_min = xs[first_alive] - x_walk;
        let h = h0.max((0.01 * d_min * d_min / var).min(0.05 * d_min / u)).min(horizon - t);
        let z: f64 = StandardNormal.sample(rng);
        let step = sigma * h.sqrt() * z - u * h;
        x_walk += step;
        t += h;
        let start = first_alive;
        for i in start..n {
            let d_old = xs[i] - (x_walk - step);
            let d = xs[i] - x_walk;
            if d <= 0.0 {
                survive[i] = 0.0;
                first_alive = i + 1;
                continue;
            }
            survive[i] *= -(-2.0 * d_old * d / (var * h)).exp_m1();
            let inv_sq = 1.0 / (d * d);
            integral[i] += 0.5 * h * (inv_sq_prev[i] + inv_sq);
            inv_sq_prev[i] = inv_sq;
        }
    }
    let mut late_kill = 0.0;
    let weights = (0..n)
        .map(|i| {
            if i < first_alive {
                return 0.0;
            }
            let d = xs[i] - x_walk;
            let kill = (-2.0 * u * d / var).exp();
            if i == first_alive {
                late_kill = kill;
            }
            let tail = lambda / (u * d);
            survive[i] * (1.0 - kill) * (-lambda * (integral[i] + tail)).exp()
        })
        .collect();
    (weights, late_kill)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::limit_laws::{BmSupLaw, PppSupLaw};

    #[test]
    fn samples_are_positive() {
        let law = MixedSupLaw::new(1.0, 1.0, 1.0).unwrap();
        let mut rng = RandomStream::new(1, 0);
        for _ in 0..2000 {
            assert!(sample_mixed_sup(&law, &mut rng) > 0.0);
        }
    }

    #[test]
    fn vanishing_jumps_reduce_to_brownian_law() {
        let law = MixedSupLaw::new(1.0, 1e-12, 1.0).unwrap();
        let bm = BmSupLaw::new(1.0, 1.0).unwrap();
        let xs = [0.1, 0.3, 0.7, 1.5];
        let est = mixed_sup_cdf_mc_grid(&law, &xs, 4000, &mut RandomStream::new(2, 0)).unwrap();
        for e in est {
            let target = bm.cdf(e.x);
            assert!((e.estimate - target).abs() < 2.0 * e.stderr + 0.01, "{e:?} vs {target}");
        }
    }

    #[test]
    fn monotone_in_x() {
        let law = MixedSupLaw::new(1.0, 1.0, 1.0).unwrap();
        let mut rng = RandomStream::new(3, 0);
        let e: Vec<_> = [1.0, 3.0, 10.0]
            .iter()
            .map(|&x| mixed_sup_cdf_mc(&law, x, 4000, &mut rng).unwrap())
            .collect();
        for w in e.windows(2) {
            assert!(w[0].estimate < w[1].estimate + 2.0 * (w[0].stderr + w[1].stderr));
        }
        assert!(e.iter().all(|e| (0.0..=1.0).contains(&e.estimate)));
    }

    #[test]
    fn estimator_matches_sampler_at_five() {
        let law = MixedSupLaw::new(1.0, 1.0, 1.0).unwrap();
        let est = mixed_sup_cdf_mc(&law, 5.0, 20_000, &mut RandomStream::new(4, 0)).unwrap();
        let mut rng = RandomStream::new(4, 1);
        let n = 20_000;
        let hits = (0..n).filter(|_| sample_mixed_sup(&law, &mut rng) <= 5.0).count();
        let emp = hits as f64 / n as f64;
        let band = 2.0 * est.stderr + 0.02;
        assert!((emp - est.estimate).abs() < band, "{emp} vs {est:?}");
    }

    #[test]
    fn small_sigma_reduces_to_point_process_law() {
        let law = MixedSupLaw::new(1e-6, 1e4, 1.0).unwrap();
        let ppp = PppSupLaw::infinite(1e4, 2.0, 1.0).unwrap();
        let mut rng = RandomStream::new(5, 0);
        let mut xs: Vec<f64> = (0..4000).map(|_| sample_mixed_sup(&law, &mut rng)).collect();
        xs.sort_by(f64::total_cmp);
        let n = xs.len() as f64;
        let d = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = ppp.cdf(x);
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max);
        assert!(d < 1.62762 / n.sqrt() + 0.005, "{d}");
    }

    #[test]
    fn rejects_bad_grids() {
        let law = MixedSupLaw::new(1.0, 1.0, 1.0).unwrap();
        let mut rng = RandomStream::new(1, 0);
        assert!(mixed_sup_cdf_mc_grid(&law, &[], 10, &mut rng).is_err());
        assert!(mixed_sup_cdf_mc_grid(&law, &[2.0, 1.0], 10, &mut rng).is_err());
        assert!(mixed_sup_cdf_mc(&law, -1.0, 10, &mut rng).is_err());
    }
}
