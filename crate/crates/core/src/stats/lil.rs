use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::{IncrementModel, TailModel};
use crate::error::{Error, Result};
use crate::limit_laws::log_exp_functional_grid;
use crate::perpetuity::{simulate_run, PerpetuityParams, TruncationRule};
use crate::rng::RandomStream;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LilNormalization {
    /// `2a log Y(a) / log log(1/a)`.
    PerpetuityLil,
    /// `max_{k <= n} (S_k + zeta_{k+1}) / sqrt(n log log n)`.
    SupremaLil,
    /// `2a log int exp(B(s) - a s) ds / log log(1/a)`.
    BmFunctionalLil,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub scale: f64,
    pub statistic: f64,
    pub running_max: f64,
}

/// Statistic of one trajectory along a sequence of scales approaching the limit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimsupTrace {
    pub checkpoints: Vec<Checkpoint>,
    pub target: f64,
    pub normalization: LilNormalization,
    /// Requested scales dropped because they exceeded the step budget.
    pub dropped: Vec<f64>,
}

impl LimsupTrace {
    fn new(pairs: Vec<(f64, f64)>, target: f64, normalization: LilNormalization, dropped: Vec<f64>) -> Result<Self> {
        let mut running = f64::NEG_INFINITY;
        let mut checkpoints = Vec::with_capacity(pairs.len());
        for (scale, statistic) in pairs {
            if !statistic.is_finite() {
                return Err(Error::NonFinite { what: "LIL statistic" });
            }
            running = running.max(statistic);
            checkpoints.push(Checkpoint {
                scale,
                statistic,
                running_max: running,
            });
        }
        Ok(LimsupTrace {
            checkpoints,
            target,
            normalization,
            dropped,
        })
    }

    pub fn last(&self) -> Option<&Checkpoint> {
        self.checkpoints.last()
    }
}

/// Validated discount grid: strictly decreasing, inside `(0, 1/e)`.
fn discount_grid(a_grid: &[f64]) -> Result<()> {
    if a_grid.is_empty() {
        return Err(Error::Empty { what: "a grid" });
    }
    let bound = (-1.0f64).exp();
    for &a in a_grid {
        if !(a > 0.0 && a < bound) {
            return Err(Error::param("a", a, "LIL grids must lie in (0, 1/e)"));
        }
    }
    if a_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Config("LIL a grid must be strictly decreasing".into()));
    }
    Ok(())
}

fn require_lil_moment(tail: &TailModel) -> Result<()> {
    if tail.has_lil_moment() {
        Ok(())
    } else {
        Err(Error::Hypothesis {
            hypothesis: "E f(zeta+) < inf with f(x) = x^2 / log log x",
            detail: format!("{:?} has a tail too heavy for the iterated-logarithm law", tail.kind()),
        })
    }
}

fn loglog(x: f64) -> f64 {
    x.ln().ln()
}

/// `2a log Y(a) / log log(1/a)` for every `a` in the strictly decreasing
/// `a_grid`, all on one trajectory of `(xi, zeta)`.
///
/// The whole grid is one run at the smallest `a` with `u = a_i / a_min`.
/// Discount rates whose exact phase would exceed `step_budget` are dropped
/// from the small end with a warning.
pub fn lil_trace_perpetuity(
    increment: &IncrementModel,
    tail: &TailModel,
    a_grid: &[f64],
    step_budget: u64,
    rng: &mut RandomStream,
) -> Result<LimsupTrace> {
    require_lil_moment(tail)?;
    discount_grid(a_grid)?;
    let base = TruncationRule::default();
    let mut kept: Vec<f64> = a_grid.to_vec();
    let mut dropped = Vec::new();
    let needed = |a: f64| {
        let walk = increment.variance() * (1.0 / base.miss_probability).ln();
        ((base.k_min_factor + walk + base.delta) / (a * a)) as u64
    };
    while kept.last().is_some_and(|&a| needed(a) > step_budget) {
        dropped.push(kept.pop().expect("nonempty"));
    }
    loop {
        let Some(&a_min) = kept.last() else {
            return Err(Error::Config(format!(
                "no discount rate in the LIL grid fits the step budget of {step_budget}"
            )));
        };
        let u_grid: Vec<f64> = kept.iter().rev().map(|a| a / a_min).collect();
        let trunc = TruncationRule {
            step_cap: step_budget,
            ..base
        };
        let params = PerpetuityParams::new(a_min, u_grid, trunc, *increment, *tail)?;
        let mut attempt = rng.clone();
        match simulate_run(&params, &mut attempt) {
            Ok(run) => {
                if !dropped.is_empty() {
                    log::warn!("LIL perpetuity trace: dropped a = {dropped:?} (step budget {step_budget})");
                }
                let pairs = kept
                    .iter()
                    .zip(run.log_y.iter().rev())
                    .map(|(&a, &ly)| (a, 2.0 * a * ly / loglog(1.0 / a)))
                    .collect();
                *rng = attempt;
                return LimsupTrace::new(pairs, increment.sigma(), LilNormalization::PerpetuityLil, dropped);
            }
            Err(Error::RunawayGuard { .. }) => dropped.push(kept.pop().expect("nonempty")),
            Err(e) => return Err(e),
        }
    }
}

/// `max_{k <= n} (S_k + zeta_{k+1}) / sqrt(n log log n)` at every `n` in the
/// strictly increasing `n_grid`, along one trajectory.
pub fn lil_trace_suprema<R: Rng + ?Sized>(
    increment: &IncrementModel,
    tail: &TailModel,
    n_grid: &[u64],
    step_budget: u64,
    rng: &mut R,
) -> Result<LimsupTrace> {
    require_lil_moment(tail)?;
    if n_grid.is_empty() {
        return Err(Error::Empty { what: "n grid" });
    }
    if n_grid[0] < 3 {
        return Err(Error::param("n", n_grid[0] as f64, "LIL checkpoints start at n >= 3"));
    }
    if n_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("LIL n grid must be strictly increasing".into()));
    }
    let kept: Vec<u64> = n_grid.iter().copied().filter(|&n| n <= step_budget).collect();
    let dropped: Vec<f64> = n_grid[kept.len()..].iter().map(|&n| n as f64).collect();
    if kept.is_empty() {
        return Err(Error::Config(format!("no checkpoint fits the step budget of {step_budget}")));
    }
    if !dropped.is_empty() {
        log::warn!("LIL suprema trace: dropped n = {dropped:?} (step budget {step_budget})");
    }
    let mut pairs = Vec::with_capacity(kept.len());
    let mut s = 0.0;
    let mut best = f64::NEG_INFINITY;
    let mut k: u64 = 0;
    for &n in &kept {
        while k <= n {
            best = best.max(s + tail.sample(rng));
            s += increment.sample(rng);
            k += 1;
        }
        let nf = n as f64;
        pairs.push((nf, best / (nf * loglog(nf)).sqrt()));
    }
    LimsupTrace::new(pairs, std::f64::consts::SQRT_2 * increment.sigma(), LilNormalization::SupremaLil, dropped)
}

/// `2a log int_0^inf exp(B(s) - a s) ds / log log(1/a)` for every `a` in the
/// strictly decreasing `a_grid`, on one Brownian path with step `h`.
///
/// Discount rates needing more than `step_budget` steps are dropped with a warning.
pub fn lil_trace_bm_functional<R: Rng + ?Sized>(
    a_grid: &[f64],
    h: f64,
    step_budget: u64,
    rng: &mut R,
) -> Result<LimsupTrace> {
    discount_grid(a_grid)?;
    let mut kept = a_grid.to_vec();
    let mut dropped = Vec::new();
    while kept.last().is_some_and(|&a| 10.0 / (a * a * h) > step_budget as f64) {
        dropped.push(kept.pop().expect("nonempty"));
    }
    if kept.is_empty() {
        return Err(Error::Config(format!("no discount rate fits the step budget of {step_budget}")));
    }
    if !dropped.is_empty() {
        log::warn!("LIL functional trace: dropped a = {dropped:?} (step budget {step_budget})");
    }
    let logs = log_exp_functional_grid(&kept, h, rng)?;
    let pairs = kept
        .iter()
        .zip(&logs)
        .map(|(&a, &l)| (a, 2.0 * a * l / loglog(1.0 / a)))
        .collect();
    LimsupTrace::new(pairs, 1.0, LilNormalization::BmFunctionalLil, dropped)
}

/// `r^-n0, r^-(n0+1), ..., r^-n1`.
pub fn geometric_discounts(r: f64, n0: i32, n1: i32) -> Result<Vec<f64>> {
    if !(r.is_finite() && r > 1.0) {
        return Err(Error::param("r", r, "must be > 1"));
    }
    Ok((n0..=n1).map(|n| r.powi(-n)).collect())
}

/// Roughly geometric integer checkpoints from `lo` to `hi`.
pub fn geometric_counts(lo: u64, hi: u64, points: usize) -> Vec<u64> {
    let mut out: Vec<u64> = (0..points)
        .map(|i| {
            let f = i as f64 / (points.max(2) - 1) as f64;
            ((lo as f64).ln() * (1.0 - f) + (hi as f64).ln() * f).exp().round() as u64
        })
        .collect();
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_perpetuity_trace() {
        let a = geometric_discounts(2.0, 2, 8).unwrap();
        let tr = lil_trace_perpetuity(
            &IncrementModel::constant_zero(),
            &TailModel::zero(),
            &a,
            u64::MAX,
            &mut RandomStream::new(1, 0),
        )
        .unwrap();
        assert_eq!(tr.target, 0.0);
        for c in &tr.checkpoints {
            let a = c.scale;
            let exact = 2.0 * a * -(-(-a).exp_m1()).ln() / loglog(1.0 / a);
            assert!((c.statistic - exact).abs() < 1e-9, "{c:?} vs {exact}");
        }
        let s: Vec<f64> = tr.checkpoints.iter().map(|c| c.statistic).collect();
        assert!(s.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn perpetuity_target_is_sigma() {
        let a = geometric_discounts(2.0, 4, 7).unwrap();
        let xi = IncrementModel::gaussian(1.5).unwrap();
        let tr = lil_trace_perpetuity(&xi, &TailModel::light_exp(1.0).unwrap(), &a, 1 << 30, &mut RandomStream::new(2, 0)).unwrap();
        assert_eq!(tr.target, 1.5);
        assert_eq!(tr.normalization, LilNormalization::PerpetuityLil);
    }

    #[test]
    fn perpetuity_budget_truncates_grid() {
        let a = geometric_discounts(2.0, 4, 12).unwrap();
        let xi = IncrementModel::gaussian(1.0).unwrap();
        let tr = lil_trace_perpetuity(&xi, &TailModel::light_exp(1.0).unwrap(), &a, 2_000_000, &mut RandomStream::new(3, 0)).unwrap();
        assert!(!tr.dropped.is_empty());
        assert_eq!(tr.checkpoints.len() + tr.dropped.len(), a.len());
    }

    #[test]
    fn heavy_tails_rejected() {
        let xi = IncrementModel::gaussian(1.0).unwrap();
        let q = TailModel::quadratic(1.0, 1.0).unwrap();
        let mut rng = RandomStream::new(1, 0);
        assert!(matches!(
            lil_trace_suprema(&xi, &q, &[10, 100], 1000, &mut rng),
            Err(Error::Hypothesis { .. })
        ));
        assert!(lil_trace_perpetuity(&xi, &q, &[0.1], 1000, &mut rng).is_err());
    }

    #[test]
    fn suprema_target_and_prefix_consistency() {
        let xi = IncrementModel::gaussian(2.0).unwrap();
        let z = TailModel::light_exp(1.0).unwrap();
        let long = lil_trace_suprema(&xi, &z, &[100, 1000, 10_000], u64::MAX, &mut RandomStream::new(4, 0)).unwrap();
        let short = lil_trace_suprema(&xi, &z, &[100, 1000], u64::MAX, &mut RandomStream::new(4, 0)).unwrap();
        assert_eq!(long.target, 2.0 * std::f64::consts::SQRT_2);
        assert_eq!(&long.checkpoints[..2], &short.checkpoints[..]);
    }

    #[test]
    fn bm_functional_trace() {
        let a = geometric_discounts(2.0, 2, 4).unwrap();
        let tr = lil_trace_bm_functional(&a, 0.005, u64::MAX, &mut RandomStream::new(5, 0)).unwrap();
        assert_eq!(tr.target, 1.0);
        assert_eq!(tr.checkpoints.len(), 3);
        let again = lil_trace_bm_functional(&a, 0.005, u64::MAX, &mut RandomStream::new(5, 0)).unwrap();
        assert_eq!(tr, again);
    }

    #[test]
    fn grids_validated() {
        let mut rng = RandomStream::new(1, 0);
        assert!(lil_trace_bm_functional(&[0.5], 0.01, u64::MAX, &mut rng).is_err());
        assert!(lil_trace_bm_functional(&[0.1, 0.2], 0.001, u64::MAX, &mut rng).is_err());
        assert!(geometric_discounts(1.0, 1, 2).is_err());
        assert_eq!(geometric_counts(10, 1000, 3), vec![10, 100, 1000]);
    }
}
