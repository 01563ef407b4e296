//! Streaming evaluation of `log Y(au)` and `Z(au)` along one trajectory of
//! the perturbed random walk `S_k - a u k + zeta_{k+1}`, shared across a
//! grid of `u` values.
//!
//! A run has two phases. The exact phase draws every `(xi, zeta)` pair
//! until the walk part `S_k - a u k` has fallen far enough below `Z(u)` for
//! every `u`. The sparse phase then only visits indices where `zeta` exceeds
//! a threshold that rises linearly in `k`; all other terms are provably
//! (up to a configured miss probability) below `Z(u) - delta` and summable.
//! Walk increments between visited indices are drawn as partial sums.

mod lse;
mod shape;

pub use lse::{log_sum_exp_stream, LogSumExp};
pub use shape::{check_convexity, check_shape, ConvexityReport, ShapeReport};

use serde::{Deserialize, Serialize};

use crate::distributions::{sample_geometric, IncrementModel, TailModel};
use crate::error::{Error, Result};
use crate::rng::RandomStream;

/// Last index the sparse phase may reach.
const HORIZON_CAP: u64 = 1 << 62;

/// Above this exceedance probability the sparse phase steps densely.
const DENSE_THRESHOLD: f64 = 0.25;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TruncationRule {
    /// Log-scale margin below `Z(u)` under which terms count as negligible.
    pub delta: f64,
    /// Minimum exact horizon is `k_min_factor / a^2` steps.
    pub k_min_factor: f64,
    /// Consecutive steps the stopping condition must hold.
    pub patience: u32,
    /// Target probability of missing a relevant term (walk return or jump).
    pub miss_probability: f64,
    /// Hard cap on exactly simulated steps.
    pub step_cap: u64,
}

impl Default for TruncationRule {
    fn default() -> Self {
        TruncationRule {
            delta: 40.0,
            k_min_factor: 10.0,
            patience: 3,
            miss_probability: 1e-6,
            step_cap: 1_000_000_000,
        }
    }
}

impl TruncationRule {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("delta", self.delta), ("k_min_factor", self.k_min_factor)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(name, v, "must be finite and > 0"));
            }
        }
        if self.patience == 0 {
            return Err(Error::param("patience", 0.0, "must be >= 1"));
        }
        if !(self.miss_probability > 0.0 && self.miss_probability < 1.0) {
            return Err(Error::param("miss_probability", self.miss_probability, "must lie in (0, 1)"));
        }
        if self.step_cap == 0 {
            return Err(Error::param("step_cap", 0.0, "must be >= 1"));
        }
        Ok(())
    }

    /// Minimum number of exact steps for discount rate `a`.
    pub fn k_min(&self, a: f64) -> u64 {
        (self.k_min_factor / (a * a)).ceil() as u64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PerpetuityParams {
    a: f64,
    u_grid: Vec<f64>,
    trunc: TruncationRule,
    increment: IncrementModel,
    tail: TailModel,
}

impl PerpetuityParams {
    pub fn new(
        a: f64,
        u_grid: Vec<f64>,
        trunc: TruncationRule,
        increment: IncrementModel,
        tail: TailModel,
    ) -> Result<Self> {
        if !(a.is_finite() && a > 0.0 && a <= 1.0) {
            return Err(Error::param("a", a, "must lie in (0, 1]"));
        }
        if u_grid.is_empty() {
            return Err(Error::Empty { what: "u_grid" });
        }
        for &u in &u_grid {
            if !(u.is_finite() && u > 0.0) {
                return Err(Error::param("u", u, "grid points must be finite and > 0"));
            }
        }
        if u_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("u_grid must be strictly increasing".into()));
        }
        trunc.validate()?;
        Ok(PerpetuityParams {
            a,
            u_grid,
            trunc,
            increment,
            tail,
        })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn u_grid(&self) -> &[f64] {
        &self.u_grid
    }

    pub fn trunc(&self) -> &TruncationRule {
        &self.trunc
    }

    pub fn increment(&self) -> &IncrementModel {
        &self.increment
    }

    pub fn tail(&self) -> &TailModel {
        &self.tail
    }

    fn u_min(&self) -> f64 {
        self.u_grid[0]
    }

    /// Allowance for the walk rising above its level at the end of the
    /// exact phase against a drift of at least `3 a u_min / 4`: exceeded
    /// with probability below `miss_probability`.
    fn walk_allowance(&self) -> f64 {
        self.increment.variance() * (1.0 / self.trunc.miss_probability).ln() / (self.a * self.u_min())
    }
}

/// One simulated realisation evaluated on the `u` grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerpetuityRun {
    pub u_grid: Vec<f64>,
    /// `log sum_{k <= K} exp(S_k - a u k) eta_{k+1}` per grid point.
    pub log_y: Vec<f64>,
    /// `max_{k <= K} (S_k - a u k + zeta_{k+1})` per grid point.
    pub z: Vec<f64>,
    /// Last index covered (exactly or by the sparse phase).
    pub horizon: u64,
    /// Number of exactly simulated steps.
    pub exact_steps: u64,
    /// Envelope bound on the log of the neglected mass, per grid point.
    pub tail_log_mass: Vec<f64>,
    /// Expected number of relevant terms beyond the horizon.
    pub residual_miss: f64,
    pub stream: u64,
}

impl PerpetuityRun {
    /// Largest relative neglected mass over the grid, on log scale.
    pub fn tail_bound(&self) -> f64 {
        self.tail_log_mass
            .iter()
            .zip(&self.log_y)
            .map(|(t, y)| t - y)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

struct Accumulators {
    drift: Vec<f64>,
    sums: Vec<LogSumExp>,
}

impl Accumulators {
    fn new(a: f64, u_grid: &[f64]) -> Self {
        Accumulators {
            drift: u_grid.iter().map(|u| a * u).collect(),
            sums: vec![LogSumExp::new(); u_grid.len()],
        }
    }

    #[inline]
    fn push(&mut self, k: u64, level: f64) {
        let kf = k as f64;
        for (acc, d) in self.sums.iter_mut().zip(&self.drift) {
            acc.push(level - d * kf);
        }
    }

    /// `min_u (Z(u) - (s - a u k))`.
    #[inline]
    fn slack(&self, k: u64, s: f64) -> f64 {
        let kf = k as f64;
        self.sums
            .iter()
            .zip(&self.drift)
            .map(|(acc, d)| acc.max() - (s - d * kf))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Simulate one run on the shared `u` grid.
pub fn simulate_run(params: &PerpetuityParams, rng: &mut RandomStream) -> Result<PerpetuityRun> {
    let stream = rng.id();
    let mut run = simulate_with(params, rng, None)?;
    run.stream = stream;
    Ok(run)
}

/// `log Y` on one path under the configured rule and under a rule whose
/// `delta` is multiplied by `factor`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationCheck {
    pub log_y: Vec<f64>,
    pub log_y_wide: Vec<f64>,
    pub max_abs_diff: f64,
}

/// Run the path under the widened rule and replay the configured rule on
/// the same draws, so the two estimates differ only by what the narrower
/// rule discards.
pub fn truncation_check(params: &PerpetuityParams, factor: f64, rng: &mut RandomStream) -> Result<TruncationCheck> {
    if !(factor.is_finite() && factor >= 1.0) {
        return Err(Error::param("factor", factor, "must be finite and >= 1"));
    }
    let mut wide = params.clone();
    wide.trunc.delta *= factor;
    let mut shadow = Shadow::new(params);
    let run = simulate_with(&wide, rng, Some(&mut shadow))?;
    let log_y: Vec<f64> = shadow.acc.sums.iter().map(LogSumExp::value).collect();
    let max_abs_diff = log_y
        .iter()
        .zip(&run.log_y)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    Ok(TruncationCheck {
        log_y,
        log_y_wide: run.log_y,
        max_abs_diff,
    })
}

/// Level below which `zeta` at indices from `block_start` on cannot lift a
/// term to within `delta` of `Z`.
fn sparse_level(
    acc: &Accumulators,
    anchor: (u64, f64),
    block_start: u64,
    margin: f64,
    slope: f64,
) -> f64 {
    acc.slack(anchor.0, anchor.1) - margin + slope * (block_start - anchor.0) as f64
}

fn initial_block_len(slope: f64) -> u64 {
    ((1.0 / slope).ceil() as u64).max(1)
}

enum ShadowPhase {
    Exact { streak: u32 },
    Sparse { anchor: (u64, f64), block_end: u64, block_len: u64, level: f64 },
    Done,
}

/// Replays the truncation rule of `params` on terms offered by a run with a
/// wider rule.
struct Shadow {
    acc: Accumulators,
    phase: ShadowPhase,
    tail: TailModel,
    k_min: u64,
    patience: u32,
    margin: f64,
    slope: f64,
    miss_probability: f64,
}

impl Shadow {
    fn new(params: &PerpetuityParams) -> Self {
        Shadow {
            acc: Accumulators::new(params.a, &params.u_grid),
            phase: ShadowPhase::Exact { streak: 0 },
            tail: params.tail,
            k_min: params.trunc.k_min(params.a),
            patience: params.trunc.patience,
            margin: params.trunc.delta + params.walk_allowance(),
            slope: params.a * params.u_min() / 4.0,
            miss_probability: params.trunc.miss_probability,
        }
    }

    fn open_block(&self, anchor: (u64, f64), block_start: u64, block_len: u64) -> ShadowPhase {
        let level = sparse_level(&self.acc, anchor, block_start, self.margin, self.slope);
        let remaining = self.tail.tail(level) + self.tail.integrated_tail(level) / self.slope;
        if remaining < self.miss_probability || block_start >= HORIZON_CAP {
            return ShadowPhase::Done;
        }
        ShadowPhase::Sparse {
            anchor,
            block_end: block_start.saturating_add(block_len).min(HORIZON_CAP),
            block_len,
            level,
        }
    }

    fn offer(&mut self, k: u64, s: f64, zeta: f64) {
        match self.phase {
            ShadowPhase::Exact { streak } => {
                self.acc.push(k, s + zeta);
                if k < self.k_min {
                    return;
                }
                let streak = if self.acc.slack(k, s) > self.margin { streak + 1 } else { 0 };
                self.phase = if streak >= self.patience {
                    self.open_block((k, s), k + 1, initial_block_len(self.slope))
                } else {
                    ShadowPhase::Exact { streak }
                };
            }
            ShadowPhase::Sparse { .. } => {
                while let ShadowPhase::Sparse { anchor, block_end, block_len, .. } = self.phase {
                    if k < block_end {
                        break;
                    }
                    self.phase = self.open_block(anchor, block_end, block_len.saturating_mul(2));
                }
                if let ShadowPhase::Sparse { level, .. } = self.phase {
                    if zeta > level {
                        self.acc.push(k, s + zeta);
                    }
                }
            }
            ShadowPhase::Done => {}
        }
    }
}

fn simulate_with<R: rand::Rng + ?Sized>(
    params: &PerpetuityParams,
    rng: &mut R,
    mut shadow: Option<&mut Shadow>,
) -> Result<PerpetuityRun> {
    let a = params.a;
    let trunc = &params.trunc;
    let xi = &params.increment;
    let zeta = &params.tail;
    let mut acc = Accumulators::new(a, &params.u_grid);
    let mut offer = |k: u64, s: f64, z: f64| {
        if let Some(sh) = shadow.as_deref_mut() {
            sh.offer(k, s, z);
        }
    };

    let margin = trunc.delta + params.walk_allowance();
    let k_min = trunc.k_min(a);

    // exact phase: term k pairs S_k with zeta_{k+1}
    let mut k: u64 = 0;
    let mut s = 0.0;
    let mut streak = 0u32;
    loop {
        let z_next = zeta.sample(rng);
        acc.push(k, s + z_next);
        offer(k, s, z_next);
        if k >= k_min {
            if acc.slack(k, s) > margin {
                streak += 1;
                if streak >= trunc.patience {
                    break;
                }
            } else {
                streak = 0;
            }
        }
        s += xi.sample(rng);
        k += 1;
        if k > trunc.step_cap {
            return Err(Error::RunawayGuard {
                steps: k,
                cap: trunc.step_cap,
                a,
                hint: "discount rate too small for the step cap, or a misconfigured truncation rule",
            });
        }
    }
    let exact_steps = k + 1;

    // sparse phase, anchored at the end of the exact phase
    let anchor = (k, s);
    let slope = a * params.u_min() / 4.0;
    let mut pos = k;
    let mut block_start = k + 1;
    let mut block_len = initial_block_len(slope);
    let residual_miss;
    loop {
        let level = sparse_level(&acc, anchor, block_start, margin, slope);
        let remaining = zeta.tail(level) + zeta.integrated_tail(level) / slope;
        if remaining < trunc.miss_probability || block_start >= HORIZON_CAP {
            residual_miss = remaining;
            break;
        }
        let block_end = block_start.saturating_add(block_len).min(HORIZON_CAP);
        let p = zeta.tail(level);
        if p > DENSE_THRESHOLD {
            for idx in block_start..block_end {
                s += advance(xi, idx - pos, rng);
                pos = idx;
                let z_next = zeta.sample(rng);
                acc.push(pos, s + z_next);
                offer(pos, s, z_next);
            }
        } else if p > 0.0 {
            let mut next = block_start.saturating_add(sample_geometric(p, rng));
            while next < block_end {
                s += advance(xi, next - pos, rng);
                pos = next;
                let z_next = zeta.sample_above(level, rng);
                acc.push(pos, s + z_next);
                offer(pos, s, z_next);
                next = next.saturating_add(1).saturating_add(sample_geometric(p, rng));
            }
        }
        block_start = block_end;
        block_len = block_len.saturating_mul(2);
    }

    let log_y: Vec<f64> = acc.sums.iter().map(LogSumExp::value).collect();
    let z: Vec<f64> = acc.sums.iter().map(LogSumExp::max).collect();
    let envelope = -(-(-slope).exp_m1()).ln();
    let tail_log_mass = z.iter().map(|zu| zu - trunc.delta + envelope).collect();

    Ok(PerpetuityRun {
        u_grid: params.u_grid.clone(),
        log_y,
        z,
        horizon: block_start - 1,
        exact_steps,
        tail_log_mass,
        residual_miss,
        stream: 0,
    })
}

#[inline]
fn advance<R: rand::Rng + ?Sized>(xi: &IncrementModel, steps: u64, rng: &mut R) -> f64 {
    if steps == 1 {
        xi.sample(rng)
    } else {
        xi.sample_sum(steps, rng)
    }
}
