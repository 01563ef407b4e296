//! Input laws of the perturbed random walk and the elementary laws used by
//! the limit-law samplers.
//!
//! `IncrementModel` describes the walk step `xi` (mean zero, variance
//! `sigma^2`). `TailModel` describes `zeta = log eta` on `[0, inf)` through an
//! exact tail function, so every sampler here is an exact inverse-CDF draw
//! and every tail probability has a closed form.

use rand::Rng;
use rand_distr::{Binomial, Distribution, Exp1, Gamma, Open01, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SQRT_3: f64 = 1.732_050_807_568_877_2;

/// Above this many terms a centered-uniform partial sum is drawn from its
/// Gaussian approximation instead of being summed term by term.
const UNIFORM_EXACT_SUM_LIMIT: u64 = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IncrementKind {
    Gaussian,
    Rademacher,
    CenteredUniform,
    ShiftedExponential,
    /// `xi = 0`. Violates the positive-variance requirement; only reachable
    /// through [`IncrementModel::constant_zero`] for degenerate test inputs.
    #[doc(hidden)]
    Constant0,
}

/// Law of the walk step `xi`: mean zero, standard deviation `sigma`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawIncrement", into = "RawIncrement")]
pub struct IncrementModel {
    kind: IncrementKind,
    sigma: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawIncrement {
    kind: IncrementKind,
    #[serde(default = "one")]
    sigma: f64,
}

fn one() -> f64 {
    1.0
}

impl TryFrom<RawIncrement> for IncrementModel {
    type Error = Error;
    fn try_from(raw: RawIncrement) -> Result<Self> {
        IncrementModel::new(raw.kind, raw.sigma)
    }
}

impl From<IncrementModel> for RawIncrement {
    fn from(m: IncrementModel) -> Self {
        RawIncrement {
            kind: m.kind,
            sigma: m.sigma,
        }
    }
}

impl IncrementModel {
    pub fn new(kind: IncrementKind, sigma: f64) -> Result<Self> {
        if kind == IncrementKind::Constant0 {
            return Err(Error::Hypothesis {
                hypothesis: "finite positive variance of the walk step",
                detail: "the constant-zero increment is reserved for degenerate test inputs".into(),
            });
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::param("sigma", sigma, "must be finite and > 0"));
        }
        Ok(IncrementModel { kind, sigma })
    }

    pub fn gaussian(sigma: f64) -> Result<Self> {
        Self::new(IncrementKind::Gaussian, sigma)
    }

    /// The degenerate step `xi = 0`, for closed-form test cases only.
    #[doc(hidden)]
    pub fn constant_zero() -> Self {
        IncrementModel {
            kind: IncrementKind::Constant0,
            sigma: 0.0,
        }
    }

    pub fn kind(&self) -> IncrementKind {
        self.kind
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn variance(&self) -> f64 {
        self.sigma * self.sigma
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.kind {
            IncrementKind::Gaussian => {
                let z: f64 = StandardNormal.sample(rng);
                self.sigma * z
            }
            IncrementKind::Rademacher => {
                if rng.next_u32() & 1 == 0 {
                    self.sigma
                } else {
                    -self.sigma
                }
            }
            IncrementKind::CenteredUniform => {
                let u: f64 = rng.random();
                self.sigma * SQRT_3 * (2.0 * u - 1.0)
            }
            IncrementKind::ShiftedExponential => {
                let e: f64 = Exp1.sample(rng);
                self.sigma * (e - 1.0)
            }
            IncrementKind::Constant0 => 0.0,
        }
    }

    /// Sum of `n` independent steps drawn in one shot.
    ///
    /// Exact for every kind except `CenteredUniform` with `n > 4096`, where
    /// the Irwin-Hall law is replaced by its Gaussian approximation.
    pub fn sample_sum<R: Rng + ?Sized>(&self, n: u64, rng: &mut R) -> f64 {
        if n == 0 {
            return 0.0;
        }
        let nf = n as f64;
        match self.kind {
            IncrementKind::Gaussian => {
                let z: f64 = StandardNormal.sample(rng);
                self.sigma * nf.sqrt() * z
            }
            IncrementKind::Rademacher => {
                let heads = Binomial::new(n, 0.5)
                    .expect("p = 0.5 is a valid binomial parameter")
                    .sample(rng);
                self.sigma * (2.0 * heads as f64 - nf)
            }
            IncrementKind::ShiftedExponential => {
                let g: f64 = Gamma::new(nf, 1.0)
                    .expect("positive shape")
                    .sample(rng);
                self.sigma * (g - nf)
            }
            IncrementKind::CenteredUniform if n <= UNIFORM_EXACT_SUM_LIMIT => {
                (0..n).map(|_| self.sample(rng)).sum()
            }
            IncrementKind::CenteredUniform => {
                let z: f64 = StandardNormal.sample(rng);
                self.sigma * nf.sqrt() * z
            }
            IncrementKind::Constant0 => 0.0,
        }
    }
}

/// One draw of the walk step.
#[inline]
pub fn sample_xi<R: Rng + ?Sized>(model: &IncrementModel, rng: &mut R) -> f64 {
    model.sample(rng)
}

/// Parametrisation of the law of `zeta = log eta`.
///
/// `ParetoRv` and `QuadraticTail` have `P{zeta > t} = min(1, c t^-p)` for
/// `t >= t0` and `P{zeta > t} = 1` below `t0`; when `c t0^-p < 1` the law
/// has an atom at `t0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TailKind {
    /// `P{zeta > t} = exp(-rate t)`.
    LightExp { rate: f64 },
    /// Regularly varying tail of index `-beta`, `beta` in `(1, 2)`.
    ParetoRv { beta: f64, kappa: f64, t0: f64 },
    /// `P{zeta > t} = min(1, lambda t^-2)` for `t >= t0`.
    QuadraticTail { lambda: f64, t0: f64 },
    /// `zeta = 0`, i.e. `eta = 1`.
    Zero,
}

/// Validated law of `zeta = log eta`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TailKind", into = "TailKind")]
pub struct TailModel {
    kind: TailKind,
}

impl TryFrom<TailKind> for TailModel {
    type Error = Error;
    fn try_from(kind: TailKind) -> Result<Self> {
        make_tail_model(kind)
    }
}

impl From<TailModel> for TailKind {
    fn from(m: TailModel) -> Self {
        m.kind
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::param(name, v, "must be finite and > 0"))
    }
}

/// Validate a tail parametrisation.
pub fn make_tail_model(kind: TailKind) -> Result<TailModel> {
    match kind {
        TailKind::LightExp { rate } => positive("rate", rate)?,
        TailKind::ParetoRv { beta, kappa, t0 } => {
            if !beta.is_finite() || beta <= 1.0 {
                return Err(Error::param(
                    "beta",
                    beta,
                    "must lie in (1, 2): at beta = 1 the limiting point-process supremum is +inf almost surely",
                ));
            }
            if beta == 2.0 {
                return Err(Error::param(
                    "beta",
                    beta,
                    "a pure index-2 Pareto tail has t^2 P{zeta > t} -> kappa, not infinity; \
                     use quadratic_tail (the mixed Brownian/point-process regime) instead",
                ));
            }
            if beta > 2.0 {
                return Err(Error::param(
                    "beta",
                    beta,
                    "must lie in (1, 2); tails lighter than t^-2 belong to light_exp",
                ));
            }
            positive("kappa", kappa)?;
            positive("t0", t0)?;
        }
        TailKind::QuadraticTail { lambda, t0 } => {
            positive("lambda", lambda)?;
            positive("t0", t0)?;
        }
        TailKind::Zero => {}
    }
    Ok(TailModel { kind })
}

impl TailModel {
    pub fn new(kind: TailKind) -> Result<Self> {
        make_tail_model(kind)
    }

    pub fn light_exp(rate: f64) -> Result<Self> {
        make_tail_model(TailKind::LightExp { rate })
    }

    pub fn pareto(beta: f64, kappa: f64, t0: f64) -> Result<Self> {
        make_tail_model(TailKind::ParetoRv { beta, kappa, t0 })
    }

    pub fn quadratic(lambda: f64, t0: f64) -> Result<Self> {
        make_tail_model(TailKind::QuadraticTail { lambda, t0 })
    }

    pub fn zero() -> Self {
        TailModel {
            kind: TailKind::Zero,
        }
    }

    pub fn kind(&self) -> &TailKind {
        &self.kind
    }

    /// `(scale, index, t0)` of a power-law tail.
    fn power_law(&self) -> Option<(f64, f64, f64)> {
        match self.kind {
            TailKind::ParetoRv { beta, kappa, t0 } => Some((kappa, beta, t0)),
            TailKind::QuadraticTail { lambda, t0 } => Some((lambda, 2.0, t0)),
            _ => None,
        }
    }

    /// Tail index `beta` for power-law tails.
    pub fn index(&self) -> Option<f64> {
        self.power_law().map(|(_, beta, _)| beta)
    }

    /// `t^2 P{zeta > t} -> 0`: the light-tail regime.
    pub fn is_light(&self) -> bool {
        matches!(self.kind, TailKind::LightExp { .. } | TailKind::Zero)
    }

    /// `E f(zeta+) < inf` with `f(x) = x^2 / log log x`.
    pub fn has_lil_moment(&self) -> bool {
        self.is_light()
    }

    /// Smallest `t` with `P{zeta > t} < 1`.
    fn support_knee(&self) -> f64 {
        match self.power_law() {
            Some((c, p, t0)) => t0.max(c.powf(1.0 / p)),
            None => 0.0,
        }
    }

    /// `P{zeta > t}`.
    pub fn tail(&self, t: f64) -> f64 {
        match self.kind {
            TailKind::LightExp { rate } => {
                if t <= 0.0 {
                    1.0
                } else {
                    (-rate * t).exp()
                }
            }
            TailKind::Zero => {
                if t < 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            _ => {
                let (c, p, t0) = self.power_law().expect("power-law kinds");
                if t < t0 {
                    1.0
                } else {
                    (c * t.powf(-p)).min(1.0)
                }
            }
        }
    }

    /// `int_l^inf P{zeta > t} dt`.
    pub fn integrated_tail(&self, l: f64) -> f64 {
        match self.kind {
            TailKind::LightExp { rate } => {
                if l >= 0.0 {
                    (-rate * l).exp() / rate
                } else {
                    -l + 1.0 / rate
                }
            }
            TailKind::Zero => (-l).max(0.0),
            _ => {
                let (c, p, _) = self.power_law().expect("power-law kinds");
                let knee = self.support_knee();
                let from = l.max(knee);
                (knee - l).max(0.0) + c * from.powf(1.0 - p) / (p - 1.0)
            }
        }
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.kind {
            TailKind::LightExp { rate } => {
                let e: f64 = Exp1.sample(rng);
                e / rate
            }
            TailKind::Zero => 0.0,
            _ => {
                let (c, p, t0) = self.power_law().expect("power-law kinds");
                let u: f64 = Open01.sample(rng);
                (c / u).powf(1.0 / p).max(t0)
            }
        }
    }

    /// Draw from the law of `zeta` conditioned on `zeta > l`.
    ///
    /// Requires `tail(l) > 0`.
    pub fn sample_above<R: Rng + ?Sized>(&self, l: f64, rng: &mut R) -> f64 {
        if self.tail(l) >= 1.0 {
            return self.sample(rng);
        }
        match self.kind {
            TailKind::LightExp { rate } => {
                let e: f64 = Exp1.sample(rng);
                l + e / rate
            }
            TailKind::Zero => unreachable!("P{{zeta > l}} = 0 for l >= 0"),
            _ => {
                let (_, p, _) = self.power_law().expect("power-law kinds");
                let u: f64 = Open01.sample(rng);
                l * u.powf(-1.0 / p)
            }
        }
    }
}

/// One draw of `zeta = log eta`.
#[inline]
pub fn sample_zeta<R: Rng + ?Sized>(model: &TailModel, rng: &mut R) -> f64 {
    model.sample(rng)
}

/// Gamma law with shape `b` and rate `c`: density `c^b x^(b-1) e^(-cx) / Gamma(b)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GammaLaw {
    shape: f64,
    rate: f64,
    sampler: Gamma<f64>,
}

impl GammaLaw {
    pub fn new(shape: f64, rate: f64) -> Result<Self> {
        positive("shape", shape)?;
        positive("rate", rate)?;
        let sampler = Gamma::new(shape, 1.0 / rate)
            .map_err(|e| Error::param("shape", shape, e.to_string()))?;
        Ok(GammaLaw {
            shape,
            rate,
            sampler,
        })
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn mean(&self) -> f64 {
        self.shape / self.rate
    }

    pub fn variance(&self) -> f64 {
        self.shape / (self.rate * self.rate)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.sampler.sample(rng)
    }
}

/// One gamma draw. Shapes below one use the boost
/// `theta(b, c) = theta(b + 1, c) * U^(1/b)` on top of Marsaglia-Tsang.
pub fn sample_gamma<R: Rng + ?Sized>(law: &GammaLaw, rng: &mut R) -> f64 {
    law.sample(rng)
}

/// Poisson count with the given mean (zero mean gives zero).
pub fn sample_poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    let n: f64 = Poisson::new(mean)
        .expect("finite positive Poisson mean")
        .sample(rng);
    n as u64
}

/// Number of failures before the first success, success probability `p`.
pub fn sample_geometric<R: Rng + ?Sized>(p: f64, rng: &mut R) -> u64 {
    if p >= 1.0 {
        return 0;
    }
    let u: f64 = Open01.sample(rng);
    let g = (u.ln() / (-p).ln_1p()).floor();
    if g >= u64::MAX as f64 {
        u64::MAX
    } else {
        g as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RandomStream;

    fn rng(seed: u64) -> RandomStream {
        RandomStream::new(seed, 0)
    }

    fn binomial_band(p: f64, n: f64) -> f64 {
        3.0 * (p * (1.0 - p) / n).sqrt()
    }

    #[test]
    fn rademacher_two_point_support() {
        let m = IncrementModel::new(IncrementKind::Rademacher, 1.0).unwrap();
        let mut r = rng(1);
        for _ in 0..1000 {
            let x = sample_xi(&m, &mut r);
            assert!(x == 1.0 || x == -1.0);
        }
    }

    #[test]
    fn gaussian_sample_variance() {
        let m = IncrementModel::gaussian(2.0).unwrap();
        let mut r = rng(2);
        let n = 1_000_000;
        let xs: Vec<f64> = (0..n).map(|_| sample_xi(&m, &mut r)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        assert!((3.98..=4.02).contains(&var), "var = {var}");
    }

    #[test]
    fn centered_uniform_support() {
        let m = IncrementModel::new(IncrementKind::CenteredUniform, 1.0).unwrap();
        let mut r = rng(3);
        for _ in 0..100_000 {
            let x = sample_xi(&m, &mut r);
            assert!(x.abs() <= SQRT_3);
        }
    }

    #[test]
    fn every_increment_kind_is_centered_with_variance_sigma_squared() {
        let n = 1_000_000usize;
        for (i, kind) in [
            IncrementKind::Gaussian,
            IncrementKind::Rademacher,
            IncrementKind::CenteredUniform,
            IncrementKind::ShiftedExponential,
        ]
        .into_iter()
        .enumerate()
        {
            let sigma = 1.5;
            let m = IncrementModel::new(kind, sigma).unwrap();
            let mut r = rng(10 + i as u64);
            let xs: Vec<f64> = (0..n).map(|_| m.sample(&mut r)).collect();
            let mean = xs.iter().sum::<f64>() / n as f64;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
            assert!(mean.abs() < 4.0 * sigma / (n as f64).sqrt(), "{kind:?} mean {mean}");
            // fourth moment of the shifted exponential is 9 sigma^4; 3 sd of the variance estimator
            let band = 3.0 * sigma * sigma * (8.0 / n as f64).sqrt();
            assert!((var - sigma * sigma).abs() < band, "{kind:?} var {var}");
        }
    }

    #[test]
    fn constant_zero_is_not_publicly_constructible() {
        assert!(IncrementModel::new(IncrementKind::Constant0, 1.0).is_err());
        assert!(IncrementModel::gaussian(0.0).is_err());
        assert!(IncrementModel::gaussian(f64::NAN).is_err());
    }

    #[test]
    fn index_two_pareto_law_tail_at_ten() {
        // ParetoRv rejects beta = 2, QuadraticTail carries the same law.
        let m = TailModel::quadratic(1.0, 1.0).unwrap();
        let mut r = rng(4);
        let n = 1_000_000;
        let hits = (0..n).filter(|_| sample_zeta(&m, &mut r) > 10.0).count();
        let frac = hits as f64 / n as f64;
        assert!((0.0097..=0.0103).contains(&frac), "frac = {frac}");
    }

    #[test]
    fn light_exp_median() {
        let m = TailModel::light_exp(1.0).unwrap();
        let mut r = rng(5);
        let mut xs: Vec<f64> = (0..200_001).map(|_| sample_zeta(&m, &mut r)).collect();
        xs.sort_by(f64::total_cmp);
        let median = xs[100_000];
        assert!((median - std::f64::consts::LN_2).abs() < 0.01);
    }

    #[test]
    fn quadratic_tail_at_four() {
        let m = TailModel::quadratic(4.0, 2.0).unwrap();
        let mut r = rng(6);
        let n = 1_000_000;
        let frac = (0..n).filter(|_| sample_zeta(&m, &mut r) > 4.0).count() as f64 / n as f64;
        assert!((frac - 0.25).abs() < binomial_band(0.25, n as f64));
    }

    #[test]
    fn empirical_tails_match_analytic_tails() {
        let n = 1_000_000;
        let cases: Vec<(TailModel, [f64; 5])> = vec![
            (TailModel::light_exp(1.3).unwrap(), [0.1, 0.5, 1.0, 2.0, 4.0]),
            (TailModel::pareto(1.5, 1.0, 1.0).unwrap(), [1.0, 2.0, 5.0, 10.0, 50.0]),
            (TailModel::pareto(1.2, 0.5, 1.0).unwrap(), [1.0, 1.5, 3.0, 10.0, 100.0]),
            (TailModel::quadratic(1.0, 1.0).unwrap(), [1.5, 2.0, 4.0, 8.0, 20.0]),
        ];
        for (i, (m, thresholds)) in cases.into_iter().enumerate() {
            let mut r = rng(100 + i as u64);
            let xs: Vec<f64> = (0..n).map(|_| m.sample(&mut r)).collect();
            for t in thresholds {
                let p = m.tail(t);
                let frac = xs.iter().filter(|&&x| x > t).count() as f64 / n as f64;
                assert!(
                    (frac - p).abs() <= binomial_band(p, n as f64),
                    "{:?} at {t}: {frac} vs {p}",
                    m.kind()
                );
            }
        }
    }

    #[test]
    fn pareto_atom_at_t0() {
        // kappa t0^-beta = 0.5 < 1: half the mass sits at t0.
        let m = TailModel::pareto(1.5, 0.5, 1.0).unwrap();
        assert_eq!(m.tail(0.999), 1.0);
        assert!((m.tail(1.0) - 0.5).abs() < 1e-15);
        let mut r = rng(7);
        let n = 100_000;
        let at_t0 = (0..n).filter(|_| m.sample(&mut r) == 1.0).count() as f64 / n as f64;
        assert!((at_t0 - 0.5).abs() < binomial_band(0.5, n as f64));
    }

    #[test]
    fn conditional_draws_respect_threshold_and_law() {
        let m = TailModel::pareto(1.5, 1.0, 1.0).unwrap();
        let mut r = rng(8);
        let n = 200_000;
        let l = 4.0;
        let xs: Vec<f64> = (0..n).map(|_| m.sample_above(l, &mut r)).collect();
        assert!(xs.iter().all(|&x| x > l));
        // P{zeta > 8 | zeta > 4} = 2^-1.5
        let p = 2f64.powf(-1.5);
        let frac = xs.iter().filter(|&&x| x > 8.0).count() as f64 / n as f64;
        assert!((frac - p).abs() < binomial_band(p, n as f64));

        let e = TailModel::light_exp(2.0).unwrap();
        let ys: Vec<f64> = (0..n).map(|_| e.sample_above(1.0, &mut r)).collect();
        let mean = ys.iter().sum::<f64>() / n as f64;
        assert!((mean - 1.5).abs() < 4.0 * 0.5 / (n as f64).sqrt());
    }

    #[test]
    fn integrated_tail_matches_quadrature() {
        let models = [
            TailModel::light_exp(0.7).unwrap(),
            TailModel::pareto(1.5, 2.0, 1.0).unwrap(),
            TailModel::pareto(1.3, 0.5, 2.0).unwrap(),
            TailModel::quadratic(3.0, 1.0).unwrap(),
            TailModel::zero(),
        ];
        for m in models {
            for l in [-2.0, 0.0, 0.5, 3.0, 10.0] {
                // midpoint rule on [l, 2000] plus the analytic remainder
                let upper = 2000.0;
                let steps = 400_000;
                let h = (upper - l) / steps as f64;
                let body: f64 = (0..steps).map(|i| m.tail(l + (i as f64 + 0.5) * h)).sum::<f64>() * h;
                let rest = m.integrated_tail(upper);
                let got = m.integrated_tail(l);
                assert!(
                    (body + rest - got).abs() < 1e-3 * got.max(1e-3),
                    "{:?} l={l}: {} vs {got}",
                    m.kind(),
                    body + rest
                );
            }
        }
    }

    #[test]
    fn tail_model_validation() {
        assert!(TailModel::pareto(1.0, 1.0, 1.0).is_err());
        assert!(TailModel::pareto(2.0, 1.0, 1.0).is_err());
        assert!(TailModel::pareto(2.5, 1.0, 1.0).is_err());
        assert!(TailModel::pareto(1.5, 1.0, 1.0).is_ok());
        assert!(TailModel::quadratic(0.0, 1.0).is_err());
        assert!(TailModel::light_exp(-1.0).is_err());
        let msg = TailModel::pareto(2.0, 1.0, 1.0).unwrap_err().to_string();
        assert!(msg.contains("quadratic_tail"), "{msg}");
    }

    #[test]
    fn gamma_exponential_case_mean() {
        let law = GammaLaw::new(1.0, 2.0).unwrap();
        let mut r = rng(9);
        let n = 1_000_000;
        let mean = (0..n).map(|_| sample_gamma(&law, &mut r)).sum::<f64>() / n as f64;
        assert!((0.4985..=0.5015).contains(&mean), "mean {mean}");
    }

    #[test]
    fn gamma_small_shape_mean() {
        let law = GammaLaw::new(0.1, 1.0).unwrap();
        let mut r = rng(10);
        let n = 1_000_000;
        let xs: Vec<f64> = (0..n).map(|_| sample_gamma(&law, &mut r)).collect();
        assert!(xs.iter().all(|&x| x > 0.0));
        let mean = xs.iter().sum::<f64>() / n as f64;
        assert!((0.097..=0.103).contains(&mean), "mean {mean}");
    }

    #[test]
    fn gamma_variance() {
        let law = GammaLaw::new(2.0, 1.0).unwrap();
        let mut r = rng(11);
        let n = 1_000_000;
        let xs: Vec<f64> = (0..n).map(|_| sample_gamma(&law, &mut r)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        // var of the variance estimator: (mu4 - sigma^4)/n with mu4 = 3b(b+2)/c^4 = 24
        let band = 3.0 * ((24.0 - 4.0) / n as f64).sqrt();
        assert!((var - 2.0).abs() < band, "var {var}");
    }

    #[test]
    fn partial_sums_have_the_right_variance() {
        let n = 20_000;
        for (i, kind) in [
            IncrementKind::Gaussian,
            IncrementKind::Rademacher,
            IncrementKind::CenteredUniform,
            IncrementKind::ShiftedExponential,
        ]
        .into_iter()
        .enumerate()
        {
            let m = IncrementModel::new(kind, 1.0).unwrap();
            let mut r = rng(200 + i as u64);
            for len in [1u64, 7, 5000] {
                let xs: Vec<f64> = (0..n).map(|_| m.sample_sum(len, &mut r)).collect();
                let mean = xs.iter().sum::<f64>() / n as f64;
                let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
                let target = len as f64;
                assert!(mean.abs() < 4.0 * (target / n as f64).sqrt(), "{kind:?} {len}");
                assert!((var / target - 1.0).abs() < 0.06, "{kind:?} {len}: {var}");
            }
        }
    }

    #[test]
    fn geometric_skip_mean() {
        let mut r = rng(12);
        let p = 0.01;
        let n = 200_000;
        let mean = (0..n).map(|_| sample_geometric(p, &mut r) as f64).sum::<f64>() / n as f64;
        let expected = (1.0 - p) / p;
        let sd = ((1.0 - p) / (p * p)).sqrt();
        assert!((mean - expected).abs() < 4.0 * sd / (n as f64).sqrt());
        assert_eq!(sample_geometric(1.0, &mut r), 0);
    }

    #[test]
    fn serde_round_trip_validates() {
        let t: TailModel = serde_json::from_str(r#"{"kind":"pareto_rv","beta":1.5,"kappa":1.0,"t0":1.0}"#).unwrap();
        assert_eq!(t.index(), Some(1.5));
        assert!(serde_json::from_str::<TailModel>(r#"{"kind":"pareto_rv","beta":2.0,"kappa":1.0,"t0":1.0}"#).is_err());
        let i: IncrementModel = serde_json::from_str(r#"{"kind":"rademacher","sigma":1.0}"#).unwrap();
        assert_eq!(i.kind(), IncrementKind::Rademacher);
        assert!(serde_json::from_str::<IncrementModel>(r#"{"kind":"constant0","sigma":1.0}"#).is_err());
    }

    proptest::proptest! {
        #[test]
        fn identical_stream_state_gives_identical_draws(seed in 0u64..u64::MAX, id in 0u64..1000) {
            let xi = IncrementModel::gaussian(1.0).unwrap();
            let zeta = TailModel::pareto(1.5, 1.0, 1.0).unwrap();
            let mut a = RandomStream::new(seed, id);
            let mut b = RandomStream::new(seed, id);
            for _ in 0..64 {
                proptest::prop_assert_eq!(xi.sample(&mut a).to_bits(), xi.sample(&mut b).to_bits());
                proptest::prop_assert_eq!(zeta.sample(&mut a).to_bits(), zeta.sample(&mut b).to_bits());
            }
        }
    }
}
