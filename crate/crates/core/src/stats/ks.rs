use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_ALPHA: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KsMode {
    OneSample,
    TwoSample,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KsReport {
    pub statistic: f64,
    pub n: usize,
    /// Size of the second sample; `None` for a one-sample test.
    pub m: Option<usize>,
    pub threshold: f64,
    pub pass: bool,
    pub mode: KsMode,
}

impl KsReport {
    /// Same statistic against a threshold widened by `extra`.
    pub fn with_extra_tolerance(mut self, extra: f64) -> Self {
        self.threshold += extra;
        self.pass = self.statistic < self.threshold;
        self
    }
}

/// Asymptotic Kolmogorov critical value `c(alpha) = sqrt(-ln(alpha / 2) / 2)`.
pub fn kolmogorov_critical(alpha: f64) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt()
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::param("alpha", alpha, "must lie in (0, 1)"))
    }
}

fn sorted(samples: &[f64], what: &'static str) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::Empty { what });
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::NonFinite { what });
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    Ok(xs)
}

/// Sup-distance between the empirical distribution of `samples` and `cdf`.
pub fn ks_one_sample(samples: &[f64], cdf: impl Fn(f64) -> f64, alpha: f64) -> Result<KsReport> {
    check_alpha(alpha)?;
    let xs = sorted(samples, "samples")?;
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    let threshold = kolmogorov_critical(alpha) / n.sqrt();
    Ok(KsReport {
        statistic: d,
        n: xs.len(),
        m: None,
        threshold,
        pass: d < threshold,
        mode: KsMode::OneSample,
    })
}

/// Sup-distance between two empirical distribution functions.
pub fn ks_two_sample(a: &[f64], b: &[f64], alpha: f64) -> Result<KsReport> {
    check_alpha(alpha)?;
    let xa = sorted(a, "first sample")?;
    let xb = sorted(b, "second sample")?;
    let (n, m) = (xa.len(), xb.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let x = xa[i].min(xb[j]);
        while i < n && xa[i] == x {
            i += 1;
        }
        while j < m && xb[j] == x {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let (nf, mf) = (n as f64, m as f64);
    let threshold = kolmogorov_critical(alpha) * ((nf + mf) / (nf * mf)).sqrt();
    Ok(KsReport {
        statistic: d,
        n,
        m: Some(m),
        threshold,
        pass: d < threshold,
        mode: KsMode::TwoSample,
    })
}

/// Empirical distribution function of a sample.
#[derive(Clone, Debug, PartialEq)]
pub struct Ecdf {
    sorted: Vec<f64>,
}

impl Ecdf {
    pub fn new(samples: &[f64]) -> Result<Self> {
        Ok(Ecdf {
            sorted: sorted(samples, "samples")?,
        })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&s| s <= x) as f64 / self.sorted.len() as f64
    }

    /// `(x_(i), i / n)` for every order statistic.
    pub fn points(&self) -> Vec<(f64, f64)> {
        let n = self.sorted.len() as f64;
        self.sorted
            .iter()
            .enumerate()
            .map(|(i, &x)| (x, (i + 1) as f64 / n))
            .collect()
    }

    /// `(quantile((i - 1/2) / n), x_(i))` pairs for a QQ plot.
    pub fn qq_points(&self, quantile: impl Fn(f64) -> f64) -> Vec<(f64, f64)> {
        let n = self.sorted.len() as f64;
        self.sorted
            .iter()
            .enumerate()
            .map(|(i, &x)| (quantile((i as f64 + 0.5) / n), x))
            .collect()
    }
}
