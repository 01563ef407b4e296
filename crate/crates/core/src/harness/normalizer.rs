use serde::{Deserialize, Serialize};

use crate::distributions::TailKind;
use crate::error::{Error, Result};

/// How the scale `c(a)` and the multiplier `m(a)` were obtained.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "derivation")]
pub enum NormalizerPlan {
    /// `m(a) = a`, `c(a) = a^-2`.
    Theorem1Scale,
    /// `c(a) = kappa^(1/(beta-1)) a^(-beta/(beta-1))`, `m(a) = 1 / (a c(a))`.
    Theorem2Scale { kappa: f64, beta: f64 },
    /// `m(a) = a`, `c(a) = a^-2`.
    Theorem3Scale,
}

impl NormalizerPlan {
    /// Plan for a Pareto tail `min(1, kappa t^-beta)`: `b(t) = (kappa t)^(1/beta)`
    /// solves `t P{zeta > b(t)} = 1`, and `c(a)` solves `b(c) = a c`.
    pub fn pareto(kind: &TailKind) -> Result<Self> {
        match *kind {
            TailKind::ParetoRv { beta, kappa, .. } if beta > 1.0 && beta < 2.0 => {
                Ok(NormalizerPlan::Theorem2Scale { kappa, beta })
            }
            _ => Err(Error::Config("the heavy-tail normalizer needs pareto_rv with 1 < beta < 2".into())),
        }
    }

    pub fn c_of_a(&self, a: f64) -> f64 {
        match *self {
            NormalizerPlan::Theorem1Scale | NormalizerPlan::Theorem3Scale => a.powi(-2),
            NormalizerPlan::Theorem2Scale { kappa, beta } => {
                kappa.powf(1.0 / (beta - 1.0)) * a.powf(-beta / (beta - 1.0))
            }
        }
    }

    pub fn m_of_a(&self, a: f64) -> f64 {
        match self {
            NormalizerPlan::Theorem1Scale | NormalizerPlan::Theorem3Scale => a,
            NormalizerPlan::Theorem2Scale { .. } => 1.0 / (a * self.c_of_a(a)),
        }
    }

    /// `a^2 c(a)` must grow strictly as `a` decreases along the grid.
    pub fn check_growth(&self, a_grid: &[f64]) -> Result<()> {
        let vals: Vec<f64> = a_grid.iter().map(|&a| a * a * self.c_of_a(a)).collect();
        let strict = matches!(self, NormalizerPlan::Theorem2Scale { .. });
        for (w, a) in vals.windows(2).zip(a_grid.windows(2)) {
            let ok = if a[1] < a[0] { w[1] > w[0] || (!strict && w[1] == w[0]) } else { true };
            if !ok {
                return Err(Error::Config(format!(
                    "a^2 c(a) does not grow from a = {} to a = {}: {} -> {}",
                    a[0], a[1], w[0], w[1]
                )));
            }
        }
        Ok(())
    }
}
