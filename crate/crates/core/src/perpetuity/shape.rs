use serde::{Deserialize, Serialize};

use super::PerpetuityRun;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexityReport {
    /// Most negative second difference over both curves (0 when none is negative).
    pub max_violation: f64,
}

/// Path-shape diagnostics of one run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeReport {
    pub monotonicity_violations: usize,
    pub sandwich_violations: usize,
    pub convexity: ConvexityReport,
    /// Tolerance applied to the convexity check.
    pub convexity_tol: f64,
}

impl ShapeReport {
    pub fn ok(&self) -> bool {
        self.monotonicity_violations == 0
            && self.sandwich_violations == 0
            && self.convexity.max_violation >= -self.convexity_tol
    }
}

/// Second differences of `u -> log Y` and `u -> Z`, scaled so that a
/// uniform grid gives `f(u1) - 2 f(u2) + f(u3)`.
///
/// Grids with fewer than three points have nothing to check.
pub fn check_convexity(run: &PerpetuityRun) -> ConvexityReport {
    let worst = second_min(&run.u_grid, &run.log_y).min(second_min(&run.u_grid, &run.z));
    ConvexityReport {
        max_violation: worst.min(0.0),
    }
}

fn second_min(u: &[f64], f: &[f64]) -> f64 {
    (0..u.len().saturating_sub(2))
        .map(|i| {
            let (u1, u2, u3) = (u[i], u[i + 1], u[i + 2]);
            let slope_hi = (f[i + 2] - f[i + 1]) / (u3 - u2);
            let slope_lo = (f[i + 1] - f[i]) / (u2 - u1);
            0.5 * (u3 - u1) * (slope_hi - slope_lo)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Monotonicity, sandwich and convexity checks.
///
/// The convexity tolerance is `rel_tol * |log Y(u_min)|`.
pub fn check_shape(run: &PerpetuityRun, rel_tol: f64) -> ShapeReport {
    let nonincreasing = |f: &[f64]| f.windows(2).filter(|w| w[1] > w[0]).count();
    let log_k = ((run.horizon as f64) + 1.0).ln();
    let sandwich_violations = run
        .log_y
        .iter()
        .zip(&run.z)
        .filter(|&(&y, &z)| !(z <= y && y <= z + log_k))
        .count();
    let convexity_tol = rel_tol * run.log_y.first().map_or(0.0, |y| y.abs());
    ShapeReport {
        monotonicity_violations: nonincreasing(&run.log_y) + nonincreasing(&run.z),
        sandwich_violations,
        convexity: check_convexity(run),
        convexity_tol,
    }
}
