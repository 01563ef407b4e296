use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::perpetuity::LogSumExp;

/// Margin below the running maximum of `B(s) - a s` at which the remaining
/// integral is negligible.
const STOP_MARGIN: f64 = 40.0;
/// Hard cap on the number of steps of one path.
const STEP_CAP: u64 = 4_000_000_000;

/// One draw of `int_0^inf exp(B(s) - a s) ds`.
///
/// Trapezoid rule on step `h` with exact Gaussian increments, stopped once
/// `B(S) - a S` is 40 below its running maximum and `S >= 10 / a^2`.
pub fn exp_functional_bm<R: Rng + ?Sized>(a: f64, h: f64, rng: &mut R) -> Result<f64> {
    Ok(log_exp_functional_bm(a, h, rng)?.exp())
}

/// Logarithm of [`exp_functional_bm`], computed without overflow.
pub fn log_exp_functional_bm<R: Rng + ?Sized>(a: f64, h: f64, rng: &mut R) -> Result<f64> {
    Ok(log_exp_functional_grid(&[a], h, rng)?[0])
}

/// `log int_0^inf exp(B(s) - a s) ds` for every `a` in `a_grid`, all on one
/// Brownian path.
pub fn log_exp_functional_grid<R: Rng + ?Sized>(a_grid: &[f64], h: f64, rng: &mut R) -> Result<Vec<f64>> {
    if a_grid.is_empty() {
        return Err(Error::Empty { what: "a grid" });
    }
    for &a in a_grid {
        if !(a.is_finite() && a > 0.0 && a <= 1.0) {
            return Err(Error::param("a", a, "must lie in (0, 1]"));
        }
    }
    let a_min = a_grid.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(h.is_finite() && h > 0.0 && h <= a_min / 10.0) {
        return Err(Error::param("h", h, format!("must lie in (0, a/10] with a = {a_min}")));
    }

    let n = a_grid.len();
    let mut sums = vec![LogSumExp::new(); n];
    let mut last = vec![0.0f64; n];
    let mut done = vec![false; n];
    let mut remaining = n;
    let min_time: Vec<f64> = a_grid.iter().map(|a| 10.0 / (a * a)).collect();
    for acc in &mut sums {
        acc.push(0.0);
    }
    let sd = h.sqrt();
    let mut b = 0.0f64;
    let mut steps: u64 = 0;
    while remaining > 0 {
        let z: f64 = StandardNormal.sample(rng);
        b += sd * z;
        steps += 1;
        if steps > STEP_CAP {
            return Err(Error::RunawayGuard {
                steps,
                cap: STEP_CAP,
                a: a_min,
                hint: "exponential functional did not settle; use a larger a",
            });
        }
        let s = steps as f64 * h;
        for i in 0..n {
            if done[i] {
                continue;
            }
            let g = b - a_grid[i] * s;
            sums[i].push(g);
            last[i] = g;
            if s >= min_time[i] && g < sums[i].max() - STOP_MARGIN {
                done[i] = true;
                remaining -= 1;
            }
        }
    }

    // trapezoid: h * (sum of node values - half of the two end values)
    Ok(sums
        .iter()
        .zip(&last)
        .map(|(acc, &g_end)| {
            let m = acc.max();
            let scaled = (acc.value() - m).exp() - 0.5 * (-m).exp() - 0.5 * (g_end - m).exp();
            h.ln() + m + scaled.ln()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RandomStream;

    #[test]
    fn rejects_coarse_steps() {
        let mut rng = RandomStream::new(1, 0);
        assert!(exp_functional_bm(0.5, 0.1, &mut rng).is_err());
        assert!(exp_functional_bm(0.0, 1e-3, &mut rng).is_err());
        assert!(exp_functional_bm(1.5, 1e-3, &mut rng).is_err());
    }

    #[test]
    fn median_at_one_half() {
        let mut rng = RandomStream::new(2, 0);
        let n = 2000;
        let mut xs: Vec<f64> = (0..n).map(|_| exp_functional_bm(0.5, 1e-3, &mut rng).unwrap()).collect();
        xs.sort_by(f64::total_cmp);
        let median = 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
        let target = 2.0 / std::f64::consts::LN_2;
        assert!((median / target - 1.0).abs() < 0.05, "{median}");
    }

    #[test]
    fn grid_matches_single_runs_on_same_path() {
        let grid = log_exp_functional_grid(&[0.5, 0.3], 0.01, &mut RandomStream::new(3, 0)).unwrap();
        assert!(grid.iter().all(|v| v.is_finite()));
        let single = log_exp_functional_grid(&[0.5], 0.01, &mut RandomStream::new(3, 0)).unwrap();
        assert_eq!(grid[0], single[0]);
    }
}
