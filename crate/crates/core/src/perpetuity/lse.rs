/// `log(exp(state) + exp(new_term_log))`, exact when either side is `-inf`.
#[inline]
pub fn log_sum_exp_stream(state: f64, new_term_log: f64) -> f64 {
    if state == f64::NEG_INFINITY {
        return new_term_log;
    }
    if new_term_log == f64::NEG_INFINITY {
        return state;
    }
    let (hi, lo) = if state >= new_term_log {
        (state, new_term_log)
    } else {
        (new_term_log, state)
    };
    hi + (lo - hi).exp().ln_1p()
}

/// Streaming log-sum-exp kept as `(max, sum of exp(x - max))`.
///
/// One `exp` per pushed term; the running max is the supremum of the pushed
/// terms, which is exactly `Z` when the terms are the perturbed walk.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogSumExp {
    max: f64,
    scaled: f64,
}

impl Default for LogSumExp {
    fn default() -> Self {
        Self::new()
    }
}

impl LogSumExp {
    pub const fn new() -> Self {
        LogSumExp {
            max: f64::NEG_INFINITY,
            scaled: 0.0,
        }
    }

    #[inline]
    pub fn push(&mut self, x: f64) {
        if x <= self.max {
            let d = x - self.max;
            // scaled >= 1, so exp(d) below half an ulp would not change it
            if d > -37.0 {
                self.scaled += d.exp();
            }
        } else if self.max == f64::NEG_INFINITY {
            if x != f64::NEG_INFINITY {
                self.max = x;
                self.scaled = 1.0;
            }
        } else {
            self.scaled = self.scaled * (self.max - x).exp() + 1.0;
            self.max = x;
        }
    }

    /// Largest pushed term (`-inf` when empty).
    #[inline]
    pub fn max(&self) -> f64 {
        self.max
    }

    /// Log of the sum of the exponentiated pushed terms.
    pub fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.scaled.ln()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_plus_zero() {
        assert_eq!(log_sum_exp_stream(f64::NEG_INFINITY, 0.0), 0.0);
        assert_eq!(log_sum_exp_stream(0.0, f64::NEG_INFINITY), 0.0);
    }

    #[test]
    fn two_zeros() {
        assert_eq!(log_sum_exp_stream(0.0, 0.0), std::f64::consts::LN_2);
    }

    #[test]
    fn no_overflow() {
        assert_eq!(log_sum_exp_stream(1000.0, 0.0), 1000.0);
        assert_eq!(log_sum_exp_stream(0.0, 1000.0), 1000.0);
    }

    #[test]
    fn accumulator_matches_pairwise_form() {
        let xs = [3.0, -2.5, 10.0, 9.5, -700.0, 0.0, 10.0, 750.0, 749.0];
        let mut acc = LogSumExp::new();
        let mut state = f64::NEG_INFINITY;
        for &x in &xs {
            acc.push(x);
            state = log_sum_exp_stream(state, x);
            assert!((acc.value() - state).abs() <= 4.0 * f64::EPSILON * state.abs().max(1.0));
        }
        assert_eq!(acc.max(), 750.0);
    }

    #[test]
    fn empty_accumulator() {
        let mut acc = LogSumExp::new();
        assert_eq!(acc.value(), f64::NEG_INFINITY);
        acc.push(f64::NEG_INFINITY);
        assert_eq!(acc.value(), f64::NEG_INFINITY);
    }

    proptest::proptest! {
        #[test]
        fn bounded_by_max_and_max_plus_log_n(xs in proptest::collection::vec(-500.0f64..500.0, 1..64)) {
            let mut acc = LogSumExp::new();
            for &x in &xs {
                acc.push(x);
            }
            let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let v = acc.value();
            proptest::prop_assert_eq!(acc.max(), m);
            proptest::prop_assert!(v >= m);
            proptest::prop_assert!(v <= m + (xs.len() as f64).ln() + 1e-12);
        }
    }
}
