use perpsim::distributions::GammaLaw;
use perpsim::limit_laws::{exp_functional_bm, mixed_sup_cdf_mc_grid, sample_mixed_sup, BmSupLaw, MixedSupLaw};
use perpsim::stats::{kolmogorov_critical, ks_one_sample, ks_two_sample, Ecdf};
use perpsim::RandomStream;

// Closed-form solution of the Feynman-Kac equation for sigma = lambda = u = 1,
// checked against a numerical ODE solve.
fn mixed_exact(x: f64) -> f64 {
    1.0 - 1.0 / x + (1.0 + 1.0 / x) * (-2.0 * x).exp()
}

#[test]
fn mixed_estimator_matches_closed_form() {
    let law = MixedSupLaw::new(1.0, 1.0, 1.0).unwrap();
    let xs = [0.25, 0.5, 1.0, 2.0, 4.0, 8.0];
    let est = mixed_sup_cdf_mc_grid(&law, &xs, 20_000, &mut RandomStream::new(31, 0)).unwrap();
    for e in est {
        let gap = (e.estimate - mixed_exact(e.x)).abs();
        assert!(gap < 4.0 * e.stderr + 2e-3, "x = {}: {e:?} vs {}", e.x, mixed_exact(e.x));
    }
}

#[test]
fn mixed_sampler_matches_closed_form() {
    let law = MixedSupLaw::new(1.0, 1.0, 1.0).unwrap();
    let mut rng = RandomStream::new(32, 0);
    let draws: Vec<f64> = (0..20_000).map(|_| sample_mixed_sup(&law, &mut rng)).collect();
    let rep = ks_one_sample(&draws, mixed_exact, 0.01).unwrap();
    assert!(rep.pass, "{rep:?}");
    let ecdf = Ecdf::new(&draws).unwrap();
    assert!((ecdf.eval(1.0) - mixed_exact(1.0)).abs() < 0.015);
}

fn functional_draws(a: f64, h: f64, n: u64, seed: u64) -> Vec<f64> {
    (0..n)
        .map(|i| exp_functional_bm(a, h, &mut RandomStream::new(seed, i)).unwrap())
        .collect()
}

#[test]
fn exp_functional_matches_gamma_oracle() {
    let (a, n) = (0.5, 3000);
    let draws = functional_draws(a, 1e-3, n, 41);
    let gamma = GammaLaw::new(2.0 * a, 1.0).unwrap();
    let mut rng = RandomStream::new(42, 0);
    let oracle: Vec<f64> = (0..n).map(|_| 2.0 / gamma.sample(&mut rng)).collect();
    let rep = ks_two_sample(&draws, &oracle, 0.01).unwrap();
    assert!(rep.statistic < 0.05, "{rep:?}");
}

// sup |P{a log(2 / theta_{2a,1}) <= x} - (1 - e^{-2x})| computed by quadrature:
// the pre-limit law itself sits this far from Exp(2).
const EXACT_GAP_A_01: f64 = 0.13365;

#[test]
fn scaled_log_functional_sits_at_exact_gap_from_exp2() {
    let (a, n) = (0.1, 2000);
    let scaled: Vec<f64> = functional_draws(a, 0.01, n, 43).iter().map(|i| a * i.ln()).collect();
    let exp2 = BmSupLaw::new(1.0, 1.0).unwrap();
    let rep = ks_one_sample(&scaled, |x| exp2.cdf(x), 0.01).unwrap();
    let band = kolmogorov_critical(0.01) / (n as f64).sqrt() + 0.01;
    assert!((rep.statistic - EXACT_GAP_A_01).abs() < band, "{rep:?}");
}

// Exact gap at a = 0.05 is 0.08655, above the 0.08 bound; kept for the record.
#[test]
#[ignore = "the pre-limit law is 0.0865 from Exp(2) in KS distance"]
fn scaled_log_functional_close_to_exp2_at_a_005() {
    let (a, n) = (0.05, 5000);
    let scaled: Vec<f64> = functional_draws(a, 5e-3, n, 44).iter().map(|i| a * i.ln()).collect();
    let exp2 = BmSupLaw::new(1.0, 1.0).unwrap();
    let mut rng = RandomStream::new(45, 0);
    let reference: Vec<f64> = (0..n).map(|_| exp2.sample(&mut rng)).collect();
    let rep = ks_two_sample(&scaled, &reference, 0.01).unwrap();
    assert!(rep.statistic < 0.08, "{rep:?}");
}
