use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;

use super::config::{Experiment, ExperimentConfig};
use super::normalizer::NormalizerPlan;
use super::report::{CellSummary, CheckOutcome, KsRow, LilRow, MarginalRow, ReferenceRow, ReportBundle};
use crate::distributions::{GammaLaw, TailKind};
use crate::error::{Error, Result};
use crate::limit_laws::{
    exp_functional_bm, mixed_sup_cdf_mc_grid, BmSupLaw, MixedCdfEstimate, MixedSupLaw, PppSupLaw,
};
use crate::perpetuity::{simulate_run, PerpetuityParams};
use crate::rng::{stream_id, RandomStream};
use crate::stats::{
    ks_one_sample, ks_two_sample, lil_trace_bm_functional, lil_trace_perpetuity, lil_trace_suprema, Ecdf, KsReport,
    LimsupTrace,
};

/// Cell ids of the Monte Carlo reference distribution, one per `u`.
const REFERENCE_CELL: u32 = 1 << 30;
/// Cell ids of the gamma oracle samples, one per `a`.
const ORACLE_CELL: u32 = 1 << 31;

/// One private stream per replicate, collected in replicate order.
fn replicate<T, F>(config: &ExperimentConfig, cell: u32, n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut RandomStream) -> Result<T> + Sync,
{
    (0..n as u32)
        .into_par_iter()
        .map(|r| f(&mut RandomStream::new(config.master_seed, stream_id(cell, r))))
        .collect()
}

/// Limit distribution function of one `u` column.
enum LimitCdf {
    Bm(BmSupLaw),
    Ppp(PppSupLaw),
    /// Monte Carlo values on a grid, interpolated linearly, with `1 - F ~ 1/x` beyond it.
    Table { xs: Vec<f64>, fs: Vec<f64>, extra: f64 },
}

impl LimitCdf {
    fn cdf(&self, x: f64) -> f64 {
        match self {
            LimitCdf::Bm(law) => law.cdf(x),
            LimitCdf::Ppp(law) => law.cdf(x),
            LimitCdf::Table { xs, fs, .. } => {
                let n = xs.len();
                if x <= 0.0 {
                    0.0
                } else if x <= xs[0] {
                    fs[0] * x / xs[0]
                } else if x >= xs[n - 1] {
                    1.0 - (1.0 - fs[n - 1]) * xs[n - 1] / x
                } else {
                    let i = xs.partition_point(|&v| v <= x);
                    let t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
                    fs[i - 1] + t * (fs[i] - fs[i - 1])
                }
            }
        }
    }

    /// Added to the KS threshold.
    fn extra(&self) -> f64 {
        match self {
            LimitCdf::Table { extra, .. } => *extra,
            _ => 0.0,
        }
    }
}

/// Run the configured experiment and collect its reports.
///
/// Worker threads come from `config.threads`; outputs do not depend on it.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ReportBundle> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let start = Instant::now();
    let mut bundle = ReportBundle {
        experiment: Some(config.experiment.name().to_string()),
        config_digest: config.digest(),
        ..ReportBundle::default()
    };
    pool.install(|| match config.experiment {
        Experiment::VerifyTheorem1 | Experiment::VerifyTheorem2 | Experiment::VerifyTheorem3 => {
            run_marginals(config, &mut bundle)
        }
        Experiment::ExpFunctional => run_exp_functional(config, &mut bundle),
        Experiment::LilPerpetuity | Experiment::LilSuprema | Experiment::LilBmFunctional => {
            run_lil(config, &mut bundle)
        }
        Experiment::CrossValidateLimitLaws => run_cross_validation(config, &mut bundle),
    })?;
    if config.record_runtime {
        bundle.runtime_seconds = start.elapsed().as_secs_f64();
    }
    Ok(bundle)
}

fn check(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> CheckOutcome {
    CheckOutcome {
        name: name.into(),
        pass,
        detail: detail.into(),
    }
}

fn ks_row(a: Option<f64>, u: Option<f64>, source: &str, rep: &KsReport) -> KsRow {
    KsRow {
        a,
        u,
        source: source.to_string(),
        statistic: rep.statistic,
        threshold: rep.threshold,
        pass: rep.pass,
    }
}

fn mixed_lambda(config: &ExperimentConfig) -> f64 {
    match *config.tail.kind() {
        TailKind::QuadraticTail { lambda, .. } => lambda,
        _ => 1.0,
    }
}

fn limit_laws(config: &ExperimentConfig, reference: &mut Vec<ReferenceRow>) -> Result<Vec<LimitCdf>> {
    let sigma = config.increment.sigma();
    let grid = config.reference.grid();
    let mut out = Vec::with_capacity(config.u_grid.len());
    for (ui, &u) in config.u_grid.iter().enumerate() {
        let law = match config.experiment {
            Experiment::VerifyTheorem1 => LimitCdf::Bm(BmSupLaw::new(sigma, u)?),
            Experiment::VerifyTheorem2 => {
                let beta = config.tail.index().expect("pareto tail has an index");
                LimitCdf::Ppp(PppSupLaw::infinite(1.0, beta, u)?)
            }
            _ => {
                let law = MixedSupLaw::new(sigma, mixed_lambda(config), u)?;
                let mut rng = RandomStream::new(config.master_seed, stream_id(REFERENCE_CELL + ui as u32, 0));
                let est = mixed_sup_cdf_mc_grid(&law, &grid, config.reference.n_paths, &mut rng)?;
                if est.iter().any(|e| e.horizon_warning) {
                    log::warn!("mixed reference at u = {u}: horizon may be too short");
                }
                let max_se = est.iter().map(|e| e.stderr).fold(0.0, f64::max);
                let mut running = 0.0f64;
                let fs = est
                    .iter()
                    .map(|e| {
                        running = running.max(e.estimate.clamp(0.0, 1.0));
                        running
                    })
                    .collect();
                LimitCdf::Table {
                    xs: grid.clone(),
                    fs,
                    extra: 2.0 * max_se,
                }
            }
        };
        reference.extend(grid.iter().map(|&x| ReferenceRow {
            u: Some(u),
            x,
            cdf: law.cdf(x),
        }));
        out.push(law);
    }
    Ok(out)
}

fn run_marginals(config: &ExperimentConfig, bundle: &mut ReportBundle) -> Result<()> {
    let plan = match config.experiment {
        Experiment::VerifyTheorem1 => NormalizerPlan::Theorem1Scale,
        Experiment::VerifyTheorem2 => NormalizerPlan::pareto(config.tail.kind())?,
        _ => NormalizerPlan::Theorem3Scale,
    };
    if let NormalizerPlan::Theorem2Scale { .. } = plan {
        plan.check_growth(&config.a_grid)?;
        bundle.checks.push(check(
            "normalizer growth",
            true,
            "a^2 c(a) strictly increases along the a grid",
        ));
    }
    let mut reference = Vec::new();
    let limits = limit_laws(config, &mut reference)?;

    let mut marginals = Vec::new();
    let mut ks_rows = Vec::new();
    // per u: (a, KS statistic of log Y, its threshold)
    let mut stats: Vec<Vec<(f64, f64)>> = vec![Vec::new(); config.u_grid.len()];
    let mut simulated: Vec<f64> = Vec::new();
    let mut last_samples: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();

    for (ai, &a) in config.a_grid.iter().enumerate() {
        let params = PerpetuityParams::new(
            a,
            config.u_grid.clone(),
            config.truncation,
            config.increment,
            config.tail,
        )?;
        let runs = match replicate(config, ai as u32, config.n_replicates, |rng| simulate_run(&params, rng)) {
            Ok(runs) => runs,
            Err(e @ Error::RunawayGuard { .. }) if config.experiment == Experiment::VerifyTheorem2 && ai > 0 => {
                log::warn!("skipping a = {a}: {e}");
                bundle.checks.push(check(format!("cell a={a}"), true, format!("skipped: {e}")));
                continue;
            }
            Err(e) => return Err(e),
        };
        simulated.push(a);
        let m = plan.m_of_a(a);
        last_samples.clear();
        for (ui, &u) in config.u_grid.iter().enumerate() {
            let log_y: Vec<f64> = runs.iter().map(|r| m * r.log_y[ui]).collect();
            let z: Vec<f64> = runs.iter().map(|r| m * r.z[ui]).collect();
            let limit = &limits[ui];
            let ks_y = ks_one_sample(&log_y, |x| limit.cdf(x), config.alpha)?.with_extra_tolerance(limit.extra());
            let ks_z = ks_one_sample(&z, |x| limit.cdf(x), config.alpha)?.with_extra_tolerance(limit.extra());
            ks_rows.push(ks_row(Some(a), Some(u), "log_Y", &ks_y));
            ks_rows.push(ks_row(Some(a), Some(u), "Z", &ks_z));
            stats[ui].push((a, ks_y.statistic));
            let mut ks = BTreeMap::new();
            ks.insert("log_Y".to_string(), ks_y);
            ks.insert("Z".to_string(), ks_z);
            bundle.cells.push(CellSummary {
                a: Some(a),
                u: Some(u),
                ks,
                n: runs.len(),
            });
            marginals.extend(log_y.iter().zip(&z).enumerate().map(|(r, (&y, &z))| MarginalRow {
                a: Some(a),
                u: Some(u),
                replicate: r as u32,
                log_y_scaled: Some(y),
                z_scaled: Some(z),
            }));
            last_samples.push((log_y, z));
        }
    }

    let Some(&a_small) = simulated.last() else {
        return Err(Error::Empty { what: "simulated cells" });
    };
    let cells_per_a = config.u_grid.len();
    let last_cells = bundle.cells.len() - cells_per_a;
    if config.checks.two_sample_at_smallest_a {
        for (ui, (log_y, z)) in last_samples.iter().enumerate() {
            let u = config.u_grid[ui];
            let rep = ks_two_sample(z, log_y, config.alpha)?;
            ks_rows.push(ks_row(Some(a_small), Some(u), "Z_vs_log_Y", &rep));
            bundle.cells[last_cells + ui].ks.insert("Z_vs_log_Y".to_string(), rep);
            bundle.checks.push(check(
                format!("two-sample Z vs log_Y a={a_small} u={u}"),
                rep.pass,
                format!("D = {:.5}, threshold {:.5}", rep.statistic, rep.threshold),
            ));
        }
    }
    let tol = config.checks.trend_tolerance;
    for (ui, series) in stats.iter().enumerate() {
        let u = config.u_grid[ui];
        let worst = series.windows(2).map(|w| w[1].1 - w[0].1).fold(f64::NEG_INFINITY, f64::max);
        let listed: Vec<String> = series.iter().map(|(a, d)| format!("{a}: {d:.5}")).collect();
        bundle.checks.push(check(
            format!("trend log_Y u={u}"),
            series.len() < 2 || worst <= tol,
            format!("KS by a [{}], tolerance {tol}", listed.join(", ")),
        ));
    }
    if let Some(bound) = config.checks.max_ks {
        let at = config.checks.max_ks_at.unwrap_or(a_small);
        let Some(ai) = simulated.iter().position(|&a| a == at) else {
            return Err(Error::Config(format!("max_ks_at = {at} is not a simulated discount rate")));
        };
        for (ui, &u) in config.u_grid.iter().enumerate() {
            let d = stats[ui][ai].1;
            let extra = limits[ui].extra();
            bundle.checks.push(check(
                format!("KS bound log_Y a={at} u={u}"),
                d < bound + extra,
                format!("D = {d:.5}, bound {bound} + {extra:.5}"),
            ));
        }
    }
    bundle.marginals = Some(marginals);
    bundle.ks = Some(ks_rows);
    bundle.reference = Some(reference);
    Ok(())
}

fn run_exp_functional(config: &ExperimentConfig, bundle: &mut ReportBundle) -> Result<()> {
    let mut marginals = Vec::new();
    let mut ks_rows = Vec::new();
    let exp2 = BmSupLaw::new(1.0, 1.0)?;
    for (ai, &a) in config.a_grid.iter().enumerate() {
        let h = config.cross_validation.h.min(a / 10.0);
        let draws = replicate(config, ai as u32, config.n_replicates, |rng| exp_functional_bm(a, h, rng))?;
        let gamma = GammaLaw::new(2.0 * a, 1.0)?;
        let oracle = replicate(config, ORACLE_CELL | ai as u32, config.n_replicates, |rng| {
            Ok(2.0 / gamma.sample(rng))
        })?;
        let vs_oracle = ks_two_sample(&draws, &oracle, config.alpha)?;
        let scaled: Vec<f64> = draws.iter().map(|i| a * i.ln()).collect();
        let vs_limit = ks_one_sample(&scaled, |x| exp2.cdf(x), config.alpha)?;
        ks_rows.push(ks_row(Some(a), None, "gamma_oracle", &vs_oracle));
        ks_rows.push(ks_row(Some(a), None, "scaled_log_vs_exp2", &vs_limit));
        bundle.checks.push(check(
            format!("gamma oracle a={a}"),
            vs_oracle.pass,
            format!("D = {:.5}, threshold {:.5}", vs_oracle.statistic, vs_oracle.threshold),
        ));
        let mut ks = BTreeMap::new();
        ks.insert("gamma_oracle".to_string(), vs_oracle);
        ks.insert("scaled_log_vs_exp2".to_string(), vs_limit);
        bundle.cells.push(CellSummary {
            a: Some(a),
            u: None,
            ks,
            n: draws.len(),
        });
        marginals.extend(scaled.iter().enumerate().map(|(r, &y)| MarginalRow {
            a: Some(a),
            u: None,
            replicate: r as u32,
            log_y_scaled: Some(y),
            z_scaled: None,
        }));
    }
    bundle.reference = Some(
        config
            .reference
            .grid()
            .into_iter()
            .map(|x| ReferenceRow {
                u: None,
                x,
                cdf: exp2.cdf(x),
            })
            .collect(),
    );
    bundle.marginals = Some(marginals);
    bundle.ks = Some(ks_rows);
    Ok(())
}

fn run_lil(config: &ExperimentConfig, bundle: &mut ReportBundle) -> Result<()> {
    let mut rng = RandomStream::new(config.master_seed, stream_id(0, 0));
    let budget = config.lil.step_budget;
    let trace: LimsupTrace = match config.experiment {
        Experiment::LilPerpetuity => {
            lil_trace_perpetuity(&config.increment, &config.tail, &config.a_grid, budget, &mut rng)?
        }
        Experiment::LilSuprema => {
            lil_trace_suprema(&config.increment, &config.tail, &config.lil.n_grid, budget, &mut rng)?
        }
        _ => lil_trace_bm_functional(&config.a_grid, config.lil.h, budget, &mut rng)?,
    };
    let expected_target = match config.experiment {
        Experiment::LilPerpetuity => config.increment.sigma(),
        Experiment::LilSuprema => std::f64::consts::SQRT_2 * config.increment.sigma(),
        _ => 1.0,
    };
    bundle.checks.push(check(
        "finite trace",
        trace.checkpoints.iter().all(|c| c.statistic.is_finite()),
        format!("{} checkpoints, dropped {:?}", trace.checkpoints.len(), trace.dropped),
    ));
    bundle.checks.push(check(
        "target",
        trace.target == expected_target,
        format!("target {}", trace.target),
    ));
    if config.experiment == Experiment::LilSuprema {
        let top = trace.last().map_or(f64::NAN, |c| c.running_max);
        bundle.checks.push(check(
            "running max within (0, 2 target]",
            top > 0.0 && top <= 2.0 * trace.target,
            format!("running max {top:.5}, target {}", trace.target),
        ));
    }
    bundle.lil = Some(
        trace
            .checkpoints
            .iter()
            .map(|c| LilRow {
                scale: c.scale,
                statistic: c.statistic,
                running_max: c.running_max,
                target: trace.target,
            })
            .collect(),
    );
    Ok(())
}

fn run_cross_validation(config: &ExperimentConfig, bundle: &mut ReportBundle) -> Result<()> {
    let cv = &config.cross_validation;
    let n = config.n_replicates;
    let mut ks_rows = Vec::new();
    let mut cell = 0u32;
    let mut record = |bundle: &mut ReportBundle, source: String, rep: KsReport| {
        ks_rows.push(ks_row(None, Some(1.0), &source, &rep));
        bundle.checks.push(check(
            source.clone(),
            rep.pass,
            format!("D = {:.5}, threshold {:.5}", rep.statistic, rep.threshold),
        ));
        let mut ks = BTreeMap::new();
        let size = rep.n;
        ks.insert(source, rep);
        bundle.cells.push(CellSummary {
            a: None,
            u: Some(1.0),
            ks,
            n: size,
        });
    };

    for &beta in &cv.betas {
        let law = PppSupLaw::infinite(1.0, beta, 1.0)?;
        let draws = replicate(config, cell, n, |rng| Ok(law.sample_point_process(rng)))?;
        cell += 1;
        let rep = ks_one_sample(&draws, |x| law.cdf(x), config.alpha)?;
        record(bundle, format!("ppp_point_process_beta_{beta}"), rep);
    }

    let bm = BmSupLaw::new(config.increment.sigma(), 1.0)?;
    let draws = replicate(config, cell, n, |rng| Ok(bm.sample(rng)))?;
    cell += 1;
    record(bundle, "bm_exponential".to_string(), ks_one_sample(&draws, |x| bm.cdf(x), config.alpha)?);

    let a = 0.5;
    let gamma = GammaLaw::new(2.0 * a, 1.0)?;
    let functional = replicate(config, cell, cv.n_exp_functional, |rng| exp_functional_bm(a, cv.h, rng))?;
    let oracle = replicate(config, ORACLE_CELL | cell, cv.n_exp_functional, |rng| Ok(2.0 / gamma.sample(rng)))?;
    cell += 1;
    let mut rep = ks_two_sample(&functional, &oracle, config.alpha)?;
    rep.threshold = cv.exp_functional_tolerance;
    rep.pass = rep.statistic < rep.threshold;
    record(bundle, "exp_functional_vs_gamma".to_string(), rep);

    let mixed = MixedSupLaw::new(config.increment.sigma(), mixed_lambda(config), 1.0)?;
    let draws = replicate(config, cell, n, |rng| Ok(mixed.sample(rng)))?;
    let mut rng = RandomStream::new(config.master_seed, stream_id(REFERENCE_CELL, 0));
    let estimates: Vec<MixedCdfEstimate> = mixed_sup_cdf_mc_grid(&mixed, &cv.mixed_x, n, &mut rng)?;
    let ecdf = Ecdf::new(&draws)?;
    let gaps: Vec<f64> = estimates.iter().map(|e| (ecdf.eval(e.x) - e.estimate).abs()).collect();
    let worst = gaps.iter().copied().fold(0.0, f64::max);
    let pass = worst < cv.mixed_tolerance;
    ks_rows.push(KsRow {
        a: None,
        u: Some(1.0),
        source: "mixed_dual".to_string(),
        statistic: worst,
        threshold: cv.mixed_tolerance,
        pass,
    });
    bundle.checks.push(check(
        "mixed_dual",
        pass,
        format!("max |ECDF - MC| = {worst:.5} over x = {:?}", cv.mixed_x),
    ));
    bundle.ks = Some(ks_rows);
    Ok(())
}
