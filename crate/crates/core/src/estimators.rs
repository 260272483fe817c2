//! Estimators of `S(f, ρ)` and the replication harness.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::budget::ChainBudget;
use crate::chains::{walk_chain, ChainConfig};
use crate::error::{Error, Result};
use crate::instances::{sample_fc_prior, ProblemInstance};
use crate::rng::RngStream;

/// Quotient of the sample means of `fρ` and `ρ` over `n` uniform points.
pub fn estimate_simple(
    instance: &ProblemInstance,
    n: usize,
    rng: &mut RngStream,
    budget: &mut ChainBudget,
) -> Result<f64> {
    if n < 1 {
        return Err(Error::InvalidArgument("need n >= 1".into()));
    }
    let body = &instance.body;
    let mut x = vec![0.0; instance.dim()];
    let (mut num, mut den) = (0.0, 0.0);
    for _ in 0..n {
        body.uniform_sample_into(rng, &mut x);
        budget.rng_draws += body.draws_per_sample();
        let r = instance.eval_rho(&x, budget)?;
        num += instance.eval_f(&x, budget) * r;
        den += r;
    }
    Ok(num / den)
}

/// Time average of `f` along `n` states of the Metropolis ball walk started
/// at the body's default start point.
pub fn estimate_mh(
    instance: &ProblemInstance,
    n: usize,
    delta: f64,
    rng: &mut RngStream,
    budget: &mut ChainBudget,
) -> Result<f64> {
    let mut sum = 0.0;
    let mut f_evals = 0;
    walk_chain(
        &instance.body.chain_start(),
        n,
        ChainConfig::metropolis(delta),
        &instance.body,
        Some(&instance.rho),
        rng,
        budget,
        |x| {
            f_evals += 1;
            sum += instance.f.evaluate(x);
        },
    )?;
    budget.f_evals += f_evals;
    Ok(sum / n as f64)
}

/// Metropolis estimate with a batch-means standard error (batch size `⌊√n⌋`).
pub fn estimate_mh_with_error(
    instance: &ProblemInstance,
    n: usize,
    delta: f64,
    rng: &mut RngStream,
    budget: &mut ChainBudget,
) -> Result<(f64, f64)> {
    let mut values = Vec::with_capacity(n);
    walk_chain(
        &instance.body.chain_start(),
        n,
        ChainConfig::metropolis(delta),
        &instance.body,
        Some(&instance.rho),
        rng,
        budget,
        |x| values.push(instance.f.evaluate(x)),
    )?;
    budget.f_evals += n as u64;
    let mean = values.iter().sum::<f64>() / n as f64;
    let batch = ((n as f64).sqrt() as usize).max(1);
    Ok((mean, batch_means_std_error(&values, batch)))
}

/// Standard error of the mean of a correlated series from non-overlapping
/// batch means. Trailing samples that do not fill a batch are dropped.
pub fn batch_means_std_error(values: &[f64], batch: usize) -> f64 {
    let batches = values.len() / batch.max(1);
    if batches < 2 {
        return f64::NAN;
    }
    let means: Vec<f64> = values
        .chunks_exact(batch)
        .map(|c| c.iter().sum::<f64>() / batch as f64)
        .collect();
    let grand = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (batches - 1) as f64;
    (var / batches as f64).sqrt()
}

/// Step size maximizing the conductance lower bound on the unit ball:
/// `min{1/√(d+1), 1/α}`.
pub fn delta_star(d: usize, alpha: f64) -> f64 {
    let geometric = 1.0 / ((d as f64) + 1.0).sqrt();
    if alpha > 0.0 {
        geometric.min(1.0 / alpha)
    } else {
        geometric
    }
}

/// A randomized algorithm using `n` values of `f` and `ρ`.
pub trait Estimator: Sync {
    fn id(&self) -> String;

    fn estimate(
        &self,
        instance: &ProblemInstance,
        n: usize,
        rng: &mut RngStream,
        budget: &mut ChainBudget,
    ) -> Result<f64>;

    fn delta(&self) -> Option<f64> {
        None
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "estimator", rename_all = "kebab-case")]
pub enum EstimatorSpec {
    Simple,
    Metropolis { delta: f64 },
}

impl Estimator for EstimatorSpec {
    fn id(&self) -> String {
        match self {
            Self::Simple => "simple".into(),
            Self::Metropolis { .. } => "metropolis".into(),
        }
    }

    fn estimate(
        &self,
        instance: &ProblemInstance,
        n: usize,
        rng: &mut RngStream,
        budget: &mut ChainBudget,
    ) -> Result<f64> {
        match *self {
            Self::Simple => estimate_simple(instance, n, rng, budget),
            Self::Metropolis { delta } => estimate_mh(instance, n, delta, rng, budget),
        }
    }

    fn delta(&self) -> Option<f64> {
        match *self {
            Self::Simple => None,
            Self::Metropolis { delta } => Some(delta),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub estimator_id: String,
    pub n: usize,
    pub replications: usize,
    pub values: Vec<f64>,
    pub rmse: f64,
    pub truth: f64,
    pub budget_totals: ChainBudget,
    pub delta_used: Option<f64>,
}

/// Runs `estimator` with stream ids `0..replications` and measures the RMSE
/// against the instance's reference value. Reductions follow replication order.
pub fn measure_rmse<E: Estimator + ?Sized>(
    instance: &ProblemInstance,
    estimator: &E,
    n: usize,
    replications: usize,
    seed: u64,
) -> Result<EstimateReport> {
    let truth = instance.truth.ok_or(Error::NeedsReference)?;
    if replications < 2 {
        return Err(Error::InvalidArgument("need at least two replications".into()));
    }
    let runs: Vec<(f64, ChainBudget)> = (0..replications)
        .into_par_iter()
        .map(|r| {
            let mut rng = RngStream::new(seed, r as u64);
            let mut budget = ChainBudget::new();
            estimator
                .estimate(instance, n, &mut rng, &mut budget)
                .map(|v| (v, budget))
        })
        .collect::<Result<_>>()?;
    let values: Vec<f64> = runs.iter().map(|r| r.0).collect();
    let budget_totals = runs.iter().map(|r| r.1).sum();
    let mse = values.iter().map(|v| (v - truth).powi(2)).sum::<f64>() / replications as f64;
    Ok(EstimateReport {
        estimator_id: estimator.id(),
        n,
        replications,
        values,
        rmse: mse.sqrt(),
        truth,
        budget_totals,
        delta_used: estimator.delta(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorstCase {
    pub rmse: f64,
    pub index: usize,
    pub reports: Vec<EstimateReport>,
}

/// Largest RMSE over a finite family; every member uses the same streams.
pub fn worst_case_over_family<E: Estimator + ?Sized>(
    family: &[ProblemInstance],
    estimator: &E,
    n: usize,
    replications: usize,
    seed: u64,
) -> Result<WorstCase> {
    if family.is_empty() {
        return Err(Error::InvalidArgument("empty family".into()));
    }
    let reports = family
        .iter()
        .map(|inst| measure_rmse(inst, estimator, n, replications, seed))
        .collect::<Result<Vec<_>>>()?;
    let (index, rmse) = reports
        .iter()
        .enumerate()
        .map(|(i, r)| (i, r.rmse))
        .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
    Ok(WorstCase {
        rmse,
        index,
        reports,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriorAveragedReport {
    pub estimator_id: String,
    pub n: usize,
    pub c: f64,
    pub prior_draws: usize,
    pub replications: usize,
    /// Root of the squared error averaged over prior draws and estimator randomness.
    pub rmse: f64,
    pub budget_totals: ChainBudget,
}

/// Stream ids at or above this value are reserved for prior draws.
pub const PRIOR_STREAM_BASE: u64 = 1 << 63;

/// Prior-averaged RMSE on the ratio-bounded hard family with `2n` cells.
///
/// Draw `k` of the prior uses stream `PRIOR_STREAM_BASE + k`; replication `r`
/// of draw `k` uses stream `k · replications + r`.
pub fn prior_averaged_rmse_fc<E: Estimator + ?Sized>(
    estimator: &E,
    n: usize,
    c: f64,
    prior_draws: usize,
    replications: usize,
    seed: u64,
) -> Result<PriorAveragedReport> {
    if prior_draws < 1 || replications < 1 {
        return Err(Error::InvalidArgument("need at least one draw and one replication".into()));
    }
    let per_draw: Vec<(f64, ChainBudget)> = (0..prior_draws)
        .into_par_iter()
        .map(|k| {
            let mut prior_rng = RngStream::new(seed, PRIOR_STREAM_BASE + k as u64);
            let inst = sample_fc_prior(n, c, &mut prior_rng)?.instance;
            let truth = inst.truth.ok_or(Error::NeedsReference)?;
            let mut sq = 0.0;
            let mut budget = ChainBudget::new();
            for r in 0..replications {
                let mut rng = RngStream::new(seed, (k * replications + r) as u64);
                let v = estimator.estimate(&inst, n, &mut rng, &mut budget)?;
                sq += (v - truth).powi(2);
            }
            Ok((sq, budget))
        })
        .collect::<Result<_>>()?;
    let total: f64 = per_draw.iter().map(|p| p.0).sum();
    let budget_totals = per_draw.iter().map(|p| p.1).sum();
    Ok(PriorAveragedReport {
        estimator_id: estimator.id(),
        n,
        c,
        prior_draws,
        replications,
        rmse: (total / (prior_draws * replications) as f64).sqrt(),
        budget_totals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ConvexBody;
    use crate::instances::{
        make_smooth_instance, make_tilted_interval_instance, IntegrandOracle, WeightOracle,
    };

    #[test]
    fn delta_star_examples() {
        assert_eq!(delta_star(3, 2.0), 0.5);
        assert_eq!(delta_star(3, 0.0), 0.5);
        assert_eq!(delta_star(99, 1.0), 0.1);
    }

    #[test]
    fn constant_f_is_exact() {
        let inst = ProblemInstance::custom(
            ConvexBody::unit_ball(2).unwrap(),
            IntegrandOracle::constant(0.7),
            WeightOracle::exp_distance(vec![0.5, 0.0], 3.0, 1.0),
        );
        let mut budget = ChainBudget::new();
        for s in 0..20 {
            let mut rng = RngStream::new(s, 0);
            let v = estimate_simple(&inst, 17, &mut rng, &mut budget).unwrap();
            assert!((v - 0.7).abs() < 1e-15);
            let v = estimate_mh(&inst, 17, 0.4, &mut rng, &mut budget).unwrap();
            assert!((v - 0.7).abs() < 1e-15);
        }
    }

    #[test]
    fn simple_budget() {
        let inst = make_smooth_instance("linear-f").unwrap();
        let mut budget = ChainBudget::new();
        estimate_simple(&inst, 100, &mut RngStream::new(1, 1), &mut budget).unwrap();
        assert_eq!(budget.f_evals, 100);
        assert_eq!(budget.rho_evals, 100);
        assert_eq!(budget.membership_calls, 0);
    }

    #[test]
    fn simple_linear_mean() {
        let inst = make_smooth_instance("linear-f").unwrap();
        let mut budget = ChainBudget::new();
        let v = estimate_simple(&inst, 1_000_000, &mut RngStream::new(3, 0), &mut budget).unwrap();
        assert!((v - 0.5).abs() <= 3.0 / 12f64.sqrt() / 1000.0);
    }

    #[test]
    fn simple_is_convex_combination() {
        let inst = make_tilted_interval_instance(3.0).unwrap();
        for s in 0..50 {
            // record the sample by replaying the stream
            let mut rng = RngStream::new(s, 9);
            let mut budget = ChainBudget::new();
            let v = estimate_simple(&inst, 25, &mut rng, &mut budget).unwrap();
            let mut replay = RngStream::new(s, 9);
            let xs: Vec<f64> = (0..25).map(|_| inst.body.uniform_sample(&mut replay)[0]).collect();
            let lo = xs.iter().cloned().fold(f64::MAX, f64::min);
            let hi = xs.iter().cloned().fold(f64::MIN, f64::max);
            assert!(v >= lo - 1e-15 && v <= hi + 1e-15);
        }
    }

    #[test]
    fn invalid_density_surfaces() {
        let inst = ProblemInstance::custom(
            ConvexBody::unit_interval(),
            IntegrandOracle::constant(1.0),
            WeightOracle::constant(-1.0),
        );
        let mut budget = ChainBudget::new();
        assert_eq!(
            estimate_simple(&inst, 3, &mut RngStream::new(0, 0), &mut budget),
            Err(Error::InvalidDensity(-1.0))
        );
    }

    struct Oracle;

    impl Estimator for Oracle {
        fn id(&self) -> String {
            "oracle".into()
        }

        fn estimate(&self, inst: &ProblemInstance, _: usize, _: &mut RngStream, _: &mut ChainBudget) -> Result<f64> {
            Ok(inst.truth.unwrap())
        }
    }

    #[test]
    fn rmse_zero_cases() {
        let inst = make_smooth_instance("gaussian-like").unwrap();
        assert_eq!(measure_rmse(&inst, &Oracle, 10, 4, 1).unwrap().rmse, 0.0);

        let zero = ProblemInstance {
            truth: Some(0.0),
            ..ProblemInstance::custom(
                ConvexBody::unit_interval(),
                IntegrandOracle::constant(0.0),
                WeightOracle::constant(1.0),
            )
        };
        let rep = measure_rmse(&zero, &EstimatorSpec::Simple, 10, 5, 1).unwrap();
        assert_eq!(rep.rmse, 0.0);
        assert_eq!(rep.values.len(), 5);
        assert_eq!(rep.budget_totals.f_evals, 50);
    }

    #[test]
    fn rmse_errors() {
        let inst = ProblemInstance::custom(
            ConvexBody::unit_interval(),
            IntegrandOracle::constant(0.0),
            WeightOracle::constant(1.0),
        );
        assert_eq!(measure_rmse(&inst, &EstimatorSpec::Simple, 10, 5, 1).unwrap_err(), Error::NeedsReference);
        let inst = make_smooth_instance("linear-f").unwrap();
        assert!(measure_rmse(&inst, &EstimatorSpec::Simple, 10, 1, 1).is_err());
        assert!(worst_case_over_family(&[], &EstimatorSpec::Simple, 10, 5, 1).is_err());
    }

    #[test]
    fn rmse_definition_holds() {
        let inst = make_tilted_interval_instance(2.0).unwrap();
        let rep = measure_rmse(&inst, &EstimatorSpec::Metropolis { delta: 0.5 }, 200, 16, 3).unwrap();
        let mse = rep.values.iter().map(|v| (v - rep.truth).powi(2)).sum::<f64>() / 16.0;
        assert_eq!(rep.rmse, mse.sqrt());
        assert_eq!(rep.delta_used, Some(0.5));
    }

    #[test]
    fn single_member_family() {
        let inst = make_smooth_instance("linear-f").unwrap();
        let single = measure_rmse(&inst, &EstimatorSpec::Simple, 64, 8, 5).unwrap();
        let wc = worst_case_over_family(std::slice::from_ref(&inst), &EstimatorSpec::Simple, 64, 8, 5).unwrap();
        assert_eq!(wc.rmse, single.rmse);
        assert_eq!(wc.index, 0);
    }

    #[test]
    fn batch_means_iid() {
        let mut rng = RngStream::new(12, 0);
        let xs: Vec<f64> = (0..40_000).map(|_| rng.uniform()).collect();
        let se = batch_means_std_error(&xs, 200);
        let expected = (1.0 / 12.0 / 40_000.0f64).sqrt();
        assert!((se / expected - 1.0).abs() < 0.25, "{se} vs {expected}");
    }
}
