use metroball::budget::ChainBudget;
use metroball::estimators::*;
use metroball::geometry::{packing_on_ball, ConvexBody};
use metroball::instances::{
    fad_family, make_smooth_instance, make_tilted_interval_instance, sample_fc_prior, IntegrandOracle,
    ProblemInstance, WeightOracle,
};
use metroball::rng::RngStream;

#[test]
fn tilted_interval_long_chain() {
    // ρ = e^{-2x} on [-1, 1], f(x) = x, δ* = min(1/√2, 1/2)
    let inst = make_tilted_interval_instance(2.0).unwrap();
    let truth = inst.truth.unwrap();
    let delta = delta_star(1, 2.0);
    assert_eq!(delta, 0.5);
    let mut budget = ChainBudget::new();
    let (est, se) =
        estimate_mh_with_error(&inst, 10_000_000, delta, &mut RngStream::new(4, 0), &mut budget).unwrap();
    assert!((est - truth).abs() <= 3.0 * se, "{est} vs {truth} (se {se})");
    assert_eq!(budget.f_evals, 10_000_000);
}

#[test]
fn tilted_interval_truth_closed_form() {
    // S = ∫x e^{-αx} / ∫e^{-αx} on [-1, 1] = coth(α)·(-1) + 1/α
    for alpha in [0.5, 2.0, 6.0] {
        let inst = make_tilted_interval_instance(alpha).unwrap();
        let closed = 1.0 / alpha - 1.0 / alpha.tanh();
        assert!((inst.truth.unwrap() - closed).abs() < 1e-12, "alpha {alpha}");
    }
}

#[test]
fn odd_integrand_on_disk() {
    let inst = ProblemInstance {
        truth: Some(0.0),
        ..ProblemInstance::custom(
            ConvexBody::unit_ball(2).unwrap(),
            IntegrandOracle::coordinate(0),
            WeightOracle::constant(1.0),
        )
    };
    let mut budget = ChainBudget::new();
    let delta = 1.0 / 3f64.sqrt();
    let (est, se) =
        estimate_mh_with_error(&inst, 10_000_000, delta, &mut RngStream::new(17, 0), &mut budget).unwrap();
    assert!(est.abs() <= 3.0 * se, "{est} (se {se})");
}

#[test]
fn constant_density_rmse_below_classical_rate() {
    for (name, n) in [("constant-density", 64usize), ("linear-f", 256)] {
        let inst = make_smooth_instance(name).unwrap();
        let rep = measure_rmse(&inst, &EstimatorSpec::Simple, n, 2000, 21).unwrap();
        // sampling noise of the RMSE estimate itself is about rmse/√(2·reps)
        let slack = 3.0 * rep.rmse / (2.0 * 2000f64).sqrt();
        assert!(rep.rmse <= 1.0 / (n as f64).sqrt() + slack, "{name}: {}", rep.rmse);
    }
}

#[test]
fn fc_example_sandwich() {
    let (n, c) = (512usize, 8.0);
    let rep = prior_averaged_rmse_fc(&EstimatorSpec::Simple, n, c, 200, 50, 1).unwrap();
    let lower = (2f64.sqrt() / 6.0) * (c / (2.0 * n as f64)).sqrt();
    let upper = 2.0 * (2.0 * c / n as f64).sqrt();
    assert!(lower <= rep.rmse && rep.rmse <= upper, "{}", rep.rmse);
    assert_eq!(rep.budget_totals.f_evals, (200 * 50 * n) as u64);
}

#[test]
fn prior_averaged_streams_are_disjoint_from_replications() {
    let a = prior_averaged_rmse_fc(&EstimatorSpec::Simple, 32, 4.0, 5, 3, 8).unwrap();
    let b = prior_averaged_rmse_fc(&EstimatorSpec::Simple, 32, 4.0, 5, 3, 8).unwrap();
    assert_eq!(a, b);
    // the k-th prior draw is reproducible on its own
    let mut rng = RngStream::new(8, PRIOR_STREAM_BASE + 2);
    let first = sample_fc_prior(32, 4.0, &mut rng).unwrap();
    let mut rng = RngStream::new(8, PRIOR_STREAM_BASE + 2);
    assert_eq!(first.cells, sample_fc_prior(32, 4.0, &mut rng).unwrap().cells);
}

#[test]
fn family_worst_case_is_max_of_members() {
    let packing = packing_on_ball(4, 2).unwrap();
    let family = fad_family(3.0, &packing).unwrap();
    assert_eq!(family.len(), 8);
    let spec = EstimatorSpec::Metropolis { delta: delta_star(2, 3.0) };
    let wc = worst_case_over_family(&family, &spec, 64, 10, 2).unwrap();
    let max = family
        .iter()
        .map(|i| measure_rmse(i, &spec, 64, 10, 2).unwrap().rmse)
        .fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(wc.rmse, max);
    assert_eq!(wc.reports[wc.index].rmse, max);
}

#[test]
fn replications_are_thread_count_independent() {
    let inst = make_smooth_instance("gaussian-like").unwrap();
    let spec = EstimatorSpec::Metropolis { delta: 0.4 };
    let serial = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let wide = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let a = serial.install(|| measure_rmse(&inst, &spec, 500, 12, 3).unwrap());
    let b = wide.install(|| measure_rmse(&inst, &spec, 500, 12, 3).unwrap());
    assert_eq!(a, b);
}
