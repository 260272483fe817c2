use proptest::prelude::*;

use metroball::bounds::*;
use metroball::budget::ChainBudget;
use metroball::chains::{run_chain, ChainConfig};
use metroball::estimators::{delta_star, estimate_mh, estimate_simple};
use metroball::geometry::{packing_on_ball, ConvexBody, Domain, Packing, Point};
use metroball::instances::{make_fc_instance, make_fad_instance, WeightOracle};
use metroball::rng::RngStream;
use metroball::spectral::{conductance_exact, second_eigenvalue, DiscreteChain};

fn fc_instance(n: usize, c: f64, offset: usize, signs: &[bool]) -> metroball::instances::FcHardInstance {
    let m = 2 * n;
    let l = metroball::instances::fc_support_size(m, c);
    let mut cells: Vec<usize> = (0..l).map(|k| (k + offset) % m).collect();
    cells.sort_unstable();
    let eps = (0..l).map(|k| if signs[k % signs.len()] { 1 } else { -1 }).collect();
    make_fc_instance(n, c, cells, eps).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scale_invariance_is_exact_for_binary_factors(
        k in -40i32..40,
        seed in any::<u64>(),
        n in 1usize..300,
        alpha in 0.0f64..8.0,
        index in 0usize..4,
    ) {
        let factor = 2f64.powi(k);
        let packing = packing_on_ball(4, 2).unwrap();
        let inst = make_fad_instance(alpha, &packing, index, 1).unwrap();
        let scaled = inst.with_scaled_rho(factor);
        let mut b = ChainBudget::new();
        let a1 = estimate_simple(&inst, n, &mut RngStream::new(seed, 0), &mut b).unwrap();
        let a2 = estimate_simple(&scaled, n, &mut RngStream::new(seed, 0), &mut b).unwrap();
        prop_assert_eq!(a1.to_bits(), a2.to_bits());
        let delta = delta_star(2, alpha);
        let m1 = estimate_mh(&inst, n, delta, &mut RngStream::new(seed, 1), &mut b).unwrap();
        let m2 = estimate_mh(&scaled, n, delta, &mut RngStream::new(seed, 1), &mut b).unwrap();
        prop_assert_eq!(m1.to_bits(), m2.to_bits());
    }

    #[test]
    fn scale_invariance_of_simple_up_to_rounding(
        factor in 1e-6f64..1e6,
        seed in any::<u64>(),
        n in 1usize..300,
    ) {
        let packing = packing_on_ball(4, 2).unwrap();
        let inst = make_fad_instance(3.0, &packing, 2, -1).unwrap();
        let mut b = ChainBudget::new();
        let a1 = estimate_simple(&inst, n, &mut RngStream::new(seed, 0), &mut b).unwrap();
        let a2 = estimate_simple(&inst.with_scaled_rho(factor), n, &mut RngStream::new(seed, 0), &mut b).unwrap();
        prop_assert!((a1 - a2).abs() <= 1e-12 * a1.abs().max(1e-300) + 1e-300);
    }

    #[test]
    fn simple_estimate_bounded_by_sup_f(
        n in 1usize..64,
        c in 1.5f64..50.0,
        offset in 0usize..1000,
        signs in proptest::collection::vec(any::<bool>(), 1..8),
        samples in 1usize..200,
        seed in any::<u64>(),
    ) {
        // |f| <= 1 on every member of the family
        let fc = fc_instance(n, c, offset, &signs);
        let mut b = ChainBudget::new();
        let v = estimate_simple(&fc.instance, samples, &mut RngStream::new(seed, 0), &mut b).unwrap();
        prop_assert!(v.abs() <= 1.0);
        prop_assert!(fc.instance.truth.unwrap().abs() <= 1.0);
    }

    #[test]
    fn bound_sandwich_gap_is_constant(n in 1usize..1_000_000, c in 1.0f64..1e4) {
        prop_assume!(2.0 * n as f64 >= c - 1.0);
        let lo = lower_bound_fc(n, c);
        let hi = upper_bound_simple(n, c);
        prop_assert!(lo <= hi);
        if 2.0 * c < n as f64 {
            prop_assert!(((hi / lo) / (12.0 * std::f64::consts::SQRT_2) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn conductance_bound_monotone(
        l in 0.01f64..1.0,
        dl in 0.0f64..0.5,
        delta in 0.01f64..2.0,
        diam in 0.1f64..10.0,
        dd in 0.0f64..5.0,
        d in 1usize..30,
        alpha in 0.0f64..50.0,
        da in 0.0f64..5.0,
    ) {
        let base = conductance_lb_metropolis(l, delta, diam, d, alpha);
        prop_assert!(base >= 0.0);
        prop_assert!(conductance_lb_metropolis(l, delta, diam, d, alpha + da) <= base);
        prop_assert!(conductance_lb_metropolis(l, delta, diam + dd, d, alpha) <= base);
        prop_assert!(conductance_lb_metropolis((l + dl).min(1.0), delta, diam, d, alpha) >= base);
    }

    #[test]
    fn error_constant_below_ceiling(d in 1usize..=50, alpha in 0.0f64..100.0) {
        let v = error_const_metropolis(d, delta_star(d, alpha), alpha);
        prop_assert!(v <= tract_ceiling(d, alpha));
    }

    #[test]
    fn discretized_chains_are_reversible(
        alpha in 0.0f64..10.0,
        delta in 0.01f64..3.0,
        states in 2usize..40,
    ) {
        let chain = DiscreteChain::discretize_1d(&WeightOracle::exp_tilt(alpha), delta, states).unwrap();
        prop_assert!(chain.detailed_balance_defect() <= 1e-12);
        prop_assert!(chain.row_sum_defect() <= 1e-12);
        let beta = second_eigenvalue(&chain).unwrap();
        // neighbouring cells overlap only when the step exceeds half a cell width
        if delta > 1.0 / states as f64 {
            prop_assert!((-1.0 - 1e-12..1.0 - 1e-12).contains(&beta));
        } else {
            prop_assert!((beta - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn cheeger_on_random_reversible_chains(
        weights in proptest::collection::vec(0.0f64..1.0, 36),
        states in 2usize..=8,
    ) {
        // symmetric edge weights define a reversible chain
        let mut w = vec![vec![0.0; states]; states];
        for i in 0..states {
            for j in i..states {
                let v = weights[(i * 8 + j) % 36] + if j == i + 1 { 0.05 } else { 0.0 };
                w[i][j] = v;
                w[j][i] = v;
            }
        }
        let total: f64 = w.iter().flatten().sum();
        let deg: Vec<f64> = w.iter().map(|r| r.iter().sum()).collect();
        let pi: Vec<f64> = deg.iter().map(|d| d / total).collect();
        let pi_sum: f64 = pi.iter().sum();
        let pi: Vec<f64> = pi.iter().map(|p| p / pi_sum).collect();
        let kernel: Vec<Vec<f64>> = (0..states)
            .map(|i| {
                let mut row: Vec<f64> = w[i].iter().map(|v| v / deg[i]).collect();
                let off: f64 = (0..states).filter(|j| *j != i).map(|j| row[j]).sum();
                row[i] = 1.0 - off;
                row
            })
            .collect();
        let chain = DiscreteChain::new(kernel, pi).unwrap();
        let lambda = 1.0 - second_eigenvalue(&chain).unwrap();
        let phi = conductance_exact(&chain).unwrap();
        prop_assert!(lambda >= phi * phi / 2.0 - 1e-12);
        prop_assert!(lambda <= 2.0 * phi + 1e-12);
    }

    #[test]
    fn rng_streams_replay(seed in any::<u64>(), stream in any::<u64>(), skip in 0usize..50) {
        let mut a = RngStream::new(seed, stream);
        let mut b = RngStream::new(seed, stream);
        for _ in 0..skip {
            a.uniform();
        }
        let counter = a.counter();
        let next = a.uniform();
        for _ in 0..skip {
            b.uniform();
        }
        prop_assert_eq!(b.counter(), counter);
        prop_assert_eq!(b.uniform().to_bits(), next.to_bits());
        let u = next;
        prop_assert!((0.0..1.0).contains(&u));
    }

    #[test]
    fn packings_are_valid_or_fail_cleanly(m in 1usize..80, d in 1usize..=4) {
        match packing_on_ball(m, d) {
            Ok(p) => {
                prop_assert_eq!(p.len(), m);
                prop_assert!(Packing::new(p.centers().to_vec(), p.radius()).is_ok());
            }
            Err(metroball::Error::PackingFailure { requested, available }) => {
                prop_assert_eq!(requested, m);
                prop_assert!(available < m);
            }
            Err(e) => prop_assert!(false, "unexpected error {e}"),
        }
    }

    #[test]
    fn metropolis_chain_stays_inside_and_counts(
        seed in any::<u64>(),
        n in 1usize..400,
        d in 1usize..6,
        alpha in 0.0f64..10.0,
        delta in 0.01f64..1.5,
    ) {
        let body = ConvexBody::unit_ball(d).unwrap();
        let mut center = vec![0.0; d];
        center[0] = 0.5;
        let rho = WeightOracle::exp_distance(center, alpha, 1.0);
        let (traj, budget) = run_chain(
            &Point::origin(d),
            n,
            ChainConfig::metropolis(delta),
            &body,
            Some(&rho),
            &mut RngStream::new(seed, 0),
        )
        .unwrap();
        prop_assert_eq!(traj.len(), n);
        prop_assert!(traj.iter().all(|x| body.contains(x)));
        prop_assert_eq!(budget.membership_calls, n as u64);
        prop_assert!(budget.rho_evals <= n as u64 + 1);
    }
}
