use proptest::prelude::*;

use submax::nonmonotone::bracketing_indices;
use submax::objectives::{
    brute_force_opt, generate_coverage, generate_synthetic, Instance, InstanceKind, SyntheticSpec,
};
use submax::{
    adaptive_nonmonotone_max, greedy, random_lazy_greedy, random_prefix, seeded_rng, stream_rng,
    threshold_sampling, BreakReason, ElementId, Execution, NonmonotoneParams, Objective, Oracle,
    Subset, ThresholdParams,
};

fn instance(kind_index: usize, n: usize, seed: u64) -> Instance {
    let kind = InstanceKind::ALL[kind_index % InstanceKind::ALL.len()];
    generate_synthetic(kind, &SyntheticSpec::new(n).with_p(0.3), seed).unwrap()
}

fn singleton_max(f: &dyn Objective) -> f64 {
    (0..f.ground_size())
        .map(|i| f.value(&Subset::from_indices([i])))
        .fold(f64::NEG_INFINITY, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn outputs_respect_cardinality_and_ledgers_balance(
        kind in 0usize..4, n in 6usize..24, k in 1usize..6, seed in any::<u64>()
    ) {
        let f = instance(kind, n, seed);
        let params = NonmonotoneParams::new(k, 0.3, 0.1).with_sample_override(Some(20));
        let mut oracle = Oracle::new(&f);
        let out = adaptive_nonmonotone_max(&mut oracle, &params, &mut seeded_rng(seed)).unwrap();
        prop_assert!(out.solution.len() <= k);
        prop_assert!(out.ledger.is_consistent());
        prop_assert_eq!(out.ledger.total_queries(),
            out.ledger.per_round().iter().map(|r| r.queries).sum::<u64>());
        prop_assert!((f.value(&out.solution) - out.value).abs() <= 1e-9 * out.value.abs().max(1.0));
        for trial in &out.trials {
            prop_assert!(trial.outcome.solution.len() <= k);
            prop_assert!(trial.outcome.solution.is_disjoint(&trial.outcome.candidates));
            prop_assert_eq!(trial.unconstrained.is_some(), trial.outcome.break_reason == BreakReason::SmallA);
            if let Some(d) = &trial.downsampled {
                prop_assert!(d.len() <= k);
                prop_assert!(d.is_subset_of(trial.unconstrained.as_ref().unwrap()));
                prop_assert!(trial.prefix.as_ref().unwrap().is_subset_of(d));
            }
        }
        // One round for the singletons, then the slowest trial.
        if !out.trials.is_empty() {
            let slowest = out.trials.iter().map(|t| t.outcome.ledger.rounds()).max().unwrap();
            prop_assert!(out.ledger.rounds() > slowest);
            prop_assert!(out.ledger.rounds() <= 1 + slowest + 2);
        }

        for out in [
            greedy(&mut Oracle::new(&f), k).unwrap(),
            random_prefix(&mut Oracle::new(&f), k, &mut seeded_rng(seed)).unwrap(),
            random_lazy_greedy(&mut Oracle::new(&f), k, 0.01, &mut seeded_rng(seed)).unwrap(),
        ] {
            prop_assert!(out.set.len() <= k);
            prop_assert_eq!(out.order.len(), out.set.len());
            prop_assert!((f.value(&out.set) - out.value).abs() <= 1e-9 * out.value.abs().max(1.0));
        }
    }

    #[test]
    fn execution_mode_never_changes_results(kind in 0usize..4, n in 6usize..30, seed in any::<u64>()) {
        let f = instance(kind, n, seed);
        let run = |exec: Execution| {
            let params = ThresholdParams::new(3, singleton_max(&f) / 4.0, 0.3, 0.1).with_sample_override(Some(30));
            let mut oracle = Oracle::new(&f).with_execution(exec);
            let ts = threshold_sampling(&mut oracle, &params, &mut seeded_rng(seed)).unwrap();
            let mut oracle = Oracle::new(&f).with_execution(exec);
            let rlg = random_lazy_greedy(&mut oracle, 3, 0.01, &mut seeded_rng(seed)).unwrap();
            (ts.solution, ts.ledger, rlg.set, oracle.into_ledger())
        };
        prop_assert_eq!(run(Execution::Sequential), run(Execution::Parallel));
    }

    #[test]
    fn candidate_pools_shrink_and_survivors_clear_the_threshold(
        kind in 0usize..4, n in 8usize..30, k in 1usize..8, seed in any::<u64>(), frac in 0.05f64..0.9
    ) {
        let f = instance(kind, n, seed);
        let tau = frac * singleton_max(&f).max(0.0);
        let params = ThresholdParams::new(k, tau, 0.3, 0.1)
            .with_sample_override(Some(30))
            .with_debug_trace(true);
        let mut oracle = Oracle::new(&f);
        let out = threshold_sampling(&mut oracle, &params, &mut seeded_rng(seed)).unwrap();
        let consts = params.constants(n);
        prop_assert!(out.ledger.rounds() <= 3 * consts.rounds * (consts.scan_steps + 2));
        let mut previous: Option<&Vec<usize>> = None;
        for snap in &out.snapshots {
            if let Some(prev) = previous {
                prop_assert!(snap.candidate_set.iter().all(|x| prev.contains(x)));
            }
            previous = Some(&snap.candidate_set);
            // Re-check the filter outside the ledger.
            let s = Subset::from_indices(snap.solution_set.iter().copied());
            let base = f.value(&s);
            for &x in &snap.candidate_set {
                prop_assert!(f.value(&s.with(ElementId(x))) - base >= tau);
            }
            prop_assert!(snap.solution_size <= k);
        }
    }

    #[test]
    fn threshold_grid_brackets_the_optimum(kind in 0usize..4, n in 4usize..12, k in 1usize..5, seed in any::<u64>()) {
        let f = instance(kind, n, seed);
        let (_, opt) = brute_force_opt(&f, k).unwrap();
        let delta_star = singleton_max(&f);
        prop_assume!(opt > 0.0 && delta_star > 0.0);
        prop_assert!(opt <= k as f64 * delta_star + 1e-9);
        let params = NonmonotoneParams::new(k, 0.3, 0.1);
        prop_assert!(!bracketing_indices(&params, delta_star, opt).is_empty());
    }

    #[test]
    fn lazy_greedy_picks_among_true_top_k(kind in 0usize..4, n in 5usize..20, k in 1usize..6, seed in any::<u64>()) {
        let f = instance(kind, n, seed);
        let out = random_lazy_greedy(&mut Oracle::new(&f), k, 0.01, &mut seeded_rng(seed)).unwrap();
        let mut chosen = Subset::empty();
        for &x in &out.order {
            let base = f.value(&chosen);
            let mut gains: Vec<f64> = (0..n)
                .map(ElementId)
                .filter(|&y| !chosen.contains(y))
                .map(|y| f.value(&chosen.with(y)) - base)
                .collect();
            gains.sort_by(|a, b| b.total_cmp(a));
            let kth = gains[(k - 1).min(gains.len() - 1)];
            let gain = f.value(&chosen.with(x)) - base;
            prop_assert!(gain > 0.0);
            prop_assert!(gain >= kth - 1e-9 * kth.abs().max(1.0), "gain {} below k-th {}", gain, kth);
            chosen.insert(x);
        }
    }
}

#[test]
fn greedy_ledger_bounds() {
    for seed in 0..10 {
        let f = instance(seed as usize, 30, seed);
        let k = 6;
        let mut oracle = Oracle::new(&f);
        greedy(&mut oracle, k).unwrap();
        assert!(oracle.ledger().rounds() <= k + 1);
        assert!(oracle.ledger().total_queries() <= (30 * k + 30) as u64);
        let mut oracle = Oracle::new(&f);
        random_prefix(&mut oracle, k, &mut seeded_rng(seed)).unwrap();
        assert_eq!(oracle.ledger().rounds(), 1);
        assert!(oracle.ledger().total_queries() <= (k + 1) as u64);
    }
}

#[test]
fn random_prefix_mean_on_two_nodes_is_exactly_one() {
    let f = submax::objectives::RevenueMaximization::new(
        submax::objectives::WeightedGraph::new(2, vec![(0, 1, 1.0)]).unwrap(),
    );
    let total: f64 = (0..10_000)
        .map(|s| random_prefix(&mut Oracle::new(&f), 2, &mut seeded_rng(s)).unwrap().value)
        .sum();
    assert_eq!(total / 10_000.0, 1.0);
}

#[test]
fn lazy_greedy_mean_on_small_coverage() {
    let f = generate_coverage(10, 30, 2, 8, 5);
    let k = 3;
    let (_, opt) = brute_force_opt(&f, k).unwrap();
    let runs = 500;
    let mean = (0..runs)
        .map(|s| random_lazy_greedy(&mut Oracle::new(&f), k, 0.01, &mut seeded_rng(s)).unwrap().value)
        .sum::<f64>()
        / runs as f64;
    assert!(mean >= (1.0 / std::f64::consts::E - 0.05) * opt, "{mean} vs {opt}");
}

/// With `g(S) = f(S ∪ S*)`, the mean of `g` over break-variant outputs stays above
/// `(1 − 1/c₃)·f(S*)` up to two standard errors.
#[test]
fn break_variant_outputs_rarely_hurt_the_optimum() {
    let k = 2;
    let c3 = 3.0;
    for seed in 0..3u64 {
        let f = generate_synthetic(InstanceKind::Revenue, &SyntheticSpec::new(14).with_p(0.3), 40 + seed).unwrap();
        let (opt_set, opt) = brute_force_opt(&f, k).unwrap();
        let tau = singleton_max(&f) / 3.0;
        let params = ThresholdParams::new(k, tau, 0.3, 0.1)
            .with_break_size((c3 * k as f64).ceil() as usize)
            .with_sample_override(Some(100));
        let runs = 1000;
        let values: Vec<f64> = (0..runs)
            .map(|r| {
                let out = threshold_sampling(&mut Oracle::new(&f), &params, &mut stream_rng(seed, r)).unwrap();
                f.value(&out.solution.union(&opt_set))
            })
            .collect();
        let mean = values.iter().sum::<f64>() / runs as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (runs as f64 - 1.0);
        let se = (var / runs as f64).sqrt();
        assert!(mean >= (1.0 - 1.0 / c3) * opt - 2.0 * se, "seed {seed}: {mean} vs {opt}");
    }
}
