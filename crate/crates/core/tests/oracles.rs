//! Exact Bellman errors, the telescoping identity and the query game.

use rand::Rng;
use sparse_elim::elimination::empirical_bellman_error;
use sparse_elim::instances::{make_random_sparse_instance, make_tree_instance, RandomSparseSpec};
use sparse_elim::mdp::{exact_policy_value, sample_dataset, TabularMdp};
use sparse_elim::net::uniform_sphere;
use sparse_elim::oracles::{
    exact_avg_bellman_error, indq_play, indq_success_by_enumeration, indq_success_probability, FixedSequence,
    IndqGame, RandomGuess,
};
use sparse_elim::seed::stream;
use sparse_elim::sparse::{greedy_policy, v_theta, FeatureMap, SparseParam};

fn random_thetas<R: Rng>(d: usize, k: usize, horizon: usize, rng: &mut R) -> Vec<SparseParam> {
    (0..horizon)
        .map(|_| {
            let mut support = rand::seq::index::sample(rng, d, k).into_vec();
            support.sort_unstable();
            SparseParam::new(support, uniform_sphere(k, rng)).unwrap()
        })
        .collect()
}

fn telescoping_gap(mdp: &TabularMdp, phi: &FeatureMap, th: &[SparseParam]) -> f64 {
    let pi = greedy_policy(mdp, phi, th).unwrap();
    let lhs = v_theta(phi, &th[0], 0, 0) - exact_policy_value(mdp, &pi).unwrap();
    let rhs: f64 = (0..mdp.horizon()).map(|h| exact_avg_bellman_error(mdp, phi, th, h, &pi).unwrap()).sum();
    (lhs - rhs).abs()
}

#[test]
fn realizable_reference_has_zero_bellman_error() {
    let spec = RandomSparseSpec { stochastic: true, ..RandomSparseSpec::new(6, 2, 4, 0.0, 3) };
    let inst = make_random_sparse_instance(&spec, None, &mut stream(1)).unwrap();
    let pi = greedy_policy(&inst.mdp, &inst.phi, &inst.theta_star).unwrap();
    for h in 0..4 {
        let e = exact_avg_bellman_error(&inst.mdp, &inst.phi, &inst.theta_star, h, &pi).unwrap();
        assert!(e.abs() < 1e-12, "level {h}: {e}");
    }
}

#[test]
fn telescoping_holds_for_random_parameters() {
    let mut rng = stream(5);
    let spec = RandomSparseSpec { stochastic: true, ..RandomSparseSpec::new(6, 2, 4, 0.05, 2) };
    let inst = make_random_sparse_instance(&spec, None, &mut rng).unwrap();
    for _ in 0..50 {
        let th = random_thetas(6, 2, 4, &mut rng);
        assert!(telescoping_gap(&inst.mdp, &inst.phi, &th) < 1e-9);
    }
}

#[test]
fn deterministic_empirical_error_equals_exact() {
    let t = make_tree_instance(5, 0.1, vec![0, 1, 1, 0, 1]).unwrap();
    let (mdp, phi) = t.materialize().unwrap();
    let th = t.theta_star();
    let pi = greedy_policy(&mdp, &phi, &th).unwrap();
    let data = sample_dataset(&mdp, &pi, 3, 0).unwrap();
    for h in 0..5 {
        let emp = empirical_bellman_error(&data, &phi, &th, h).unwrap();
        let exact = exact_avg_bellman_error(&mdp, &phi, &th, h, &pi).unwrap();
        assert!((emp - exact).abs() < 1e-12);
    }
    // greedy picks a1 everywhere; the last level pays ε only if a*_{H-1} = a1
    let last = empirical_bellman_error(&data, &phi, &th, 4).unwrap();
    assert!((-0.1 - 1e-12..=1e-12).contains(&last));
}

#[test]
fn stochastic_empirical_error_concentrates() {
    let mut rng = stream(11);
    let spec = RandomSparseSpec { stochastic: true, ..RandomSparseSpec::new(4, 1, 3, 0.05, 2) };
    let inst = make_random_sparse_instance(&spec, None, &mut rng).unwrap();
    let th = random_thetas(4, 1, 3, &mut rng);
    let pi = greedy_policy(&inst.mdp, &inst.phi, &th).unwrap();
    let m = 5000;
    for trial in 0..10 {
        let data = sample_dataset(&inst.mdp, &pi, m, trial).unwrap();
        for h in 0..3 {
            let emp = empirical_bellman_error(&data, &inst.phi, &th, h).unwrap();
            let exact = exact_avg_bellman_error(&inst.mdp, &inst.phi, &th, h, &pi).unwrap();
            assert!((emp - exact).abs() <= 3.0 / (m as f64).sqrt(), "trial {trial} level {h}");
        }
    }
}

#[test]
fn exact_indq_probability_matches_enumeration() {
    let mut rng = stream(2);
    for (n, m) in [(2, 1), (3, 2), (4, 2), (5, 3), (8, 2), (16, 4)] {
        for _ in 0..10 {
            let q = rng.random_range(0..=n * m);
            let queries: Vec<(usize, usize)> =
                (0..q).map(|_| (rng.random_range(0..m), rng.random_range(0..n))).collect();
            assert_eq!(
                indq_success_probability(n, m, &queries).unwrap(),
                indq_success_by_enumeration(n, m, &queries).unwrap(),
                "n={n} m={m} q={q}"
            );
        }
    }
}

#[test]
fn random_guessing_eventually_wins() {
    let mut game = IndqGame::random(6, 2, &mut stream(3)).unwrap();
    let out = indq_play(&mut game, &mut RandomGuess(stream(4)), 10_000).unwrap();
    assert!(out.is_success());
    let mut game = IndqGame::new(4, 1, vec![3]).unwrap();
    let out = indq_play(&mut game, &mut FixedSequence(vec![(0, 0), (0, 1)]), 5).unwrap();
    assert!(!out.is_success());
}
