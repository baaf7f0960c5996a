//! Backward induction, policy evaluation and sampling against brute force.

use rand::Rng;
use sparse_elim::instances::{make_random_sparse_instance, RandomSparseSpec};
use sparse_elim::mdp::{
    exact_optimal, exact_policy_value, sample_dataset, state_distributions, Reward, TabularMdp, TabularPolicy,
    Transition,
};
use sparse_elim::seed::stream;

/// Small random layered MDP with stochastic transitions and rewards.
fn random_mdp(seed: u64) -> TabularMdp {
    let mut rng = stream(seed);
    let horizon = rng.random_range(1..=4);
    let sizes: Vec<usize> = (0..horizon).map(|h| if h == 0 { 1 } else { rng.random_range(1..=3) }).collect();
    let na = 2;
    let budget = 1.0 / horizon as f64;
    let transitions = (0..horizon - 1)
        .map(|h| {
            (0..sizes[h])
                .map(|_| {
                    (0..na)
                        .map(|_| {
                            let t = rng.random_range(0..sizes[h + 1]);
                            if rng.random::<bool>() || sizes[h + 1] == 1 {
                                Transition::Det(t)
                            } else {
                                let p = rng.random_range(0.1..0.9);
                                Transition::Dist(vec![(t, p), ((t + 1) % sizes[h + 1], 1.0 - p)])
                            }
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let rewards = (0..horizon)
        .map(|h| {
            (0..sizes[h])
                .map(|_| {
                    (0..na)
                        .map(|_| {
                            let hi = rng.random_range(0.0..budget);
                            Reward::Dist(vec![(0.0, 0.5), (hi, 0.5)])
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    TabularMdp::new(sizes, vec!["a1".into(), "a2".into()], transitions, rewards).unwrap()
}

/// Every deterministic Markov policy of a small MDP.
fn all_policies(mdp: &TabularMdp) -> Vec<TabularPolicy> {
    let cells: Vec<(usize, usize)> =
        (0..mdp.horizon()).flat_map(|h| (0..mdp.level_size(h)).map(move |s| (h, s))).collect();
    let na = mdp.num_actions();
    (0..na.pow(cells.len() as u32))
        .map(|mut code| {
            let mut acts: Vec<Vec<usize>> = mdp.level_sizes().iter().map(|&n| vec![0; n]).collect();
            for &(h, s) in &cells {
                acts[h][s] = code % na;
                code /= na;
            }
            TabularPolicy::new(mdp, acts).unwrap()
        })
        .collect()
}

#[test]
fn backward_induction_matches_policy_enumeration() {
    for seed in 0..40 {
        let mdp = random_mdp(seed);
        assert!(mdp.total_states() <= 12);
        let best = all_policies(&mdp)
            .iter()
            .map(|p| exact_policy_value(&mdp, p).unwrap())
            .fold(f64::NEG_INFINITY, f64::max);
        let sol = exact_optimal(&mdp);
        assert!((sol.value() - best).abs() < 1e-12, "seed {seed}: {} vs {best}", sol.value());
        assert!((exact_policy_value(&mdp, &sol.policy).unwrap() - best).abs() < 1e-12);
    }
}

#[test]
fn state_distributions_are_probability_vectors() {
    for seed in 0..20 {
        let mdp = random_mdp(seed);
        let pi = TabularPolicy::constant(&mdp, 1).unwrap();
        for d in state_distributions(&mdp, &pi).unwrap() {
            assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn monte_carlo_return_converges_to_exact_value() {
    for seed in 0..5 {
        let mdp = random_mdp(100 + seed);
        let pi = exact_optimal(&mdp).policy;
        let exact = exact_policy_value(&mdp, &pi).unwrap();
        let m = 20_000;
        let data = sample_dataset(&mdp, &pi, m, seed).unwrap();
        let mc = data.iter().map(|t| t.reward_sum()).sum::<f64>() / m as f64;
        // returns lie in [0, 1]: three standard deviations of a mean of m draws
        assert!((mc - exact).abs() <= 3.0 * 0.5 / (m as f64).sqrt(), "seed {seed}: {mc} vs {exact}");
    }
}

#[test]
fn generated_instances_round_trip_through_json() {
    let spec = RandomSparseSpec { stochastic: true, ..RandomSparseSpec::new(4, 2, 3, 0.05, 3) };
    let inst = make_random_sparse_instance(&spec, None, &mut stream(7)).unwrap();
    let back = TabularMdp::from_json(&inst.mdp.to_json().unwrap()).unwrap();
    assert_eq!(back, inst.mdp);
    let phi = sparse_elim::sparse::FeatureMap::from_json(&inst.phi.to_json().unwrap()).unwrap();
    assert_eq!(phi, inst.phi);
}
