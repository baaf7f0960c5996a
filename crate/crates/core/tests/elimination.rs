//! Invariants of the elimination loop on instances where it actually
//! eliminates (small thresholds, small datasets).

use sparse_elim::elimination::{
    iteration_cap, run_elimination, run_elimination_with_net, EliminationConfig, RunReport,
};
use sparse_elim::instances::{make_random_sparse_instance, make_tree_instance, RandomSparseSpec};
use sparse_elim::mdp::{exact_optimal, exact_policy_value};
use sparse_elim::net::build_net;
use sparse_elim::seed::stream;
use sparse_elim::Error;

fn tight(k: usize, m: usize) -> EliminationConfig {
    EliminationConfig { sparsity: k, eps: 0.0, eps_net: 0.02, eps_stat: 0.02, delta: 0.1, m_override: Some(m) }
}

fn report_of(r: Result<RunReport, Error>) -> RunReport {
    match r {
        Ok(r) => r,
        Err(Error::Exhausted { report, .. }) | Err(Error::IterationCap { report, .. }) => *report,
        Err(e) => panic!("unexpected error {e}"),
    }
}

fn check_invariants(rep: &RunReport) {
    let mut prev = vec![rep.candidates_per_level; rep.horizon];
    for (t, it) in rep.iterations.iter().enumerate() {
        assert_eq!(it.iteration, t);
        let failing: Vec<usize> =
            (0..rep.horizon).filter(|&h| it.bellman_errors[h] > it.thresholds[h]).collect();
        assert_eq!(it.eliminated_levels, failing, "elimination is the complement of acceptance");
        assert_eq!(it.accepted, failing.is_empty());
        for h in 0..rep.horizon {
            let removed = failing.contains(&h) as usize;
            assert_eq!(it.remaining[h], prev[h] - removed, "sets shrink by exactly the eliminations");
        }
        assert!(it.accepted || !failing.is_empty(), "every iteration terminates or eliminates");
        if t + 1 < rep.iterations.len() {
            assert!(!it.accepted);
        }
        prev = it.remaining.clone();
    }
    assert!(rep.iterations.len() as u64 <= rep.iteration_cap);
    assert!(rep.iterations.len() <= rep.realized_cap());
    let n = rep.iterations.len() as u64;
    assert_eq!(rep.total_trajectories, n * (rep.horizon * rep.m) as u64);
    assert_eq!(rep.total_samples, rep.total_trajectories * rep.horizon as u64);
}

#[test]
fn invariants_hold_on_random_instances() {
    let mut eliminated_somewhere = false;
    for seed in 0..25 {
        let k = 1 + seed as usize % 2;
        let mut rng = stream(seed);
        let net = build_net(4, k, 0.6, &mut rng).unwrap();
        let spec = RandomSparseSpec { stochastic: seed % 3 == 0, ..RandomSparseSpec::new(4, k, 3, 0.0, 2) };
        let inst = make_random_sparse_instance(&spec, Some(&net), &mut rng).unwrap();
        let cfg = EliminationConfig { eps_net: 0.6, ..tight(k, 40) };
        let rep = report_of(run_elimination_with_net(
            &inst.mdp,
            &inst.phi,
            &net,
            &cfg,
            &mut rng,
            Some(&inst.theta_star),
        ));
        check_invariants(&rep);
        eliminated_somewhere |= rep.iterations.len() > 1;
    }
    assert!(eliminated_somewhere, "the tight setting should exercise elimination");
}

#[test]
fn realizable_deterministic_runs_meet_the_bound() {
    for seed in 0..20 {
        let mut rng = stream(1000 + seed);
        let net = build_net(5, 1, 0.5, &mut rng).unwrap();
        let inst = make_random_sparse_instance(&RandomSparseSpec::new(5, 1, 3, 0.0, 2), Some(&net), &mut rng).unwrap();
        let cfg = EliminationConfig { eps_net: 0.5, ..tight(1, 5) };
        let rep = run_elimination_with_net(&inst.mdp, &inst.phi, &net, &cfg, &mut rng, Some(&inst.theta_star))
            .expect("realizable deterministic runs terminate");
        check_invariants(&rep);
        // the exact reference is a candidate and has zero Bellman error, so it survives
        assert!(!rep.reference_ever_eliminated);
        let pi = rep.policy(&inst.mdp, &inst.phi).unwrap().unwrap();
        let sub = exact_optimal(&inst.mdp).value() - exact_policy_value(&inst.mdp, &pi).unwrap();
        assert!(sub <= cfg.suboptimality_bound(3) + 1e-12);
    }
}

#[test]
fn tree_reference_is_retained_and_plus_one_chosen_first() {
    for seed in 0..10 {
        let mut rng = stream(seed);
        let t = make_tree_instance(4, 0.05, (0..4).map(|h| (seed as usize >> h) & 1).collect()).unwrap();
        let (mdp, phi) = t.materialize().unwrap();
        let cfg = EliminationConfig { eps: 0.05, ..tight(1, 3) };
        let rep = run_elimination(&mdp, &phi, &cfg, &mut rng, Some(&t.theta_star())).unwrap();
        check_invariants(&rep);
        assert_eq!(rep.iterations[0].selected[0], 0, "+1 has the larger value at s_0");
        assert!(!rep.reference_ever_eliminated);
    }
}

#[test]
fn runs_are_reproducible() {
    let inst = make_random_sparse_instance(&RandomSparseSpec::new(4, 2, 3, 0.05, 2), None, &mut stream(3)).unwrap();
    let cfg = EliminationConfig { eps_net: 0.8, ..tight(2, 30) };
    let a = report_of(run_elimination(&inst.mdp, &inst.phi, &cfg, &mut stream(9), None));
    let b = report_of(run_elimination(&inst.mdp, &inst.phi, &cfg, &mut stream(9), None));
    assert_eq!(a, b);
    assert_eq!(a.to_jsonl().unwrap(), b.to_jsonl().unwrap());
}

#[test]
fn cap_matches_formula() {
    // ⌈(1 + 4/0.5)^1⌉ · C(6, 1) · 3
    assert_eq!(iteration_cap(6, 1, 3, 0.5).unwrap(), 9 * 6 * 3);
    // ⌈(1 + 4/1)^2⌉ · C(4, 2) · 2
    assert_eq!(iteration_cap(4, 2, 2, 1.0).unwrap(), 25 * 6 * 2);
}
