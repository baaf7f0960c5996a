//! Instance generators: the binary-tree and block lower-bound constructions,
//! the misspecified bandit, the high Bellman-rank tree and a random family
//! satisfying the sparse linear assumption by construction.

mod bandit;
mod block;
mod random;
mod rank;
mod tree;

pub use bandit::{make_bandit_instance, BanditInstance};
pub use block::{block_bijection_g, block_bijection_inverse, make_block_instance, BlockInstance};
pub use random::{make_random_sparse_instance, RandomSparseInstance, RandomSparseSpec};
pub use rank::{make_rank_instance, rank_max_eps, RankInstance};
pub use tree::{make_tree_instance, TreeInstance};

use crate::error::{param, Result};
use crate::mdp::{Action, Reward, TabularMdp, Transition};

/// Largest horizon for which binary-tree instances are materialized as tables
/// (`2^H − 1` states).
pub const MAX_MATERIALIZED_HORIZON: usize = 16;

/// Binary tree with `2^h` states at level `h`; action `a` moves local state
/// `s` to `2s + a`.
pub(crate) fn binary_tree_mdp(
    horizon: usize,
    reward: impl Fn(usize, usize, Action) -> f64,
    bounds: (f64, f64),
) -> Result<TabularMdp> {
    if horizon == 0 {
        return Err(param("horizon must be at least 1"));
    }
    if horizon > MAX_MATERIALIZED_HORIZON {
        return Err(param(format!(
            "horizon {horizon} too large to materialize (max {MAX_MATERIALIZED_HORIZON})"
        )));
    }
    let sizes: Vec<usize> = (0..horizon).map(|h| 1usize << h).collect();
    let transitions = (0..horizon - 1)
        .map(|h| {
            (0..sizes[h])
                .map(|s| vec![Transition::Det(2 * s), Transition::Det(2 * s + 1)])
                .collect()
        })
        .collect();
    let rewards = (0..horizon)
        .map(|h| {
            (0..sizes[h])
                .map(|s| (0..2).map(|a| Reward::Fixed(reward(h, s, a))).collect())
                .collect()
        })
        .collect();
    TabularMdp::with_reward_bounds(sizes, binary_actions(), transitions, rewards, bounds)
}

pub(crate) fn binary_actions() -> Vec<String> {
    vec!["a1".to_string(), "a2".to_string()]
}
