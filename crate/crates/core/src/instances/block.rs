use rand::Rng;
use serde::{Deserialize, Serialize};

use super::binary_tree_mdp;
use crate::error::{param, Result};
use crate::mdp::{Action, Step, TabularMdp, Trajectory};
use crate::sparse::{FeatureMap, SparseParam};

/// Largest horizon for implicit evaluation (local state ids fit in `u64`).
const MAX_IMPLICIT_HORIZON: usize = 62;

/// Action tuple for index `i ∈ [2^T]`: bits most-significant first, `0 → a1`,
/// `1 → a2`.
pub fn block_bijection_g(i: usize, block: usize) -> Result<Vec<Action>> {
    if block == 0 || block >= usize::BITS as usize || i >> block != 0 {
        return Err(param(format!("index {i} out of range for block length {block}")));
    }
    Ok((0..block).map(|b| (i >> (block - 1 - b)) & 1).collect())
}

pub fn block_bijection_inverse(actions: &[Action]) -> Result<usize> {
    if actions.is_empty() || actions.len() >= usize::BITS as usize {
        return Err(param("block length out of range"));
    }
    actions.iter().try_fold(0usize, |acc, &a| {
        if a > 1 {
            Err(param(format!("action {a} is not binary")))
        } else {
            Ok(acc << 1 | a)
        }
    })
}

/// Binary tree cut into `H/T` blocks of `T` levels; block `q` pays `ε` at its
/// last level only when all of its `T` actions spell `g(i*_q)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockInstance {
    pub horizon: usize,
    pub block: usize,
    pub eps: f64,
    pub i_star: Vec<usize>,
}

pub fn make_block_instance(
    horizon: usize,
    block: usize,
    eps: f64,
    i_star: Vec<usize>,
) -> Result<BlockInstance> {
    if horizon == 0 || horizon > MAX_IMPLICIT_HORIZON {
        return Err(param(format!("horizon must lie in 1..={MAX_IMPLICIT_HORIZON}")));
    }
    if block == 0 || horizon % block != 0 {
        return Err(param(format!("block length {block} must divide horizon {horizon}")));
    }
    let blocks = horizon / block;
    if !(eps >= 0.0) || blocks as f64 * eps > 1.0 {
        return Err(param(format!("need 0 <= (H/T)*eps <= 1, got {}", blocks as f64 * eps)));
    }
    if i_star.len() != blocks || i_star.iter().any(|&i| i >> block != 0) {
        return Err(param(format!("need {blocks} target indices in [2^{block}]")));
    }
    Ok(BlockInstance { horizon, block, eps, i_star })
}

impl BlockInstance {
    /// Targets drawn uniformly from `[2^T]^{H/T}`.
    pub fn random<R: Rng + ?Sized>(horizon: usize, block: usize, eps: f64, rng: &mut R) -> Result<Self> {
        if block == 0 || block > MAX_IMPLICIT_HORIZON {
            return Err(param("block length out of range"));
        }
        let i_star = (0..horizon / block).map(|_| rng.random_range(0..1usize << block)).collect();
        make_block_instance(horizon, block, eps, i_star)
    }

    pub fn blocks(&self) -> usize {
        self.horizon / self.block
    }

    /// Reward at local state `s` of level `h`; the low bits of `s` are the
    /// actions taken so far in the current block.
    pub fn reward(&self, h: usize, s: u64, a: Action) -> f64 {
        let (q, t) = (h / self.block, h % self.block);
        if t + 1 != self.block {
            return 0.0;
        }
        let prefix = s & ((1u64 << t) - 1);
        if (prefix << 1 | a as u64) == self.i_star[q] as u64 {
            self.eps
        } else {
            0.0
        }
    }

    /// Piecewise closed-form `Q*`.
    pub fn q_star(&self, h: usize, s: u64, a: Action) -> f64 {
        let (q, t) = (h / self.block, h % self.block);
        let target = self.i_star[q] as u64;
        let on_spine = s & ((1u64 << t) - 1) == target >> (self.block - t);
        let right = a as u64 == (target >> (self.block - 1 - t)) & 1;
        let rest = (self.blocks() - q) as f64;
        if on_spine && right {
            rest * self.eps
        } else {
            (rest - 1.0) * self.eps
        }
    }

    pub fn feature(&self, h: usize) -> f64 {
        (self.blocks() - h / self.block) as f64 * self.eps
    }

    pub fn optimal_value(&self) -> f64 {
        self.blocks() as f64 * self.eps
    }

    /// Trajectory of the open-loop action sequence (local state ids).
    pub fn rollout(&self, actions: &[Action]) -> Result<Trajectory> {
        if actions.len() != self.horizon || actions.iter().any(|&a| a > 1) {
            return Err(param("need H binary actions"));
        }
        let mut s = 0u64;
        let steps = actions
            .iter()
            .enumerate()
            .map(|(h, &a)| {
                let step = Step { state: s as usize, action: a, reward: self.reward(h, s, a) };
                s = 2 * s + a as u64;
                step
            })
            .collect();
        Ok(Trajectory { steps })
    }

    /// Actions that spell `g(i_q)` in block `q`.
    pub fn actions_for(&self, indices: &[usize]) -> Result<Vec<Action>> {
        if indices.len() != self.blocks() {
            return Err(param("one index per block required"));
        }
        let mut out = Vec::with_capacity(self.horizon);
        for &i in indices {
            out.extend(block_bijection_g(i, self.block)?);
        }
        Ok(out)
    }

    pub fn theta_star(&self) -> Vec<SparseParam> {
        vec![SparseParam::one_hot(0, true); self.horizon]
    }

    pub fn materialize(&self) -> Result<(TabularMdp, FeatureMap)> {
        let mdp = binary_tree_mdp(self.horizon, |h, s, a| self.reward(h, s as u64, a), (0.0, 1.0))?;
        let phi = FeatureMap::from_fn(&mdp, 1, |h, _, _| vec![self.feature(h)])?;
        Ok((mdp, phi))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::exact_optimal;

    #[test]
    fn bijection_encoding() {
        assert_eq!(block_bijection_g(0, 2).unwrap(), vec![0, 0]);
        assert_eq!(block_bijection_g(3, 2).unwrap(), vec![1, 1]);
        assert_eq!(block_bijection_g(1, 2).unwrap(), vec![0, 1]);
        assert!(block_bijection_g(4, 2).is_err());
        for t in 1..=10 {
            for i in 0..1usize << t {
                assert_eq!(block_bijection_inverse(&block_bijection_g(i, t).unwrap()).unwrap(), i);
            }
        }
    }

    #[test]
    fn optimal_value_and_single_rewarding_pair() {
        let b = make_block_instance(4, 2, 0.1, vec![2, 1]).unwrap();
        let (mdp, _) = b.materialize().unwrap();
        assert!((exact_optimal(&mdp).value() - 0.2).abs() < 1e-12);

        let b = make_block_instance(2, 2, 0.1, vec![0]).unwrap();
        let (mdp, _) = b.materialize().unwrap();
        let paying = (0..2)
            .flat_map(|s| (0..2).map(move |a| (s, a)))
            .filter(|&(s, a)| mdp.expected_reward(1, s, a) > 0.0)
            .count();
        assert_eq!(paying, 1);
    }

    #[test]
    fn rejects_non_divisible_block() {
        assert!(make_block_instance(5, 2, 0.1, vec![0, 0]).is_err());
        assert!(make_block_instance(4, 2, 0.6, vec![0, 0]).is_err());
        assert!(make_block_instance(4, 2, 0.1, vec![4, 0]).is_err());
    }

    #[test]
    fn rollout_matches_table() {
        let b = BlockInstance::random(6, 3, 0.1, &mut crate::seed::stream(9)).unwrap();
        let opt = b.actions_for(&b.i_star).unwrap();
        let tr = b.rollout(&opt).unwrap();
        assert!((tr.reward_sum() - b.optimal_value()).abs() < 1e-12);
    }
}
