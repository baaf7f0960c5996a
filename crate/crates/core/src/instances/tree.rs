use rand::Rng;
use serde::{Deserialize, Serialize};

use super::binary_tree_mdp;
use crate::error::{param, Result};
use crate::mdp::Action;
use crate::sparse::{FeatureMap, SparseParam};

/// Binary tree where only the level-`h` action `a*_h` pays `ε`, with the
/// action-independent scalar feature `(H − h − 1)ε`.
///
/// The instance is stored implicitly so that paths of long horizons can be
/// evaluated; [`TreeInstance::materialize`] builds the tables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeInstance {
    pub horizon: usize,
    pub eps: f64,
    pub a_star: Vec<Action>,
}

pub fn make_tree_instance(horizon: usize, eps: f64, a_star: Vec<Action>) -> Result<TreeInstance> {
    if horizon == 0 {
        return Err(param("horizon must be at least 1"));
    }
    if !(eps >= 0.0) || horizon as f64 * eps > 1.0 {
        return Err(param(format!("need 0 <= H*eps <= 1, got H={horizon}, eps={eps}")));
    }
    if a_star.len() != horizon || a_star.iter().any(|&a| a > 1) {
        return Err(param("optimal action sequence must have length H over {a1, a2}"));
    }
    Ok(TreeInstance { horizon, eps, a_star })
}

impl TreeInstance {
    /// Instance with `a*` drawn uniformly from `{a1, a2}^H`.
    pub fn random<R: Rng + ?Sized>(horizon: usize, eps: f64, rng: &mut R) -> Result<Self> {
        let a_star = (0..horizon).map(|_| rng.random_range(0..2)).collect();
        make_tree_instance(horizon, eps, a_star)
    }

    pub fn reward(&self, h: usize, a: Action) -> f64 {
        if a == self.a_star[h] {
            self.eps
        } else {
            0.0
        }
    }

    /// Closed-form `Q*` (state independent).
    pub fn q_star(&self, h: usize, a: Action) -> f64 {
        let left = (self.horizon - h) as f64;
        if a == self.a_star[h] {
            left * self.eps
        } else {
            (left - 1.0) * self.eps
        }
    }

    pub fn feature(&self, h: usize) -> f64 {
        (self.horizon - h - 1) as f64 * self.eps
    }

    pub fn optimal_value(&self) -> f64 {
        self.horizon as f64 * self.eps
    }

    /// Total reward of the open-loop action sequence `actions`.
    pub fn path_value(&self, actions: &[Action]) -> Result<f64> {
        if actions.len() != self.horizon {
            return Err(param("action sequence length differs from horizon"));
        }
        Ok(actions.iter().enumerate().map(|(h, &a)| self.reward(h, a)).sum())
    }

    /// `θ* = +1` at every level.
    pub fn theta_star(&self) -> Vec<SparseParam> {
        vec![SparseParam::one_hot(0, true); self.horizon]
    }

    pub fn materialize(&self) -> Result<(crate::mdp::TabularMdp, FeatureMap)> {
        let mdp = binary_tree_mdp(self.horizon, |h, _, a| self.reward(h, a), (0.0, 1.0))?;
        let phi = FeatureMap::from_fn(&mdp, 1, |h, _, _| vec![self.feature(h)])?;
        Ok((mdp, phi))
    }
}
