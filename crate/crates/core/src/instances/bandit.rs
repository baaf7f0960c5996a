use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::mdp::{Action, Reward, TabularMdp};
use crate::sparse::{FeatureMap, SparseParam};

/// `n`-armed bandit with the common scalar feature `ε`; arm `a*` pays `2θ*ε`
/// and every other arm pays 0, so rewards may be negative.
#[derive(Clone, Debug)]
pub struct BanditInstance {
    pub mdp: TabularMdp,
    pub phi: FeatureMap,
    pub eps: f64,
    pub theta_sign: f64,
    pub a_star: Action,
}

#[derive(Serialize, Deserialize)]
struct Hidden {
    theta_sign: f64,
    a_star: Action,
}

pub fn make_bandit_instance<R: Rng + ?Sized>(n: usize, eps: f64, rng: &mut R) -> Result<BanditInstance> {
    if n == 0 {
        return Err(param("need at least one arm"));
    }
    let theta_sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
    let a_star = rng.random_range(0..n);
    bandit_with(n, eps, theta_sign, a_star)
}

/// Deterministic variant with the hidden pair supplied.
pub(crate) fn bandit_with(n: usize, eps: f64, theta_sign: f64, a_star: Action) -> Result<BanditInstance> {
    if !(eps >= 0.0) || 2.0 * eps > 1.0 {
        return Err(param(format!("need 0 <= 2*eps <= 1, got eps={eps}")));
    }
    if a_star >= n || theta_sign.abs() != 1.0 {
        return Err(param("hidden arm or sign out of range"));
    }
    let rewards = (0..n)
        .map(|a| Reward::Fixed(if a == a_star { 2.0 * theta_sign * eps } else { 0.0 }))
        .collect();
    let mdp = TabularMdp::with_reward_bounds(
        vec![1],
        (1..=n).map(|i| format!("a{i}")).collect(),
        vec![],
        vec![vec![rewards]],
        (-1.0, 1.0),
    )?;
    let phi = FeatureMap::from_fn(&mdp, 1, |_, _, _| vec![eps])?;
    Ok(BanditInstance { mdp, phi, eps, theta_sign, a_star })
}

impl BanditInstance {
    pub fn theta_star(&self) -> Vec<SparseParam> {
        vec![SparseParam::one_hot(0, self.theta_sign > 0.0)]
    }

    /// `r(a*) − r(a)` for the optimal arm of the instance.
    pub fn gap(&self, a: Action) -> f64 {
        let r = |x| self.mdp.expected_reward(0, 0, x);
        let best = (0..self.mdp.num_actions()).map(r).fold(f64::NEG_INFINITY, f64::max);
        best - r(a)
    }

    pub fn hidden_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&Hidden { theta_sign: self.theta_sign, a_star: self.a_star })?)
    }
}
