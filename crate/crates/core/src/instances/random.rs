use rand::seq::index::sample as sample_indices;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::mdp::{exact_optimal, Reward, TabularMdp, Transition};
use crate::net::{uniform_sphere, ParamNet};
use crate::sparse::{assumption_gap, FeatureMap, SparseParam};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomSparseSpec {
    pub d: usize,
    pub k: usize,
    pub horizon: usize,
    /// Bound on the terminal reward perturbation; 0 gives a realizable instance.
    pub eps: f64,
    /// Number of actions.
    pub branching: usize,
    /// Cap on the number of states per level.
    pub max_width: usize,
    /// Two-point rewards and two-successor transitions.
    pub stochastic: bool,
}

impl RandomSparseSpec {
    pub fn new(d: usize, k: usize, horizon: usize, eps: f64, branching: usize) -> Self {
        RandomSparseSpec { d, k, horizon, eps, branching, max_width: 8, stochastic: false }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k > self.d {
            return Err(param(format!("need 1 <= k <= d, got k={}, d={}", self.k, self.d)));
        }
        if self.horizon == 0 {
            return Err(param("horizon must be at least 1"));
        }
        if self.branching < 2 || self.max_width == 0 {
            return Err(param("need at least two actions and one state per level"));
        }
        if !(self.eps >= 0.0) || 2.0 * self.eps >= 1.0 {
            return Err(param(format!("need 0 <= 2*eps < 1, got eps={}", self.eps)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct RandomSparseInstance {
    pub mdp: TabularMdp,
    pub phi: FeatureMap,
    pub theta_star: Vec<SparseParam>,
    /// Exact `max |⟨φ, θ*_h⟩ − Q*|` of the returned instance.
    pub gap: f64,
}

/// Layered MDP whose unperturbed `Q*` is encoded exactly on the support of a
/// random `k`-sparse `θ*_h`, i.e. `φ = Q*·θ*_h + noise` with the noise
/// supported off `θ*_h`. Terminal rewards are then shifted by independent
/// `U[−ε, ε]` draws, which moves every `Q*` by at most `ε`.
///
/// With `net`, each `θ*_h` is a net candidate.
pub fn make_random_sparse_instance<R: Rng + ?Sized>(
    spec: &RandomSparseSpec,
    net: Option<&ParamNet>,
    rng: &mut R,
) -> Result<RandomSparseInstance> {
    spec.validate()?;
    if let Some(n) = net {
        if n.dim() != spec.d || n.sparsity() != spec.k {
            return Err(param("net does not match (d, k)"));
        }
    }
    let (horizon, na, eps) = (spec.horizon, spec.branching, spec.eps);
    let mut widths = vec![1usize];
    for h in 1..horizon {
        widths.push((widths[h - 1] * na).min(spec.max_width));
    }

    let transitions: Vec<Vec<Vec<Transition>>> = (0..horizon.saturating_sub(1))
        .map(|h| {
            let next = widths[h + 1];
            (0..widths[h])
                .map(|s| {
                    (0..na)
                        .map(|a| {
                            if spec.stochastic && next >= 2 {
                                let pick = sample_indices(rng, next, 2);
                                let p = rng.random_range(0.2..0.8);
                                Transition::Dist(vec![(pick.index(0), p), (pick.index(1), 1.0 - p)])
                            } else if next == widths[h] * na {
                                Transition::Det(s * na + a)
                            } else {
                                Transition::Det(rng.random_range(0..next))
                            }
                        })
                        .collect()
                })
                .collect()
        })
        .collect();

    // per-step budget leaves room for the ε offset and the ε perturbation
    let budget = (1.0 - 2.0 * eps) / horizon as f64;
    let mut rewards: Vec<Vec<Vec<Reward>>> = (0..horizon)
        .map(|h| {
            let offset = if h + 1 == horizon { eps } else { 0.0 };
            (0..widths[h])
                .map(|_| {
                    (0..na)
                        .map(|_| {
                            if spec.stochastic {
                                let half = rng.random_range(0.0..=budget / 2.0);
                                Reward::Dist(vec![(offset, 0.5), (offset + 2.0 * half, 0.5)])
                            } else {
                                Reward::Fixed(offset + rng.random_range(0.0..=budget))
                            }
                        })
                        .collect()
                })
                .collect()
        })
        .collect();

    let names: Vec<String> = (1..=na).map(|i| format!("a{i}")).collect();
    let base = TabularMdp::new(widths.clone(), names.clone(), transitions.clone(), rewards.clone())?;
    let q = exact_optimal(&base).q;

    let theta_star: Vec<SparseParam> = (0..horizon)
        .map(|_| match net {
            Some(n) => Ok(n.candidate(rng.random_range(0..n.len())).clone()),
            None => {
                let mut support = sample_indices(rng, spec.d, spec.k).into_vec();
                support.sort_unstable();
                SparseParam::new(support, uniform_sphere(spec.k, rng))
            }
        })
        .collect::<Result<_>>()?;

    let phi = FeatureMap::from_fn(&base, spec.d, |h, s, a| {
        let qv = q[h][s][a];
        let mut f = theta_star[h].to_dense(spec.d);
        f.iter_mut().for_each(|x| *x *= qv);
        let free: Vec<usize> = (0..spec.d).filter(|j| !theta_star[h].support().contains(j)).collect();
        if !free.is_empty() {
            let raw: Vec<f64> = free.iter().map(|_| rng.random_range(-1.0..=1.0)).collect();
            let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                let room = (1.0 - qv * qv).max(0.0).sqrt() * 0.999;
                let scale = rng.random_range(0.0..=1.0) * room / norm;
                for (&j, x) in free.iter().zip(&raw) {
                    f[j] = x * scale;
                }
            }
        }
        f
    })?;

    if eps > 0.0 {
        for level in rewards[horizon - 1].iter_mut() {
            for r in level.iter_mut() {
                let u = rng.random_range(-eps..=eps);
                *r = match r {
                    Reward::Fixed(x) => Reward::Fixed((*x + u).max(0.0)),
                    Reward::Dist(v) => Reward::Dist(v.iter().map(|&(x, p)| ((x + u).max(0.0), p)).collect()),
                };
            }
        }
    }
    let mdp = TabularMdp::new(widths, names, transitions, rewards)?;
    let gap = assumption_gap(&mdp, &phi, &theta_star)?;
    Ok(RandomSparseInstance { mdp, phi, theta_star, gap })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::build_net;
    use crate::seed::stream;

    #[test]
    fn realizable_has_zero_gap() {
        for k in 1..=3 {
            let spec = RandomSparseSpec::new(6, k, 3, 0.0, 2);
            let inst = make_random_sparse_instance(&spec, None, &mut stream(k as u64)).unwrap();
            assert!(inst.gap < 1e-12, "gap {}", inst.gap);
        }
    }

    #[test]
    fn perturbed_gap_within_eps() {
        for seed in 0..20 {
            let spec = RandomSparseSpec::new(6, 1, 4, 0.05, 3);
            let inst = make_random_sparse_instance(&spec, None, &mut stream(seed)).unwrap();
            assert!(inst.gap <= 0.05 + 1e-12);
        }
    }

    #[test]
    fn stochastic_and_net_backed() {
        let net = build_net(5, 1, 0.5, &mut stream(0)).unwrap();
        let spec = RandomSparseSpec { stochastic: true, ..RandomSparseSpec::new(5, 1, 3, 0.02, 2) };
        let inst = make_random_sparse_instance(&spec, Some(&net), &mut stream(1)).unwrap();
        assert!(!inst.mdp.is_deterministic());
        assert!(inst.theta_star.iter().all(|t| net.position(t).is_some()));
        assert!(inst.gap <= 0.02 + 1e-12);
    }

    #[test]
    fn rejects_bad_spec() {
        assert!(RandomSparseSpec::new(3, 4, 2, 0.0, 2).validate().is_err());
        assert!(RandomSparseSpec::new(3, 1, 2, 0.5, 2).validate().is_err());
        assert!(RandomSparseSpec::new(3, 1, 2, 0.0, 1).validate().is_err());
    }
}
