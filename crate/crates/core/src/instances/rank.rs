use serde::Serialize;

use super::binary_tree_mdp;
use crate::error::{param, Result};
use crate::mdp::TabularMdp;
use crate::sparse::{FeatureMap, SparseParam};

/// Binary tree of horizon `log₂ d` with reward `ε` on both terminal actions,
/// and `d`-dimensional features: at level `h`, coordinate `j ≥ 2^{h+1}` is
/// `jε` everywhere, and in-level coordinate `i < 2^{h+1}` is `ε` only on
/// local state `⌊i/2⌋`, action `i mod 2`.
#[derive(Clone, Debug)]
pub struct RankInstance {
    pub d: usize,
    pub eps: f64,
    pub mdp: TabularMdp,
    pub phi: FeatureMap,
    /// Sequence `j` steers the greedy policy to terminal pair `j` and ends in
    /// `e_j`.
    pub family: Vec<Vec<SparseParam>>,
}

#[derive(Serialize)]
struct FamilyDoc<'a> {
    d: usize,
    eps: f64,
    family: &'a [Vec<SparseParam>],
}

fn log2_exact(d: usize) -> Result<usize> {
    if d < 2 || !d.is_power_of_two() {
        return Err(param(format!("d = {d} must be a power of two at least 2")));
    }
    Ok(d.trailing_zeros() as usize)
}

/// Largest `ε` keeping every feature vector inside the unit ball.
pub fn rank_max_eps(d: usize) -> Result<f64> {
    let horizon = log2_exact(d)?;
    let worst = (0..horizon)
        .map(|h| {
            let tail: f64 = ((2usize << h)..d).map(|j| (j * j) as f64).sum();
            (tail + 1.0).sqrt()
        })
        .fold(0.0, f64::max);
    Ok(1.0 / worst)
}

pub fn make_rank_instance(d: usize, eps: f64) -> Result<RankInstance> {
    let horizon = log2_exact(d)?;
    if !(eps > 0.0) || eps > 1.0 {
        return Err(param(format!("eps must lie in (0, 1], got {eps}")));
    }
    let max = rank_max_eps(d)?;
    if eps > max * (1.0 + 1e-12) {
        return Err(param(format!("eps = {eps} exceeds {max:.6e}, the unit feature-norm limit for d = {d}")));
    }
    let mdp = binary_tree_mdp(
        horizon,
        |h, _, _| if h + 1 == horizon { eps } else { 0.0 },
        (0.0, 1.0),
    )?;
    let phi = FeatureMap::from_fn(&mdp, d, |h, s, a| {
        let in_level = 2usize << h;
        let mut f = vec![0.0; d];
        f[2 * s + a] = eps;
        for (j, x) in f.iter_mut().enumerate().skip(in_level) {
            *x = j as f64 * eps;
        }
        f
    })?;
    let family = (0..d)
        .map(|j| {
            let leaf = j / 2;
            (0..horizon)
                .map(|h| {
                    if h + 1 == horizon {
                        SparseParam::one_hot(j, true)
                    } else {
                        let here = leaf >> (horizon - 1 - h);
                        let step = (leaf >> (horizon - 2 - h)) & 1;
                        SparseParam::one_hot(2 * here + step, true)
                    }
                })
                .collect()
        })
        .collect();
    Ok(RankInstance { d, eps, mdp, phi, family })
}

impl RankInstance {
    pub fn horizon(&self) -> usize {
        self.mdp.horizon()
    }

    pub fn family_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&FamilyDoc { d: self.d, eps: self.eps, family: &self.family })?)
    }
}
