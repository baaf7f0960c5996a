//! Finite-horizon layered MDPs.
//!
//! States live on disjoint levels `0..H`; a state is addressed by its level and
//! its local index within that level. Level 0 holds the single initial state.
//! Global state ids (used by the serialized form) number the states level by
//! level, so for a binary tree they coincide with the usual `s_0, s_1, ...`
//! heap numbering.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{param, structure, Result};
use crate::par;
use crate::seed;

pub type Action = usize;

/// Tolerance for probability rows summing to one.
pub const PROB_TOL: f64 = 1e-12;
/// Slack allowed on reward and reward-sum bounds.
pub const REWARD_TOL: f64 = 1e-12;

/// Next-state law for one (state, action) pair. Targets are local indices in
/// the next level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Transition {
    Det(usize),
    Dist(Vec<(usize, f64)>),
}

impl Transition {
    pub fn support(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (single, many) = match self {
            Transition::Det(t) => (Some((*t, 1.0)), &[][..]),
            Transition::Dist(d) => (None, d.as_slice()),
        };
        single.into_iter().chain(many.iter().copied())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        match self {
            Transition::Det(t) => *t,
            Transition::Dist(d) => sample_categorical(d, rng),
        }
    }
}

/// Reward law for one (state, action) pair: a fixed value or a finite
/// distribution given as `(value, probability)` pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Reward {
    Fixed(f64),
    Dist(Vec<(f64, f64)>),
}

impl Reward {
    pub fn mean(&self) -> f64 {
        match self {
            Reward::Fixed(r) => *r,
            Reward::Dist(d) => d.iter().map(|(v, p)| v * p).sum(),
        }
    }

    pub fn max(&self) -> f64 {
        match self {
            Reward::Fixed(r) => *r,
            Reward::Dist(d) => d.iter().map(|(v, _)| *v).fold(f64::NEG_INFINITY, f64::max),
        }
    }

    pub fn min(&self) -> f64 {
        match self {
            Reward::Fixed(r) => *r,
            Reward::Dist(d) => d.iter().map(|(v, _)| *v).fold(f64::INFINITY, f64::min),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Reward::Fixed(r) => *r,
            Reward::Dist(d) => {
                let idx = sample_categorical_index(d.iter().map(|(_, p)| *p), rng);
                d[idx].0
            }
        }
    }

    fn is_fixed(&self) -> bool {
        matches!(self, Reward::Fixed(_))
    }
}

fn sample_categorical_index<R: Rng + ?Sized>(
    probs: impl Iterator<Item = f64>,
    rng: &mut R,
) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, p) in probs.enumerate() {
        acc += p;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}

fn sample_categorical<R: Rng + ?Sized>(d: &[(usize, f64)], rng: &mut R) -> usize {
    d[sample_categorical_index(d.iter().map(|(_, p)| *p), rng)].0
}

#[derive(Clone, Debug, PartialEq)]
pub struct TabularMdp {
    level_sizes: Vec<usize>,
    action_names: Vec<String>,
    /// `transitions[h][s][a]` for `h < H - 1`.
    transitions: Vec<Vec<Vec<Transition>>>,
    /// `rewards[h][s][a]` for `h < H`.
    rewards: Vec<Vec<Vec<Reward>>>,
    reward_bounds: (f64, f64),
}

impl TabularMdp {
    /// Build and validate an MDP whose rewards and reward sums lie in `[0, 1]`.
    pub fn new(
        level_sizes: Vec<usize>,
        action_names: Vec<String>,
        transitions: Vec<Vec<Vec<Transition>>>,
        rewards: Vec<Vec<Vec<Reward>>>,
    ) -> Result<Self> {
        Self::with_reward_bounds(level_sizes, action_names, transitions, rewards, (0.0, 1.0))
    }

    /// Like [`TabularMdp::new`] but with custom bounds on per-step rewards and
    /// on every reachable trajectory's reward sum.
    pub fn with_reward_bounds(
        level_sizes: Vec<usize>,
        action_names: Vec<String>,
        transitions: Vec<Vec<Vec<Transition>>>,
        rewards: Vec<Vec<Vec<Reward>>>,
        reward_bounds: (f64, f64),
    ) -> Result<Self> {
        let mdp = TabularMdp {
            level_sizes,
            action_names,
            transitions,
            rewards,
            reward_bounds,
        };
        mdp.validate()?;
        Ok(mdp)
    }

    fn validate(&self) -> Result<()> {
        let h = self.level_sizes.len();
        if h == 0 {
            return Err(param("horizon must be positive"));
        }
        if self.level_sizes[0] != 1 {
            return Err(structure("level 0 must hold exactly the initial state"));
        }
        if self.level_sizes.iter().any(|&n| n == 0) {
            return Err(structure("every level needs at least one state"));
        }
        let na = self.action_names.len();
        if na == 0 {
            return Err(structure("action set is empty"));
        }
        let (lo, hi) = self.reward_bounds;
        if !(lo <= hi) {
            return Err(param("reward bounds must satisfy lo <= hi"));
        }
        if self.transitions.len() != h - 1 {
            return Err(structure(format!(
                "expected {} transition levels, found {}",
                h - 1,
                self.transitions.len()
            )));
        }
        if self.rewards.len() != h {
            return Err(structure(format!(
                "expected {h} reward levels, found {}",
                self.rewards.len()
            )));
        }
        for (lvl, rows) in self.transitions.iter().enumerate() {
            check_shape(rows, self.level_sizes[lvl], na, "transition", lvl)?;
            let next = self.level_sizes[lvl + 1];
            for (s, row) in rows.iter().enumerate() {
                for (a, t) in row.iter().enumerate() {
                    if let Transition::Dist(d) = t {
                        if d.is_empty() {
                            return Err(structure(format!("empty transition at ({lvl},{s},{a})")));
                        }
                        let total: f64 = d.iter().map(|(_, p)| *p).sum();
                        if d.iter().any(|(_, p)| !(*p >= 0.0)) || (total - 1.0).abs() > PROB_TOL {
                            return Err(structure(format!(
                                "transition row ({lvl},{s},{a}) sums to {total}"
                            )));
                        }
                    }
                    if let Some((tgt, _)) = t.support().find(|(tgt, _)| *tgt >= next) {
                        return Err(structure(format!(
                            "transition ({lvl},{s},{a}) targets {tgt} outside level {} (size {next})",
                            lvl + 1
                        )));
                    }
                }
            }
        }
        for (lvl, rows) in self.rewards.iter().enumerate() {
            check_shape(rows, self.level_sizes[lvl], na, "reward", lvl)?;
            for (s, row) in rows.iter().enumerate() {
                for (a, r) in row.iter().enumerate() {
                    if let Reward::Dist(d) = r {
                        let total: f64 = d.iter().map(|(_, p)| *p).sum();
                        if d.is_empty()
                            || d.iter().any(|(_, p)| !(*p >= 0.0))
                            || (total - 1.0).abs() > PROB_TOL
                        {
                            return Err(structure(format!(
                                "reward distribution ({lvl},{s},{a}) is not a probability law"
                            )));
                        }
                    }
                    if !r.min().is_finite()
                        || r.min() < lo - REWARD_TOL
                        || r.max() > hi + REWARD_TOL
                    {
                        return Err(structure(format!(
                            "reward ({lvl},{s},{a}) leaves [{lo}, {hi}]"
                        )));
                    }
                }
            }
        }
        let (min_sum, max_sum) = self.reward_sum_range();
        if min_sum < lo - REWARD_TOL || max_sum > hi + REWARD_TOL {
            return Err(structure(format!(
                "reachable reward sums span [{min_sum}, {max_sum}], outside [{lo}, {hi}]"
            )));
        }
        Ok(())
    }

    /// Smallest and largest realizable reward sum over all trajectories from
    /// the initial state, over all policies. Exact on the support of every
    /// transition and reward law.
    pub fn reward_sum_range(&self) -> (f64, f64) {
        let h = self.horizon();
        let mut lo_next: Vec<f64> = Vec::new();
        let mut hi_next: Vec<f64> = Vec::new();
        for lvl in (0..h).rev() {
            let n = self.level_sizes[lvl];
            let mut lo = vec![f64::INFINITY; n];
            let mut hi = vec![f64::NEG_INFINITY; n];
            for s in 0..n {
                for a in 0..self.num_actions() {
                    let r = &self.rewards[lvl][s][a];
                    let (cont_lo, cont_hi) = if lvl + 1 < h {
                        self.transitions[lvl][s][a].support().fold(
                            (f64::INFINITY, f64::NEG_INFINITY),
                            |(l, u), (t, p)| {
                                if p > 0.0 {
                                    (l.min(lo_next[t]), u.max(hi_next[t]))
                                } else {
                                    (l, u)
                                }
                            },
                        )
                    } else {
                        (0.0, 0.0)
                    };
                    lo[s] = lo[s].min(r.min() + cont_lo);
                    hi[s] = hi[s].max(r.max() + cont_hi);
                }
            }
            lo_next = lo;
            hi_next = hi;
        }
        (lo_next[0], hi_next[0])
    }

    pub fn horizon(&self) -> usize {
        self.level_sizes.len()
    }

    pub fn num_actions(&self) -> usize {
        self.action_names.len()
    }

    pub fn action_names(&self) -> &[String] {
        &self.action_names
    }

    pub fn level_size(&self, h: usize) -> usize {
        self.level_sizes[h]
    }

    pub fn level_sizes(&self) -> &[usize] {
        &self.level_sizes
    }

    pub fn total_states(&self) -> usize {
        self.level_sizes.iter().sum()
    }

    pub fn reward_bounds(&self) -> (f64, f64) {
        self.reward_bounds
    }

    /// Global id of local state `s` on level `h`.
    pub fn global_id(&self, h: usize, s: usize) -> usize {
        self.level_sizes[..h].iter().sum::<usize>() + s
    }

    /// `None` on the last level.
    pub fn transition(&self, h: usize, s: usize, a: Action) -> Option<&Transition> {
        self.transitions.get(h).map(|rows| &rows[s][a])
    }

    pub fn reward(&self, h: usize, s: usize, a: Action) -> &Reward {
        &self.rewards[h][s][a]
    }

    pub fn expected_reward(&self, h: usize, s: usize, a: Action) -> f64 {
        self.rewards[h][s][a].mean()
    }

    pub fn is_deterministic(&self) -> bool {
        self.transitions
            .iter()
            .flatten()
            .flatten()
            .all(|t| matches!(t, Transition::Det(_)))
            && self.rewards.iter().flatten().flatten().all(Reward::is_fixed)
    }

    /// Expected value of `f(s')` over the next state of `(h, s, a)`; zero on
    /// the last level.
    pub fn expect_next(&self, h: usize, s: usize, a: Action, f: impl Fn(usize) -> f64) -> f64 {
        match self.transition(h, s, a) {
            None => 0.0,
            Some(Transition::Det(t)) => f(*t),
            Some(Transition::Dist(d)) => d.iter().map(|(t, p)| p * f(*t)).sum(),
        }
    }
}

fn check_shape<T>(rows: &[Vec<T>], n: usize, na: usize, what: &str, lvl: usize) -> Result<()> {
    if rows.len() != n {
        return Err(structure(format!(
            "{what} table at level {lvl} has {} rows, level has {n} states",
            rows.len()
        )));
    }
    if let Some(s) = rows.iter().position(|r| r.len() != na) {
        return Err(structure(format!(
            "{what} entry missing at level {lvl}, state {s}: expected {na} actions"
        )));
    }
    Ok(())
}

/// A deterministic Markov policy: one action per (level, state).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TabularPolicy {
    actions: Vec<Vec<Action>>,
}

impl TabularPolicy {
    pub fn new(mdp: &TabularMdp, actions: Vec<Vec<Action>>) -> Result<Self> {
        let policy = TabularPolicy { actions };
        policy.check_against(mdp)?;
        Ok(policy)
    }

    pub fn constant(mdp: &TabularMdp, a: Action) -> Result<Self> {
        Self::new(
            mdp,
            mdp.level_sizes.iter().map(|&n| vec![a; n]).collect(),
        )
    }

    /// Build a policy from a per-(level, state) rule.
    pub fn from_fn(mdp: &TabularMdp, mut f: impl FnMut(usize, usize) -> Action) -> Result<Self> {
        let actions = mdp
            .level_sizes
            .iter()
            .enumerate()
            .map(|(h, &n)| (0..n).map(|s| f(h, s)).collect())
            .collect();
        Self::new(mdp, actions)
    }

    pub fn action(&self, h: usize, s: usize) -> Action {
        self.actions[h][s]
    }

    pub fn levels(&self) -> &[Vec<Action>] {
        &self.actions
    }

    pub fn check_against(&self, mdp: &TabularMdp) -> Result<()> {
        if self.actions.len() != mdp.horizon() {
            return Err(structure(format!(
                "policy covers {} levels, mdp has {}",
                self.actions.len(),
                mdp.horizon()
            )));
        }
        for (h, row) in self.actions.iter().enumerate() {
            if row.len() != mdp.level_size(h) {
                return Err(structure(format!("policy undefined on part of level {h}")));
            }
            if let Some(s) = row.iter().position(|&a| a >= mdp.num_actions()) {
                return Err(structure(format!("policy picks unknown action at ({h},{s})")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub state: usize,
    pub action: Action,
    pub reward: f64,
}

/// One episode `(s_0, a_0, r_0, ..., s_{H-1}, a_{H-1}, r_{H-1})`; `steps[h]`
/// holds the level-`h` record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub steps: Vec<Step>,
}

impl Trajectory {
    pub fn reward_sum(&self) -> f64 {
        self.steps.iter().map(|s| s.reward).sum()
    }

    pub fn actions(&self) -> Vec<Action> {
        self.steps.iter().map(|s| s.action).collect()
    }
}

pub fn sample_trajectory<R: Rng + ?Sized>(
    mdp: &TabularMdp,
    policy: &TabularPolicy,
    rng: &mut R,
) -> Result<Trajectory> {
    policy.check_against(mdp)?;
    Ok(sample_unchecked(mdp, policy, rng))
}

fn sample_unchecked<R: Rng + ?Sized>(
    mdp: &TabularMdp,
    policy: &TabularPolicy,
    rng: &mut R,
) -> Trajectory {
    let h_total = mdp.horizon();
    let mut steps = Vec::with_capacity(h_total);
    let mut s = 0;
    for h in 0..h_total {
        let a = policy.action(h, s);
        let reward = mdp.reward(h, s, a).sample(rng);
        steps.push(Step { state: s, action: a, reward });
        if let Some(t) = mdp.transition(h, s, a) {
            s = t.sample(rng);
        }
    }
    Trajectory { steps }
}

/// Sample `m` episodes; episode `i` uses the stream `child(seed, i)`, so the
/// dataset does not depend on scheduling.
pub fn sample_dataset(
    mdp: &TabularMdp,
    policy: &TabularPolicy,
    m: usize,
    seed: u64,
) -> Result<Vec<Trajectory>> {
    policy.check_against(mdp)?;
    Ok(par::map_indexed(m, |i| {
        sample_unchecked(mdp, policy, &mut seed::child_stream(seed, i as u64))
    }))
}

/// Sequential twin of [`sample_dataset`]; produces the same trajectories.
pub fn sample_dataset_sequential(
    mdp: &TabularMdp,
    policy: &TabularPolicy,
    m: usize,
    seed: u64,
) -> Result<Vec<Trajectory>> {
    policy.check_against(mdp)?;
    Ok(par::map_indexed_sequential(m, |i| {
        sample_unchecked(mdp, policy, &mut seed::child_stream(seed, i as u64))
    }))
}

/// Backward-induction solution: `q[h][s][a]`, `v[h][s]` and a greedy policy
/// (lowest action index on ties).
#[derive(Clone, Debug, PartialEq)]
pub struct OptimalSolution {
    pub q: Vec<Vec<Vec<f64>>>,
    pub v: Vec<Vec<f64>>,
    pub policy: TabularPolicy,
}

impl OptimalSolution {
    pub fn value(&self) -> f64 {
        self.v[0][0]
    }
}

pub fn exact_optimal(mdp: &TabularMdp) -> OptimalSolution {
    let h_total = mdp.horizon();
    let na = mdp.num_actions();
    let mut q = vec![Vec::new(); h_total];
    let mut v: Vec<Vec<f64>> = vec![Vec::new(); h_total];
    let mut pi = vec![Vec::new(); h_total];
    for h in (0..h_total).rev() {
        let n = mdp.level_size(h);
        let mut qh = Vec::with_capacity(n);
        let mut vh = Vec::with_capacity(n);
        let mut ph = Vec::with_capacity(n);
        for s in 0..n {
            let row: Vec<f64> = (0..na)
                .map(|a| {
                    mdp.expected_reward(h, s, a)
                        + mdp.expect_next(h, s, a, |t| v[h + 1][t])
                })
                .collect();
            let (best, val) = argmax_first(&row);
            qh.push(row);
            vh.push(val);
            ph.push(best);
        }
        q[h] = qh;
        v[h] = vh;
        pi[h] = ph;
    }
    OptimalSolution {
        q,
        v,
        policy: TabularPolicy { actions: pi },
    }
}

/// Index and value of the maximum; the first index wins ties.
pub fn argmax_first(values: &[f64]) -> (usize, f64) {
    let mut best = 0;
    let mut val = values[0];
    for (i, &x) in values.iter().enumerate().skip(1) {
        if x > val {
            best = i;
            val = x;
        }
    }
    (best, val)
}

/// Exact per-level state distributions under `policy`, starting from unit
/// mass on the initial state.
pub fn state_distributions(mdp: &TabularMdp, policy: &TabularPolicy) -> Result<Vec<Vec<f64>>> {
    policy.check_against(mdp)?;
    let mut out = Vec::with_capacity(mdp.horizon());
    let mut cur = vec![1.0];
    for h in 0..mdp.horizon() {
        if h + 1 < mdp.horizon() {
            let mut next = vec![0.0; mdp.level_size(h + 1)];
            for (s, &mass) in cur.iter().enumerate() {
                if mass == 0.0 {
                    continue;
                }
                let a = policy.action(h, s);
                for (t, p) in mdp.transition(h, s, a).expect("inner level").support() {
                    next[t] += mass * p;
                }
            }
            out.push(std::mem::replace(&mut cur, next));
        } else {
            out.push(std::mem::take(&mut cur));
        }
    }
    Ok(out)
}

pub fn state_distribution(mdp: &TabularMdp, policy: &TabularPolicy, h: usize) -> Result<Vec<f64>> {
    if h >= mdp.horizon() {
        return Err(param(format!("level {h} beyond horizon {}", mdp.horizon())));
    }
    Ok(state_distributions(mdp, policy)?.swap_remove(h))
}

/// `V^π(s_0)` by forward propagation of the state distribution.
pub fn exact_policy_value(mdp: &TabularMdp, policy: &TabularPolicy) -> Result<f64> {
    let dists = state_distributions(mdp, policy)?;
    Ok(dists
        .iter()
        .enumerate()
        .map(|(h, d)| {
            d.iter()
                .enumerate()
                .filter(|(_, &m)| m != 0.0)
                .map(|(s, &m)| m * mdp.expected_reward(h, s, policy.action(h, s)))
                .sum::<f64>()
        })
        .sum())
}

/// Serialized MDP: global state ids, targets as scalars (deterministic) or
/// `[target, probability]` lists, rewards as scalars or `[value, probability]`
/// lists.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MdpDocument {
    pub horizon: usize,
    pub levels: Vec<Vec<usize>>,
    pub actions: Vec<String>,
    pub transitions: Vec<Vec<Vec<Transition>>>,
    pub rewards: Vec<Vec<Vec<Reward>>>,
    pub initial_state: usize,
    #[serde(default = "unit_bounds")]
    pub reward_bounds: (f64, f64),
}

fn unit_bounds() -> (f64, f64) {
    (0.0, 1.0)
}

impl MdpDocument {
    pub fn from_mdp(mdp: &TabularMdp) -> Self {
        let mut offsets = Vec::with_capacity(mdp.horizon());
        let mut acc = 0;
        for &n in &mdp.level_sizes {
            offsets.push(acc);
            acc += n;
        }
        let levels = mdp
            .level_sizes
            .iter()
            .zip(&offsets)
            .map(|(&n, &o)| (o..o + n).collect())
            .collect();
        let transitions = mdp
            .transitions
            .iter()
            .enumerate()
            .map(|(h, rows)| {
                let off = offsets[h + 1];
                rows.iter()
                    .map(|row| row.iter().map(|t| shift_transition(t, off as isize)).collect())
                    .collect()
            })
            .collect();
        MdpDocument {
            horizon: mdp.horizon(),
            levels,
            actions: mdp.action_names.clone(),
            transitions,
            rewards: mdp.rewards.clone(),
            initial_state: 0,
            reward_bounds: mdp.reward_bounds,
        }
    }

    pub fn into_mdp(self) -> Result<TabularMdp> {
        if self.levels.len() != self.horizon {
            return Err(structure("levels list length differs from horizon"));
        }
        let mut next_id = 0;
        let mut offsets = Vec::with_capacity(self.horizon);
        for (h, level) in self.levels.iter().enumerate() {
            offsets.push(next_id);
            for &id in level {
                if id != next_id {
                    return Err(structure(format!(
                        "state ids must be numbered level by level from 0; level {h} has {id} where {next_id} was expected"
                    )));
                }
                next_id += 1;
            }
        }
        if self.initial_state != 0 {
            return Err(structure("initial state must be the level-0 state 0"));
        }
        let level_sizes: Vec<usize> = self.levels.iter().map(Vec::len).collect();
        if self.transitions.len() + 1 != self.horizon.max(1) {
            return Err(structure("transition levels must number horizon - 1"));
        }
        let mut transitions = Vec::with_capacity(self.transitions.len());
        for (h, rows) in self.transitions.into_iter().enumerate() {
            let off = offsets[h + 1];
            let n = level_sizes[h + 1];
            let mut lvl = Vec::with_capacity(rows.len());
            for row in rows {
                let mut out = Vec::with_capacity(row.len());
                for t in row {
                    if let Some((tgt, _)) = t.support().find(|(tgt, _)| *tgt < off || *tgt >= off + n) {
                        return Err(structure(format!(
                            "transition from level {h} targets state {tgt} outside level {}",
                            h + 1
                        )));
                    }
                    out.push(shift_transition(&t, -(off as isize)));
                }
                lvl.push(out);
            }
            transitions.push(lvl);
        }
        TabularMdp::with_reward_bounds(
            level_sizes,
            self.actions,
            transitions,
            self.rewards,
            self.reward_bounds,
        )
    }
}

fn shift_transition(t: &Transition, by: isize) -> Transition {
    let sh = |x: usize| (x as isize + by) as usize;
    match t {
        Transition::Det(x) => Transition::Det(sh(*x)),
        Transition::Dist(d) => Transition::Dist(d.iter().map(|(x, p)| (sh(*x), *p)).collect()),
    }
}

impl TabularMdp {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&MdpDocument::from_mdp(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str::<MdpDocument>(text)?.into_mdp()
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    fn names(n: usize) -> Vec<String> {
        (1..=n).map(|i| format!("a{i}")).collect()
    }

    /// Two levels; from s_0 either action moves to one of two level-1 states
    /// with probability 1/2 each.
    fn split_mdp() -> TabularMdp {
        TabularMdp::new(
            vec![1, 2],
            names(2),
            vec![vec![vec![
                Transition::Dist(vec![(0, 0.5), (1, 0.5)]),
                Transition::Det(1),
            ]]],
            vec![
                vec![vec![Reward::Fixed(0.0), Reward::Fixed(0.1)]],
                vec![
                    vec![Reward::Fixed(0.2), Reward::Dist(vec![(0.0, 0.5), (0.6, 0.5)])],
                    vec![Reward::Fixed(0.4), Reward::Fixed(0.0)],
                ],
            ],
        )
        .unwrap()
    }

    #[test]
    fn stochastic_split_distribution() {
        let mdp = split_mdp();
        let pi = TabularPolicy::constant(&mdp, 0).unwrap();
        assert_eq!(state_distribution(&mdp, &pi, 0).unwrap(), vec![1.0]);
        assert_eq!(state_distribution(&mdp, &pi, 1).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn optimal_on_split() {
        let mdp = split_mdp();
        let sol = exact_optimal(&mdp);
        // level 1: s0 -> max(0.2, 0.3) = 0.3 via a2; s1 -> 0.4 via a1
        assert_eq!(sol.policy.action(1, 0), 1);
        assert_eq!(sol.v[1], vec![0.3, 0.4]);
        // level 0: a1 -> 0.35, a2 -> 0.1 + 0.4 = 0.5
        assert!((sol.q[0][0][0] - 0.35).abs() < 1e-15);
        assert!((sol.q[0][0][1] - 0.5).abs() < 1e-15);
        assert_eq!(sol.policy.action(0, 0), 1);
        let v = exact_policy_value(&mdp, &sol.policy).unwrap();
        assert!((v - sol.value()).abs() < 1e-15);
    }

    #[test]
    fn all_zero_rewards() {
        let mdp = TabularMdp::new(
            vec![1, 2],
            names(2),
            vec![vec![vec![Transition::Det(0), Transition::Det(1)]]],
            vec![vec![vec![Reward::Fixed(0.0); 2]], vec![vec![Reward::Fixed(0.0); 2]; 2]],
        )
        .unwrap();
        let sol = exact_optimal(&mdp);
        assert!(sol.q.iter().flatten().flatten().all(|&x| x == 0.0));
        let pi = TabularPolicy::constant(&mdp, 1).unwrap();
        let traj = sample_trajectory(&mdp, &pi, &mut seed::stream(3)).unwrap();
        assert!(traj.steps.iter().all(|s| s.reward == 0.0));
        assert_eq!(exact_policy_value(&mdp, &pi).unwrap(), 0.0);
    }

    #[test]
    fn rejects_bad_structure() {
        // target outside next level
        let e = TabularMdp::new(
            vec![1, 1],
            names(1),
            vec![vec![vec![Transition::Det(1)]]],
            vec![vec![vec![Reward::Fixed(0.0)]], vec![vec![Reward::Fixed(0.0)]]],
        );
        assert!(matches!(e, Err(crate::Error::Structure(_))));
        // missing action entry
        let e = TabularMdp::new(
            vec![1],
            names(2),
            vec![],
            vec![vec![vec![Reward::Fixed(0.0)]]],
        );
        assert!(matches!(e, Err(crate::Error::Structure(_))));
        // row does not sum to one
        let e = TabularMdp::new(
            vec![1, 2],
            names(1),
            vec![vec![vec![Transition::Dist(vec![(0, 0.5), (1, 0.4)])]]],
            vec![vec![vec![Reward::Fixed(0.0)]], vec![vec![Reward::Fixed(0.0)]; 2]],
        );
        assert!(matches!(e, Err(crate::Error::Structure(_))));
        // reward sum above one along a path
        let e = TabularMdp::new(
            vec![1, 1],
            names(1),
            vec![vec![vec![Transition::Det(0)]]],
            vec![vec![vec![Reward::Fixed(0.6)]], vec![vec![Reward::Fixed(0.6)]]],
        );
        assert!(matches!(e, Err(crate::Error::Structure(_))));
    }

    #[test]
    fn policy_mismatch_is_structural() {
        let mdp = split_mdp();
        let other = TabularMdp::new(vec![1], names(2), vec![], vec![vec![vec![Reward::Fixed(0.0); 2]]])
            .unwrap();
        let pi = TabularPolicy::constant(&other, 0).unwrap();
        assert!(matches!(
            sample_trajectory(&mdp, &pi, &mut seed::stream(0)),
            Err(crate::Error::Structure(_))
        ));
    }

    #[test]
    fn json_round_trip() {
        let mdp = split_mdp();
        let text = mdp.to_json().unwrap();
        assert_eq!(TabularMdp::from_json(&text).unwrap(), mdp);
    }

    #[test]
    fn sequential_and_parallel_datasets_agree() {
        let mdp = split_mdp();
        let pi = TabularPolicy::constant(&mdp, 0).unwrap();
        let a = sample_dataset(&mdp, &pi, 257, 11).unwrap();
        let b = sample_dataset_sequential(&mdp, &pi, 257, 11).unwrap();
        assert_eq!(a, b);
    }
}
