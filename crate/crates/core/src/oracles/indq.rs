use num_bigint::BigInt;
use num_rational::BigRational;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::instances::{block_bijection_inverse, BlockInstance};
use crate::mdp::Trajectory;

/// Largest `n^m` for exhaustive enumeration.
pub const MAX_ENUMERATION: u64 = 1 << 16;

/// `m` hidden indices in `[n]`; each query `(j, i)` asks whether `i = i*_j`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndqGame {
    pub n: usize,
    pub m: usize,
    targets: Vec<usize>,
    /// Every query with its response, in order.
    pub log: Vec<((usize, usize), bool)>,
}

impl IndqGame {
    pub fn new(n: usize, m: usize, targets: Vec<usize>) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(param("need n >= 1 and m >= 1"));
        }
        if targets.len() != m || targets.iter().any(|&t| t >= n) {
            return Err(param(format!("need {m} targets in [{n}]")));
        }
        Ok(IndqGame { n, m, targets, log: Vec::new() })
    }

    pub fn random<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Result<Self> {
        let targets = (0..m).map(|_| rng.random_range(0..n.max(1))).collect();
        Self::new(n, m, targets)
    }

    pub fn query(&mut self, j: usize, i: usize) -> Result<bool> {
        if j >= self.m || i >= self.n {
            return Err(Error::Strategy(format!("query ({j}, {i}) outside [{}]x[{}]", self.m, self.n)));
        }
        let hit = self.targets[j] == i;
        self.log.push(((j, i), hit));
        Ok(hit)
    }

    pub fn queries_used(&self) -> usize {
        self.log.len()
    }

    /// Hidden targets; for reductions and audits, not for strategies.
    pub fn targets(&self) -> &[usize] {
        &self.targets
    }
}

pub trait QueryStrategy {
    /// Next query given the history so far, or `None` to give up.
    fn next_query(&mut self, n: usize, m: usize, history: &[((usize, usize), bool)]) -> Option<(usize, usize)>;
}

/// Non-adaptive strategy: issue a fixed list in order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FixedSequence(pub Vec<(usize, usize)>);

impl FixedSequence {
    /// `(0,0), (0,1), …, (0,n−1), (1,0), …`.
    pub fn scan(n: usize, m: usize) -> Self {
        FixedSequence((0..m).flat_map(|j| (0..n).map(move |i| (j, i))).collect())
    }
}

impl QueryStrategy for FixedSequence {
    fn next_query(&mut self, _: usize, _: usize, history: &[((usize, usize), bool)]) -> Option<(usize, usize)> {
        self.0.get(history.len()).copied()
    }
}

/// Uniform random pair at every step.
pub struct RandomGuess<R>(pub R);

impl<R: Rng> QueryStrategy for RandomGuess<R> {
    fn next_query(&mut self, n: usize, m: usize, _: &[((usize, usize), bool)]) -> Option<(usize, usize)> {
        Some((self.0.random_range(0..m), self.0.random_range(0..n)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum IndqOutcome {
    Success { j: usize, i: usize, queries: usize },
    Failure { queries: usize },
}

impl IndqOutcome {
    pub fn is_success(&self) -> bool {
        matches!(self, IndqOutcome::Success { .. })
    }
}

/// Query until the first hit, the budget runs out or the strategy stops.
pub fn indq_play(game: &mut IndqGame, strategy: &mut dyn QueryStrategy, budget: usize) -> Result<IndqOutcome> {
    for _ in 0..budget {
        let Some((j, i)) = strategy.next_query(game.n, game.m, &game.log) else {
            break;
        };
        if game.query(j, i)? {
            return Ok(IndqOutcome::Success { j, i, queries: game.queries_used() });
        }
    }
    Ok(IndqOutcome::Failure { queries: game.queries_used() })
}

/// Exact success probability of a fixed query list over uniform targets:
/// `1 − Π_j (n − n_j) / n^m`, `n_j` the distinct indices asked for `j`.
pub fn indq_success_probability(n: usize, m: usize, queries: &[(usize, usize)]) -> Result<BigRational> {
    if n == 0 || m == 0 {
        return Err(param("need n >= 1 and m >= 1"));
    }
    let mut asked = vec![vec![false; n]; m];
    for &(j, i) in queries {
        if j >= m || i >= n {
            return Err(Error::Strategy(format!("query ({j}, {i}) out of range")));
        }
        asked[j][i] = true;
    }
    let bad: BigInt = asked
        .iter()
        .map(|row| BigInt::from(n - row.iter().filter(|&&x| x).count()))
        .product();
    let all = BigInt::from(n).pow(m as u32);
    Ok(BigRational::from_integer(1.into()) - BigRational::new(bad, all))
}

/// Same probability by playing the list against every target assignment.
pub fn indq_success_by_enumeration(n: usize, m: usize, queries: &[(usize, usize)]) -> Result<BigRational> {
    let total = (n as u64)
        .checked_pow(m as u32)
        .filter(|&t| t <= MAX_ENUMERATION)
        .ok_or_else(|| param(format!("n^m exceeds {MAX_ENUMERATION}")))?;
    let mut wins = 0u64;
    let mut targets = vec![0usize; m];
    for code in 0..total {
        let mut c = code;
        for t in targets.iter_mut() {
            *t = (c % n as u64) as usize;
            c /= n as u64;
        }
        let mut game = IndqGame::new(n, m, targets.clone())?;
        let mut strat = FixedSequence(queries.to_vec());
        if indq_play(&mut game, &mut strat, queries.len())?.is_success() {
            wins += 1;
        }
    }
    Ok(BigRational::new(BigInt::from(wins), BigInt::from(total)))
}

/// Replay trajectories on a block instance as query-game guesses: block `q`
/// of each trajectory is the guess `(q, g⁻¹(a_{qT}, …, a_{(q+1)T−1}))`.
/// The reward at the block's last level must be `ε` exactly when the guess
/// is correct.
pub fn rl_to_indq_reduction(inst: &BlockInstance, trace: &[Trajectory]) -> Result<IndqGame> {
    let t = inst.block;
    let mut game = IndqGame::new(1 << t, inst.blocks(), inst.i_star.clone())?;
    for (n, traj) in trace.iter().enumerate() {
        if traj.steps.len() != inst.horizon {
            return Err(param(format!("trajectory {n} has the wrong length")));
        }
        let actions = traj.actions();
        for q in 0..inst.blocks() {
            let guess = block_bijection_inverse(&actions[q * t..(q + 1) * t])?;
            let hit = game.query(q, guess)?;
            let r = traj.steps[(q + 1) * t - 1].reward;
            let paid = (r - inst.eps).abs() <= 1e-12 && inst.eps > 0.0;
            if hit != paid || (!hit && r != 0.0) {
                return Err(Error::Integrity(format!(
                    "trajectory {n}, block {q}: guess correct = {hit}, reward = {r}"
                )));
            }
        }
    }
    Ok(game)
}
