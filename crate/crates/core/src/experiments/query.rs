use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{mean, run_trials, Command, ExperimentConfig, ExperimentResult, Strategy, Summary};
use crate::error::Result;
use crate::instances::BlockInstance;
use crate::oracles::{indq_success_by_enumeration, indq_success_probability, rl_to_indq_reduction, FixedSequence};
use crate::seed::{derive_seed, stream};

/// Trajectory budget of the random strategy, in multiples of `2^T`.
const RANDOM_BUDGET_FACTOR: usize = 32;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryRow {
    pub trial: usize,
    pub seed: u64,
    pub strategy: Strategy,
    /// Trajectories until some block paid, i.e. suboptimality first fell
    /// below `(H/T)ε`.
    pub first_hit_trajectories: Option<usize>,
    /// Trajectories until every block was solved.
    pub optimal_trajectories: Option<usize>,
    pub trajectories: usize,
    pub samples: u64,
    /// Guesses logged by the reduction.
    pub guesses: usize,
    pub reduction_ok: bool,
}

fn search(inst: &BlockInstance, strategy: Strategy, seed: u64) -> Result<QueryRow> {
    let n = 1usize << inst.block;
    let blocks = inst.blocks();
    let budget = match strategy {
        Strategy::Scan => n,
        Strategy::Random => RANDOM_BUDGET_FACTOR * n,
    };
    let mut rng = stream(seed);
    let mut found: Vec<Option<usize>> = vec![None; blocks];
    let (mut first_hit, mut optimal) = (None, None);
    let mut trace = Vec::new();
    for t in 0..budget {
        let guess: Vec<usize> = found
            .iter()
            .map(|f| {
                f.unwrap_or_else(|| match strategy {
                    Strategy::Scan => t,
                    Strategy::Random => rng.random_range(0..n),
                })
            })
            .collect();
        let traj = inst.rollout(&inst.actions_for(&guess)?)?;
        // the searcher only observes rewards at block ends
        for (q, f) in found.iter_mut().enumerate() {
            if f.is_none() && traj.steps[(q + 1) * inst.block - 1].reward > 0.0 {
                *f = Some(guess[q]);
            }
        }
        trace.push(traj);
        if first_hit.is_none() && found.iter().any(Option::is_some) {
            first_hit = Some(t + 1);
        }
        if found.iter().all(Option::is_some) {
            optimal = Some(t + 1);
            break;
        }
    }
    let (guesses, reduction_ok) = match rl_to_indq_reduction(inst, &trace) {
        Ok(game) => (game.queries_used(), true),
        Err(e) => {
            tracing::warn!(error = %e, "reduction integrity failure");
            (0, false)
        }
    };
    Ok(QueryRow {
        trial: 0,
        seed,
        strategy,
        first_hit_trajectories: first_hit,
        optimal_trajectories: optimal,
        trajectories: trace.len(),
        samples: (trace.len() * inst.horizon) as u64,
        guesses,
        reduction_ok,
    })
}

/// Brute-force search on block instances, logged through the query-game
/// reduction, plus exact success probabilities of truncated scans.
pub fn cmd_query_complexity(cfg: &ExperimentConfig) -> Result<ExperimentResult<QueryRow>> {
    cfg.validate(Command::QueryComplexity)?;
    let (per_trial, wall_seconds) = run_trials(cfg.trials, |i| -> Result<Vec<QueryRow>> {
        let seed = derive_seed(cfg.seed, i as u64);
        let inst = BlockInstance::random(cfg.horizon, cfg.block, cfg.eps, &mut stream(seed))?;
        cfg.strategies
            .iter()
            .enumerate()
            .map(|(j, &st)| {
                let mut row = search(&inst, st, derive_seed(seed, 1 + j as u64))?;
                row.trial = i;
                Ok(row)
            })
            .collect()
    });
    let rows: Vec<QueryRow> = per_trial.into_iter().collect::<Result<Vec<_>>>()?.concat();
    let table = scan_probability_table(1 << cfg.block)?;
    let mut csv = String::from("budget,exact,enumerated,budget_over_n\n");
    for r in &table {
        csv.push_str(&format!("{},{},{},{}\n", r.budget, r.exact, r.enumerated, r.ratio));
    }
    let summary = summarize_query(cfg, &rows)?;
    Ok(ExperimentResult {
        command: Command::QueryComplexity,
        rows,
        summary,
        wall_seconds,
        artifacts: vec![("indq_probabilities.csv".into(), csv)],
    })
}

struct ProbabilityRow {
    budget: usize,
    exact: BigRational,
    enumerated: BigRational,
    ratio: BigRational,
}

/// Single-index game with `n` targets, scan truncated at several budgets.
fn scan_probability_table(n: usize) -> Result<Vec<ProbabilityRow>> {
    let mut budgets = vec![0, n / 2, (9 * n).div_ceil(10) - 1, n];
    budgets.sort_unstable();
    budgets.dedup();
    let scan = FixedSequence::scan(n, 1).0;
    budgets
        .into_iter()
        .map(|b| {
            Ok(ProbabilityRow {
                budget: b,
                exact: indq_success_probability(n, 1, &scan[..b])?,
                enumerated: indq_success_by_enumeration(n, 1, &scan[..b])?,
                ratio: BigRational::new(b.into(), n.into()),
            })
        })
        .collect()
}

pub fn summarize_query(cfg: &ExperimentConfig, rows: &[QueryRow]) -> Result<Summary> {
    let n = 1usize << cfg.block;
    let blocks = cfg.horizon / cfg.block;
    let floor = 0.1 * cfg.block as f64 * n as f64;
    let mut s = Summary::default();
    s.stat("trials", cfg.trials as f64);
    s.stat("sample_floor", floor);
    for st in &cfg.strategies {
        let mine: Vec<&QueryRow> = rows.iter().filter(|r| r.strategy == *st).collect();
        let name = serde_json::to_value(st)?.as_str().unwrap_or_default().to_string();
        let first: Vec<f64> = mine
            .iter()
            .filter_map(|r| r.first_hit_trajectories.map(|t| (t * cfg.horizon) as f64))
            .collect();
        s.stat(format!("{name}_mean_samples_to_first_hit"), mean(first.iter().copied()));
        s.stat(
            format!("{name}_mean_samples_to_optimal"),
            mean(mine.iter().filter_map(|r| r.optimal_trajectories.map(|t| (t * cfg.horizon) as f64))),
        );
        s.stat(
            format!("{name}_fraction_first_hit_below_floor"),
            first.iter().filter(|&&x| x < floor).count() as f64 / mine.len().max(1) as f64,
        );
        s.stat(
            format!("{name}_unsolved"),
            mine.iter().filter(|r| r.optimal_trajectories.is_none()).count() as f64,
        );
    }
    let scans_over = rows
        .iter()
        .filter(|r| r.strategy == Strategy::Scan && r.optimal_trajectories.is_none_or(|t| t > n))
        .count();
    if cfg.strategies.contains(&Strategy::Scan) {
        s.check("scan-pigeonhole", scans_over == 0, format!("{scans_over} scans needed more than 2^T = {n} trajectories"));
    }
    let bad_counts = rows.iter().filter(|r| r.guesses != r.trajectories * blocks).count();
    s.check("reduction-count", bad_counts == 0, format!("{bad_counts} rows with guesses != trajectories * H/T"));
    let broken = rows.iter().filter(|r| !r.reduction_ok).count();
    s.check("reduction-integrity", broken == 0, format!("{broken} rows with reward/guess disagreement"));

    let table = scan_probability_table(n)?;
    let agree = table.iter().all(|r| r.exact == r.enumerated && r.exact == r.ratio);
    s.check("exact-vs-enumeration", agree, format!("{} budgets, scan success = budget/n", table.len()));
    let ten = BigRational::new(1.into(), 10.into());
    let one = BigRational::from_integer(1.into());
    let low = table
        .iter()
        .filter(|r| BigRational::from_integer(r.budget.into()) < BigRational::new((9 * n).into(), 10.into()));
    let mut short_ok = true;
    for r in low {
        s.stat(format!("failure_probability_budget_{}", r.budget), (&one - &r.exact).to_f64().unwrap_or(f64::NAN));
        short_ok &= &one - &r.exact > ten;
    }
    s.check("short-budget-failure", short_ok, "every budget below 0.9n fails with probability > 0.1");
    Ok(s)
}
