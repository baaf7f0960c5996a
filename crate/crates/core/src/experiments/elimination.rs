use serde::{Deserialize, Serialize};

use super::generate::{build_instance, family_dims};
use super::{frequency_ceiling, mean, run_trials, Command, ExperimentConfig, ExperimentResult, Family, Summary};
use crate::elimination::{run_elimination_with_net, RunReport};
use crate::error::{Error, Result};
use crate::mdp::{exact_optimal, exact_policy_value};
use crate::net::build_net;
use crate::seed::{derive_seed, stream};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EliminationRow {
    pub trial: usize,
    pub seed: u64,
    /// `ok`, `exhausted`, `iteration-cap` or `error`.
    pub status: String,
    pub horizon: usize,
    pub m: usize,
    pub iterations: usize,
    pub iteration_cap: u64,
    pub realized_cap: usize,
    pub trajectories: u64,
    pub samples: u64,
    pub suboptimality: Option<f64>,
    pub bound: f64,
    pub reference_eliminated: Option<bool>,
    pub complexity_ratio: f64,
}

/// `k·d^k·H³·ln(dH/(ε_net·δ))·ε_net^{−k}·ε_stat^{−2}` without constants.
pub fn complexity_expression(k: usize, d: usize, horizon: usize, eps_net: f64, delta: f64, eps_stat: f64) -> f64 {
    let (kf, df, hf) = (k as f64, d as f64, horizon as f64);
    kf * df.powf(kf) * hf.powi(3) * (df * hf / (eps_net * delta)).ln() * eps_net.powf(-kf) / (eps_stat * eps_stat)
}

fn bound(cfg: &ExperimentConfig, horizon: usize) -> f64 {
    if cfg.family == Family::Bandit {
        2.0 * cfg.eps + 2.0 * cfg.eps_net + 4.0 * cfg.eps_stat
    } else {
        (4.0 * cfg.eps_stat + 2.0 * cfg.eps_net + 2.0 * cfg.eps) * horizon as f64
    }
}

fn trial(cfg: &ExperimentConfig, i: usize) -> EliminationRow {
    let seed = derive_seed(cfg.seed, i as u64);
    let mut row = EliminationRow {
        trial: i,
        seed,
        status: "error".into(),
        horizon: cfg.horizon,
        m: 0,
        iterations: 0,
        iteration_cap: 0,
        realized_cap: 0,
        trajectories: 0,
        samples: 0,
        suboptimality: None,
        bound: bound(cfg, cfg.horizon),
        reference_eliminated: None,
        complexity_ratio: 0.0,
    };
    if let Err(e) = fill(cfg, seed, &mut row) {
        tracing::warn!(trial = i, error = %e, "trial failed");
    }
    row
}

fn fill(cfg: &ExperimentConfig, seed: u64, row: &mut EliminationRow) -> Result<()> {
    let mut rng = stream(seed);
    let (d, k) = family_dims(cfg);
    let net = build_net(d, k, cfg.eps_net, &mut rng)?;
    let inst = build_instance(cfg, Some(&net), &mut rng)?;
    let ec = cfg.elimination_config(k);
    let horizon = inst.mdp.horizon();
    row.horizon = horizon;
    row.bound = bound(cfg, horizon);
    let (status, report): (&str, RunReport) =
        match run_elimination_with_net(&inst.mdp, &inst.phi, &net, &ec, &mut rng, inst.reference.as_deref()) {
            Ok(r) => ("ok", r),
            Err(Error::Exhausted { report, .. }) => ("exhausted", *report),
            Err(Error::IterationCap { report, .. }) => ("iteration-cap", *report),
            Err(e) => return Err(e),
        };
    row.status = status.into();
    row.m = report.m;
    row.iterations = report.iterations.len();
    row.iteration_cap = report.iteration_cap;
    row.realized_cap = report.realized_cap();
    row.trajectories = report.total_trajectories;
    row.samples = report.total_samples;
    row.reference_eliminated = report.reference_ids.as_ref().map(|_| report.reference_ever_eliminated);
    row.complexity_ratio =
        report.total_samples as f64 / complexity_expression(k, d, horizon, cfg.eps_net, cfg.delta, cfg.eps_stat);
    if let Some(pi) = report.policy(&inst.mdp, &inst.phi)? {
        let v_star = exact_optimal(&inst.mdp).value();
        row.suboptimality = Some(v_star - exact_policy_value(&inst.mdp, &pi)?);
    }
    Ok(())
}

/// `N` seeded runs of the elimination algorithm on `cfg.family`.
pub fn cmd_elimination(cfg: &ExperimentConfig) -> Result<ExperimentResult<EliminationRow>> {
    cfg.validate(Command::Elimination)?;
    let (rows, wall_seconds) = run_trials(cfg.trials, |i| trial(cfg, i));
    let summary = summarize_elimination(cfg, &rows);
    Ok(ExperimentResult { command: Command::Elimination, rows, summary, wall_seconds, artifacts: Vec::new() })
}

pub fn summarize_elimination(cfg: &ExperimentConfig, rows: &[EliminationRow]) -> Summary {
    let n = rows.len();
    let mut s = Summary::default();
    let failed = rows.iter().filter(|r| r.status != "ok").count();
    let violations = rows
        .iter()
        .filter(|r| r.status != "ok" || r.suboptimality.is_none_or(|x| x > r.bound))
        .count();
    let allowed = frequency_ceiling(cfg.delta, n);
    let vfrac = violations as f64 / n.max(1) as f64;
    s.stat("trials", n as f64);
    s.stat("failed_trials", failed as f64);
    s.stat("bound_violations", violations as f64);
    s.stat("violation_fraction", vfrac);
    s.stat("allowed_fraction", allowed);
    s.stat("mean_suboptimality", mean(rows.iter().filter_map(|r| r.suboptimality)));
    s.stat("max_suboptimality", rows.iter().filter_map(|r| r.suboptimality).fold(0.0, f64::max));
    s.stat("mean_iterations", mean(rows.iter().map(|r| r.iterations as f64)));
    s.stat("max_iterations", rows.iter().map(|r| r.iterations).max().unwrap_or(0) as f64);
    s.stat("mean_samples", mean(rows.iter().map(|r| r.samples as f64)));
    s.stat("mean_complexity_ratio", mean(rows.iter().map(|r| r.complexity_ratio)));
    s.check(
        "suboptimality-bound",
        vfrac <= allowed,
        format!("{violations}/{n} runs above the bound or failed; allowed fraction {allowed:.4}"),
    );

    let over_cap = rows.iter().filter(|r| r.iterations as u64 > r.iteration_cap).count();
    let over_realized = rows.iter().filter(|r| r.iterations > r.realized_cap).count();
    s.check("iteration-cap", over_cap == 0, format!("{over_cap} runs above the iteration cap"));
    s.check("realized-cap", over_realized == 0, format!("{over_realized} runs above the total candidate count"));

    let tracked: Vec<bool> = rows.iter().filter_map(|r| r.reference_eliminated).collect();
    if !tracked.is_empty() {
        let lost = tracked.iter().filter(|&&x| x).count();
        let frac = lost as f64 / tracked.len() as f64;
        let allowed = frequency_ceiling(cfg.delta, tracked.len());
        s.stat("reference_eliminated_runs", lost as f64);
        s.check(
            "retention",
            frac <= allowed,
            format!("reference eliminated in {lost}/{} runs; allowed fraction {allowed:.4}", tracked.len()),
        );
    }

    let mismatched = rows
        .iter()
        .filter(|r| {
            let per_iter = (r.horizon * r.m) as u64;
            r.trajectories != r.iterations as u64 * per_iter || r.samples != r.trajectories * r.horizon as u64
        })
        .count();
    s.check("sample-accounting", mismatched == 0, format!("{mismatched} runs with unreconciled totals"));
    s
}
