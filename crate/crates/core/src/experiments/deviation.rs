use serde::{Deserialize, Serialize};

use super::generate::build_instance;
use super::{frequency_ceiling, run_trials, Command, ExperimentConfig, ExperimentResult, Summary};
use crate::elimination::{dataset_size, empirical_bellman_error};
use crate::error::Result;
use crate::mdp::{sample_dataset, state_distributions};
use crate::oracles::exact_avg_bellman_error;
use crate::seed::{derive_seed, stream};
use crate::sparse::{greedy_policy, v_theta};

/// Deviation radius for average Bellman errors: `4√((ln 2 − ln δ′)/(2m))`.
pub fn bellman_radius(m: usize, delta: f64) -> f64 {
    4.0 * ((2f64.ln() - delta.ln()) / (2.0 * m as f64)).sqrt()
}

/// Deviation radius for value estimates: `√((ln 2 − ln δ′)/(2m))`.
pub fn value_radius(m: usize, delta: f64) -> f64 {
    ((2f64.ln() - delta.ln()) / (2.0 * m as f64)).sqrt()
}

/// `δ′` with `bellman_radius(m, δ′) = ε_stat`, i.e. `2·exp(−m·ε_stat²/8)`.
pub fn bellman_delta(m: usize, eps_stat: f64) -> f64 {
    2.0 * (-(m as f64) * eps_stat * eps_stat / 8.0).exp()
}

/// `δ′` with `value_radius(m, δ′) = ε_stat`, i.e. `2·exp(−2m·ε_stat²)`.
pub fn value_delta(m: usize, eps_stat: f64) -> f64 {
    2.0 * (-2.0 * m as f64 * eps_stat * eps_stat).exp()
}

/// One row per (dataset, level).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviationRow {
    pub trial: usize,
    pub seed: u64,
    pub level: usize,
    pub m: usize,
    pub bellman_exact: f64,
    pub bellman_empirical: f64,
    pub value_exact: f64,
    pub value_empirical: f64,
}

/// Fix one random-sparse instance, its reference parameters and their greedy
/// policy; draw `N` datasets of size `m` and compare empirical Bellman errors
/// and level values against their exact expectations.
pub fn cmd_deviation(cfg: &ExperimentConfig) -> Result<ExperimentResult<DeviationRow>> {
    cfg.validate(Command::Deviation)?;
    let inst = build_instance(cfg, None, &mut stream(derive_seed(cfg.seed, u64::MAX)))?;
    let (mdp, phi) = (&inst.mdp, &inst.phi);
    let theta = inst.reference.clone().expect("random-sparse instances carry parameters");
    let horizon = mdp.horizon();
    let m = dataset_size(&cfg.elimination_config(cfg.k), phi.dim(), horizon);
    let policy = greedy_policy(mdp, phi, &theta)?;
    let exact_e = (0..horizon)
        .map(|h| exact_avg_bellman_error(mdp, phi, &theta, h, &policy))
        .collect::<Result<Vec<_>>>()?;
    let exact_v: Vec<f64> = state_distributions(mdp, &policy)?
        .iter()
        .enumerate()
        .map(|(h, dist)| dist.iter().enumerate().map(|(s, p)| p * v_theta(phi, &theta[h], h, s)).sum())
        .collect();

    let (per_trial, wall_seconds) = run_trials(cfg.trials, |i| -> Result<Vec<DeviationRow>> {
        let seed = derive_seed(cfg.seed, i as u64);
        let data = sample_dataset(mdp, &policy, m, seed)?;
        (0..horizon)
            .map(|h| {
                let value_empirical =
                    data.iter().map(|t| v_theta(phi, &theta[h], h, t.steps[h].state)).sum::<f64>() / m as f64;
                Ok(DeviationRow {
                    trial: i,
                    seed,
                    level: h,
                    m,
                    bellman_exact: exact_e[h],
                    bellman_empirical: empirical_bellman_error(&data, phi, &theta, h)?,
                    value_exact: exact_v[h],
                    value_empirical,
                })
            })
            .collect()
    });
    let rows: Vec<DeviationRow> = per_trial.into_iter().collect::<Result<Vec<_>>>()?.concat();
    let summary = summarize_deviation(cfg, &rows);
    Ok(ExperimentResult { command: Command::Deviation, rows, summary, wall_seconds, artifacts: Vec::new() })
}

pub fn summarize_deviation(cfg: &ExperimentConfig, rows: &[DeviationRow]) -> Summary {
    let mut s = Summary::default();
    let m = rows.first().map_or(0, |r| r.m);
    let horizon = rows.iter().map(|r| r.level + 1).max().unwrap_or(0);
    let trials = rows.iter().filter(|r| r.level == 0).count();
    let (db, dv) = (bellman_delta(m, cfg.eps_stat), value_delta(m, cfg.eps_stat));
    let (cb, cv) = (frequency_ceiling(db, trials), frequency_ceiling(dv, trials));
    s.stat("datasets", trials as f64);
    s.stat("m", m as f64);
    s.stat("bellman_delta_prime", db);
    s.stat("value_delta_prime", dv);
    for h in 0..horizon {
        let level: Vec<&DeviationRow> = rows.iter().filter(|r| r.level == h).collect();
        let eb = level
            .iter()
            .filter(|r| (r.bellman_exact - r.bellman_empirical).abs() > cfg.eps_stat)
            .count();
        let ev = level.iter().filter(|r| (r.value_exact - r.value_empirical).abs() > cfg.eps_stat).count();
        let max_b = level.iter().map(|r| (r.bellman_exact - r.bellman_empirical).abs()).fold(0.0, f64::max);
        let max_v = level.iter().map(|r| (r.value_exact - r.value_empirical).abs()).fold(0.0, f64::max);
        let n = level.len().max(1) as f64;
        s.stat(format!("level_{h}_max_bellman_deviation"), max_b);
        s.stat(format!("level_{h}_max_value_deviation"), max_v);
        s.stat(format!("level_{h}_bellman_exceed_fraction"), eb as f64 / n);
        s.stat(format!("level_{h}_value_exceed_fraction"), ev as f64 / n);
        s.check(
            format!("bellman-deviation-level-{h}"),
            eb as f64 / n <= cb,
            format!("{eb}/{} datasets beyond eps_stat; ceiling {cb:.3e}", level.len()),
        );
        s.check(
            format!("value-deviation-level-{h}"),
            ev as f64 / n <= cv,
            format!("{ev}/{} datasets beyond eps_stat; ceiling {cv:.3e}", level.len()),
        );
    }
    s
}
