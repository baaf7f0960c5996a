use serde::{Deserialize, Serialize};

use super::{run_trials, Command, ExperimentConfig, ExperimentResult, Summary};
use crate::error::Result;
use crate::instances::make_rank_instance;
use crate::oracles::{bellman_error_matrix, rank_bellman_matrix, DEFAULT_RANK_TOL};

/// One row per level; only the last level's pattern is asserted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankRow {
    pub level: usize,
    pub size: usize,
    pub rank: usize,
    /// Whether `W = ε(I − J)` held; only set on the last level.
    pub pattern_ok: Option<bool>,
}

/// Build the rank instance, emit every level's Bellman error matrix over the
/// family (`w_level_<h>.csv`) and check the last level.
pub fn cmd_bellman_rank(cfg: &ExperimentConfig) -> Result<ExperimentResult<RankRow>> {
    cfg.validate(Command::BellmanRank)?;
    let (mut out, wall_seconds) = run_trials(1, |_| -> Result<_> {
        let inst = make_rank_instance(cfg.d, cfg.eps)?;
        let last = inst.horizon() - 1;
        let mut rows = Vec::new();
        let mut artifacts = Vec::new();
        for h in 0..=last {
            let (w, pattern_ok) = if h == last {
                match rank_bellman_matrix(&inst) {
                    Ok(w) => (w, Some(true)),
                    Err(e) => {
                        tracing::warn!(error = %e, "last-level pattern mismatch");
                        (bellman_error_matrix(&inst.mdp, &inst.phi, &inst.family, h)?, Some(false))
                    }
                }
            } else {
                (bellman_error_matrix(&inst.mdp, &inst.phi, &inst.family, h)?, None)
            };
            rows.push(RankRow { level: h, size: w.size(), rank: w.rank(DEFAULT_RANK_TOL), pattern_ok });
            artifacts.push((format!("w_level_{h}.csv"), w.to_csv()));
        }
        Ok((rows, artifacts))
    });
    let (rows, artifacts) = out.remove(0)?;
    let summary = summarize_bellman_rank(cfg, &rows);
    Ok(ExperimentResult { command: Command::BellmanRank, rows, summary, wall_seconds, artifacts })
}

pub fn summarize_bellman_rank(cfg: &ExperimentConfig, rows: &[RankRow]) -> Summary {
    let mut s = Summary::default();
    let last = rows.iter().find(|r| r.pattern_ok.is_some());
    let rank = last.map_or(0, |r| r.rank);
    let pattern = last.and_then(|r| r.pattern_ok).unwrap_or(false);
    s.stat("d", cfg.d as f64);
    s.stat("last_level_rank", rank as f64);
    for r in rows {
        s.stat(format!("level_{}_rank", r.level), r.rank as f64);
    }
    s.check("pattern", pattern, "last-level W = eps(I - J) within 1e-12");
    s.check("rank", rank == cfg.d, format!("rank {rank}, expected {}", cfg.d));
    s
}
