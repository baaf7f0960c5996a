use serde::{Deserialize, Serialize};

use super::{frequency_ceiling, mean, run_trials, variance, Command, ExperimentConfig, ExperimentResult, Summary};
use crate::error::Result;
use crate::instances::TreeInstance;
use crate::seed::{derive_seed, stream};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundRow {
    pub trial: usize,
    pub seed: u64,
    /// Levels where the fixed action differs from `a*_h`.
    pub mismatches: usize,
    pub suboptimality: f64,
}

/// Suboptimality of the fixed all-`a1` policy on tree instances with
/// uniformly drawn `a*`; `(V* − V^π)/ε` is Binomial(H, 1/2).
pub fn cmd_lower_bound_no_sample(cfg: &ExperimentConfig) -> Result<ExperimentResult<LowerBoundRow>> {
    cfg.validate(Command::LbNoSample)?;
    let fixed = vec![0; cfg.horizon];
    let (rows, wall_seconds) = run_trials(cfg.trials, |i| -> Result<LowerBoundRow> {
        let seed = derive_seed(cfg.seed, i as u64);
        let t = TreeInstance::random(cfg.horizon, cfg.eps, &mut stream(seed))?;
        Ok(LowerBoundRow {
            trial: i,
            seed,
            mismatches: t.a_star.iter().filter(|&&a| a != 0).count(),
            suboptimality: t.optimal_value() - t.path_value(&fixed)?,
        })
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let summary = summarize_lower_bound(cfg, &rows);
    Ok(ExperimentResult { command: Command::LbNoSample, rows, summary, wall_seconds, artifacts: Vec::new() })
}

pub fn summarize_lower_bound(cfg: &ExperimentConfig, rows: &[LowerBoundRow]) -> Summary {
    let (h, eps, n) = (cfg.horizon as f64, cfg.eps, rows.len());
    let xs: Vec<f64> = rows.iter().map(|r| r.suboptimality).collect();
    let mu = mean(xs.iter().copied());
    let var = variance(&xs);
    let target_mean = h * eps / 2.0;
    let target_var = h * eps * eps / 4.0;
    let tol = 3.0 * (eps * h.sqrt() / 2.0) / (n as f64).sqrt();
    let mut s = Summary::default();
    s.stat("trials", n as f64);
    s.stat("mean_suboptimality", mu);
    s.stat("expected_mean", target_mean);
    s.stat("mean_tolerance", tol);
    s.stat("variance", var);
    s.stat("expected_variance", target_var);
    s.check("mean", (mu - target_mean).abs() <= tol, format!("|{mu:.6} - {target_mean:.6}| <= {tol:.6}"));
    let rel = if target_var > 0.0 { (var - target_var).abs() / target_var } else { var };
    s.check("variance", rel <= 0.1, format!("relative error {rel:.4} <= 0.1"));
    if cfg.horizon >= 100 {
        // Chebyshev: P(X < Hε/2 − 5ε√H) ≤ (ε√H/2)² / (5ε√H)² = 1/100
        let cut = target_mean - 5.0 * eps * h.sqrt();
        let below = xs.iter().filter(|&&x| x < cut).count();
        let frac = below as f64 / n as f64;
        let allowed = frequency_ceiling(0.01, n);
        s.stat("fraction_below_chebyshev_cut", frac);
        s.check("chebyshev-quantile", frac <= allowed, format!("{below}/{n} below {cut:.4}; allowed {allowed:.4}"));
    }
    s
}
