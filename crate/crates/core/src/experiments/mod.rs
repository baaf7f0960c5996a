//! Seeded batch experiments over the instance families, with CSV rows and a
//! plain-text summary whose statistics are recomputable from the rows.
//!
//! Trial `i` of a run with master seed `s` uses the stream seeded by
//! `derive_seed(s, i)`, so any single trial can be replayed alone.

mod bellman_rank;
mod deviation;
mod elimination;
mod generate;
mod lower_bound;
mod query;

use std::fmt;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::elimination::EliminationConfig;
use crate::error::{param, Result};
use crate::par;

pub use bellman_rank::{cmd_bellman_rank, summarize_bellman_rank, RankRow};
pub use deviation::{
    bellman_delta, bellman_radius, cmd_deviation, summarize_deviation, value_delta, value_radius, DeviationRow,
};
pub use elimination::{cmd_elimination, complexity_expression, summarize_elimination, EliminationRow};
pub use generate::{build_instance, cmd_gen_instance, family_dims, FamilyInstance, InstanceRow};
pub use lower_bound::{cmd_lower_bound_no_sample, summarize_lower_bound, LowerBoundRow};
pub use query::{cmd_query_complexity, summarize_query, QueryRow};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    RandomSparse,
    Tree,
    Block,
    Rank,
    Bandit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Try block indices `0, 1, 2, …` in order.
    Scan,
    /// Guess uniformly at random, with replacement.
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Elimination,
    Deviation,
    LbNoSample,
    QueryComplexity,
    BellmanRank,
    GenInstance,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Elimination => "elimination",
            Command::Deviation => "deviation",
            Command::LbNoSample => "lb-no-sample",
            Command::QueryComplexity => "query-complexity",
            Command::BellmanRank => "bellman-rank",
            Command::GenInstance => "gen-instance",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

macro_rules! kebab_from_str {
    ($ty:ty) => {
        impl FromStr for $ty {
            type Err = crate::error::Error;
            fn from_str(s: &str) -> Result<Self> {
                serde_json::from_value(serde_json::Value::String(s.to_string()))
                    .map_err(|_| param(format!("unknown value {s:?}")))
            }
        }
    };
}
kebab_from_str!(Family);
kebab_from_str!(Strategy);
kebab_from_str!(Command);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub family: Family,
    pub d: usize,
    pub k: usize,
    pub horizon: usize,
    /// Block length `T`.
    pub block: usize,
    /// Bandit arm count `n`.
    pub arms: usize,
    pub eps: f64,
    pub branching: usize,
    pub max_width: usize,
    pub stochastic: bool,
    pub eps_net: f64,
    pub eps_stat: f64,
    pub delta: f64,
    pub m: Option<usize>,
    pub trials: usize,
    pub seed: u64,
    pub strategies: Vec<Strategy>,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            family: Family::RandomSparse,
            d: 6,
            k: 1,
            horizon: 3,
            block: 2,
            arms: 20,
            eps: 0.0,
            branching: 2,
            max_width: 8,
            stochastic: false,
            eps_net: 0.5,
            eps_stat: 0.2,
            delta: 0.1,
            m: None,
            trials: 50,
            seed: 0,
            strategies: vec![Strategy::Scan, Strategy::Random],
            out: None,
        }
    }
}

impl ExperimentConfig {
    /// Defaults at the natural scale of each command.
    pub fn defaults_for(cmd: Command) -> Self {
        let base = ExperimentConfig::default();
        match cmd {
            Command::Elimination | Command::GenInstance => base,
            Command::Deviation => ExperimentConfig { stochastic: true, trials: 500, ..base },
            Command::LbNoSample => ExperimentConfig { horizon: 100, eps: 0.005, trials: 10_000, ..base },
            Command::QueryComplexity => ExperimentConfig { horizon: 8, block: 4, eps: 0.1, trials: 200, ..base },
            Command::BellmanRank => ExperimentConfig { d: 16, eps: 0.001, ..base },
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    /// Parse `text`, filling missing fields from [`Self::defaults_for`].
    pub fn from_toml_for(cmd: Command, text: &str) -> Result<Self> {
        let mut table: toml::Table = toml::from_str(&Self::defaults_for(cmd).to_toml())?;
        let given: toml::Table = toml::from_str(text)?;
        table.extend(given);
        Ok(table.try_into()?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn elimination_config(&self, sparsity: usize) -> EliminationConfig {
        EliminationConfig {
            sparsity,
            eps: self.eps,
            eps_net: self.eps_net,
            eps_stat: self.eps_stat,
            delta: self.delta,
            m_override: self.m,
        }
    }

    /// Reject parameter combinations that would violate a generator or
    /// algorithm precondition, before any computation.
    pub fn validate(&self, cmd: Command) -> Result<()> {
        let needs_trials = matches!(
            cmd,
            Command::Elimination | Command::Deviation | Command::LbNoSample | Command::QueryComplexity
        );
        if needs_trials && self.trials == 0 {
            return Err(param("trials must be at least 1"));
        }
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return Err(param("eps must be non-negative"));
        }
        if self.horizon == 0 {
            return Err(param("horizon must be at least 1"));
        }
        match cmd {
            Command::Elimination | Command::Deviation | Command::GenInstance => {
                if cmd != Command::GenInstance || self.family != Family::Rank {
                    self.elimination_config(self.k.max(1)).validate()?;
                }
                self.validate_family(cmd)?;
            }
            Command::LbNoSample => {
                if self.horizon as f64 * self.eps > 1.0 {
                    return Err(param("need H*eps <= 1"));
                }
            }
            Command::QueryComplexity => {
                if self.block == 0 || self.block > 12 || self.horizon % self.block != 0 {
                    return Err(param("need 1 <= T <= 12 dividing H"));
                }
                if (self.horizon / self.block) as f64 * self.eps > 1.0 || self.eps == 0.0 {
                    return Err(param("need 0 < (H/T)*eps <= 1"));
                }
                if self.strategies.is_empty() {
                    return Err(param("at least one strategy required"));
                }
            }
            Command::BellmanRank => {
                if self.d < 2 || !self.d.is_power_of_two() || self.d > 64 {
                    return Err(param("d must be a power of two in 2..=64"));
                }
                if self.eps <= 0.0 || self.eps > crate::instances::rank_max_eps(self.d)? {
                    return Err(param("eps outside (0, unit feature-norm limit]"));
                }
            }
        }
        Ok(())
    }

    fn validate_family(&self, cmd: Command) -> Result<()> {
        if cmd == Command::Deviation && self.family != Family::RandomSparse {
            return Err(param("deviation runs on the random-sparse family"));
        }
        match self.family {
            Family::RandomSparse => self.random_spec().validate(),
            Family::Tree => {
                if self.horizon > crate::instances::MAX_MATERIALIZED_HORIZON || self.horizon as f64 * self.eps > 1.0 {
                    return Err(param("tree family needs H <= 16 and H*eps <= 1"));
                }
                Ok(())
            }
            Family::Block => {
                if self.block == 0
                    || self.horizon % self.block != 0
                    || self.horizon > crate::instances::MAX_MATERIALIZED_HORIZON
                    || (self.horizon / self.block) as f64 * self.eps > 1.0
                {
                    return Err(param("block family needs T | H, H <= 16 and (H/T)*eps <= 1"));
                }
                Ok(())
            }
            Family::Rank => {
                if self.eps <= 0.0 || self.eps > crate::instances::rank_max_eps(self.d)? {
                    return Err(param("rank family needs 0 < eps <= the unit feature-norm limit"));
                }
                if self.d > 1 << crate::instances::MAX_MATERIALIZED_HORIZON {
                    return Err(param("d too large"));
                }
                Ok(())
            }
            Family::Bandit => {
                if self.arms == 0 || 2.0 * self.eps > 1.0 {
                    return Err(param("bandit family needs n >= 1 and 2*eps <= 1"));
                }
                Ok(())
            }
        }
    }

    pub(crate) fn random_spec(&self) -> crate::instances::RandomSparseSpec {
        crate::instances::RandomSparseSpec {
            d: self.d,
            k: self.k,
            horizon: self.horizon,
            eps: self.eps,
            branching: self.branching,
            max_width: self.max_width,
            stochastic: self.stochastic,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Named statistics in emission order plus pass/fail checks.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Summary {
    pub stats: Vec<(String, f64)>,
    pub checks: Vec<Check>,
}

impl Summary {
    pub fn stat(&mut self, name: impl Into<String>, value: f64) {
        self.stats.push((name.into(), value));
    }

    pub fn check(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check { name: name.into(), passed, detail: detail.into() });
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.stats.iter().find(|(n, _)| n == name).map(|&(_, v)| v)
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn render(&self, cmd: Command) -> String {
        let mut s = format!("command: {cmd}\n");
        for (n, v) in &self.stats {
            s.push_str(&format!("{n} = {v:?}\n"));
        }
        for c in &self.checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            s.push_str(&format!("[{tag}] {}: {}\n", c.name, c.detail));
        }
        s
    }
}

/// Rows, their summary, per-trial wall times and extra output files.
#[derive(Clone, Debug)]
pub struct ExperimentResult<R> {
    pub command: Command,
    pub rows: Vec<R>,
    pub summary: Summary,
    /// Wall-clock seconds per trial; kept out of `rows.csv` so rows are
    /// byte-reproducible.
    pub wall_seconds: Vec<f64>,
    /// `(file name, contents)` written next to the rows.
    pub artifacts: Vec<(String, String)>,
}

impl<R: Serialize> ExperimentResult<R> {
    pub fn rows_csv(&self) -> Result<String> {
        rows_to_csv(&self.rows)
    }

    /// Write `rows.csv`, `summary.txt`, `timing.csv`, `config.toml` and the
    /// artifacts into `dir`.
    pub fn write_to(&self, dir: impl AsRef<Path>, cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let mut files = vec![
            ("rows.csv".to_string(), self.rows_csv()?),
            ("summary.txt".to_string(), self.summary.render(self.command)),
            ("timing.csv".to_string(), timing_csv(&self.wall_seconds)),
            ("config.toml".to_string(), cfg.to_toml()),
        ];
        files.extend(self.artifacts.iter().cloned());
        let mut written = Vec::with_capacity(files.len());
        for (name, text) in files {
            let path = dir.join(name);
            std::fs::write(&path, text)?;
            written.push(path);
        }
        Ok(written)
    }
}

pub fn rows_to_csv<R: Serialize>(rows: &[R]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| io::Error::other(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn rows_from_csv<R: DeserializeOwned>(text: &str) -> Result<Vec<R>> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .map(|r| r.map_err(Into::into))
        .collect()
}

fn timing_csv(secs: &[f64]) -> String {
    let mut s = String::from("trial,wall_seconds\n");
    for (i, t) in secs.iter().enumerate() {
        s.push_str(&format!("{i},{t}\n"));
    }
    s
}

/// Run `n` independent trials in parallel; results come back in trial order
/// with their wall times.
pub(crate) fn run_trials<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> (Vec<T>, Vec<f64>) {
    par::map_indexed(n, |i| {
        let start = Instant::now();
        let out = f(i);
        (out, start.elapsed().as_secs_f64())
    })
    .into_iter()
    .unzip()
}

/// `p + 3√(p/N)`: frequency ceiling for an event of probability at most `p`.
pub fn frequency_ceiling(p: f64, n: usize) -> f64 {
    p + 3.0 * (p / n as f64).sqrt()
}

/// Outcome of any command, as seen by the command-line driver.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub summary: Summary,
    pub rows_csv: String,
    pub written: Vec<PathBuf>,
}

/// Validate, run `cmd` and, when `cfg.out` is set, write its outputs.
pub fn run_command(cmd: Command, cfg: &ExperimentConfig) -> Result<RunOutcome> {
    fn finish<R: Serialize>(res: ExperimentResult<R>, cfg: &ExperimentConfig) -> Result<RunOutcome> {
        let written = match &cfg.out {
            Some(dir) => res.write_to(dir, cfg)?,
            None => Vec::new(),
        };
        Ok(RunOutcome { rows_csv: res.rows_csv()?, summary: res.summary, written })
    }
    match cmd {
        Command::Elimination => finish(cmd_elimination(cfg)?, cfg),
        Command::Deviation => finish(cmd_deviation(cfg)?, cfg),
        Command::LbNoSample => finish(cmd_lower_bound_no_sample(cfg)?, cfg),
        Command::QueryComplexity => finish(cmd_query_complexity(cfg)?, cfg),
        Command::BellmanRank => finish(cmd_bellman_rank(cfg)?, cfg),
        Command::GenInstance => finish(cmd_gen_instance(cfg)?, cfg),
    }
}

pub(crate) fn mean(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (s, n) = xs.into_iter().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

/// Unbiased sample variance.
pub(crate) fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let mu = mean(xs.iter().copied());
    xs.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / (xs.len() - 1) as f64
}
