use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use sparse_elim::experiments::{run_command, Command, ExperimentConfig, Family, Strategy};

/// Seeded experiments for sparse linear-Q elimination and its lower-bound
/// constructions. Exits 0 iff every check in the summary passes.
#[derive(Parser)]
#[command(name = "sparse-elim", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Repeated elimination runs with exact suboptimality.
    Elimination,
    /// Empirical vs exact Bellman errors and values over many datasets.
    Deviation,
    /// Fixed-policy suboptimality on random binary-tree instances.
    LbNoSample,
    /// Brute-force search on block instances via the query-game reduction.
    QueryComplexity,
    /// Bellman error matrices of the rank instance.
    BellmanRank,
    /// Write one instance, its features and candidate net.
    GenInstance,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Elimination => Command::Elimination,
            Cmd::Deviation => Command::Deviation,
            Cmd::LbNoSample => Command::LbNoSample,
            Cmd::QueryComplexity => Command::QueryComplexity,
            Cmd::BellmanRank => Command::BellmanRank,
            Cmd::GenInstance => Command::GenInstance,
        }
    }
}

/// Overrides applied on top of the config file (or the command defaults).
#[derive(Args)]
struct Flags {
    /// TOML config; flags given on the command line take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// random-sparse, tree, block, rank or bandit.
    #[arg(long, global = true)]
    family: Option<Family>,
    #[arg(long, global = true)]
    d: Option<usize>,
    #[arg(long, global = true)]
    k: Option<usize>,
    #[arg(long = "horizon", short = 'H', global = true)]
    horizon: Option<usize>,
    /// Block length T.
    #[arg(long, short = 'T', global = true)]
    block: Option<usize>,
    /// Bandit arm count.
    #[arg(long, short = 'n', global = true)]
    arms: Option<usize>,
    #[arg(long, global = true)]
    eps: Option<f64>,
    #[arg(long, global = true)]
    branching: Option<usize>,
    #[arg(long, global = true)]
    max_width: Option<usize>,
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "true")]
    stochastic: Option<bool>,
    #[arg(long, global = true)]
    eps_net: Option<f64>,
    #[arg(long, global = true)]
    eps_stat: Option<f64>,
    #[arg(long, global = true)]
    delta: Option<f64>,
    /// Dataset size override.
    #[arg(long, global = true)]
    m: Option<usize>,
    #[arg(long, short = 'N', global = true)]
    trials: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Comma-separated: scan, random.
    #[arg(long, global = true, value_delimiter = ',')]
    strategies: Option<Vec<Strategy>>,
    /// Output directory for rows.csv, summary.txt and artifacts.
    #[arg(long, short = 'o', global = true)]
    out: Option<PathBuf>,
}

impl Flags {
    fn resolve(&self, cmd: Command) -> anyhow::Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                ExperimentConfig::from_toml_for(cmd, &text)?
            }
            None => ExperimentConfig::defaults_for(cmd),
        };
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = self.$f.clone() { c.$f = v; } )* };
        }
        set!(family, d, k, horizon, block, arms, eps, branching, max_width, stochastic, eps_net, eps_stat, delta, trials, seed, strategies);
        if self.m.is_some() {
            c.m = self.m;
        }
        if self.out.is_some() {
            c.out = self.out.clone();
        }
        Ok(c)
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "warn".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    let cmd = Command::from(cli.cmd);
    match cli.flags.resolve(cmd).and_then(|cfg| Ok(run_command(cmd, &cfg)?)) {
        Ok(outcome) => {
            print!("{}", outcome.summary.render(cmd));
            for p in &outcome.written {
                eprintln!("wrote {}", p.display());
            }
            if outcome.summary.all_passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
