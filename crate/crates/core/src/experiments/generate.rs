use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{run_trials, Command, ExperimentConfig, ExperimentResult, Family, Summary};
use crate::error::Result;
use crate::instances::{
    make_bandit_instance, make_random_sparse_instance, make_rank_instance, BlockInstance, TreeInstance,
};
use crate::mdp::TabularMdp;
use crate::net::{build_net, ParamNet};
use crate::seed::{derive_seed, stream};
use crate::sparse::{FeatureMap, SparseParam};

/// A generated instance of any family, with its hidden parameters.
#[derive(Clone, Debug)]
pub struct FamilyInstance {
    pub mdp: TabularMdp,
    pub phi: FeatureMap,
    /// Parameters known to satisfy the sparse linear assumption, if any.
    pub reference: Option<Vec<SparseParam>>,
    pub hidden: serde_json::Value,
}

/// `(d, k)` of the feature map the family produces.
pub fn family_dims(cfg: &ExperimentConfig) -> (usize, usize) {
    match cfg.family {
        Family::RandomSparse => (cfg.d, cfg.k),
        Family::Rank => (cfg.d, 1),
        Family::Tree | Family::Block | Family::Bandit => (1, 1),
    }
}

/// Draw one instance of `cfg.family`. With `net`, random-sparse reference
/// parameters are net candidates.
pub fn build_instance<R: Rng + ?Sized>(
    cfg: &ExperimentConfig,
    net: Option<&ParamNet>,
    rng: &mut R,
) -> Result<FamilyInstance> {
    Ok(match cfg.family {
        Family::RandomSparse => {
            let inst = make_random_sparse_instance(&cfg.random_spec(), net, rng)?;
            FamilyInstance {
                hidden: json!({ "theta_star": inst.theta_star, "assumption_gap": inst.gap }),
                reference: Some(inst.theta_star),
                mdp: inst.mdp,
                phi: inst.phi,
            }
        }
        Family::Tree => {
            let t = TreeInstance::random(cfg.horizon, cfg.eps, rng)?;
            let (mdp, phi) = t.materialize()?;
            FamilyInstance { reference: Some(t.theta_star()), hidden: json!({ "a_star": t.a_star }), mdp, phi }
        }
        Family::Block => {
            let b = BlockInstance::random(cfg.horizon, cfg.block, cfg.eps, rng)?;
            let (mdp, phi) = b.materialize()?;
            FamilyInstance { reference: Some(b.theta_star()), hidden: json!({ "i_star": b.i_star }), mdp, phi }
        }
        Family::Rank => {
            let r = make_rank_instance(cfg.d, cfg.eps)?;
            FamilyInstance { reference: None, hidden: json!({ "family": r.family }), mdp: r.mdp, phi: r.phi }
        }
        Family::Bandit => {
            let b = make_bandit_instance(cfg.arms, cfg.eps, rng)?;
            FamilyInstance {
                reference: Some(b.theta_star()),
                hidden: json!({ "theta_sign": b.theta_sign, "a_star": b.a_star }),
                mdp: b.mdp,
                phi: b.phi,
            }
        }
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceRow {
    pub family: Family,
    pub seed: u64,
    pub horizon: usize,
    pub states: usize,
    pub actions: usize,
    pub dim: usize,
    pub candidates: usize,
}

/// Generate one instance (trial 0 of `cfg.seed`) and its candidate net;
/// artifacts are `mdp.json`, `features.json`, `hidden.json` and `net.txt`.
pub fn cmd_gen_instance(cfg: &ExperimentConfig) -> Result<ExperimentResult<InstanceRow>> {
    cfg.validate(Command::GenInstance)?;
    let seed = derive_seed(cfg.seed, 0);
    let ((row, artifacts), secs) = {
        let (mut out, secs) = run_trials(1, |_| -> Result<_> {
            let mut rng = stream(seed);
            let (d, k) = family_dims(cfg);
            let net = build_net(d, k, cfg.eps_net, &mut rng)?;
            let inst = build_instance(cfg, Some(&net), &mut rng)?;
            let row = InstanceRow {
                family: cfg.family,
                seed,
                horizon: inst.mdp.horizon(),
                states: inst.mdp.total_states(),
                actions: inst.mdp.num_actions(),
                dim: inst.phi.dim(),
                candidates: net.len(),
            };
            let artifacts = vec![
                ("mdp.json".to_string(), inst.mdp.to_json()?),
                ("features.json".to_string(), inst.phi.to_json()?),
                ("hidden.json".to_string(), serde_json::to_string_pretty(&inst.hidden)?),
                ("net.txt".to_string(), net.to_text()),
            ];
            Ok((row, artifacts))
        });
        (out.remove(0)?, secs)
    };
    let mut summary = Summary::default();
    summary.stat("states", row.states as f64);
    summary.stat("candidates_per_level", row.candidates as f64);
    Ok(ExperimentResult { command: Command::GenInstance, rows: vec![row], summary, wall_seconds: secs, artifacts })
}
