//! Parameter estimation from annotated scenes: branch and count
//! probabilities, address priors, size densities, relation means and the
//! potential weights.

mod cd;
pub mod kde;
mod stats;
mod training;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grammar::{GrammarDoc, NodeKind, ParseGraph, Saog};
use crate::sampler::SamplerConfig;

pub use cd::{
    apply_gradient, cd_update, l1_mismatch, learn_weights, mean_loss, moment_mismatch, short_chain, CdConfig,
    CdResult,
};
pub use kde::SizeKde;
pub use stats::{
    circular_mean, collect_statistics, graph_statistics, relation_stats, scene_statistics, SufficientStats,
};
pub use training::{
    discover_groups, discover_support_relations, load_scenes, parse_graph_to_scene, scene_to_parse_graph,
    scenes_from_json, ConvertedScene, GroupPair, SupportTolerance, TrainingObject, TrainingScene,
    GROUP_DISTANCE,
};

/// Pseudo-count added to every branch, count and address target.
pub const ALPHA: f64 = 1.0;

/// `ρ_i = (c_i + α) / Σ_j (c_j + α)`.
pub fn estimate_branch_probs(counts: &[u64], alpha: f64) -> Result<Vec<f64>> {
    if counts.is_empty() {
        return Err(Error::Invalid("no branches to estimate".into()));
    }
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(Error::Invalid("pseudo-count must be finite and >= 0".into()));
    }
    let total: f64 = counts.iter().map(|c| *c as f64 + alpha).sum();
    if total == 0.0 {
        return Err(Error::Invalid("all branch counts are zero and alpha is 0".into()));
    }
    Ok(counts.iter().map(|c| (*c as f64 + alpha) / total).collect())
}

#[derive(Debug, Clone)]
pub struct LearnedGrammar {
    pub grammar: Saog,
    pub stats: SufficientStats,
    /// Training scenes as parse graphs of the learned grammar.
    pub data: Vec<ParseGraph>,
    pub cd: CdResult,
}

/// Learns every parameter of `skeleton` from `scenes`. Size models fall
/// back to the skeleton's when a category is never observed.
pub fn learn_grammar(
    skeleton: &GrammarDoc,
    scenes: &[TrainingScene],
    cd: &CdConfig,
    sampler: &SamplerConfig,
    seed: u64,
) -> Result<LearnedGrammar> {
    if scenes.is_empty() {
        return Err(Error::NoTrainingScenes);
    }
    let skel = Saog::build_skeleton(skeleton)?;
    let stats = collect_statistics(scenes, &skel);
    for (cat, n) in &stats.skipped {
        log::warn!("{n} object(s) of unknown category `{cat}` skipped");
    }

    let mut doc = skeleton.clone();
    for (id, nd) in doc.nodes.iter_mut() {
        let node = skel.node(id);
        match node.kind {
            NodeKind::Or => {
                nd.probs = Some(estimate_branch_probs(&stats.or_counts[id], ALPHA)?);
            }
            NodeKind::Set => {
                for (child, dist) in node.children.iter().zip(&node.counts) {
                    let seen = &stats.set_counts[&crate::energy::pair_key(id, child)];
                    let counts: Vec<u64> = dist
                        .support
                        .iter()
                        .map(|c| seen.get(c).copied().unwrap_or(0))
                        .collect();
                    let probs = estimate_branch_probs(&counts, ALPHA)?;
                    nd.counts.insert(
                        child.clone(),
                        dist.support.iter().map(|c| c.to_string()).zip(probs).collect(),
                    );
                }
            }
            _ => {}
        }
    }
    for (slot, prior) in doc.address_slots.iter_mut() {
        let seen = &stats.address_counts[slot];
        let keys: Vec<String> = prior.keys().cloned().collect();
        let counts: Vec<u64> = keys.iter().map(|k| seen.get(k).copied().unwrap_or(0)).collect();
        let probs = estimate_branch_probs(&counts, ALPHA)?;
        *prior = keys.into_iter().zip(probs).collect();
    }
    for cat in skel.categories() {
        match stats.sizes.get(&cat).filter(|s| !s.is_empty()) {
            Some(samples) => {
                doc.size_models.insert(cat, SizeKde::fit(samples)?);
            }
            None if doc.size_models.contains_key(&cat) => {}
            None => return Err(Error::MissingSizeModel(cat)),
        }
    }
    doc.room_model = Some(SizeKde::fit(&stats.room_sizes)?);
    doc.relation_stats = Some(relation_stats(&stats, skel.relation_stats.d_acc));
    doc.weights = Some(skel.weights);
    let mut grammar = Saog::build(&doc)?;

    let tol = SupportTolerance::default();
    let data: Vec<ParseGraph> = scenes
        .iter()
        .map(|s| scene_to_parse_graph(s, &grammar, tol).pg)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cd = learn_weights(&data, &grammar, cd, sampler, &mut rng)?;
    grammar.weights = cd.weights;
    Ok(LearnedGrammar {
        grammar,
        stats,
        data,
        cd,
    })
}

/// Serialisable summary printed by the `stats` command.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StatsReport {
    pub stats: SufficientStats,
    pub relation_stats: crate::energy::RelationStats,
}
