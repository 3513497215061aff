//! Potential-weight learning by contrastive divergence.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{loss_vector, LossVector, PotentialWeights, LOSS_DIM};
use crate::error::{Error, Result};
use crate::grammar::{ParseGraph, Saog};
use crate::sampler::{Chain, SamplerConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CdConfig {
    pub eta0: f64,
    /// `η_t = η0 / (1 + decay·t)`.
    pub decay: f64,
    /// MH steps per model chain, started from a data scene.
    pub n_tilde: usize,
    /// Data scenes per update.
    pub batch: usize,
    pub iterations: usize,
    /// Model chains per update; `None` means `batch`.
    pub n_model: Option<usize>,
}

impl Default for CdConfig {
    fn default() -> Self {
        CdConfig {
            eta0: 0.05,
            decay: 0.01,
            n_tilde: 1,
            batch: 16,
            iterations: 200,
            n_model: None,
        }
    }
}

impl CdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta0.is_finite() && self.eta0 >= 0.0 && self.decay.is_finite() && self.decay >= 0.0) {
            return Err(Error::Invalid("cd config: eta0 and decay must be finite and >= 0".into()));
        }
        if self.batch == 0 || self.n_model == Some(0) {
            return Err(Error::Invalid("cd config: batch and n_model must be > 0".into()));
        }
        Ok(())
    }

    pub fn learning_rate(&self, t: usize) -> f64 {
        self.eta0 / (1.0 + self.decay * t as f64)
    }

    fn model_chains(&self) -> usize {
        self.n_model.unwrap_or(self.batch)
    }
}

/// Mean loss vector of `graphs` under `grammar`'s relation statistics.
pub fn mean_loss(graphs: &[ParseGraph], grammar: &Saog) -> LossVector {
    let mut m = [0.0; LOSS_DIM];
    for pg in graphs {
        for (a, l) in m.iter_mut().zip(loss_vector(pg, grammar)) {
            *a += l;
        }
    }
    let n = graphs.len().max(1) as f64;
    m.map(|v| v / n)
}

pub fn l1_mismatch(a: &LossVector, b: &LossVector) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// `λ ← max(0, λ + η (model − data))`.
pub fn apply_gradient(w: &PotentialWeights, data: &LossVector, model: &LossVector, eta: f64) -> PotentialWeights {
    let mut l = w.to_array();
    for k in 0..LOSS_DIM {
        l[k] = (l[k] + eta * (model[k] - data[k])).max(0.0);
    }
    PotentialWeights::from_array(l)
}

/// One contrastive-divergence update from a data batch and a model batch.
pub fn cd_update(
    w: &PotentialWeights,
    data: &[ParseGraph],
    model: &[ParseGraph],
    grammar: &Saog,
    eta: f64,
) -> PotentialWeights {
    apply_gradient(w, &mean_loss(data, grammar), &mean_loss(model, grammar), eta)
}

/// Runs `steps` MH steps from `start` under `grammar`.
pub fn short_chain(grammar: &Saog, start: &ParseGraph, steps: usize, sampler: &SamplerConfig, seed: u64) -> ParseGraph {
    let mut chain = Chain::new(grammar, start.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..steps {
        chain.step(sampler, &mut rng);
    }
    chain.into_parse_graph()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdResult {
    pub weights: PotentialWeights,
    /// `‖mean data loss − mean model loss‖₁` per iteration, before the update.
    pub trace: Vec<f64>,
}

/// CD-ñ: each iteration draws a batch of data scenes, runs ñ MH steps from
/// each under the current weights, and moves λ along the moment mismatch.
/// The initial weights are the grammar's.
pub fn learn_weights<R: Rng + ?Sized>(
    data: &[ParseGraph],
    grammar: &Saog,
    cfg: &CdConfig,
    sampler: &SamplerConfig,
    rng: &mut R,
) -> Result<CdResult> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::NoTrainingScenes);
    }
    let mut g = grammar.clone();
    let mut trace = Vec::with_capacity(cfg.iterations);
    for t in 0..cfg.iterations {
        let batch: Vec<usize> = (0..cfg.batch).map(|_| rng.random_range(0..data.len())).collect();
        let seeds: Vec<u64> = (0..cfg.model_chains()).map(|_| rng.random()).collect();
        let model: Vec<ParseGraph> = seeds
            .par_iter()
            .enumerate()
            .map(|(k, seed)| short_chain(&g, &data[batch[k % batch.len()]], cfg.n_tilde, sampler, *seed))
            .collect();
        let data_batch: Vec<ParseGraph> = batch.iter().map(|i| data[*i].clone()).collect();
        let dm = mean_loss(&data_batch, &g);
        let mm = mean_loss(&model, &g);
        trace.push(l1_mismatch(&dm, &mm));
        g.weights = apply_gradient(&g.weights, &dm, &mm, cfg.learning_rate(t));
    }
    Ok(CdResult {
        weights: g.weights,
        trace,
    })
}

/// Moment mismatch of `weights` on the whole data set: every data scene is
/// run `replicates` times for `steps` MH steps. Chain seeds depend only on
/// `seed`, scene index and replicate, so different weights share random
/// numbers.
pub fn moment_mismatch(
    data: &[ParseGraph],
    grammar: &Saog,
    weights: &PotentialWeights,
    steps: usize,
    replicates: usize,
    sampler: &SamplerConfig,
    seed: u64,
) -> f64 {
    let mut g = grammar.clone();
    g.weights = *weights;
    let jobs: Vec<(usize, usize)> = (0..data.len())
        .flat_map(|i| (0..replicates).map(move |r| (i, r)))
        .collect();
    let model: Vec<ParseGraph> = jobs
        .par_iter()
        .map(|(i, r)| {
            let s = seed ^ ((*i as u64) << 20) ^ (*r as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
            short_chain(&g, &data[*i], steps, sampler, s)
        })
        .collect();
    l1_mismatch(&mean_loss(data, &g), &mean_loss(&model, &g))
}
