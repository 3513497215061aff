//! Markov chain Monte Carlo sampling of scene layouts.
//!
//! Structure (the parse tree and object sizes) is drawn top-down once; the
//! chain then explores positions, orientations and support addresses with
//! four moves: translate, rotate, swap and support-swap.

mod chain;
mod convergence;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grammar::{derive_parse_tree, ParseGraph, Saog, DEFAULT_MAX_OBJECTS};

pub use chain::{
    accept, init_layout, surface_point, surface_pose, Chain, ChainTrace, MoveKind, Placement, Proposal,
    StepOutcome, StepRecord,
};
pub use convergence::{has_converged, histogram_distance, ConvergenceConfig};

/// Steps between full-energy consistency checks in debug builds.
pub const DEBUG_CHECK_EVERY: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    /// Tidiness: the acceptance exponent is `−β ΔE`.
    pub beta: f64,
    pub iter_max: usize,
    /// Probabilities of translate, rotate, swap and support moves.
    pub move_probs: [f64; 4],
    pub sigma_pos: f64,
    pub sigma_theta: f64,
    pub convergence: ConvergenceConfig,
    pub staged: bool,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            beta: 1.0,
            iter_max: 20_000,
            move_probs: [0.4, 0.3, 0.15, 0.15],
            sigma_pos: 0.2,
            sigma_theta: std::f64::consts::PI / 18.0,
            convergence: ConvergenceConfig::default(),
            staged: true,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Invalid(format!("sampler config: {m}")));
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return bad("beta must be finite and >= 0");
        }
        if self.move_probs.iter().any(|p| !(p.is_finite() && *p >= 0.0))
            || (self.move_probs.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return bad("move_probs must be non-negative and sum to 1");
        }
        if !(self.sigma_pos.is_finite() && self.sigma_pos >= 0.0)
            || !(self.sigma_theta.is_finite() && self.sigma_theta >= 0.0)
        {
            return bad("proposal deviations must be finite and >= 0");
        }
        let c = &self.convergence;
        if c.w == 0 || c.bins == 0 || !(c.eps.is_finite() && c.eps > 0.0) {
            return bad("convergence needs w > 0, bins > 0 and eps > 0");
        }
        Ok(())
    }
}

/// Runs MH steps until convergence or `cfg.iter_max`, appending to `trace`.
/// Returns `(steps, converged)`.
pub fn run_chain<R: Rng + ?Sized>(
    chain: &mut Chain<'_>,
    cfg: &SamplerConfig,
    rng: &mut R,
    trace: &mut ChainTrace,
) -> (usize, bool) {
    let offset = trace.records.len();
    let mut history = Vec::with_capacity(cfg.iter_max.min(1 << 16));
    for i in 0..cfg.iter_max {
        let (kind, out) = chain.step(cfg, rng);
        trace.records.push(StepRecord {
            step: offset + i,
            kind,
            delta_e: out.delta_e,
            accepted: out.accepted,
            energy: chain.energy(),
        });
        history.push(chain.energy());
        if cfg!(debug_assertions) && (i + 1) % DEBUG_CHECK_EVERY == 0 {
            let full = chain.recompute();
            debug_assert!(
                (full - chain.energy()).abs() <= 1e-9 * full.abs().max(1.0),
                "cached energy {} drifted from {full}",
                chain.energy()
            );
        }
        if has_converged(&history, &cfg.convergence) {
            return (i + 1, true);
        }
    }
    (cfg.iter_max, false)
}

/// Derives structure and sizes, then draws a random initial layout.
pub fn initial_scene<R: Rng + ?Sized>(grammar: &Saog, rng: &mut R) -> Result<ParseGraph> {
    let pg = derive_parse_tree(grammar, rng, DEFAULT_MAX_OBJECTS)?;
    Ok(init_layout(pg, grammar, rng))
}

/// One unstaged chain from a fresh derivation.
pub fn sample_scene<R: Rng + ?Sized>(
    grammar: &Saog,
    cfg: &SamplerConfig,
    rng: &mut R,
) -> Result<(ParseGraph, ChainTrace)> {
    cfg.validate()?;
    let pg = initial_scene(grammar, rng)?;
    let mut chain = Chain::new(grammar, pg);
    let mut trace = ChainTrace::default();
    let (steps, converged) = run_chain(&mut chain, cfg, rng, &mut trace);
    trace.converged = converged;
    trace.stage_steps = vec![steps];
    Ok((chain.into_parse_graph(), trace))
}

/// Runs the MH loop once per stage tag 1..=5, each time moving only the
/// objects of that stage. Empty stages are skipped (0 steps).
pub fn staged_from<R: Rng + ?Sized>(
    grammar: &Saog,
    pg: ParseGraph,
    cfg: &SamplerConfig,
    rng: &mut R,
) -> (ParseGraph, ChainTrace) {
    let mut chain = Chain::new(grammar, pg);
    let mut trace = ChainTrace {
        converged: true,
        ..Default::default()
    };
    for stage in 1..=5u8 {
        if !chain.parse_graph().objects.iter().any(|o| o.stage == stage) {
            trace.stage_steps.push(0);
            continue;
        }
        chain.set_stage(Some(stage));
        let (steps, converged) = run_chain(&mut chain, cfg, rng, &mut trace);
        trace.stage_steps.push(steps);
        trace.converged &= converged;
    }
    chain.set_stage(None);
    (chain.into_parse_graph(), trace)
}

pub fn staged_sample<R: Rng + ?Sized>(
    grammar: &Saog,
    cfg: &SamplerConfig,
    rng: &mut R,
) -> Result<(ParseGraph, ChainTrace)> {
    cfg.validate()?;
    let pg = initial_scene(grammar, rng)?;
    Ok(staged_from(grammar, pg, cfg, rng))
}

/// Staged or unstaged sampling according to `cfg.staged`.
pub fn sample<R: Rng + ?Sized>(grammar: &Saog, cfg: &SamplerConfig, rng: &mut R) -> Result<(ParseGraph, ChainTrace)> {
    if cfg.staged {
        staged_sample(grammar, cfg, rng)
    } else {
        sample_scene(grammar, cfg, rng)
    }
}
