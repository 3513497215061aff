//! A single Metropolis-Hastings chain over the external attributes of a
//! fixed parse graph.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::energy::{local_energy, total_energy};
use crate::geometry::{to_world, wrap_angle, Vec2};
use crate::grammar::{ObjectInstance, ParseGraph, Saog, SupportClique, SurfacePose, NIL};

use super::SamplerConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MoveKind {
    Translate,
    Rotate,
    Swap,
    Support,
}

impl MoveKind {
    pub const ALL: [MoveKind; 4] = [MoveKind::Translate, MoveKind::Rotate, MoveKind::Swap, MoveKind::Support];
}

/// Where a supported object goes under a support move.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Placement {
    Surface { parent: u32, pose: SurfacePose },
    Floor { position: Vec2, yaw: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Proposal {
    Identity,
    Translate { id: u32, delta: Vec2 },
    Rotate { id: u32, delta: f64 },
    Swap { a: u32, b: u32 },
    Support { id: u32, placement: Placement },
    /// Sets a furniture pose outright (used by custom move sets).
    SetPose { id: u32, position: Vec2, yaw: f64 },
}

impl Proposal {
    /// Objects whose attributes the move writes directly.
    fn primary_ids(&self) -> Vec<u32> {
        match self {
            Proposal::Identity => vec![],
            Proposal::Translate { id, .. }
            | Proposal::Rotate { id, .. }
            | Proposal::Support { id, .. }
            | Proposal::SetPose { id, .. } => vec![*id],
            Proposal::Swap { a, b } => vec![*a, *b],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub kind: MoveKind,
    pub delta_e: f64,
    pub accepted: bool,
    pub energy: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ChainTrace {
    pub records: Vec<StepRecord>,
    pub converged: bool,
    /// MH steps run per stage, in stage order (one entry when unstaged).
    pub stage_steps: Vec<usize>,
}

impl ChainTrace {
    pub fn steps(&self) -> usize {
        self.records.len()
    }

    pub fn energies(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.energy).collect()
    }

    /// JSON-lines rendering of the per-step records.
    pub fn to_json_lines(&self) -> crate::Result<String> {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r)?);
            out.push('\n');
        }
        Ok(out)
    }
}

/// Outcome of one MH step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub delta_e: f64,
    pub accepted: bool,
}

/// A chain owns its parse graph and keeps the total energy up to date
/// incrementally.
#[derive(Debug, Clone)]
pub struct Chain<'g> {
    grammar: &'g Saog,
    pg: ParseGraph,
    energy: f64,
    /// When set, only objects of this stage are proposed for moves.
    stage: Option<u8>,
}

impl<'g> Chain<'g> {
    pub fn new(grammar: &'g Saog, mut pg: ParseGraph) -> Self {
        pg.refresh_cliques(grammar);
        let energy = total_energy(&pg, grammar).total;
        pg.energy_cache = Some(energy);
        Chain {
            grammar,
            pg,
            energy,
            stage: None,
        }
    }

    pub fn grammar(&self) -> &'g Saog {
        self.grammar
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn parse_graph(&self) -> &ParseGraph {
        &self.pg
    }

    pub fn into_parse_graph(mut self) -> ParseGraph {
        self.pg.energy_cache = Some(self.energy);
        self.pg
    }

    pub fn set_stage(&mut self, stage: Option<u8>) {
        self.stage = stage;
    }

    /// Full recomputation of the total energy (does not touch the cache).
    pub fn recompute(&self) -> f64 {
        total_energy(&self.pg, self.grammar).total
    }

    fn movable(&self, o: &ObjectInstance) -> bool {
        self.stage.is_none_or(|s| o.stage == s)
    }

    fn movable_furniture(&self) -> Vec<u32> {
        self.pg
            .objects
            .iter()
            .filter(|o| o.is_furniture() && self.movable(o))
            .map(|o| o.id)
            .collect()
    }

    fn movable_supported(&self) -> Vec<u32> {
        self.pg
            .objects
            .iter()
            .filter(|o| !o.is_furniture() && self.movable(o))
            .map(|o| o.id)
            .collect()
    }

    /// q1: a furniture object moves by `N(0, σ_pos² I)`.
    pub fn propose_translate<R: Rng + ?Sized>(&self, cfg: &SamplerConfig, rng: &mut R) -> Proposal {
        let ids = self.movable_furniture();
        if ids.is_empty() {
            return Proposal::Identity;
        }
        let id = ids[rng.random_range(0..ids.len())];
        let delta = [gaussian(rng, cfg.sigma_pos), gaussian(rng, cfg.sigma_pos)];
        Proposal::Translate { id, delta }
    }

    /// q2: an object turns by `N(0, σ_θ²)`. Supported objects turn on their
    /// parent's surface.
    pub fn propose_rotate<R: Rng + ?Sized>(&self, cfg: &SamplerConfig, rng: &mut R) -> Proposal {
        let ids: Vec<u32> = self
            .pg
            .objects
            .iter()
            .filter(|o| self.movable(o))
            .map(|o| o.id)
            .collect();
        if ids.is_empty() {
            return Proposal::Identity;
        }
        let id = ids[rng.random_range(0..ids.len())];
        Proposal::Rotate {
            id,
            delta: gaussian(rng, cfg.sigma_theta),
        }
    }

    /// q3: two distinct furniture objects exchange position and yaw. Falls
    /// back to q1 with fewer than two candidates.
    pub fn propose_swap<R: Rng + ?Sized>(&self, cfg: &SamplerConfig, rng: &mut R) -> Proposal {
        let ids = self.movable_furniture();
        if ids.len() < 2 {
            return self.propose_translate(cfg, rng);
        }
        let i = rng.random_range(0..ids.len());
        let mut j = rng.random_range(0..ids.len() - 1);
        if j >= i {
            j += 1;
        }
        Proposal::Swap { a: ids[i], b: ids[j] }
    }

    /// q4: a supported object picks a new target from its prior restricted
    /// to present categories plus nil, then a uniform spot on it. Falls back
    /// to q1 when there is no supported object.
    pub fn propose_support<R: Rng + ?Sized>(&self, cfg: &SamplerConfig, rng: &mut R) -> Proposal {
        let ids = self.movable_supported();
        if ids.is_empty() {
            return self.propose_translate(cfg, rng);
        }
        let id = ids[rng.random_range(0..ids.len())];
        let o = self.pg.object(id);
        let slot = o.slot.as_deref().expect("supported object has a slot");
        let relative_yaw = o.surface.map_or(0.0, |s| s.yaw);
        let target = sample_target(&self.pg, &self.grammar.address_priors[slot], rng);
        let placement = place_on(&self.pg, target, relative_yaw, o.yaw, rng);
        Proposal::Support { id, placement }
    }

    pub fn propose<R: Rng + ?Sized>(&self, kind: MoveKind, cfg: &SamplerConfig, rng: &mut R) -> Proposal {
        match kind {
            MoveKind::Translate => self.propose_translate(cfg, rng),
            MoveKind::Rotate => self.propose_rotate(cfg, rng),
            MoveKind::Swap => self.propose_swap(cfg, rng),
            MoveKind::Support => self.propose_support(cfg, rng),
        }
    }

    /// Moved objects plus everything riding on them.
    fn touched(&self, p: &Proposal) -> Vec<u32> {
        let mut ids = p.primary_ids();
        let riders: Vec<u32> = ids
            .iter()
            .flat_map(|id| self.pg.children_of(*id).map(|c| c.id))
            .collect();
        for r in riders {
            if !ids.contains(&r) {
                ids.push(r);
            }
        }
        ids
    }

    /// A proposal is infeasible when it puts a furniture centre outside the room.
    fn feasible(&self, p: &Proposal) -> bool {
        let room = &self.pg.room;
        match p {
            Proposal::Translate { id, delta } => {
                let c = self.pg.object(*id).center();
                room.contains([c[0] + delta[0], c[1] + delta[1]])
            }
            Proposal::SetPose { position, .. } => room.contains(*position),
            Proposal::Support {
                placement: Placement::Floor { position, .. },
                ..
            } => room.contains(*position),
            _ => true,
        }
    }

    fn apply(&mut self, p: &Proposal) {
        let pg = &mut self.pg;
        match *p {
            Proposal::Identity => {}
            Proposal::Translate { id, delta } => {
                let o = pg.object_mut(id);
                o.position[0] += delta[0];
                o.position[1] += delta[1];
                pg.seat_children(id);
            }
            Proposal::Rotate { id, delta } => {
                let o = pg.object_mut(id);
                match o.surface.as_mut() {
                    Some(s) if o.address.is_some() => {
                        s.yaw = wrap_angle(s.yaw + delta);
                        pg.seat(id);
                    }
                    _ => {
                        o.yaw = wrap_angle(o.yaw + delta);
                        pg.seat_children(id);
                    }
                }
            }
            Proposal::Swap { a, b } => {
                let (pa, ya) = (pg.object(a).position, pg.object(a).yaw);
                let (pb, yb) = (pg.object(b).position, pg.object(b).yaw);
                let oa = pg.object_mut(a);
                oa.position = [pb[0], pb[1], oa.position[2]];
                oa.yaw = yb;
                let ob = pg.object_mut(b);
                ob.position = [pa[0], pa[1], ob.position[2]];
                ob.yaw = ya;
                pg.seat_children(a);
                pg.seat_children(b);
            }
            Proposal::SetPose { id, position, yaw } => {
                let o = pg.object_mut(id);
                o.position = [position[0], position[1], o.position[2]];
                o.yaw = yaw;
                pg.seat_children(id);
            }
            Proposal::Support { id, placement } => {
                let o = pg.object_mut(id);
                match placement {
                    Placement::Surface { parent, pose } => {
                        o.address = Some(parent);
                        o.surface = Some(pose);
                        pg.seat(id);
                    }
                    Placement::Floor { position, yaw } => {
                        o.address = None;
                        o.surface = None;
                        o.position = [position[0], position[1], 0.0];
                        o.yaw = yaw;
                    }
                }
                let address = pg.object(id).address;
                if let Some(c) = pg.cliques.support.iter_mut().find(|c| c.object == id) {
                    c.furniture = address;
                }
            }
        }
    }

    /// Proposes `p` and accepts it iff `u < min(1, exp(−β ΔE))`. Infeasible
    /// proposals are rejected with `ΔE = +∞`.
    pub fn try_move(&mut self, p: &Proposal, beta: f64, u: f64) -> StepOutcome {
        if !self.feasible(p) {
            return StepOutcome {
                delta_e: f64::INFINITY,
                accepted: false,
            };
        }
        let ids = self.touched(p);
        let backup: Vec<ObjectInstance> = ids.iter().map(|id| self.pg.object(*id).clone()).collect();
        let clique_backup: Option<SupportClique> = match p {
            Proposal::Support { id, .. } => self.pg.cliques.support.iter().find(|c| c.object == *id).cloned(),
            _ => None,
        };
        let before = local_energy(&self.pg, self.grammar, &ids);
        self.apply(p);
        let after = local_energy(&self.pg, self.grammar, &ids);
        let delta_e = after - before;
        let accepted = accept(delta_e, beta, u);
        if accepted {
            self.energy += delta_e;
        } else {
            for o in backup {
                let id = o.id;
                *self.pg.object_mut(id) = o;
            }
            if let Some(c) = clique_backup {
                if let Some(slot) = self.pg.cliques.support.iter_mut().find(|x| x.object == c.object) {
                    *slot = c;
                }
            }
        }
        StepOutcome { delta_e, accepted }
    }

    /// One MH step with the configured move mixture.
    pub fn step<R: Rng + ?Sized>(&mut self, cfg: &SamplerConfig, rng: &mut R) -> (MoveKind, StepOutcome) {
        let kind = pick_move(&cfg.move_probs, rng.random());
        let p = self.propose(kind, cfg, rng);
        let u: f64 = rng.random();
        (kind, self.try_move(&p, cfg.beta, u))
    }
}

/// The MH test `u < min(1, exp(−β ΔE))`.
pub fn accept(delta_e: f64, beta: f64, u: f64) -> bool {
    if delta_e.is_nan() || delta_e == f64::INFINITY {
        return false;
    }
    u < (-beta * delta_e).exp().min(1.0)
}

fn pick_move(probs: &[f64; 4], u: f64) -> MoveKind {
    MoveKind::ALL[crate::grammar::inverse_cdf(probs, u)]
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R, sigma: f64) -> f64 {
    if sigma == 0.0 {
        return 0.0;
    }
    Normal::new(0.0, sigma).expect("sigma validated").sample(rng)
}

/// Draws an address target: a category from the prior restricted to
/// categories present in `pg` (nil always present), then a uniform
/// instance of it. `None` is the floor.
pub(crate) fn sample_target<R: Rng + ?Sized>(
    pg: &ParseGraph,
    prior: &crate::grammar::AddressPrior,
    rng: &mut R,
) -> Option<u32> {
    let options: Vec<(&str, f64)> = prior
        .iter()
        .filter(|(k, p)| **p > 0.0 && (k.as_str() == NIL || pg.furniture().any(|f| &f.category == *k)))
        .map(|(k, p)| (k.as_str(), *p))
        .collect();
    if options.is_empty() {
        return None;
    }
    let total: f64 = options.iter().map(|o| o.1).sum();
    let probs: Vec<f64> = options.iter().map(|o| o.1 / total).collect();
    let cat = options[crate::grammar::inverse_cdf(&probs, rng.random())].0;
    if cat == NIL {
        return None;
    }
    let candidates: Vec<u32> = pg.furniture().filter(|f| f.category == cat).map(|f| f.id).collect();
    Some(candidates[rng.random_range(0..candidates.len())])
}

/// Uniform spot on `parent`'s top at surface coordinates `(u_x, u_y)`, or a
/// uniform floor position.
pub(crate) fn place_on<R: Rng + ?Sized>(
    pg: &ParseGraph,
    parent: Option<u32>,
    relative_yaw: f64,
    floor_yaw: f64,
    rng: &mut R,
) -> Placement {
    match parent {
        Some(p) => {
            let f = pg.object(p);
            let ux: f64 = rng.random();
            let uy: f64 = rng.random();
            Placement::Surface {
                parent: p,
                pose: surface_pose(ux, uy, f.size, relative_yaw),
            }
        }
        None => Placement::Floor {
            position: [
                rng.random::<f64>() * pg.room.width,
                rng.random::<f64>() * pg.room.depth,
            ],
            yaw: floor_yaw,
        },
    }
}

/// Surface coordinates `(u_x, u_y) ∈ [0,1]²` to an offset in the parent's
/// footprint frame; `(0.5, 0.5)` is the centre.
pub fn surface_pose(ux: f64, uy: f64, parent_size: [f64; 3], yaw: f64) -> SurfacePose {
    SurfacePose {
        u: (ux - 0.5) * parent_size[0],
        v: (uy - 0.5) * parent_size[1],
        yaw,
    }
}

/// Random initial layout: address slots drawn from their priors (a target
/// absent from the scene is redrawn up to 10 times, then nil), furniture
/// uniform in the room with uniform yaw, supported objects uniform on their
/// parent's top or on the floor.
pub fn init_layout<R: Rng + ?Sized>(mut pg: ParseGraph, grammar: &Saog, rng: &mut R) -> ParseGraph {
    let (w, d) = (pg.room.width, pg.room.depth);
    for o in pg.objects.iter_mut().filter(|o| o.is_furniture()) {
        o.position = [rng.random::<f64>() * w, rng.random::<f64>() * d, 0.0];
        o.yaw = uniform_angle(rng);
        o.address = None;
        o.surface = None;
    }
    let supported: Vec<u32> = pg.objects.iter().filter(|o| !o.is_furniture()).map(|o| o.id).collect();
    for id in supported {
        let slot = pg.object(id).slot.clone().expect("supported");
        let prior = &grammar.address_priors[&slot];
        let mut target = None;
        for _ in 0..10 {
            let cat = {
                let keys: Vec<&String> = prior.keys().collect();
                let probs: Vec<f64> = prior.values().copied().collect();
                keys[crate::grammar::inverse_cdf(&probs, rng.random())].clone()
            };
            if cat == NIL {
                break;
            }
            let present: Vec<u32> = pg.furniture().filter(|f| f.category == cat).map(|f| f.id).collect();
            if !present.is_empty() {
                target = Some(present[rng.random_range(0..present.len())]);
                break;
            }
        }
        let relative_yaw = uniform_angle(rng);
        let floor_yaw = relative_yaw;
        let placement = place_on(&pg, target, relative_yaw, floor_yaw, rng);
        let o = pg.object_mut(id);
        match placement {
            Placement::Surface { parent, pose } => {
                o.address = Some(parent);
                o.surface = Some(pose);
                pg.seat(id);
            }
            Placement::Floor { position, yaw } => {
                o.address = None;
                o.surface = None;
                o.position = [position[0], position[1], 0.0];
                o.yaw = yaw;
            }
        }
    }
    pg.refresh_cliques(grammar);
    pg
}

fn uniform_angle<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    wrap_angle(rng.random::<f64>() * 2.0 * PI - PI)
}

/// World position of surface coordinates on a parent, for tests and tools.
pub fn surface_point(parent: &ObjectInstance, pose: &SurfacePose) -> Vec2 {
    to_world([pose.u, pose.v], parent.center(), parent.yaw)
}
