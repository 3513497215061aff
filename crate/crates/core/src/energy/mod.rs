//! Gibbs energy of a parse graph: the parse-tree term plus the four families
//! of clique potentials (walls, furniture pairs, support, functional groups).
//!
//! The partition function never appears; every consumer works with energy
//! differences or expectations.

pub mod cost;
mod stats;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{dist2, footprint_gap, wrap_angle, Wall};
use crate::grammar::{
    GroupClique, ObjectInstance, ParseGraph, Saog, SupportClique, TreeChoice, WallClique, NIL,
};

pub use cost::{cost_add, cost_dis, cost_occ, cost_ori, cost_pos, face_distances};
pub use stats::{pair_key, PairStat, RelationStats, SupportStat, WallStat, DEFAULT_D_ACC};

/// Floor on KDE densities inside the tree energy.
pub const DENSITY_FLOOR: f64 = 1e-12;

/// Number of relational loss components (and weights).
pub const LOSS_DIM: usize = 8;

/// Loss vector layout shared by [`PotentialWeights::to_array`]:
/// wall consistency, wall distance+orientation, occlusion, support position,
/// support orientation, address, group distance, group orientation.
pub type LossVector = [f64; LOSS_DIM];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialWeights {
    pub lambda_w: [f64; 2],
    pub lambda_c: f64,
    pub lambda_o: [f64; 3],
    pub lambda_g: [f64; 2],
}

impl Default for PotentialWeights {
    fn default() -> Self {
        Self::from_array([1.0; LOSS_DIM])
    }
}

impl PotentialWeights {
    pub fn to_array(&self) -> LossVector {
        [
            self.lambda_w[0],
            self.lambda_w[1],
            self.lambda_c,
            self.lambda_o[0],
            self.lambda_o[1],
            self.lambda_o[2],
            self.lambda_g[0],
            self.lambda_g[1],
        ]
    }

    pub fn from_array(a: LossVector) -> Self {
        PotentialWeights {
            lambda_w: [a[0], a[1]],
            lambda_c: a[2],
            lambda_o: [a[3], a[4], a[5]],
            lambda_g: [a[6], a[7]],
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self::from_array(self.to_array().map(|v| v * c))
    }

    pub fn validate(&self) -> Result<()> {
        if self.to_array().iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Invalid("potential weights must be finite and >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub tree_energy: f64,
    pub wall_energy: f64,
    pub furniture_energy: f64,
    pub support_energy: f64,
    pub group_energy: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    pub fn relational(&self) -> f64 {
        self.wall_energy + self.furniture_energy + self.support_energy + self.group_energy
    }
}

/// Wall-consistency cost of a room: gaps between consecutive walls plus
/// length mismatch of opposite walls. Zero for any rectangle.
pub fn wall_consistency(walls: &[Wall; 4]) -> f64 {
    let gaps: f64 = (0..4)
        .map(|i| dist2(walls[i].end, walls[(i + 1) % 4].start))
        .sum();
    let opposite: f64 = (0..2)
        .map(|i| (walls[i].length() - walls[i + 2].length()).abs())
        .sum();
    gaps + opposite
}

/// Distances and relative orientations `wrap(yaw − heading)` of furniture
/// `f` to the room walls, ranked by distance (ties by wall index).
pub fn wall_features(f: &ObjectInstance, walls: &[Wall; 4]) -> WallStat {
    let c = f.center();
    let mut ranked: [(f64, usize); 4] = [0, 1, 2, 3].map(|i| (walls[i].distance_to_line(c), i));
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    WallStat {
        dist: ranked.map(|r| r.0),
        ori: ranked.map(|r| wrap_angle(f.yaw - walls[r.1].heading())),
    }
}

/// Distance and orientation losses of furniture `f` against the ranked
/// wall means.
pub fn wall_losses(f: &ObjectInstance, walls: &[Wall; 4], stat: &WallStat) -> (f64, f64) {
    let x = wall_features(f, walls);
    let mut dis = 0.0;
    let mut ori = 0.0;
    for k in 0..4 {
        dis += cost_dis(x.dist[k], stat.dist[k]);
        ori += cost_ori(x.ori[k], stat.ori[k]);
    }
    (dis, ori)
}

/// Occlusion loss of two furniture footprints.
pub fn occlusion_loss(a: &ObjectInstance, b: &ObjectInstance, d_acc: f64) -> f64 {
    cost_occ(footprint_gap(&a.footprint(), &b.footprint()), d_acc)
}

/// `(l_dis, l_ori)` of a group pair, `a` being the earlier member category.
pub fn group_pair_losses(a: &ObjectInstance, b: &ObjectInstance, stats: &RelationStats) -> (f64, f64) {
    let s = stats.pair_stat(&a.category, &b.category);
    (
        cost_dis(dist2(a.center(), b.center()), s.dist),
        cost_ori(wrap_angle(a.yaw - b.yaw), s.ori),
    )
}

/// `(l_pos, l_ori, l_add)` of a supported object. With no supporting
/// furniture only the address term is charged. An address outside the
/// slot's prior yields an infinite address loss.
pub fn support_losses(pg: &ParseGraph, clique: &SupportClique, grammar: &Saog) -> (f64, f64, f64) {
    let o = pg.object(clique.object);
    let prior = &grammar.address_priors[&clique.slot];
    let target = clique.furniture.map(|f| pg.object(f));
    let value = target.map_or(NIL, |f| f.category.as_str());
    let add = cost_add(&clique.slot, value, prior).unwrap_or(f64::INFINITY);
    let Some(f) = target else {
        return (0.0, 0.0, add);
    };
    let s = o.surface.expect("supported object has a surface pose");
    let stat = grammar
        .relation_stats
        .support_stat(&f.category, &o.category)
        .unwrap_or(SupportStat {
            faces: face_distances([0.0, 0.0], f.size[0], f.size[1]),
            ori: 0.0,
        });
    let pos = cost_pos([s.u, s.v], f.size[0], f.size[1], &stat.faces);
    (pos, cost_ori(s.yaw, stat.ori), add)
}

pub fn clique_energy_wall(pg: &ParseGraph, c: &WallClique, grammar: &Saog) -> f64 {
    let lw = grammar.weights.lambda_w;
    let f = pg.object(c.furniture);
    let (dis, ori) = wall_losses(f, &pg.walls, &grammar.relation_stats.wall_stat(&f.category));
    lw[0] * wall_consistency(&pg.walls) + lw[1] * (dis + ori)
}

pub fn clique_energy_furniture(pg: &ParseGraph, pair: (u32, u32), grammar: &Saog) -> f64 {
    grammar.weights.lambda_c
        * occlusion_loss(pg.object(pair.0), pg.object(pair.1), grammar.relation_stats.d_acc)
}

pub fn clique_energy_support(pg: &ParseGraph, c: &SupportClique, grammar: &Saog) -> f64 {
    let (pos, ori, add) = support_losses(pg, c, grammar);
    let lo = grammar.weights.lambda_o;
    lo[0] * pos + lo[1] * ori + lo[2] * add
}

pub fn group_pair_energy(pg: &ParseGraph, pair: (u32, u32), grammar: &Saog) -> f64 {
    let (dis, ori) = group_pair_losses(pg.object(pair.0), pg.object(pair.1), &grammar.relation_stats);
    let lg = grammar.weights.lambda_g;
    lg[0] * dis + lg[1] * ori
}

pub fn clique_energy_group(pg: &ParseGraph, c: &GroupClique, grammar: &Saog) -> f64 {
    c.pairs.iter().map(|p| group_pair_energy(pg, *p, grammar)).sum()
}

/// Energy of the parse tree: `−ln ρ` per Or choice, `−ln p(count)` per Set
/// child and `−ln max(density(size), 1e-12)` per terminal. And-nodes add 0.
pub fn energy_parse_tree(pg: &ParseGraph, grammar: &Saog) -> f64 {
    let mut e = 0.0;
    for choice in &pg.tree.choices {
        let p = match choice {
            TreeChoice::Or { node, branch } => grammar
                .nodes
                .get(node)
                .and_then(|n| n.probs.get(*branch).copied())
                .unwrap_or(0.0),
            TreeChoice::Set { node, child, count } => grammar
                .nodes
                .get(node)
                .and_then(|n| {
                    let i = n.children.iter().position(|c| c == child)?;
                    n.counts[i].prob_of(*count)
                })
                .unwrap_or(0.0),
        };
        e += -p.max(DENSITY_FLOOR).ln();
    }
    for o in &pg.objects {
        let density = grammar
            .size_models
            .get(&o.category)
            .map_or(0.0, |k| k.density(o.size));
        e += -density.max(DENSITY_FLOOR).ln();
    }
    e
}

/// Full energy decomposition. The tidiness exponent β is applied by the
/// sampler, not here.
pub fn total_energy(pg: &ParseGraph, grammar: &Saog) -> EnergyBreakdown {
    let tree_energy = energy_parse_tree(pg, grammar);
    let c = &pg.cliques;
    let wall_energy: f64 = c.wall.iter().map(|w| clique_energy_wall(pg, w, grammar)).sum();
    let furniture_energy: f64 = c
        .furniture
        .iter()
        .map(|p| clique_energy_furniture(pg, *p, grammar))
        .sum();
    let support_energy: f64 = c
        .support
        .iter()
        .map(|s| clique_energy_support(pg, s, grammar))
        .sum();
    let group_energy: f64 = c.group.iter().map(|g| clique_energy_group(pg, g, grammar)).sum();
    EnergyBreakdown {
        tree_energy,
        wall_energy,
        furniture_energy,
        support_energy,
        group_energy,
        total: tree_energy + wall_energy + furniture_energy + support_energy + group_energy,
    }
}

/// Relational energy of the cliques that involve any of `ids`.
///
/// The difference of this quantity before and after a move that only touches
/// `ids` equals the difference in total energy.
pub fn local_energy(pg: &ParseGraph, grammar: &Saog, ids: &[u32]) -> f64 {
    let hit = |id: u32| ids.contains(&id);
    let c = &pg.cliques;
    let mut e = 0.0;
    for w in c.wall.iter().filter(|w| hit(w.furniture)) {
        e += clique_energy_wall(pg, w, grammar);
    }
    for p in c.furniture.iter().filter(|p| hit(p.0) || hit(p.1)) {
        e += clique_energy_furniture(pg, *p, grammar);
    }
    for s in c
        .support
        .iter()
        .filter(|s| hit(s.object) || s.furniture.is_some_and(hit))
    {
        e += clique_energy_support(pg, s, grammar);
    }
    for g in &c.group {
        for p in g.pairs.iter().filter(|p| hit(p.0) || hit(p.1)) {
            e += group_pair_energy(pg, *p, grammar);
        }
    }
    e
}

/// The relational loss vector `l(E_pt)`; relational energy is `λ · l`.
pub fn loss_vector(pg: &ParseGraph, grammar: &Saog) -> LossVector {
    let stats = &grammar.relation_stats;
    let c = &pg.cliques;
    let mut l = [0.0; LOSS_DIM];
    let con = wall_consistency(&pg.walls);
    for w in &c.wall {
        let f = pg.object(w.furniture);
        let (dis, ori) = wall_losses(f, &pg.walls, &stats.wall_stat(&f.category));
        l[0] += con;
        l[1] += dis + ori;
    }
    for p in &c.furniture {
        l[2] += occlusion_loss(pg.object(p.0), pg.object(p.1), stats.d_acc);
    }
    for s in &c.support {
        let (pos, ori, add) = support_losses(pg, s, grammar);
        l[3] += pos;
        l[4] += ori;
        l[5] += add;
    }
    for g in &c.group {
        for p in &g.pairs {
            let (dis, ori) = group_pair_losses(pg.object(p.0), pg.object(p.1), stats);
            l[6] += dis;
            l[7] += ori;
        }
    }
    l
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_PI_2, LN_2, PI};

    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::geometry::{rotate2, rectangle_walls};
    use crate::grammar::fixtures::OFFICE;
    use crate::grammar::{ParseTree, RoomDims, SurfacePose};

    fn office() -> Saog {
        let mut g = Saog::from_json(OFFICE).unwrap();
        let s = &mut g.relation_stats;
        s.wall.insert(
            "desk".into(),
            WallStat {
                dist: [0.4, 1.2, 2.5, 3.3],
                ori: [FRAC_PI_2, 0.0, PI - 0.2, -FRAC_PI_2],
            },
        );
        s.wall_global = Some(WallStat {
            dist: [0.3, 1.0, 2.0, 3.0],
            ori: [0.0; 4],
        });
        s.pair.insert(pair_key("desk", "chair"), PairStat { dist: 0.6, ori: PI - 0.1 });
        s.support.insert(
            pair_key("desk", "monitor"),
            SupportStat {
                faces: [0.8, 0.6, 0.5, 0.2],
                ori: 0.1,
            },
        );
        g
    }

    fn obj(id: u32, cat: &str, size: [f64; 3], pos: [f64; 2], yaw: f64) -> ObjectInstance {
        ObjectInstance {
            id,
            category: cat.into(),
            node: cat.into(),
            size,
            position: [pos[0], pos[1], 0.0],
            yaw,
            slot: None,
            address: None,
            surface: None,
            stage: 2,
        }
    }

    fn office_scene(g: &Saog) -> ParseGraph {
        let mut monitor = obj(3, "monitor", [0.6, 0.2, 0.4], [0.0, 0.0], 0.0);
        monitor.slot = Some("monitor_addr".into());
        monitor.address = Some(1);
        monitor.surface = Some(SurfacePose {
            u: 0.13,
            v: -0.07,
            yaw: 0.3,
        });
        let objects = vec![
            obj(1, "desk", [1.4, 0.7, 0.75], [1.1, 0.7], 0.2),
            obj(2, "chair", [0.5, 0.5, 0.9], [1.3, 1.5], -2.9),
            monitor,
            obj(4, "shelf", [0.8, 0.35, 1.8], [3.25, 2.7], 1.7),
        ];
        let room = RoomDims {
            width: 4.0,
            depth: 3.5,
            height: 2.8,
        };
        let tree = ParseTree {
            choices: vec![
                TreeChoice::Or {
                    node: "scene".into(),
                    branch: 0,
                },
                TreeChoice::Set {
                    node: "extras".into(),
                    child: "shelf".into(),
                    count: 1,
                },
            ],
        };
        let mut pg = ParseGraph::new(tree, room, objects);
        pg.seat(3);
        pg.refresh_cliques(g);
        pg
    }

    fn transform(pg: &mut ParseGraph, theta: f64, shift: [f64; 2], pivot: [f64; 2]) {
        let map = |p: [f64; 2]| {
            let r = rotate2([p[0] - pivot[0], p[1] - pivot[1]], theta);
            [r[0] + pivot[0] + shift[0], r[1] + pivot[1] + shift[1]]
        };
        for w in pg.walls.iter_mut() {
            w.start = map(w.start);
            w.end = map(w.end);
        }
        for o in pg.objects.iter_mut() {
            let c = map(o.center());
            o.position = [c[0], c[1], o.position[2]];
            o.yaw = wrap_angle(o.yaw + theta);
        }
    }

    #[test]
    fn wall_clique_weights() {
        let g = office();
        let pg = office_scene(&g);
        let w = &pg.cliques.wall[0];
        let f = pg.object(w.furniture);
        let (dis, ori) = wall_losses(f, &pg.walls, &g.relation_stats.wall_stat("desk"));
        let mut g2 = g.clone();
        g2.weights.lambda_w = [1.0, 0.0];
        assert_eq!(clique_energy_wall(&pg, w, &g2), 0.0);
        g2.weights.lambda_w = [0.0, 2.0];
        assert!((clique_energy_wall(&pg, w, &g2) - 2.0 * (dis + ori)).abs() < 1e-12);
        assert_eq!(wall_consistency(&rectangle_walls(3.0, 5.0)), 0.0);
    }

    #[test]
    fn wall_losses_vanish_at_the_means() {
        let walls = rectangle_walls(4.0, 3.0);
        let f = obj(1, "bed", [2.0, 1.6, 0.5], [1.0, 0.5], 0.3);
        // distances 0.5 (south), 1.0 (west), 2.5 (north), 3.0 (east)
        let stat = WallStat {
            dist: [0.5, 1.0, 2.5, 3.0],
            ori: [
                wrap_angle(0.3 - walls[0].heading()),
                wrap_angle(0.3 - walls[3].heading()),
                wrap_angle(0.3 - walls[2].heading()),
                wrap_angle(0.3 - walls[1].heading()),
            ],
        };
        let (dis, ori) = wall_losses(&f, &walls, &stat);
        assert!(dis.abs() < 1e-12);
        assert!(ori.abs() < 1e-12);
    }

    #[test]
    fn support_energy_is_a_dot_product() {
        let mut g = office();
        let mut pg = office_scene(&g);
        // place the monitor so l_pos = 0.2 and l_ori = 0.1 against the stats,
        // with an address probability of 1/2
        let desk = pg.object(1).size;
        let mean = face_distances([0.0, 0.0], desk[0], desk[1]);
        g.relation_stats.support.insert(
            pair_key("desk", "monitor"),
            SupportStat { faces: mean, ori: 0.0 },
        );
        pg.object_mut(3).surface = Some(SurfacePose {
            u: 0.1,
            v: 0.0,
            yaw: 0.1,
        });
        g.weights.lambda_o = [1.0, 1.0, 1.0];
        let c = pg.cliques.support[0].clone();
        let (pos, ori, add) = support_losses(&pg, &c, &g);
        assert!((pos - 0.2).abs() < 1e-12);
        assert!((ori - 0.1).abs() < 1e-12);
        assert!((add - LN_2).abs() < 1e-12);
        let e = clique_energy_support(&pg, &c, &g);
        assert!((e - (0.2 + 0.1 + 0.693147)).abs() < 1e-6);
        g.weights.lambda_o = [2.0, 2.0, 2.0];
        assert!((clique_energy_support(&pg, &c, &g) - 2.0 * e).abs() < 1e-12);
    }

    #[test]
    fn nil_address_charges_only_the_prior() {
        let g = office();
        let mut pg = office_scene(&g);
        let m = pg.object_mut(3);
        m.address = None;
        m.surface = None;
        pg.refresh_cliques(&g);
        let c = pg.cliques.support[0].clone();
        assert_eq!(c.furniture, None);
        let (pos, ori, add) = support_losses(&pg, &c, &g);
        assert_eq!((pos, ori), (0.0, 0.0));
        assert!((add - 0.25f64.ln().abs()).abs() < 1e-12);
    }

    #[test]
    fn all_zero_losses_give_zero_energy() {
        let mut g = Saog::from_json(OFFICE).unwrap();
        g.weights = PotentialWeights::from_array([0.0; 8]);
        let pg = office_scene(&g);
        let b = total_energy(&pg, &g);
        assert_eq!(b.relational(), 0.0);
    }

    #[test]
    fn tree_energy_terms() {
        let g = office();
        let pg = office_scene(&g);
        // sizes are point masses at the sampled values
        let e = energy_parse_tree(&pg, &g);
        assert!((e - (-(0.75f64).ln() - (0.5f64).ln())).abs() < 1e-12);

        let mut only_or = pg.clone();
        only_or.tree.choices.truncate(0);
        assert_eq!(energy_parse_tree(&only_or, &g), 0.0);
        only_or.tree.choices.push(TreeChoice::Set {
            node: "extras".into(),
            child: "shelf".into(),
            count: 0,
        });
        assert!((energy_parse_tree(&only_or, &g) - LN_2).abs() < 1e-12);

        let mut off = pg.clone();
        off.tree.choices.clear();
        off.object_mut(4).size = [5.0, 5.0, 5.0];
        assert!((energy_parse_tree(&off, &g) - 27.631021115928547).abs() < 1e-9);
    }

    #[test]
    fn breakdown_sums_in_order() {
        let g = office();
        let pg = office_scene(&g);
        let b = total_energy(&pg, &g);
        let sum = b.tree_energy + b.wall_energy + b.furniture_energy + b.support_energy + b.group_energy;
        assert_eq!(b.total.to_bits(), sum.to_bits());
        let l = loss_vector(&pg, &g);
        let dot: f64 = l.iter().zip(g.weights.to_array()).map(|(a, b)| a * b).sum();
        assert!((dot - b.relational()).abs() < 1e-9);
    }

    #[test]
    fn empty_room_is_tree_only() {
        let g = office();
        let mut pg = ParseGraph::new(
            ParseTree::default(),
            RoomDims {
                width: 3.0,
                depth: 3.0,
                height: 2.5,
            },
            vec![],
        );
        pg.refresh_cliques(&g);
        let b = total_energy(&pg, &g);
        assert_eq!(b.total, b.tree_energy);
    }

    #[test]
    fn relational_energy_is_linear_in_weights() {
        let g = office();
        let pg = office_scene(&g);
        let base = total_energy(&pg, &g);
        for c in [0.5, 2.0, 10.0] {
            let mut gc = g.clone();
            gc.weights = g.weights.scaled(c);
            let e = total_energy(&pg, &gc);
            let rel = e.total - e.tree_energy;
            let want = c * (base.total - base.tree_energy);
            assert!((rel - want).abs() <= 1e-12 * want.abs().max(1.0), "c={c}");
        }
    }

    #[test]
    fn rigid_motions_preserve_energy() {
        let g = office();
        let pg = office_scene(&g);
        let e0 = total_energy(&pg, &g).total;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let mut moved = pg.clone();
            transform(&mut moved, 0.0, [rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)], [0.0, 0.0]);
            assert!((total_energy(&moved, &g).total - e0).abs() < 1e-9);
        }
        let mut rotated = pg.clone();
        transform(&mut rotated, FRAC_PI_2, [0.0, 0.0], [2.0, 1.75]);
        assert!((total_energy(&rotated, &g).total - e0).abs() < 1e-9);
    }

    #[test]
    fn local_energy_matches_total_difference() {
        let g = office();
        let pg = office_scene(&g);
        let mut moved = pg.clone();
        moved.object_mut(1).position[0] += 0.37;
        moved.object_mut(1).yaw = wrap_angle(moved.object(1).yaw + 0.4);
        moved.seat_children(1);
        let ids = [1, 3];
        let d_local = local_energy(&moved, &g, &ids) - local_energy(&pg, &g, &ids);
        let d_total = total_energy(&moved, &g).total - total_energy(&pg, &g).total;
        assert!((d_local - d_total).abs() < 1e-9);
    }

    #[test]
    fn costs_are_nonnegative_and_bounded() {
        let g = office();
        let base = office_scene(&g);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let mut pg = base.clone();
            for id in [1, 2, 4] {
                let o = pg.object_mut(id);
                o.position = [rng.random_range(0.0..4.0), rng.random_range(0.0..3.5), 0.0];
                o.yaw = rng.random_range(-PI..PI);
            }
            pg.seat(3);
            let l = loss_vector(&pg, &g);
            assert!(l.iter().all(|v| *v >= 0.0));
            assert!(l[2] <= pg.cliques.furniture.len() as f64);
            assert!(l[4] <= PI + 1e-12);
        }
    }
}
