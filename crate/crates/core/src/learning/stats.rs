//! Sufficient statistics of a training set and the relation means derived
//! from them.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{face_distances, pair_key, wall_features, PairStat, RelationStats, SupportStat, WallStat};
use crate::geometry::{dist2, wrap_angle, Vec3};
use crate::grammar::{ParseGraph, Saog, TreeChoice, NIL};

use super::training::{discover_groups, scene_to_parse_graph, SupportTolerance, TrainingScene, GROUP_DISTANCE};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SufficientStats {
    pub scenes: usize,
    /// Per Or-node, hits per branch in child order.
    pub or_counts: BTreeMap<String, Vec<u64>>,
    /// Per `"set|child"`, hits per observed count.
    pub set_counts: BTreeMap<String, BTreeMap<u32, u64>>,
    /// Per address slot, hits per target category (or nil).
    pub address_counts: BTreeMap<String, BTreeMap<String, u64>>,
    pub sizes: BTreeMap<String, Vec<Vec3>>,
    pub room_sizes: Vec<Vec3>,
    pub wall_samples: BTreeMap<String, Vec<WallStat>>,
    /// Per `"a|b"` group pair (member order).
    pub pair_samples: BTreeMap<String, Vec<PairStat>>,
    /// Per `"furniture|object"`.
    pub support_samples: BTreeMap<String, Vec<SupportStat>>,
    /// Per group id, number of grouped instance pairs.
    pub group_counts: BTreeMap<String, u64>,
    /// Objects dropped for lack of a terminal, by category.
    pub skipped: BTreeMap<String, u64>,
}

fn merge_map<K: Ord, V>(a: &mut BTreeMap<K, V>, b: BTreeMap<K, V>, f: impl Fn(&mut V, V)) {
    for (k, v) in b {
        match a.get_mut(&k) {
            Some(x) => f(x, v),
            None => {
                a.insert(k, v);
            }
        }
    }
}

impl SufficientStats {
    /// Associative merge; sample lists keep `self` first.
    pub fn merge(mut self, other: SufficientStats) -> SufficientStats {
        self.scenes += other.scenes;
        merge_map(&mut self.or_counts, other.or_counts, |a, b| {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        });
        merge_map(&mut self.set_counts, other.set_counts, |a, b| {
            merge_map(a, b, |x, y| *x += y)
        });
        merge_map(&mut self.address_counts, other.address_counts, |a, b| {
            merge_map(a, b, |x, y| *x += y)
        });
        merge_map(&mut self.sizes, other.sizes, |a, b| a.extend(b));
        self.room_sizes.extend(other.room_sizes);
        merge_map(&mut self.wall_samples, other.wall_samples, |a, b| a.extend(b));
        merge_map(&mut self.pair_samples, other.pair_samples, |a, b| a.extend(b));
        merge_map(&mut self.support_samples, other.support_samples, |a, b| a.extend(b));
        merge_map(&mut self.group_counts, other.group_counts, |a, b| *a += b);
        merge_map(&mut self.skipped, other.skipped, |a, b| *a += b);
        self
    }

    fn empty_for(grammar: &Saog) -> SufficientStats {
        let mut s = SufficientStats::default();
        for (id, n) in &grammar.nodes {
            match n.kind {
                crate::grammar::NodeKind::Or => {
                    s.or_counts.insert(id.clone(), vec![0; n.children.len()]);
                }
                crate::grammar::NodeKind::Set => {
                    for c in &n.children {
                        s.set_counts.insert(pair_key(id, c), BTreeMap::new());
                    }
                }
                _ => {}
            }
        }
        for (slot, prior) in &grammar.address_priors {
            s.address_counts
                .insert(slot.clone(), prior.keys().map(|k| (k.clone(), 0)).collect());
        }
        s
    }
}

/// Adds the relation samples of one parse graph.
fn graph_stats(pg: &ParseGraph, s: &mut SufficientStats) {
    s.room_sizes.push([pg.room.width, pg.room.depth, pg.room.height]);
    for choice in &pg.tree.choices {
        match choice {
            TreeChoice::Or { node, branch } => {
                if let Some(c) = s.or_counts.get_mut(node) {
                    c[*branch] += 1;
                }
            }
            TreeChoice::Set { node, child, count } => {
                *s.set_counts
                    .entry(pair_key(node, child))
                    .or_default()
                    .entry(*count)
                    .or_insert(0) += 1;
            }
        }
    }
    for o in &pg.objects {
        s.sizes.entry(o.category.clone()).or_default().push(o.size);
        if o.is_furniture() {
            s.wall_samples
                .entry(o.category.clone())
                .or_default()
                .push(wall_features(o, &pg.walls));
        }
    }
    for c in &pg.cliques.support {
        let o = pg.object(c.object);
        let target = c.furniture.map(|f| pg.object(f));
        let name = target.map_or(NIL.to_string(), |f| f.category.clone());
        *s.address_counts
            .entry(c.slot.clone())
            .or_default()
            .entry(name)
            .or_insert(0) += 1;
        if let (Some(f), Some(sp)) = (target, o.surface) {
            s.support_samples
                .entry(pair_key(&f.category, &o.category))
                .or_default()
                .push(SupportStat {
                    faces: face_distances([sp.u, sp.v], f.size[0], f.size[1]),
                    ori: sp.yaw,
                });
        }
    }
}

/// Statistics of one training scene.
pub fn scene_statistics(scene: &TrainingScene, grammar: &Saog, tol: SupportTolerance) -> SufficientStats {
    let conv = scene_to_parse_graph(scene, grammar, tol);
    let mut s = SufficientStats::empty_for(grammar);
    s.scenes = 1;
    for (k, v) in conv.skipped {
        s.skipped.insert(k, v as u64);
    }
    graph_stats(&conv.pg, &mut s);
    // group pairs are discovered on the raw scene, then mapped onto the
    // converted objects (same relative order)
    for gp in discover_groups(scene, &grammar.groups, GROUP_DISTANCE) {
        let a = scene.objects.iter().find(|o| o.id == gp.a).expect("pair ids exist");
        let b = scene.objects.iter().find(|o| o.id == gp.b).expect("pair ids exist");
        *s.group_counts.entry(gp.group).or_insert(0) += 1;
        s.pair_samples
            .entry(pair_key(&a.category, &b.category))
            .or_default()
            .push(PairStat {
                dist: dist2([a.position[0], a.position[1]], [b.position[0], b.position[1]]),
                ori: wrap_angle(a.yaw - b.yaw),
            });
    }
    s
}

/// Parallel map-reduce of [`scene_statistics`]. Count tables carry an entry
/// for every Or-node, Set child and address target of `grammar`, even when
/// unobserved. Sample lists follow input order.
pub fn collect_statistics(scenes: &[TrainingScene], grammar: &Saog) -> SufficientStats {
    let tol = SupportTolerance::default();
    let per_scene: Vec<SufficientStats> = scenes
        .par_iter()
        .map(|sc| scene_statistics(sc, grammar, tol))
        .collect();
    per_scene
        .into_iter()
        .fold(SufficientStats::empty_for(grammar), SufficientStats::merge)
}

/// Statistics of parse graphs that already carry cliques (e.g. sampled scenes).
pub fn graph_statistics(graphs: &[ParseGraph], grammar: &Saog) -> SufficientStats {
    let mut s = SufficientStats::empty_for(grammar);
    for pg in graphs {
        s.scenes += 1;
        graph_stats(pg, &mut s);
        for g in &pg.cliques.group {
            for (a, b) in &g.pairs {
                let (a, b) = (pg.object(*a), pg.object(*b));
                if crate::geometry::footprint_gap(&a.footprint(), &b.footprint()) >= GROUP_DISTANCE {
                    continue;
                }
                *s.group_counts.entry(g.group.clone()).or_insert(0) += 1;
                s.pair_samples
                    .entry(pair_key(&a.category, &b.category))
                    .or_default()
                    .push(PairStat {
                        dist: dist2(a.center(), b.center()),
                        ori: wrap_angle(a.yaw - b.yaw),
                    });
            }
        }
    }
    s
}

/// Mean direction of a set of angles, in `[-π, π)`. Zero when the
/// resultant vanishes.
pub fn circular_mean(angles: impl IntoIterator<Item = f64>) -> f64 {
    let (mut s, mut c) = (0.0, 0.0);
    for a in angles {
        s += a.sin();
        c += a.cos();
    }
    if s.abs() < 1e-12 && c.abs() < 1e-12 {
        return 0.0;
    }
    wrap_angle(s.atan2(c))
}

fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut n) = (0.0, 0usize);
    for v in values {
        sum += v;
        n += 1;
    }
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

fn wall_mean<'a>(xs: impl Iterator<Item = &'a WallStat> + Clone) -> WallStat {
    WallStat {
        dist: [0, 1, 2, 3].map(|k| mean(xs.clone().map(|w| w.dist[k]))),
        ori: [0, 1, 2, 3].map(|k| circular_mean(xs.clone().map(|w| w.ori[k]))),
    }
}

fn pair_mean<'a>(xs: impl Iterator<Item = &'a PairStat> + Clone) -> PairStat {
    PairStat {
        dist: mean(xs.clone().map(|p| p.dist)),
        ori: circular_mean(xs.map(|p| p.ori)),
    }
}

fn support_mean<'a>(xs: impl Iterator<Item = &'a SupportStat> + Clone) -> SupportStat {
    SupportStat {
        faces: [0, 1, 2, 3].map(|k| mean(xs.clone().map(|s| s.faces[k]))),
        ori: circular_mean(xs.map(|s| s.ori)),
    }
}

/// Relation means: arithmetic for distances, circular for orientations,
/// with per-category and global pools. Families without samples have no
/// entries, so lookups fall back.
pub fn relation_stats(s: &SufficientStats, d_acc: f64) -> RelationStats {
    let mut r = RelationStats {
        d_acc,
        ..Default::default()
    };
    for (cat, xs) in s.wall_samples.iter().filter(|(_, v)| !v.is_empty()) {
        r.wall.insert(cat.clone(), wall_mean(xs.iter()));
    }
    if s.wall_samples.values().any(|v| !v.is_empty()) {
        r.wall_global = Some(wall_mean(s.wall_samples.values().flatten()));
    }

    let mut by_first: BTreeMap<&str, Vec<&PairStat>> = BTreeMap::new();
    for (key, xs) in s.pair_samples.iter().filter(|(_, v)| !v.is_empty()) {
        r.pair.insert(key.clone(), pair_mean(xs.iter()));
        let first = key.split('|').next().unwrap_or(key);
        by_first.entry(first).or_default().extend(xs);
    }
    for (cat, xs) in &by_first {
        r.pair_by_category
            .insert(cat.to_string(), pair_mean(xs.iter().copied()));
    }
    if s.pair_samples.values().any(|v| !v.is_empty()) {
        r.pair_global = Some(pair_mean(s.pair_samples.values().flatten()));
    }

    let mut by_object: BTreeMap<&str, Vec<&SupportStat>> = BTreeMap::new();
    for (key, xs) in s.support_samples.iter().filter(|(_, v)| !v.is_empty()) {
        r.support.insert(key.clone(), support_mean(xs.iter()));
        let object = key.split('|').nth(1).unwrap_or(key);
        by_object.entry(object).or_default().extend(xs);
    }
    for (cat, xs) in &by_object {
        r.support_by_object
            .insert(cat.to_string(), support_mean(xs.iter().copied()));
    }
    if s.support_samples.values().any(|v| !v.is_empty()) {
        r.support_global = Some(support_mean(s.support_samples.values().flatten()));
    }
    r
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::grammar::fixtures::OFFICE;
    use crate::learning::training::TrainingObject;

    fn desk_scene(x: f64) -> TrainingScene {
        TrainingScene {
            room_type: None,
            room_dims: [4.0, 4.0, 2.8],
            objects: vec![TrainingObject {
                id: 1,
                category: "desk".into(),
                position: [x, 2.0, 0.0],
                yaw: 0.0,
                size: [0.1, 0.1, 0.75],
                support_parent: None,
            }],
        }
    }

    #[test]
    fn empty_scene_list_has_zero_counts() {
        let g = Saog::from_json(OFFICE).unwrap();
        let s = collect_statistics(&[], &g);
        assert_eq!(s.scenes, 0);
        assert_eq!(s.or_counts["scene"], vec![0, 0]);
        assert!(s.address_counts["monitor_addr"].values().all(|c| *c == 0));
        let r = relation_stats(&s, 0.8);
        assert!(r.wall.is_empty() && r.wall_global.is_none());
    }

    #[test]
    fn nearest_wall_distance_is_averaged() {
        let g = Saog::from_json(OFFICE).unwrap();
        let s = collect_statistics(&[desk_scene(0.1), desk_scene(0.3)], &g);
        let r = relation_stats(&s, 0.8);
        assert!((r.wall["desk"].dist[0] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn circular_mean_wraps() {
        let m = circular_mean([PI - 0.1, -PI + 0.1]);
        assert!((m.abs() - PI).abs() < 1e-12);
        assert!(circular_mean([0.2, 0.4]).abs() - 0.3 < 1e-12);
        assert_eq!(circular_mean([0.0, PI]), wrap_angle(circular_mean([0.0, PI])));
    }

    #[test]
    fn merge_is_associative() {
        let g = Saog::from_json(OFFICE).unwrap();
        let a = scene_statistics(&desk_scene(0.1), &g, SupportTolerance::default());
        let b = scene_statistics(&desk_scene(0.5), &g, SupportTolerance::default());
        let c = scene_statistics(&desk_scene(0.9), &g, SupportTolerance::default());
        let left = a.clone().merge(b.clone()).merge(c.clone());
        let right = a.merge(b.merge(c));
        assert_eq!(left, right);
    }

    #[test]
    fn parallel_collection_matches_sequential() {
        let g = Saog::from_json(OFFICE).unwrap();
        let scenes: Vec<_> = (0..40).map(|i| desk_scene(0.1 + 0.05 * i as f64)).collect();
        let par = collect_statistics(&scenes, &g);
        let seq = scenes
            .iter()
            .map(|s| scene_statistics(s, &g, SupportTolerance::default()))
            .fold(SufficientStats::empty_for(&g), SufficientStats::merge);
        assert_eq!(par, seq);
    }
}
