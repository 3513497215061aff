//! Annotated training scenes and their conversion to parse graphs.

use std::collections::BTreeMap;
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{footprint_gap, to_local, wrap_angle, Footprint, Vec2, Vec3};
use crate::grammar::{
    parse_categories, GroupDecl, ObjectInstance, ParseGraph, RoomDims, Saog, SurfacePose,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingObject {
    pub id: u32,
    pub category: String,
    /// Footprint centre `(x, y)` and bottom elevation `z`.
    pub position: Vec3,
    pub yaw: f64,
    /// (length, width, height).
    pub size: Vec3,
    /// Annotated supporting object; `None` leaves it to discovery.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support_parent: Option<u32>,
}

impl TrainingObject {
    pub fn footprint(&self) -> Footprint {
        Footprint {
            center: [self.position[0], self.position[1]],
            yaw: self.yaw,
            length: self.size[0],
            width: self.size[1],
        }
    }

    fn bottom(&self) -> f64 {
        self.position[2]
    }

    fn top(&self) -> f64 {
        self.position[2] + self.size[2]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingScene {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub room_type: Option<String>,
    /// (width, depth, wall height).
    pub room_dims: Vec3,
    pub objects: Vec<TrainingObject>,
}

impl TrainingScene {
    pub fn validate(&self) -> Result<()> {
        if self.room_dims.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Invalid("room dimensions must be positive".into()));
        }
        let mut ids = std::collections::BTreeSet::new();
        for o in &self.objects {
            if !ids.insert(o.id) {
                return Err(Error::Invalid(format!("duplicate object id {}", o.id)));
            }
            if o.size.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(Error::Invalid(format!("object {} has a non-positive size", o.id)));
            }
            if o.position.iter().chain([&o.yaw]).any(|v| !v.is_finite()) {
                return Err(Error::Invalid(format!("object {} has a non-finite pose", o.id)));
            }
        }
        for o in &self.objects {
            if let Some(p) = o.support_parent {
                if p == o.id || !ids.contains(&p) {
                    return Err(Error::Invalid(format!(
                        "object {} names support parent {p}, which is not another object in the scene",
                        o.id
                    )));
                }
            }
        }
        Ok(())
    }

    fn object(&self, id: u32) -> Option<&TrainingObject> {
        self.objects.iter().find(|o| o.id == id)
    }
}

/// Parses a JSON array of training scenes and validates each one.
pub fn scenes_from_json(text: &str) -> Result<Vec<TrainingScene>> {
    let scenes: Vec<TrainingScene> = serde_json::from_str(text)?;
    for (i, s) in scenes.iter().enumerate() {
        s.validate()
            .map_err(|e| Error::Invalid(format!("training scene {i}: {e}")))?;
    }
    Ok(scenes)
}

pub fn load_scenes(path: impl AsRef<Path>) -> Result<Vec<TrainingScene>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    scenes_from_json(&text)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupportTolerance {
    /// Largest accepted gap between a child's bottom and a parent's top.
    pub z_tol: f64,
}

impl Default for SupportTolerance {
    fn default() -> Self {
        SupportTolerance { z_tol: 0.05 }
    }
}

/// Finds `(child, parent)` support pairs from geometry: the child's bottom
/// is within `z_tol` of the parent's top, the parent starts strictly lower,
/// and the child's centre lies inside the parent's footprint. Among several
/// candidates the smallest vertical gap wins, then the smallest footprint,
/// then the lowest id. Objects without a candidate rest on the floor.
pub fn discover_support_relations(scene: &TrainingScene, tol: SupportTolerance) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    for o in &scene.objects {
        let c = [o.position[0], o.position[1]];
        let best = scene
            .objects
            .iter()
            .filter(|f| f.id != o.id && f.bottom() < o.bottom())
            .filter(|f| (o.bottom() - f.top()).abs() <= tol.z_tol)
            .filter(|f| f.footprint().contains(c, 0.0))
            .min_by(|a, b| {
                let key = |f: &TrainingObject| ((o.bottom() - f.top()).abs(), f.size[0] * f.size[1]);
                let (ga, aa) = key(a);
                let (gb, ab) = key(b);
                ga.total_cmp(&gb).then(aa.total_cmp(&ab)).then(a.id.cmp(&b.id))
            });
        if let Some(f) = best {
            out.push((o.id, f.id));
        }
    }
    out
}

/// Default planar gap under which two declared group members interact.
pub const GROUP_DISTANCE: f64 = 1.0;

/// A discovered group pair: `a` has the earlier member category.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupPair {
    pub group: String,
    pub a: u32,
    pub b: u32,
}

/// Pairs of instances of declared group categories whose footprint gap is
/// below `dist_threshold`. Undeclared category pairs are never grouped.
pub fn discover_groups(scene: &TrainingScene, groups: &[GroupDecl], dist_threshold: f64) -> Vec<GroupPair> {
    let mut out = Vec::new();
    for g in groups {
        for (mi, ma) in g.members.iter().enumerate() {
            for mb in &g.members[mi + 1..] {
                for a in scene.objects.iter().filter(|o| &o.category == ma) {
                    for b in scene.objects.iter().filter(|o| &o.category == mb) {
                        if footprint_gap(&a.footprint(), &b.footprint()) < dist_threshold {
                            out.push(GroupPair {
                                group: g.id.clone(),
                                a: a.id,
                                b: b.id,
                            });
                        }
                    }
                }
            }
        }
    }
    out
}

/// Result of converting a training scene.
#[derive(Debug, Clone)]
pub struct ConvertedScene {
    pub pg: ParseGraph,
    /// Objects dropped because the grammar has no terminal for them, by category.
    pub skipped: BTreeMap<String, usize>,
}

/// Converts a training scene into a parse graph of `grammar`. Objects of
/// unknown categories are skipped; ids are renumbered `1..=n` in input order.
///
/// Objects whose category is bound to an address slot become supported
/// objects. Their address is the annotated parent when given, else the
/// discovered one; a parent the slot's prior cannot name is treated as nil.
pub fn scene_to_parse_graph(scene: &TrainingScene, grammar: &Saog, tol: SupportTolerance) -> ConvertedScene {
    let mut skipped = BTreeMap::new();
    let mut kept = Vec::new();
    for o in &scene.objects {
        if grammar.terminal_for_category(&o.category).is_some() {
            kept.push(o);
        } else {
            warn!("skipping object {} of unknown category `{}`", o.id, o.category);
            *skipped.entry(o.category.clone()).or_insert(0) += 1;
        }
    }
    let new_id: BTreeMap<u32, u32> = kept
        .iter()
        .enumerate()
        .map(|(i, o)| (o.id, i as u32 + 1))
        .collect();
    let discovered: BTreeMap<u32, u32> = discover_support_relations(scene, tol).into_iter().collect();

    let mut objects = Vec::with_capacity(kept.len());
    for (i, o) in kept.iter().enumerate() {
        let slot = grammar.slot_for_category(&o.category).map(str::to_string);
        let node = match &slot {
            Some(s) => grammar.bound_terminal(s).expect("slot is bound").to_string(),
            None => grammar
                .terminal_for_category(&o.category)
                .expect("kept objects have a terminal")
                .to_string(),
        };
        let mut address = None;
        let mut surface = None;
        if let Some(s) = &slot {
            let parent = o.support_parent.or_else(|| discovered.get(&o.id).copied());
            let prior = &grammar.address_priors[s];
            if let Some(p) = parent.and_then(|p| scene.object(p)) {
                let nameable = prior.get(&p.category).is_some_and(|v| *v > 0.0)
                    && grammar.slot_for_category(&p.category).is_none();
                if let (true, Some(pid)) = (nameable, new_id.get(&p.id)) {
                    let local: Vec2 = to_local([o.position[0], o.position[1]], [p.position[0], p.position[1]], p.yaw);
                    address = Some(*pid);
                    surface = Some(SurfacePose {
                        u: local[0],
                        v: local[1],
                        yaw: wrap_angle(o.yaw - p.yaw),
                    });
                }
            }
        }
        let supported = slot.is_some();
        objects.push(ObjectInstance {
            id: i as u32 + 1,
            category: o.category.clone(),
            stage: grammar.stage_of(&node, None, supported),
            node,
            size: o.size,
            position: o.position,
            yaw: wrap_angle(o.yaw),
            slot,
            address,
            surface,
        });
    }
    let cats: Vec<&str> = objects.iter().map(|o| o.category.as_str()).collect();
    let parse = parse_categories(grammar, scene.room_type.as_deref(), &cats);
    let [width, depth, height] = scene.room_dims;
    let mut pg = ParseGraph::new(
        crate::grammar::ParseTree {
            choices: parse.choices,
        },
        RoomDims { width, depth, height },
        objects,
    );
    pg.refresh_cliques(grammar);
    ConvertedScene { pg, skipped }
}

/// Inverse of [`scene_to_parse_graph`] for synthetic data: writes a parse
/// graph out as an annotated training scene.
pub fn parse_graph_to_scene(pg: &ParseGraph, room_type: Option<&str>) -> TrainingScene {
    TrainingScene {
        room_type: room_type.map(str::to_string),
        room_dims: [pg.room.width, pg.room.depth, pg.room.height],
        objects: pg
            .objects
            .iter()
            .map(|o| TrainingObject {
                id: o.id,
                category: o.category.clone(),
                position: o.position,
                yaw: o.yaw,
                size: o.size,
                support_parent: o.address,
            })
            .collect(),
    }
}
