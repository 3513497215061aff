//! Turns a sampled parse graph into a concrete scene: catalog models are
//! chosen and placed, objects are seated on their supports, the room shell
//! is added and lighting, material and camera attributes are drawn.

mod attributes;
mod catalog;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{rectangle_walls, to_local, to_world, wrap_angle, Footprint, Vec3};
use crate::grammar::{ObjectInstance, ParseGraph, RoomDims};

pub use attributes::{
    sample_attributes, AttributeConfig, AttributeRanges, CameraRanges, Light, LightRanges, Material,
    MaterialRanges, Range,
};
pub use catalog::{select_model, CatalogEntry, ModelCatalog};

pub const LAYOUT_VERSION: u32 = 1;
/// Vertical and horizontal tolerance of the layout validator, meters.
pub const LAYOUT_TOL: f64 = 0.01;
/// Largest parent-child overlap `resolve_vertical` accepts, meters.
pub const PENETRATION_TOL: f64 = 1e-3;
const CLAMP_EPS: f64 = 1e-9;
pub const SHELL_LABELS: [&str; 3] = ["ceiling", "floor", "wall"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlacedObject {
    pub instance_id: u32,
    pub model_id: String,
    pub category: String,
    /// Footprint centre `(x, y)` and bottom elevation `z`.
    pub position: Vec3,
    /// Model yaw, including the catalog's front offset.
    pub yaw: f64,
    /// Model scale along its length, width and height.
    pub scale: Vec3,
    /// Heading of the box proxy's length axis.
    pub heading: f64,
    /// Box proxy (length, width, height).
    pub dims: Vec3,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support_parent: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh_ref: Option<String>,
}

impl PlacedObject {
    pub fn top(&self) -> f64 {
        self.position[2] + self.dims[2]
    }

    pub fn footprint(&self) -> Footprint {
        Footprint {
            center: [self.position[0], self.position[1]],
            yaw: self.heading,
            length: self.dims[0],
            width: self.dims[1],
        }
    }
}

/// Planar rectangle `origin + a·edge_u + b·edge_v`, `a, b ∈ [0, 1]`, whose
/// normal `edge_u × edge_v` points into the room.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShellQuad {
    pub instance_id: u32,
    pub label: String,
    pub origin: Vec3,
    pub edge_u: Vec3,
    pub edge_v: Vec3,
}

impl ShellQuad {
    pub fn corners(&self) -> [Vec3; 4] {
        let add = |a: Vec3, b: Vec3| [a[0] + b[0], a[1] + b[1], a[2] + b[2]];
        let o = self.origin;
        [o, add(o, self.edge_u), add(add(o, self.edge_u), self.edge_v), add(o, self.edge_v)]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoomShell {
    pub dims: RoomDims,
    pub quads: Vec<ShellQuad>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneLayout {
    pub version: u32,
    pub room: RoomShell,
    pub placed: Vec<PlacedObject>,
    pub attributes: AttributeConfig,
    /// Semantic id per category; 0 is reserved for void.
    pub label_table: BTreeMap<String, u16>,
}

impl SceneLayout {
    pub fn from_json(text: &str) -> Result<Self> {
        let l: SceneLayout = serde_json::from_str(text)?;
        if l.version != LAYOUT_VERSION {
            return Err(Error::Invalid(format!("unsupported layout version {}", l.version)));
        }
        Ok(l)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Serde(source) => Error::Json {
                path: path.into(),
                source,
            },
            e => e,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Category of every instance id, shell quads included.
    pub fn instance_categories(&self) -> BTreeMap<u32, &str> {
        let mut m: BTreeMap<u32, &str> = self
            .placed
            .iter()
            .map(|p| (p.instance_id, p.category.as_str()))
            .collect();
        for q in &self.room.quads {
            m.insert(q.instance_id, q.label.as_str());
        }
        m
    }

    /// Semantic id of an instance; 0 when unknown.
    pub fn semantic_of(&self, instance: u32) -> u16 {
        self.instance_categories()
            .get(&instance)
            .and_then(|c| self.label_table.get(*c))
            .copied()
            .unwrap_or(0)
    }

    fn index(&self) -> HashMap<u32, usize> {
        self.placed
            .iter()
            .enumerate()
            .map(|(i, p)| (p.instance_id, i))
            .collect()
    }
}

/// Sorted categories numbered from 1.
pub fn label_table<'a>(categories: impl IntoIterator<Item = &'a str>) -> BTreeMap<String, u16> {
    let set: BTreeSet<&str> = categories.into_iter().chain(SHELL_LABELS).collect();
    set.into_iter().zip(1u16..).map(|(c, i)| (c.to_string(), i)).collect()
}

pub fn place_model(entry: &CatalogEntry, instance: &ObjectInstance) -> PlacedObject {
    let n = entry.native_dims;
    PlacedObject {
        instance_id: instance.id,
        model_id: entry.model_id.clone(),
        category: instance.category.clone(),
        position: instance.position,
        yaw: wrap_angle(instance.yaw + entry.front_yaw_offset),
        scale: [instance.size[0] / n[0], instance.size[1] / n[1], instance.size[2] / n[2]],
        heading: instance.yaw,
        dims: instance.size,
        support_parent: instance.address,
        mesh_ref: entry.mesh_ref.clone(),
    }
}

/// Indices of `placed` with every parent before its children.
fn support_order(placed: &[PlacedObject]) -> Result<Vec<usize>> {
    let index: HashMap<u32, usize> = placed.iter().enumerate().map(|(i, p)| (p.instance_id, i)).collect();
    // 0 unvisited, 1 on stack, 2 done
    let mut state = vec![0u8; placed.len()];
    let mut order = Vec::with_capacity(placed.len());
    for start in 0..placed.len() {
        let mut path = Vec::new();
        let mut cur = start;
        loop {
            match state[cur] {
                2 => break,
                1 => return Err(Error::SupportCycle(placed[cur].instance_id)),
                _ => {}
            }
            state[cur] = 1;
            path.push(cur);
            match placed[cur].support_parent {
                None => break,
                Some(p) => {
                    cur = *index.get(&p).ok_or_else(|| {
                        Error::Invalid(format!(
                            "instance {} is supported by missing instance {p}",
                            placed[cur].instance_id
                        ))
                    })?;
                }
            }
        }
        for i in path.into_iter().rev() {
            state[i] = 2;
            order.push(i);
        }
    }
    Ok(order)
}

/// Seats every object on its support: floor objects at `z = 0`, supported
/// objects on their parent's top, parents first. A child whose centre left
/// its parent's footprint is moved to the nearest point of the footprint.
pub fn resolve_vertical(mut layout: SceneLayout) -> Result<SceneLayout> {
    let order = support_order(&layout.placed)?;
    let index = layout.index();
    for i in order {
        let Some(pid) = layout.placed[i].support_parent else {
            layout.placed[i].position[2] = 0.0;
            continue;
        };
        let parent = layout.placed[index[&pid]].clone();
        let fp = parent.footprint();
        let obj = &mut layout.placed[i];
        let local = to_local([obj.position[0], obj.position[1]], fp.center, fp.yaw);
        let hl = 0.5 * fp.length;
        let hw = 0.5 * fp.width;
        // round-off from an earlier clamp must not trigger another one
        if local[0].abs() > hl + CLAMP_EPS || local[1].abs() > hw + CLAMP_EPS {
            log::warn!(
                "instance {} centre is off its parent {pid}; clamped onto the parent surface",
                obj.instance_id
            );
            let xy = to_world([local[0].clamp(-hl, hl), local[1].clamp(-hw, hw)], fp.center, fp.yaw);
            obj.position[0] = xy[0];
            obj.position[1] = xy[1];
        }
        obj.position[2] = parent.top();
    }
    for obj in &layout.placed {
        let Some(pid) = obj.support_parent else { continue };
        let overlap = layout.placed[index[&pid]].top() - obj.position[2];
        if !(overlap <= PENETRATION_TOL) {
            return Err(Error::Penetration {
                instance: obj.instance_id,
                overlap,
            });
        }
    }
    Ok(layout)
}

/// Shifts each object so its footprint lies inside the room; children move
/// with their parents. Objects wider than the room are centred.
pub fn fit_to_room(mut layout: SceneLayout) -> Result<SceneLayout> {
    let order = support_order(&layout.placed)?;
    let dims = layout.room.dims;
    let mut children: HashMap<u32, Vec<usize>> = HashMap::new();
    for (i, p) in layout.placed.iter().enumerate() {
        if let Some(parent) = p.support_parent {
            children.entry(parent).or_default().push(i);
        }
    }
    let axis = |lo: f64, hi: f64, span: f64| {
        if hi - lo > span {
            0.5 * span - 0.5 * (lo + hi)
        } else if lo < 0.0 {
            -lo
        } else if hi > span {
            span - hi
        } else {
            0.0
        }
    };
    for i in order {
        let (lo, hi) = layout.placed[i].footprint().aabb();
        let dx = axis(lo[0], hi[0], dims.width);
        let dy = axis(lo[1], hi[1], dims.depth);
        if dx == 0.0 && dy == 0.0 {
            continue;
        }
        let mut stack = vec![i];
        while let Some(k) = stack.pop() {
            let p = &mut layout.placed[k];
            p.position[0] += dx;
            p.position[1] += dy;
            if let Some(c) = children.get(&p.instance_id) {
                stack.extend(c);
            }
        }
    }
    Ok(layout)
}

/// Floor, four walls and ceiling of a `width × depth × height` room, with
/// instance ids `first_id..first_id + 6`.
pub fn room_shell(dims: RoomDims, first_id: u32) -> RoomShell {
    let (w, d, h) = (dims.width, dims.depth, dims.height);
    let mut quads = vec![ShellQuad {
        instance_id: first_id,
        label: "floor".into(),
        origin: [0.0, 0.0, 0.0],
        edge_u: [w, 0.0, 0.0],
        edge_v: [0.0, d, 0.0],
    }];
    for (k, wall) in rectangle_walls(w, d).iter().enumerate() {
        quads.push(ShellQuad {
            instance_id: first_id + 1 + k as u32,
            label: "wall".into(),
            origin: [wall.start[0], wall.start[1], 0.0],
            edge_u: [wall.end[0] - wall.start[0], wall.end[1] - wall.start[1], 0.0],
            edge_v: [0.0, 0.0, h],
        });
    }
    quads.push(ShellQuad {
        instance_id: first_id + 5,
        label: "ceiling".into(),
        origin: [0.0, 0.0, h],
        edge_u: [0.0, d, 0.0],
        edge_v: [w, 0.0, 0.0],
    });
    RoomShell { dims, quads }
}

/// Selects, places and seats a model for every object, adds the room shell
/// and draws the scene attributes. Semantic ids cover every catalog category.
pub fn instantiate_scene<R: Rng + ?Sized>(
    pg: &ParseGraph,
    catalog: &ModelCatalog,
    ranges: &AttributeRanges,
    rng: &mut R,
) -> Result<SceneLayout> {
    ranges.validate()?;
    let mut placed = Vec::with_capacity(pg.objects.len());
    for o in &pg.objects {
        let entry = catalog.closest(&o.category, o.size)?;
        placed.push(place_model(entry, o));
    }
    let first_shell = pg.objects.iter().map(|o| o.id).max().unwrap_or(0) + 1;
    let layout = SceneLayout {
        version: LAYOUT_VERSION,
        room: room_shell(pg.room, first_shell),
        placed,
        attributes: AttributeConfig::default(),
        label_table: label_table(catalog.entries.iter().map(|e| e.category.as_str())),
    };
    let mut layout = fit_to_room(resolve_vertical(layout)?)?;
    layout.attributes = sample_attributes(ranges, &pg.room, &layout.placed, rng)?;
    Ok(layout)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub instance: Option<u32>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.instance {
            Some(i) => write!(f, "instance {i}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

/// Geometric and schema checks; an empty list means the layout is clean.
pub fn validate_layout(layout: &SceneLayout) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut bad = |instance: Option<u32>, message: String| out.push(Violation { instance, message });
    if layout.version != LAYOUT_VERSION {
        bad(None, format!("unsupported version {}", layout.version));
    }
    let dims = layout.room.dims;
    if ![dims.width, dims.depth, dims.height].iter().all(|v| v.is_finite() && *v > 0.0) {
        bad(None, "room dims must be > 0".into());
        return out;
    }
    let mut ids = BTreeSet::new();
    for id in layout
        .placed
        .iter()
        .map(|p| p.instance_id)
        .chain(layout.room.quads.iter().map(|q| q.instance_id))
    {
        if id == 0 || !ids.insert(id) {
            bad(Some(id), "instance id is 0 or repeated".into());
        }
    }
    if layout.label_table.values().any(|v| *v == 0) {
        bad(None, "label 0 is reserved for void".into());
    }
    let index = layout.index();
    if let Err(e) = support_order(&layout.placed) {
        bad(None, e.to_string());
        return out;
    }
    for p in &layout.placed {
        let id = Some(p.instance_id);
        let finite = p.position.iter().chain(&p.dims).chain(&p.scale).all(|v| v.is_finite());
        if !finite || !p.dims.iter().chain(&p.scale).all(|v| *v > 0.0) {
            bad(id, "non-finite or non-positive pose, dims or scale".into());
            continue;
        }
        if !layout.label_table.contains_key(&p.category) {
            bad(id, format!("category `{}` has no semantic label", p.category));
        }
        let (lo, hi) = p.footprint().aabb();
        if lo[0] < -LAYOUT_TOL || lo[1] < -LAYOUT_TOL || hi[0] > dims.width + LAYOUT_TOL || hi[1] > dims.depth + LAYOUT_TOL
        {
            bad(id, "bounding box leaves the room footprint".into());
        }
        let bottom = p.position[2];
        if bottom < -LAYOUT_TOL {
            bad(id, format!("bottom {bottom:.4} m is below the floor"));
        }
        let support = match p.support_parent {
            None => 0.0,
            Some(pid) => layout.placed[index[&pid]].top(),
        };
        let gap = bottom - support;
        if gap > LAYOUT_TOL {
            bad(id, format!("floating {gap:.4} m above its support"));
        } else if gap < -LAYOUT_TOL && p.support_parent.is_some() {
            bad(id, format!("penetrates its parent by {:.4} m", -gap));
        }
    }
    for l in &layout.attributes.lights {
        if !dims.contains([l.position[0], l.position[1]]) || !(0.0..=dims.height).contains(&l.position[2]) {
            bad(None, "light outside the room".into());
        }
        if !l.color.iter().all(|c| (0.0..=1.0).contains(c)) {
            bad(None, "light colour outside [0, 1]".into());
        }
    }
    for m in &layout.attributes.materials {
        if ![m.roughness, m.metallic, m.reflectivity].iter().all(|c| (0.0..=1.0).contains(c)) {
            bad(Some(m.instance_id), "material scalar outside [0, 1]".into());
        }
    }
    for c in &layout.attributes.cameras {
        if let Err(e) = c.validate() {
            bad(None, e.to_string());
        }
    }
    out
}

/// Wavefront OBJ of the box proxies and shell quads, one group per instance.
pub fn layout_to_obj(layout: &SceneLayout) -> String {
    let mut s = String::from("# box proxies; group name = instance id\n");
    let mut base = 1;
    for p in &layout.placed {
        let fp = p.footprint();
        let z0 = p.position[2];
        let z1 = p.top();
        let c = fp.corners();
        let _ = writeln!(s, "g {}", p.instance_id);
        for z in [z0, z1] {
            for v in c {
                let _ = writeln!(s, "v {} {} {}", v[0], v[1], z);
            }
        }
        let faces = [[0, 3, 2, 1], [4, 5, 6, 7], [0, 1, 5, 4], [1, 2, 6, 5], [2, 3, 7, 6], [3, 0, 4, 7]];
        for f in faces {
            let _ = writeln!(s, "f {} {} {} {}", base + f[0], base + f[1], base + f[2], base + f[3]);
        }
        base += 8;
    }
    for q in &layout.room.quads {
        let _ = writeln!(s, "g {}", q.instance_id);
        for v in q.corners() {
            let _ = writeln!(s, "v {} {} {}", v[0], v[1], v[2]);
        }
        let _ = writeln!(s, "f {} {} {} {}", base, base + 1, base + 2, base + 3);
        base += 4;
    }
    s
}

#[cfg(test)]
mod tests {
    use std::f64::consts::FRAC_PI_2;

    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::grammar::{ParseTree, SurfacePose};

    fn obj(id: u32, cat: &str, pos: Vec3, size: Vec3, address: Option<u32>) -> ObjectInstance {
        ObjectInstance {
            id,
            category: cat.into(),
            node: cat.into(),
            size,
            position: pos,
            yaw: 0.0,
            slot: address.map(|_| format!("{cat}_addr")),
            address,
            surface: address.map(|_| SurfacePose { u: 0.0, v: 0.0, yaw: 0.0 }),
            stage: 2,
        }
    }

    fn catalog() -> ModelCatalog {
        let e = |id: &str, cat: &str, dims: Vec3| CatalogEntry {
            model_id: id.into(),
            category: cat.into(),
            native_dims: dims,
            mesh_ref: Some(format!("meshes/{id}.obj")),
            front_yaw_offset: 0.0,
        };
        ModelCatalog::new(vec![
            e("desk0", "desk", [1.2, 0.6, 0.75]),
            e("table0", "table", [1.0, 1.0, 0.75]),
            e("monitor0", "monitor", [0.5, 0.2, 0.4]),
            e("lamp0", "lamp", [0.2, 0.2, 0.5]),
        ])
        .unwrap()
    }

    fn room() -> RoomDims {
        RoomDims {
            width: 4.0,
            depth: 3.0,
            height: 2.5,
        }
    }

    fn draft(objects: Vec<ObjectInstance>) -> SceneLayout {
        let cat = catalog();
        SceneLayout {
            version: LAYOUT_VERSION,
            room: room_shell(room(), objects.len() as u32 + 1),
            placed: objects
                .iter()
                .map(|o| place_model(cat.closest(&o.category, o.size).unwrap(), o))
                .collect(),
            attributes: AttributeConfig::default(),
            label_table: label_table(["desk", "lamp", "monitor", "table"]),
        }
    }

    #[test]
    fn placement_scale_and_yaw() {
        let entry = CatalogEntry {
            model_id: "m".into(),
            category: "bed".into(),
            native_dims: [2.0, 1.0, 1.0],
            mesh_ref: None,
            front_yaw_offset: FRAC_PI_2,
        };
        let o = obj(1, "bed", [1.0, 1.0, 0.0], [1.0, 0.5, 0.8], None);
        let p = place_model(&entry, &o);
        assert_eq!(p.scale, [0.5, 0.5, 0.8]);
        assert_eq!(p.yaw, FRAC_PI_2);
        assert_eq!(p.heading, 0.0);
        let unit = place_model(&CatalogEntry { native_dims: o.size, ..entry }, &o);
        assert_eq!(unit.scale, [1.0; 3]);
    }

    #[test]
    fn floor_objects_drop_to_zero() {
        let l = resolve_vertical(draft(vec![obj(1, "table", [2.0, 1.5, 0.5], [1.0, 1.0, 0.75], None)])).unwrap();
        assert_eq!(l.placed[0].position[2], 0.0);
    }

    #[test]
    fn lamp_sits_on_table() {
        let l = draft(vec![
            obj(1, "table", [2.0, 1.5, 0.0], [1.0, 1.0, 0.75], None),
            obj(2, "lamp", [2.0, 1.5, 0.3], [0.2, 0.2, 0.5], Some(1)),
        ]);
        let l = resolve_vertical(l).unwrap();
        assert_eq!(l.placed[1].position[2], 0.75);
    }

    #[test]
    fn two_step_chain_snaps_in_order() {
        // child listed before its parent; the parent starts in the air
        let mut a = obj(1, "monitor", [1.0, 1.0, 0.1], [0.5, 0.2, 0.4], Some(2));
        a.id = 1;
        let l = draft(vec![a, obj(2, "desk", [1.0, 1.0, 0.4], [1.2, 0.6, 0.75], None)]);
        let l = resolve_vertical(l).unwrap();
        assert_eq!(l.placed[1].position[2], 0.0);
        assert_eq!(l.placed[0].position[2], 0.75);
        assert_eq!(resolve_vertical(l.clone()).unwrap(), l);
    }

    #[test]
    fn child_off_parent_is_clamped() {
        let l = draft(vec![
            obj(1, "table", [2.0, 1.5, 0.0], [1.0, 1.0, 0.75], None),
            obj(2, "lamp", [3.0, 1.5, 0.75], [0.2, 0.2, 0.5], Some(1)),
        ]);
        let l = resolve_vertical(l).unwrap();
        assert!((l.placed[1].position[0] - 2.5).abs() < 1e-12);
    }

    #[test]
    fn support_cycle_is_an_error() {
        let mut l = draft(vec![
            obj(1, "table", [2.0, 1.5, 0.0], [1.0, 1.0, 0.75], None),
            obj(2, "lamp", [2.0, 1.5, 0.75], [0.2, 0.2, 0.5], Some(1)),
        ]);
        l.placed[0].support_parent = Some(2);
        assert!(matches!(resolve_vertical(l), Err(Error::SupportCycle(_))));
    }

    #[test]
    fn fit_moves_children_along() {
        let l = draft(vec![
            obj(1, "table", [0.2, 1.5, 0.0], [1.0, 1.0, 0.75], None),
            obj(2, "lamp", [0.1, 1.5, 0.75], [0.2, 0.2, 0.5], Some(1)),
        ]);
        let l = fit_to_room(l).unwrap();
        assert!((l.placed[0].position[0] - 0.5).abs() < 1e-12);
        assert!((l.placed[1].position[0] - 0.4).abs() < 1e-12);
    }

    #[test]
    fn empty_graph_gives_shell_only() {
        let pg = ParseGraph::new(ParseTree::default(), room(), vec![]);
        let l = instantiate_scene(&pg, &catalog(), &AttributeRanges::default(), &mut ChaCha8Rng::seed_from_u64(0))
            .unwrap();
        assert!(l.placed.is_empty());
        assert_eq!(l.room.quads.len(), 6);
        assert_eq!(l.room.quads.iter().map(|q| q.instance_id).collect::<Vec<_>>(), (1..=6).collect::<Vec<_>>());
        assert!(validate_layout(&l).is_empty());
    }

    #[test]
    fn instantiation_is_deterministic_and_valid() {
        let mut objects = vec![
            obj(1, "desk", [3.9, 1.0, 0.0], [1.4, 0.7, 0.75], None),
            obj(2, "monitor", [3.9, 1.0, 0.75], [0.6, 0.2, 0.4], Some(1)),
        ];
        objects[0].yaw = 0.3;
        let pg = ParseGraph::new(ParseTree::default(), room(), objects);
        let run = |s| {
            let l = instantiate_scene(&pg, &catalog(), &AttributeRanges::default(), &mut ChaCha8Rng::seed_from_u64(s))
                .unwrap();
            l.to_json().unwrap()
        };
        assert_eq!(run(4), run(4));
        let l = SceneLayout::from_json(&run(4)).unwrap();
        assert_eq!(l.to_json().unwrap(), run(4));
        assert!(validate_layout(&l).is_empty(), "{:?}", validate_layout(&l));
        assert_eq!(l.semantic_of(2), l.label_table["monitor"]);
        assert_eq!(l.semantic_of(3), l.label_table["floor"]);
    }

    #[test]
    fn validator_names_floating_instance() {
        let mut l = resolve_vertical(draft(vec![
            obj(1, "table", [2.0, 1.5, 0.0], [1.0, 1.0, 0.75], None),
            obj(2, "lamp", [2.0, 1.5, 0.75], [0.2, 0.2, 0.5], Some(1)),
        ]))
        .unwrap();
        assert!(validate_layout(&l).is_empty());
        l.placed[1].position[2] = 0.8;
        let v = validate_layout(&l);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].instance, Some(2));
        l.placed[1].position[2] = 0.7;
        assert!(validate_layout(&l)[0].message.contains("penetrates"));
    }

    #[test]
    fn labels_are_sorted_from_one() {
        let t = label_table(["sofa", "bed"]);
        let got: Vec<(&str, u16)> = t.iter().map(|(k, v)| (k.as_str(), *v)).collect();
        assert_eq!(got, vec![("bed", 1), ("ceiling", 2), ("floor", 3), ("sofa", 4), ("wall", 5)]);
    }

    #[test]
    fn obj_export_groups() {
        let l = draft(vec![obj(1, "table", [2.0, 1.5, 0.0], [1.0, 1.0, 0.75], None)]);
        let text = layout_to_obj(&l);
        assert_eq!(text.lines().filter(|s| s.starts_with("g ")).count(), 7);
        assert_eq!(text.lines().filter(|s| s.starts_with("v ")).count(), 8 + 24);
        assert!(text.contains("\ng 1\n"));
    }
}
