use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{rectangle_walls, to_world, wrap_angle, Footprint, Vec2, Vec3, Wall};

use super::{collect_cliques, CliqueSet, Saog};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoomDims {
    pub width: f64,
    pub depth: f64,
    pub height: f64,
}

impl RoomDims {
    pub fn contains(&self, p: Vec2) -> bool {
        (0.0..=self.width).contains(&p[0]) && (0.0..=self.depth).contains(&p[1])
    }
}

/// Pose of a supported object in its parent's frame: offset along the
/// parent's length (`u`) and width (`v`) axes, and yaw relative to the parent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfacePose {
    pub u: f64,
    pub v: f64,
    pub yaw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectInstance {
    pub id: u32,
    pub category: String,
    /// Terminal node this object was derived from.
    pub node: String,
    /// (length, width, height) in meters.
    pub size: Vec3,
    /// Footprint centre `(x, y)` and bottom elevation `z`.
    pub position: Vec3,
    pub yaw: f64,
    /// Address slot for supported objects; `None` for furniture.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slot: Option<String>,
    /// Supporting furniture; `None` means the floor.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub address: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub surface: Option<SurfacePose>,
    pub stage: u8,
}

impl ObjectInstance {
    pub fn is_furniture(&self) -> bool {
        self.slot.is_none()
    }

    pub fn center(&self) -> Vec2 {
        [self.position[0], self.position[1]]
    }

    pub fn top(&self) -> f64 {
        self.position[2] + self.size[2]
    }

    pub fn footprint(&self) -> Footprint {
        Footprint {
            center: self.center(),
            yaw: self.yaw,
            length: self.size[0],
            width: self.size[1],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum TreeChoice {
    Or { node: String, branch: usize },
    Set { node: String, child: String, count: u32 },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParseTree {
    pub choices: Vec<TreeChoice>,
}

/// One scene configuration: the derived tree, its objects with attributes,
/// the room walls and the cliques among them.
///
/// Object ids are `1..=n` and `objects[i].id == i + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParseGraph {
    pub tree: ParseTree,
    pub room: RoomDims,
    pub walls: [Wall; 4],
    pub objects: Vec<ObjectInstance>,
    pub cliques: CliqueSet,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy_cache: Option<f64>,
}

impl ParseGraph {
    pub fn new(tree: ParseTree, room: RoomDims, objects: Vec<ObjectInstance>) -> Self {
        ParseGraph {
            tree,
            room,
            walls: rectangle_walls(room.width, room.depth),
            objects,
            cliques: CliqueSet::default(),
            energy_cache: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let pg: ParseGraph = serde_json::from_str(text)?;
        pg.check_ids()?;
        Ok(pg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn object(&self, id: u32) -> &ObjectInstance {
        &self.objects[id as usize - 1]
    }

    pub fn object_mut(&mut self, id: u32) -> &mut ObjectInstance {
        &mut self.objects[id as usize - 1]
    }

    pub fn furniture(&self) -> impl Iterator<Item = &ObjectInstance> {
        self.objects.iter().filter(|o| o.is_furniture())
    }

    pub fn children_of(&self, parent: u32) -> impl Iterator<Item = &ObjectInstance> {
        self.objects
            .iter()
            .filter(move |o| o.address == Some(parent))
    }

    pub fn refresh_cliques(&mut self, grammar: &Saog) {
        self.cliques = collect_cliques(self, grammar);
    }

    /// Recomputes the world pose of a supported object from its surface pose.
    pub fn seat(&mut self, id: u32) {
        let obj = self.object(id);
        let (Some(parent), Some(s)) = (obj.address, obj.surface) else {
            return;
        };
        let p = self.object(parent);
        let xy = to_world([s.u, s.v], p.center(), p.yaw);
        let z = p.top();
        let yaw = wrap_angle(p.yaw + s.yaw);
        let obj = self.object_mut(id);
        obj.position = [xy[0], xy[1], z];
        obj.yaw = yaw;
    }

    /// Re-seats every object supported by `parent`.
    pub fn seat_children(&mut self, parent: u32) {
        let ids: Vec<u32> = self.children_of(parent).map(|o| o.id).collect();
        for id in ids {
            self.seat(id);
        }
    }

    /// Checks the id layout and address references.
    pub fn check_ids(&self) -> Result<()> {
        for (i, o) in self.objects.iter().enumerate() {
            if o.id as usize != i + 1 {
                return Err(Error::Invalid(format!(
                    "object at index {i} has id {}, expected {}",
                    o.id,
                    i + 1
                )));
            }
            if let Some(a) = o.address {
                if a == o.id {
                    return Err(Error::Invalid(format!("object {} supports itself", o.id)));
                }
                if a == 0 || a as usize > self.objects.len() {
                    return Err(Error::Invalid(format!(
                        "object {} addresses missing object {a}",
                        o.id
                    )));
                }
                if !self.object(a).is_furniture() {
                    return Err(Error::Invalid(format!(
                        "object {} is supported by non-furniture object {a}",
                        o.id
                    )));
                }
                if o.surface.is_none() {
                    return Err(Error::Invalid(format!(
                        "supported object {} has no surface pose",
                        o.id
                    )));
                }
            }
            if o.slot.is_none() && o.address.is_some() {
                return Err(Error::Invalid(format!(
                    "furniture object {} carries an address",
                    o.id
                )));
            }
            if o.size.iter().any(|v| !(*v > 0.0)) {
                return Err(Error::Invalid(format!("object {} has a non-positive size", o.id)));
            }
        }
        Ok(())
    }
}
