use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::wrap_angle;

pub const DEFAULT_D_ACC: f64 = 0.8;

/// Mean distance and relative orientation to the walls of the room, ranked
/// from the nearest wall (index 0) to the farthest.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WallStat {
    pub dist: [f64; 4],
    pub ori: [f64; 4],
}

/// Mean centre distance and relative yaw `wrap(yaw_a − yaw_b)` of an ordered pair.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairStat {
    pub dist: f64,
    pub ori: f64,
}

impl PairStat {
    fn reversed(self) -> Self {
        PairStat {
            dist: self.dist,
            ori: wrap_angle(-self.ori),
        }
    }
}

/// Mean edge distances (`+length, −length, +width, −width`) of a supported
/// object's centre on its parent's footprint, and mean relative yaw
/// `wrap(yaw_object − yaw_parent)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupportStat {
    pub faces: [f64; 4],
    pub ori: f64,
}

/// Learned relation means. Each family falls back from the exact key to a
/// per-category pool and then to a global pool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelationStats {
    #[serde(default)]
    pub wall: BTreeMap<String, WallStat>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_global: Option<WallStat>,
    /// Keyed by `"a|b"`.
    #[serde(default)]
    pub pair: BTreeMap<String, PairStat>,
    /// Pooled over every pair whose first category is the key.
    #[serde(default)]
    pub pair_by_category: BTreeMap<String, PairStat>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair_global: Option<PairStat>,
    /// Keyed by `"furniture|object"`.
    #[serde(default)]
    pub support: BTreeMap<String, SupportStat>,
    /// Pooled over parents, keyed by object category.
    #[serde(default)]
    pub support_by_object: BTreeMap<String, SupportStat>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support_global: Option<SupportStat>,
    #[serde(default = "default_d_acc")]
    pub d_acc: f64,
}

fn default_d_acc() -> f64 {
    DEFAULT_D_ACC
}

impl Default for RelationStats {
    fn default() -> Self {
        RelationStats {
            wall: BTreeMap::new(),
            wall_global: None,
            pair: BTreeMap::new(),
            pair_by_category: BTreeMap::new(),
            pair_global: None,
            support: BTreeMap::new(),
            support_by_object: BTreeMap::new(),
            support_global: None,
            d_acc: DEFAULT_D_ACC,
        }
    }
}

pub fn pair_key(a: &str, b: &str) -> String {
    format!("{a}|{b}")
}

impl RelationStats {
    pub fn validate(&self) -> Result<()> {
        if !(self.d_acc.is_finite() && self.d_acc > 0.0) {
            return Err(Error::Invalid("d_acc must be finite and > 0".into()));
        }
        let walls = self.wall.values().chain(self.wall_global.iter());
        let pairs = self.pair.values().chain(self.pair_by_category.values()).chain(self.pair_global.iter());
        let supports = self
            .support
            .values()
            .chain(self.support_by_object.values())
            .chain(self.support_global.iter());
        let mut values = Vec::new();
        let mut angles = Vec::new();
        for w in walls {
            values.extend(w.dist);
            angles.extend(w.ori);
        }
        for p in pairs {
            values.push(p.dist);
            angles.push(p.ori);
        }
        for s in supports {
            values.extend(s.faces);
            angles.push(s.ori);
        }
        if values.iter().chain(&angles).any(|v| !v.is_finite()) {
            return Err(Error::Invalid("relation statistics must be finite".into()));
        }
        if angles.iter().any(|a| !(-std::f64::consts::PI..std::f64::consts::PI).contains(a)) {
            return Err(Error::Invalid("mean orientations must lie in [-π, π)".into()));
        }
        Ok(())
    }

    pub fn wall_stat(&self, category: &str) -> WallStat {
        self.wall
            .get(category)
            .copied()
            .or(self.wall_global)
            .unwrap_or_default()
    }

    pub fn pair_stat(&self, a: &str, b: &str) -> PairStat {
        if let Some(s) = self.pair.get(&pair_key(a, b)) {
            return *s;
        }
        if let Some(s) = self.pair.get(&pair_key(b, a)) {
            return s.reversed();
        }
        if let Some(s) = self.pair_by_category.get(a) {
            return *s;
        }
        if let Some(s) = self.pair_by_category.get(b) {
            return s.reversed();
        }
        self.pair_global.unwrap_or_default()
    }

    /// `None` means no data at any level: callers treat the parent's centre
    /// as the expected position.
    pub fn support_stat(&self, furniture: &str, object: &str) -> Option<SupportStat> {
        self.support
            .get(&pair_key(furniture, object))
            .or_else(|| self.support_by_object.get(object))
            .or(self.support_global.as_ref())
            .copied()
    }
}
