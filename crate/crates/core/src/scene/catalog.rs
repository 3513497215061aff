use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogEntry {
    pub model_id: String,
    pub category: String,
    /// (length, width, height) of the model as authored, meters.
    pub native_dims: Vec3,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh_ref: Option<String>,
    /// Yaw that turns the model's authored front onto the object heading.
    #[serde(default)]
    pub front_yaw_offset: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelCatalog {
    pub entries: Vec<CatalogEntry>,
}

impl ModelCatalog {
    pub fn new(entries: Vec<CatalogEntry>) -> Result<Self> {
        let c = ModelCatalog { entries };
        c.validate()?;
        Ok(c)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: ModelCatalog = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let c: ModelCatalog = serde_json::from_str(&text).map_err(|e| Error::Json {
            path: path.into(),
            source: e,
        })?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for e in &self.entries {
            if !seen.insert(e.model_id.as_str()) {
                return Err(Error::Invalid(format!("duplicate model id `{}`", e.model_id)));
            }
            if !e.native_dims.iter().all(|d| d.is_finite() && *d > 0.0) {
                return Err(Error::Invalid(format!("model `{}` has non-positive dims", e.model_id)));
            }
            if !e.front_yaw_offset.is_finite() {
                return Err(Error::Invalid(format!("model `{}` has a non-finite yaw offset", e.model_id)));
            }
        }
        Ok(())
    }

    pub fn entry(&self, model_id: &str) -> Option<&CatalogEntry> {
        self.entries.iter().find(|e| e.model_id == model_id)
    }

    /// Entry of `category` whose length/width log-ratio is closest to the
    /// target's; ties go to the lexicographically smallest model id.
    pub fn closest(&self, category: &str, target_dims: Vec3) -> Result<&CatalogEntry> {
        let want = log_ratio(target_dims);
        self.entries
            .iter()
            .filter(|e| e.category == category)
            .map(|e| ((log_ratio(e.native_dims) - want).abs(), e))
            .min_by(|(da, a), (db, b)| da.total_cmp(db).then_with(|| a.model_id.cmp(&b.model_id)))
            .map(|(_, e)| e)
            .ok_or_else(|| Error::NoCatalogEntry(category.to_string()))
    }
}

fn log_ratio(d: Vec3) -> f64 {
    (d[0] / d[1]).ln()
}

pub fn select_model(catalog: &ModelCatalog, category: &str, target_dims: Vec3) -> Result<String> {
    catalog.closest(category, target_dims).map(|e| e.model_id.clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(id: &str, cat: &str, dims: Vec3) -> CatalogEntry {
        CatalogEntry {
            model_id: id.into(),
            category: cat.into(),
            native_dims: dims,
            mesh_ref: None,
            front_yaw_offset: 0.0,
        }
    }

    fn catalog() -> ModelCatalog {
        ModelCatalog::new(vec![
            entry("bed_square", "bed", [2.0, 2.0, 0.5]),
            entry("bed_long", "bed", [2.0, 1.0, 0.5]),
            entry("desk_b", "desk", [1.2, 0.6, 0.75]),
            entry("desk_a", "desk", [1.4, 0.7, 0.75]),
        ])
        .unwrap()
    }

    #[test]
    fn closest_log_ratio_wins() {
        assert_eq!(select_model(&catalog(), "bed", [1.9, 1.0, 0.4]).unwrap(), "bed_long");
        assert_eq!(select_model(&catalog(), "bed", [1.0, 1.0, 0.4]).unwrap(), "bed_square");
    }

    #[test]
    fn equal_ratios_pick_smaller_id() {
        assert_eq!(select_model(&catalog(), "desk", [2.0, 1.0, 1.0]).unwrap(), "desk_a");
    }

    #[test]
    fn scale_invariant() {
        for c in [0.01, 0.7, 3.0, 250.0] {
            assert_eq!(select_model(&catalog(), "bed", [1.9 * c, c, 0.4]).unwrap(), "bed_long");
        }
    }

    #[test]
    fn unknown_category_is_named() {
        let e = select_model(&catalog(), "piano", [1.0, 1.0, 1.0]).unwrap_err();
        assert!(e.to_string().contains("piano"));
    }

    #[test]
    fn rejects_bad_catalogs() {
        assert!(ModelCatalog::new(vec![entry("a", "bed", [1.0, 1.0, 1.0]), entry("a", "bed", [1.0, 2.0, 1.0])]).is_err());
        assert!(ModelCatalog::new(vec![entry("a", "bed", [1.0, 0.0, 1.0])]).is_err());
    }
}
