use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::grammar::RoomDims;
use crate::gtrender::CameraSpec;

use super::PlacedObject;

/// Closed interval `[lo, hi]`; `lo == hi` fixes the value.
pub type Range = [f64; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LightRanges {
    pub count: [u32; 2],
    /// Height above the floor, clipped below the ceiling.
    pub height: Range,
    pub intensity: Range,
    /// Per-channel linear RGB ranges.
    pub color: [Range; 3],
}

impl Default for LightRanges {
    fn default() -> Self {
        LightRanges {
            count: [1, 3],
            height: [2.0, 2.6],
            intensity: [0.5, 2.0],
            color: [[0.8, 1.0], [0.8, 1.0], [0.7, 1.0]],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaterialRanges {
    /// Part tags that receive a material on every placed object.
    pub parts: Vec<String>,
    pub roughness: Range,
    pub metallic: Range,
    pub reflectivity: Range,
    pub textures: Vec<String>,
}

impl Default for MaterialRanges {
    fn default() -> Self {
        MaterialRanges {
            parts: vec!["body".into()],
            roughness: [0.2, 0.9],
            metallic: [0.0, 0.3],
            reflectivity: [0.0, 0.5],
            textures: vec!["wood".into(), "fabric".into(), "plastic".into(), "metal".into()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CameraRanges {
    pub count: [u32; 2],
    /// Eye height above the floor.
    pub height: Range,
    /// Height of the look-at point.
    pub target_height: Range,
    /// Keeps eye and target this far from the walls.
    pub margin: f64,
    /// Focal length in pixels; `fx = fy`, principal point at the image centre.
    pub focal: Range,
    pub width: u32,
    pub height_px: u32,
}

impl Default for CameraRanges {
    fn default() -> Self {
        CameraRanges {
            count: [1, 1],
            height: [1.2, 1.7],
            target_height: [0.5, 1.0],
            margin: 0.3,
            focal: [250.0, 350.0],
            width: 320,
            height_px: 240,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttributeRanges {
    pub lights: LightRanges,
    pub materials: MaterialRanges,
    pub cameras: CameraRanges,
}

fn check(name: &str, r: Range) -> Result<()> {
    if r[0].is_finite() && r[1].is_finite() && r[0] <= r[1] {
        Ok(())
    } else {
        Err(Error::EmptyRange(name.into()))
    }
}

fn check_unit(name: &str, r: Range) -> Result<()> {
    check(name, r)?;
    if r[0] < 0.0 || r[1] > 1.0 {
        return Err(Error::Invalid(format!("range `{name}` must lie in [0, 1]")));
    }
    Ok(())
}

impl AttributeRanges {
    pub fn validate(&self) -> Result<()> {
        let l = &self.lights;
        if l.count[0] > l.count[1] {
            return Err(Error::EmptyRange("lights.count".into()));
        }
        check("lights.height", l.height)?;
        check("lights.intensity", l.intensity)?;
        for (k, c) in ["lights.color.r", "lights.color.g", "lights.color.b"].iter().zip(l.color) {
            check_unit(k, c)?;
        }
        let m = &self.materials;
        check_unit("materials.roughness", m.roughness)?;
        check_unit("materials.metallic", m.metallic)?;
        check_unit("materials.reflectivity", m.reflectivity)?;
        if m.textures.is_empty() {
            return Err(Error::EmptyRange("materials.textures".into()));
        }
        let c = &self.cameras;
        if c.count[0] > c.count[1] {
            return Err(Error::EmptyRange("cameras.count".into()));
        }
        check("cameras.height", c.height)?;
        check("cameras.target_height", c.target_height)?;
        check("cameras.focal", c.focal)?;
        if !(c.focal[0] > 0.0) || c.width == 0 || c.height_px == 0 {
            return Err(Error::Invalid("cameras: focal and image size must be > 0".into()));
        }
        if !(c.margin.is_finite() && c.margin >= 0.0) {
            return Err(Error::Invalid("cameras.margin must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Light {
    pub position: Vec3,
    pub intensity: f64,
    pub color: Vec3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Material {
    pub instance_id: u32,
    pub part: String,
    pub roughness: f64,
    pub metallic: f64,
    pub reflectivity: f64,
    pub texture: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttributeConfig {
    pub lights: Vec<Light>,
    /// One entry per (instance, part), ordered by instance then part.
    pub materials: Vec<Material>,
    pub cameras: Vec<CameraSpec>,
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, r: Range) -> f64 {
    r[0] + (r[1] - r[0]) * rng.random::<f64>()
}

fn clamp_span(r: Range, lo: f64, hi: f64) -> Range {
    if lo > hi {
        let m = 0.5 * (lo + hi);
        return [m, m];
    }
    [r[0].clamp(lo, hi), r[1].clamp(lo, hi)]
}

fn count<R: Rng + ?Sized>(rng: &mut R, c: [u32; 2]) -> u32 {
    rng.random_range(c[0]..=c[1])
}

/// Draws lights, per-part materials and cameras. Positions are drawn inside
/// the room; heights are clipped to stay below the ceiling.
pub fn sample_attributes<R: Rng + ?Sized>(
    ranges: &AttributeRanges,
    room: &RoomDims,
    placed: &[PlacedObject],
    rng: &mut R,
) -> Result<AttributeConfig> {
    ranges.validate()?;
    let l = &ranges.lights;
    let zl = clamp_span(l.height, 0.0, room.height - 0.05);
    let lights = (0..count(rng, l.count))
        .map(|_| Light {
            position: [
                uniform(rng, [0.0, room.width]),
                uniform(rng, [0.0, room.depth]),
                uniform(rng, zl),
            ],
            intensity: uniform(rng, l.intensity),
            color: [uniform(rng, l.color[0]), uniform(rng, l.color[1]), uniform(rng, l.color[2])],
        })
        .collect();

    let m = &ranges.materials;
    let mut materials = Vec::new();
    for p in placed {
        for part in &m.parts {
            materials.push(Material {
                instance_id: p.instance_id,
                part: part.clone(),
                roughness: uniform(rng, m.roughness),
                metallic: uniform(rng, m.metallic),
                reflectivity: uniform(rng, m.reflectivity),
                texture: m.textures[rng.random_range(0..m.textures.len())].clone(),
            });
        }
    }

    let c = &ranges.cameras;
    let xs = clamp_span([c.margin, room.width - c.margin], 0.0, room.width);
    let ys = clamp_span([c.margin, room.depth - c.margin], 0.0, room.depth);
    let ze = clamp_span(c.height, 0.0, room.height);
    let zt = clamp_span(c.target_height, 0.0, room.height);
    let mut cameras = Vec::new();
    for _ in 0..count(rng, c.count) {
        let eye = [uniform(rng, xs), uniform(rng, ys), uniform(rng, ze)];
        let mut target = [uniform(rng, xs), uniform(rng, ys), uniform(rng, zt)];
        if (target[0] - eye[0]).hypot(target[1] - eye[1]) < 1e-3 {
            // vertical views are degenerate with a z-up hint; look at the room centre instead
            target = [0.5 * room.width, 0.5 * room.depth, target[2]];
            if (target[0] - eye[0]).hypot(target[1] - eye[1]) < 1e-3 {
                target[0] += 1.0;
            }
        }
        let f = uniform(rng, c.focal);
        cameras.push(CameraSpec::centered(eye, target, c.width, c.height_px, f));
    }
    Ok(AttributeConfig {
        lights,
        materials,
        cameras,
    })
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    const ROOM: RoomDims = RoomDims {
        width: 4.0,
        depth: 3.0,
        height: 2.5,
    };

    fn fixed() -> AttributeRanges {
        AttributeRanges {
            lights: LightRanges {
                count: [2, 2],
                height: [2.2, 2.2],
                intensity: [1.0, 1.0],
                color: [[1.0, 1.0]; 3],
            },
            materials: MaterialRanges {
                parts: vec!["body".into()],
                roughness: [0.5, 0.5],
                metallic: [0.0, 0.0],
                reflectivity: [0.1, 0.1],
                textures: vec!["wood".into()],
            },
            cameras: CameraRanges {
                count: [1, 1],
                height: [1.5, 1.5],
                target_height: [1.0, 1.0],
                margin: 0.3,
                focal: [300.0, 300.0],
                width: 32,
                height_px: 24,
            },
        }
    }

    #[test]
    fn degenerate_ranges_fix_scalars() {
        let a = sample_attributes(&fixed(), &ROOM, &[], &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let b = sample_attributes(&fixed(), &ROOM, &[], &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        assert_eq!(a.lights.len(), 2);
        for l in a.lights.iter().chain(&b.lights) {
            assert_eq!((l.intensity, l.color, l.position[2]), (1.0, [1.0; 3], 2.2));
        }
        assert_eq!(a.cameras[0].fx, 300.0);
    }

    #[test]
    fn seeded_count_is_reproducible() {
        let mut r = fixed();
        r.lights.count = [1, 3];
        let n = |s| sample_attributes(&r, &ROOM, &[], &mut ChaCha8Rng::seed_from_u64(s)).unwrap().lights.len();
        assert_eq!(n(9), n(9));
        assert!((1..=3).contains(&n(9)));
    }

    #[test]
    fn intensity_mean() {
        let mut r = AttributeRanges::default();
        r.lights.count = [1000, 1000];
        let a = sample_attributes(&r, &ROOM, &[], &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let mean = a.lights.iter().map(|l| l.intensity).sum::<f64>() / 1000.0;
        assert!((mean - 1.25).abs() < 0.05, "{mean}");
        for l in &a.lights {
            assert!(ROOM.contains([l.position[0], l.position[1]]) && l.position[2] < ROOM.height);
        }
    }

    #[test]
    fn empty_ranges_are_errors() {
        let mut r = fixed();
        r.lights.intensity = [2.0, 1.0];
        let e = sample_attributes(&r, &ROOM, &[], &mut ChaCha8Rng::seed_from_u64(0)).unwrap_err();
        assert!(matches!(e, Error::EmptyRange(ref n) if n == "lights.intensity"));
        let mut r = fixed();
        r.materials.textures.clear();
        assert!(sample_attributes(&r, &ROOM, &[], &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }
}
