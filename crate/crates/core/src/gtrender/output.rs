use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec3;

use super::{build_camera, CameraSpec, GroundTruthFrame};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Depth,
    Normal,
    Instance,
    Semantic,
}

impl Channel {
    pub const ALL: [Channel; 4] = [Channel::Depth, Channel::Normal, Channel::Instance, Channel::Semantic];

    pub fn name(self) -> &'static str {
        match self {
            Channel::Depth => "depth",
            Channel::Normal => "normal",
            Channel::Instance => "instance",
            Channel::Semantic => "semantic",
        }
    }
}

impl FromStr for Channel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Channel::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown channel `{s}`")))
    }
}

/// `floor(255·(n + 1)/2 + 0.5)` per component.
pub fn encode_normal(n: Vec3) -> [u8; 3] {
    if n == [0.0; 3] {
        return [0; 3];
    }
    n.map(|c| (255.0 * (c + 1.0) / 2.0 + 0.5).floor().clamp(0.0, 255.0) as u8)
}

fn depth_mm(d: f64) -> u16 {
    (d * 1000.0).round().clamp(0.0, 65535.0) as u16
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// Little-endian greyscale PFM; rows are stored bottom to top.
pub fn write_pfm(path: &Path, width: u32, height: u32, data: &[f64]) -> Result<()> {
    let mut w = create(path)?;
    let mut buf = format!("Pf\n{width} {height}\n-1.0\n").into_bytes();
    for j in (0..height as usize).rev() {
        for v in &data[j * width as usize..(j + 1) * width as usize] {
            buf.extend_from_slice(&(*v as f32).to_le_bytes());
        }
    }
    w.write_all(&buf).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

fn write_png(path: &Path, width: u32, height: u32, color: png::ColorType, depth: png::BitDepth, data: &[u8]) -> Result<()> {
    let mut enc = png::Encoder::new(create(path)?, width, height);
    enc.set_color(color);
    enc.set_depth(depth);
    let mut w = enc.write_header()?;
    w.write_image_data(data)?;
    w.finish()?;
    Ok(())
}

fn write_png16(path: &Path, width: u32, height: u32, data: impl Iterator<Item = u16>) -> Result<()> {
    let bytes: Vec<u8> = data.flat_map(u16::to_be_bytes).collect();
    write_png(path, width, height, png::ColorType::Grayscale, png::BitDepth::Sixteen, &bytes)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameSidecar {
    pub camera: CameraSpec,
    pub width: u32,
    pub height: u32,
    pub label_table: BTreeMap<String, u16>,
    /// Category of every instance id that can appear in the instance image.
    pub instances: BTreeMap<u32, String>,
    /// Written files, by channel, relative to the sidecar's directory.
    pub files: BTreeMap<String, Vec<String>>,
}

/// Writes the selected channels next to `base` (`<base>_depth.pfm`,
/// `<base>_depth.png`, `<base>_normal.png`, ...) plus `<base>.json`.
/// Normals are written in the camera frame. Returns every written path.
pub fn write_frame(
    frame: &GroundTruthFrame,
    spec: &CameraSpec,
    label_table: &BTreeMap<String, u16>,
    instances: &BTreeMap<u32, String>,
    base: &Path,
    channels: &[Channel],
) -> Result<Vec<(Channel, PathBuf)>> {
    let cam = build_camera(spec)?;
    let (w, h) = (frame.width, frame.height);
    let stem = base
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .ok_or_else(|| Error::Invalid(format!("bad output base {}", base.display())))?;
    let named = |suffix: &str| base.with_file_name(format!("{stem}_{suffix}"));
    let mut written = Vec::new();
    let mut chans: Vec<Channel> = channels.to_vec();
    chans.sort();
    chans.dedup();
    for c in chans {
        match c {
            Channel::Depth => {
                let pfm = named("depth.pfm");
                write_pfm(&pfm, w, h, &frame.depth)?;
                let png = named("depth.png");
                write_png16(&png, w, h, frame.depth.iter().map(|d| depth_mm(*d)))?;
                written.push((c, pfm));
                written.push((c, png));
            }
            Channel::Normal => {
                let p = named("normal.png");
                let bytes: Vec<u8> = frame
                    .normal
                    .iter()
                    .flat_map(|n| encode_normal(if *n == [0.0; 3] { *n } else { cam.to_camera(*n) }))
                    .collect();
                write_png(&p, w, h, png::ColorType::Rgb, png::BitDepth::Eight, &bytes)?;
                written.push((c, p));
            }
            Channel::Instance => {
                let p = named("instance.png");
                write_png16(&p, w, h, frame.instance.iter().copied())?;
                written.push((c, p));
            }
            Channel::Semantic => {
                let p = named("semantic.png");
                write_png16(&p, w, h, frame.semantic.iter().copied())?;
                written.push((c, p));
            }
        }
    }
    let mut files: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (c, p) in &written {
        let name = p.file_name().unwrap().to_string_lossy().into_owned();
        files.entry(c.name().to_string()).or_default().push(name);
    }
    let side = FrameSidecar {
        camera: spec.clone(),
        width: w,
        height: h,
        label_table: label_table.clone(),
        instances: instances.clone(),
        files,
    };
    let json = base.with_file_name(format!("{stem}.json"));
    std::fs::write(&json, serde_json::to_string_pretty(&side)? + "\n").map_err(|e| Error::io(&json, e))?;
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_encoding() {
        assert_eq!(encode_normal([0.0, 1.0, 0.0]), [128, 255, 128]);
        assert_eq!(encode_normal([0.0, 0.0, -1.0]), [128, 128, 0]);
        assert_eq!(encode_normal([0.0; 3]), [0, 0, 0]);
    }

    #[test]
    fn depth_quantisation() {
        assert_eq!(depth_mm(3.0), 3000);
        assert_eq!(depth_mm(0.0), 0);
        assert_eq!(depth_mm(80.0), 65535);
        assert_eq!(depth_mm(1.2345), 1235);
    }

    #[test]
    fn channel_names_round_trip() {
        for c in Channel::ALL {
            assert_eq!(c.name().parse::<Channel>().unwrap(), c);
        }
        assert!("color".parse::<Channel>().is_err());
    }

    #[test]
    fn pfm_layout() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.pfm");
        write_pfm(&p, 2, 2, &[1.0, 2.0, 3.0, 0.0]).unwrap();
        let bytes = std::fs::read(&p).unwrap();
        let header = b"Pf\n2 2\n-1.0\n";
        assert_eq!(&bytes[..header.len()], header);
        let vals: Vec<f32> = bytes[header.len()..]
            .chunks(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        assert_eq!(vals, vec![3.0, 0.0, 1.0, 2.0]);
    }
}
