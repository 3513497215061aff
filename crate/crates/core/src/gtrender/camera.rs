use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{add3, cross3, dot3, norm3, normalize3, scale3, sub3, Vec3};

fn default_up() -> Vec3 {
    [0.0, 0.0, 1.0]
}

fn default_near() -> f64 {
    0.01
}

/// Pinhole camera. Pixel `(0, 0)` is the top-left corner of the image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraSpec {
    pub position: Vec3,
    pub look_at: Vec3,
    #[serde(default = "default_up")]
    pub up: Vec3,
    pub width: u32,
    pub height: u32,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    #[serde(default = "default_near")]
    pub near: f64,
}

impl CameraSpec {
    /// Camera with the principal point at the image centre and square pixels.
    pub fn centered(position: Vec3, look_at: Vec3, width: u32, height: u32, f: f64) -> Self {
        CameraSpec {
            position,
            look_at,
            up: default_up(),
            width,
            height,
            fx: f,
            fy: f,
            cx: 0.5 * width as f64,
            cy: 0.5 * height as f64,
            near: default_near(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::Camera("width and height must be >= 1".into()));
        }
        if !(self.fx > 0.0 && self.fy > 0.0) || !self.fx.is_finite() || !self.fy.is_finite() {
            return Err(Error::Camera("fx and fy must be finite and > 0".into()));
        }
        if !(self.near.is_finite() && self.near >= 0.0) {
            return Err(Error::Camera("near clip must be finite and >= 0".into()));
        }
        let all = self.position.iter().chain(&self.look_at).chain(&self.up);
        if !all.chain([&self.cx, &self.cy]).all(|v| v.is_finite()) {
            return Err(Error::Camera("non-finite camera parameter".into()));
        }
        if self.position == self.look_at {
            return Err(Error::Camera("position equals look_at".into()));
        }
        Ok(())
    }
}

/// Orthonormal right-handed camera frame: x right, y down, z forward.
#[derive(Debug, Clone, PartialEq)]
pub struct Camera {
    pub spec: CameraSpec,
    pub origin: Vec3,
    pub right: Vec3,
    pub down: Vec3,
    pub forward: Vec3,
}

pub fn build_camera(spec: &CameraSpec) -> Result<Camera> {
    spec.validate()?;
    let forward = normalize3(sub3(spec.look_at, spec.position));
    let r = cross3(forward, spec.up);
    let n = norm3(r);
    if !(n > 1e-9 * norm3(spec.up)) || norm3(spec.up) == 0.0 {
        return Err(Error::Camera("up hint is parallel to the viewing direction".into()));
    }
    let right = scale3(r, 1.0 / n);
    let down = cross3(forward, right);
    Ok(Camera {
        spec: spec.clone(),
        origin: spec.position,
        right,
        down,
        forward,
    })
}

impl Camera {
    /// World direction through the centre of pixel `(i, j)`, scaled so its
    /// forward component is 1. The ray parameter is then camera-space depth.
    pub fn ray(&self, i: u32, j: u32) -> Vec3 {
        let x = (i as f64 + 0.5 - self.spec.cx) / self.spec.fx;
        let y = (j as f64 + 0.5 - self.spec.cy) / self.spec.fy;
        add3(add3(scale3(self.right, x), scale3(self.down, y)), self.forward)
    }

    /// World vector expressed in camera coordinates.
    pub fn to_camera(&self, v: Vec3) -> Vec3 {
        [dot3(v, self.right), dot3(v, self.down), dot3(v, self.forward)]
    }
}
