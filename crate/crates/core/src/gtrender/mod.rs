//! Ground-truth ray casting of instantiated scenes: per-pixel depth,
//! surface normal, instance id and semantic label.

mod camera;
mod output;

use rayon::prelude::*;

use crate::error::Result;
use crate::geometry::{add3, cross3, dot3, normalize3, scale3, sub3, Vec3};
use crate::scene::SceneLayout;

pub use camera::{build_camera, Camera, CameraSpec};
pub use output::{encode_normal, write_frame, write_pfm, Channel, FrameSidecar};

/// Hits closer than this in `t` count as ties.
pub const TIE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Vec3,
    pub dir: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub t: f64,
    pub instance_id: u32,
    /// Unit world normal facing the ray.
    pub normal: Vec3,
}

/// Upright box rotated by `yaw` about the vertical axis through its centre.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedBox {
    pub center: Vec3,
    pub yaw: f64,
    pub half: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Box(OrientedBox),
    Quad { origin: Vec3, u: Vec3, v: Vec3 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Primitive {
    pub instance_id: u32,
    pub shape: Shape,
}

/// Box proxies of the placed objects followed by the shell quads.
pub fn scene_primitives(layout: &SceneLayout) -> Vec<Primitive> {
    let mut prims: Vec<Primitive> = layout
        .placed
        .iter()
        .map(|p| Primitive {
            instance_id: p.instance_id,
            shape: Shape::Box(OrientedBox {
                center: [p.position[0], p.position[1], p.position[2] + 0.5 * p.dims[2]],
                yaw: p.heading,
                half: scale3(p.dims, 0.5),
            }),
        })
        .collect();
    prims.extend(layout.room.quads.iter().map(|q| Primitive {
        instance_id: q.instance_id,
        shape: Shape::Quad {
            origin: q.origin,
            u: q.edge_u,
            v: q.edge_v,
        },
    }));
    prims
}

fn facing(n: Vec3, d: Vec3) -> Vec3 {
    if dot3(n, d) > 0.0 {
        scale3(n, -1.0)
    } else {
        n
    }
}

/// First `t >= t_min` at which the ray crosses the shape's surface, with the
/// face normal there.
fn crossings(shape: &Shape, ray: &Ray, t_min: f64) -> Option<(f64, Vec3)> {
    match *shape {
        Shape::Quad { origin, u, v } => {
            let n = cross3(u, v);
            let denom = dot3(ray.dir, n);
            if denom == 0.0 {
                return None;
            }
            let t = dot3(sub3(origin, ray.origin), n) / denom;
            if !(t >= t_min) {
                return None;
            }
            let rel = sub3(add3(ray.origin, scale3(ray.dir, t)), origin);
            let a = dot3(rel, u) / dot3(u, u);
            let b = dot3(rel, v) / dot3(v, v);
            if !((0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b)) {
                return None;
            }
            Some((t, normalize3(n)))
        }
        Shape::Box(bx) => {
            let (s, c) = bx.yaw.sin_cos();
            let axes = [[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]];
            let rel = sub3(ray.origin, bx.center);
            let (mut t0, mut t1) = (f64::NEG_INFINITY, f64::INFINITY);
            let (mut n0, mut n1) = ([0.0; 3], [0.0; 3]);
            for k in 0..3 {
                let o = dot3(rel, axes[k]);
                let d = dot3(ray.dir, axes[k]);
                if d == 0.0 {
                    if o.abs() > bx.half[k] {
                        return None;
                    }
                    continue;
                }
                let (mut ta, mut tb) = ((-bx.half[k] - o) / d, (bx.half[k] - o) / d);
                if ta > tb {
                    std::mem::swap(&mut ta, &mut tb);
                }
                if ta > t0 {
                    t0 = ta;
                    n0 = scale3(axes[k], -d.signum());
                }
                if tb < t1 {
                    t1 = tb;
                    n1 = scale3(axes[k], d.signum());
                }
            }
            if t0 > t1 {
                return None;
            }
            if t0 >= t_min {
                Some((t0, n0))
            } else if t1 >= t_min {
                Some((t1, n1))
            } else {
                None
            }
        }
    }
}

/// Nearest hit with `t >= near`; ties within [`TIE_EPS`] go to the lower id.
pub fn intersect_scene(ray: &Ray, prims: &[Primitive], near: f64) -> Option<Hit> {
    let mut best: Option<Hit> = None;
    for p in prims {
        let Some((t, n)) = crossings(&p.shape, ray, near) else {
            continue;
        };
        let better = match best {
            None => true,
            Some(b) => t < b.t - TIE_EPS || ((t - b.t).abs() <= TIE_EPS && p.instance_id < b.instance_id),
        };
        if better {
            best = Some(Hit {
                t,
                instance_id: p.instance_id,
                normal: facing(n, ray.dir),
            });
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthFrame {
    pub width: u32,
    pub height: u32,
    /// Camera-space z in meters, row-major from the top-left; 0 = no hit.
    pub depth: Vec<f64>,
    /// Unit world normal; zero where nothing was hit.
    pub normal: Vec<Vec3>,
    pub instance: Vec<u16>,
    pub semantic: Vec<u16>,
}

impl GroundTruthFrame {
    pub fn idx(&self, i: u32, j: u32) -> usize {
        j as usize * self.width as usize + i as usize
    }
}

pub fn render_ground_truth(layout: &SceneLayout, spec: &CameraSpec) -> Result<GroundTruthFrame> {
    let cam = build_camera(spec)?;
    let prims = scene_primitives(layout);
    let semantic: std::collections::BTreeMap<u32, u16> = layout
        .instance_categories()
        .into_iter()
        .map(|(id, cat)| (id, layout.label_table.get(cat).copied().unwrap_or(0)))
        .collect();
    let (w, h) = (spec.width, spec.height);
    let rows: Vec<Vec<(f64, Vec3, u16, u16)>> = (0..h)
        .into_par_iter()
        .map(|j| {
            (0..w)
                .map(|i| {
                    let ray = Ray {
                        origin: cam.origin,
                        dir: cam.ray(i, j),
                    };
                    match intersect_scene(&ray, &prims, spec.near) {
                        Some(hit) => {
                            let id = hit.instance_id as u16;
                            (hit.t, hit.normal, id, semantic[&hit.instance_id])
                        }
                        None => (0.0, [0.0; 3], 0, 0),
                    }
                })
                .collect()
        })
        .collect();
    let n = (w * h) as usize;
    let mut f = GroundTruthFrame {
        width: w,
        height: h,
        depth: Vec::with_capacity(n),
        normal: Vec::with_capacity(n),
        instance: Vec::with_capacity(n),
        semantic: Vec::with_capacity(n),
    };
    for (d, nrm, id, sem) in rows.into_iter().flatten() {
        f.depth.push(d);
        f.normal.push(nrm);
        f.instance.push(id);
        f.semantic.push(sem);
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_box(center: Vec3) -> Primitive {
        Primitive {
            instance_id: 1,
            shape: Shape::Box(OrientedBox {
                center,
                yaw: 0.0,
                half: [0.5; 3],
            }),
        }
    }

    const RAY: Ray = Ray {
        origin: [0.0; 3],
        dir: [0.0, 0.0, 1.0],
    };

    #[test]
    fn plane_hit() {
        let wall = Primitive {
            instance_id: 7,
            shape: Shape::Quad {
                origin: [-5.0, -5.0, 3.0],
                u: [10.0, 0.0, 0.0],
                v: [0.0, 10.0, 0.0],
            },
        };
        let h = intersect_scene(&RAY, &[wall], 0.01).unwrap();
        assert_eq!((h.t, h.normal, h.instance_id), (3.0, [0.0, 0.0, -1.0], 7));
    }

    #[test]
    fn box_slab() {
        let h = intersect_scene(&RAY, &[unit_box([0.0, 0.0, 5.0])], 0.01).unwrap();
        assert_eq!(h.t, 4.5);
        assert_eq!(h.normal, [0.0, 0.0, -1.0]);
    }

    #[test]
    fn parallel_ray_misses() {
        assert!(intersect_scene(&RAY, &[unit_box([2.0, 0.0, 5.0])], 0.01).is_none());
        let side = Primitive {
            instance_id: 2,
            shape: Shape::Quad {
                origin: [1.0, -1.0, 0.0],
                u: [0.0, 2.0, 0.0],
                v: [0.0, 0.0, 9.0],
            },
        };
        assert!(intersect_scene(&RAY, &[side], 0.01).is_none());
    }

    #[test]
    fn inside_box_sees_far_face() {
        let h = intersect_scene(&RAY, &[unit_box([0.0, 0.0, 0.2])], 0.01).unwrap();
        assert!((h.t - 0.7).abs() < 1e-12);
        assert_eq!(h.normal, [0.0, 0.0, -1.0]);
    }

    #[test]
    fn ties_go_to_lower_id() {
        let mut a = unit_box([0.0, 0.0, 5.0]);
        let mut b = a;
        a.instance_id = 9;
        b.instance_id = 4;
        assert_eq!(intersect_scene(&RAY, &[a, b], 0.01).unwrap().instance_id, 4);
        assert_eq!(intersect_scene(&RAY, &[b, a], 0.01).unwrap().instance_id, 4);
    }

    #[test]
    fn rotated_box_normal() {
        let p = Primitive {
            instance_id: 1,
            shape: Shape::Box(OrientedBox {
                center: [3.0, 0.0, 0.0],
                yaw: std::f64::consts::FRAC_PI_4,
                half: [0.5, 0.5, 0.5],
            }),
        };
        let r = Ray {
            origin: [0.0, 0.0, 0.0],
            dir: [1.0, 0.0, 0.0],
        };
        let h = intersect_scene(&r, &[p], 0.0).unwrap();
        assert!((h.t - (3.0 - 0.5 * 2f64.sqrt())).abs() < 1e-12);
        assert!((crate::geometry::norm3(h.normal) - 1.0).abs() < 1e-12);
        assert!(dot3(h.normal, r.dir) < 0.0);
    }
}
