//! Scalar cost functions. Every cost is non-negative.

use crate::error::{Error, Result};
use crate::geometry::{angle_diff, Vec2};
use crate::grammar::AddressPrior;

/// `|d − d̄|`.
pub fn cost_dis(d: f64, mean: f64) -> f64 {
    (d - mean).abs()
}

/// Circular `|θ − θ̄|`, in `[0, π]`.
pub fn cost_ori(theta: f64, mean: f64) -> f64 {
    angle_diff(theta, mean)
}

/// `max(0, 1 − gap/d_acc)`, in `[0, 1]`.
pub fn cost_occ(gap: f64, d_acc: f64) -> f64 {
    (1.0 - gap / d_acc).max(0.0)
}

/// Signed distances from a point at `offset` (in the supporting footprint's
/// frame) to the footprint's four edges: `+length`, `−length`, `+width`, `−width`.
pub fn face_distances(offset: Vec2, length: f64, width: f64) -> [f64; 4] {
    [
        0.5 * length - offset[0],
        0.5 * length + offset[0],
        0.5 * width - offset[1],
        0.5 * width + offset[1],
    ]
}

/// `Σ_i |face_i − mean_i|` over the four footprint edges.
pub fn cost_pos(offset: Vec2, length: f64, width: f64, mean_faces: &[f64; 4]) -> f64 {
    face_distances(offset, length, width)
        .iter()
        .zip(mean_faces)
        .map(|(d, m)| cost_dis(*d, *m))
        .sum()
}

/// `−ln p(value)` under an address prior.
pub fn cost_add(slot: &str, value: &str, prior: &AddressPrior) -> Result<f64> {
    match prior.get(value) {
        Some(p) if *p > 0.0 => Ok(-p.ln()),
        _ => Err(Error::AddressOutOfSupport {
            slot: slot.to_string(),
            value: value.to_string(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_PI_2, PI};

    use super::*;

    #[test]
    fn distance_cost() {
        assert_eq!(cost_dis(1.5, 1.5), 0.0);
        assert_eq!(cost_dis(2.0, 1.5), 0.5);
    }

    #[test]
    fn orientation_cost() {
        assert_eq!(cost_ori(0.3, 0.3), 0.0);
        assert!((cost_ori(FRAC_PI_2, 0.0) - FRAC_PI_2).abs() < 1e-15);
        assert!((cost_ori(-PI + 0.1, PI - 0.1) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn occlusion_cost() {
        assert_eq!(cost_occ(0.0, 0.8), 1.0);
        assert_eq!(cost_occ(0.8, 0.8), 0.0);
        assert_eq!(cost_occ(2.0, 0.8), 0.0);
        assert!((cost_occ(0.4, 0.8) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn position_cost() {
        let mean = face_distances([0.0, 0.0], 1.0, 1.0);
        assert_eq!(cost_pos([0.0, 0.0], 1.0, 1.0, &mean), 0.0);
        assert!((cost_pos([0.1, 0.0], 1.0, 1.0, &mean) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn address_cost() {
        let prior = AddressPrior::from([
            ("desk".to_string(), 0.25),
            ("shelf".to_string(), 0.5),
            ("nil".to_string(), 0.25),
        ]);
        assert!((cost_add("a", "desk", &prior).unwrap() - 1.3862943611198906).abs() < 1e-12);
        assert!((cost_add("a", "shelf", &prior).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
        let certain = AddressPrior::from([("desk".to_string(), 1.0)]);
        assert_eq!(cost_add("a", "desk", &certain).unwrap(), 0.0);
        assert!(cost_add("a", "bed", &prior).is_err());
    }
}
