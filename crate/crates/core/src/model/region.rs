//! Compact regions (the support set and inclusions) and their surfaces.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegionSpec {
    Ball { center: Vec3, radius: f64 },
    /// Axis along `x3`: `|x' - c'| <= radius`, `|x3 - c3| <= half_height`.
    Cylinder { center: Vec3, radius: f64, half_height: f64 },
    Box { min: Vec3, max: Vec3 },
}

impl RegionSpec {
    pub fn ball(center: Vec3, radius: f64) -> Self {
        RegionSpec::Ball { center, radius }
    }

    pub fn cylinder(center: Vec3, radius: f64, half_height: f64) -> Self {
        RegionSpec::Cylinder { center, radius, half_height }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            RegionSpec::Ball { center, radius } => center.is_finite() && radius.is_finite() && radius > 0.0,
            RegionSpec::Cylinder { center, radius, half_height } => {
                center.is_finite() && radius > 0.0 && half_height > 0.0 && radius.is_finite() && half_height.is_finite()
            }
            RegionSpec::Box { min, max } => {
                min.is_finite() && max.is_finite() && max.x1 > min.x1 && max.x2 > min.x2 && max.x3 > min.x3
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidRegion(format!("{self:?} has no positive volume")))
        }
    }

    /// Indicator of the closed region.
    pub fn contains(&self, p: Vec3) -> bool {
        match *self {
            RegionSpec::Ball { center, radius } => (p - center).norm_sq() <= radius * radius,
            RegionSpec::Cylinder { center, radius, half_height } => {
                let d = p - center;
                d.x1 * d.x1 + d.x2 * d.x2 <= radius * radius && d.x3.abs() <= half_height
            }
            RegionSpec::Box { min, max } => {
                p.x1 >= min.x1 && p.x1 <= max.x1 && p.x2 >= min.x2 && p.x2 <= max.x2 && p.x3 >= min.x3 && p.x3 <= max.x3
            }
        }
    }

    pub fn volume(&self) -> f64 {
        match *self {
            RegionSpec::Ball { radius, .. } => 4.0 / 3.0 * PI * radius.powi(3),
            RegionSpec::Cylinder { radius, half_height, .. } => PI * radius * radius * 2.0 * half_height,
            RegionSpec::Box { min, max } => (max.x1 - min.x1) * (max.x2 - min.x2) * (max.x3 - min.x3),
        }
    }

    pub fn surface_area(&self) -> f64 {
        match *self {
            RegionSpec::Ball { radius, .. } => 4.0 * PI * radius * radius,
            RegionSpec::Cylinder { radius, half_height, .. } => {
                2.0 * PI * radius * 2.0 * half_height + 2.0 * PI * radius * radius
            }
            RegionSpec::Box { min, max } => {
                let d = max - min;
                2.0 * (d.x1 * d.x2 + d.x2 * d.x3 + d.x1 * d.x3)
            }
        }
    }

    /// Largest distance from the coordinate origin to a point of the region.
    pub fn max_radius(&self) -> f64 {
        match *self {
            RegionSpec::Ball { center, radius } => center.norm() + radius,
            RegionSpec::Cylinder { center, radius, half_height } => {
                let rho = (center.x1 * center.x1 + center.x2 * center.x2).sqrt() + radius;
                let z = center.x3.abs() + half_height;
                (rho * rho + z * z).sqrt()
            }
            RegionSpec::Box { min, max } => {
                let m = |a: f64, b: f64| a.abs().max(b.abs());
                Vec3::new(m(min.x1, max.x1), m(min.x2, max.x2), m(min.x3, max.x3)).norm()
            }
        }
    }

    /// Whether `other` is contained in `self`, checked on a dense surface
    /// sampling of `other` (regions here are convex).
    pub fn contains_region(&self, other: &RegionSpec) -> bool {
        let samples = other.surface_quadrature(2000);
        samples.0.iter().all(|&p| self.contains_with_slack(p, 1e-12))
    }

    fn contains_with_slack(&self, p: Vec3, eps: f64) -> bool {
        match *self {
            RegionSpec::Ball { center, radius } => (p - center).norm() <= radius + eps,
            RegionSpec::Cylinder { center, radius, half_height } => {
                let d = p - center;
                (d.x1 * d.x1 + d.x2 * d.x2).sqrt() <= radius + eps && d.x3.abs() <= half_height + eps
            }
            RegionSpec::Box { min, max } => {
                p.x1 >= min.x1 - eps
                    && p.x1 <= max.x1 + eps
                    && p.x2 >= min.x2 - eps
                    && p.x2 <= max.x2 + eps
                    && p.x3 >= min.x3 - eps
                    && p.x3 <= max.x3 + eps
            }
        }
    }

    /// Points on the boundary with surface weights summing to the area.
    /// Spheres use a Fibonacci lattice, cylinders and boxes midpoint
    /// product rules. `n` is a target count; product rules may return a few
    /// more points.
    pub fn surface_quadrature(&self, n: usize) -> (Vec<Vec3>, Vec<f64>) {
        match *self {
            RegionSpec::Ball { center, radius } => {
                let (pts, w) = fibonacci_sphere(n, radius, 0.0);
                (pts.into_iter().map(|p| p + center).collect(), w)
            }
            RegionSpec::Cylinder { center, radius, half_height } => {
                cylinder_surface(center, radius, half_height, n)
            }
            RegionSpec::Box { min, max } => box_surface(min, max, n),
        }
    }
}

const GOLDEN_ANGLE: f64 = 2.399_963_229_728_653;

/// Fibonacci lattice on the sphere of given radius about the origin, rotated
/// in azimuth by `phase` radians, with equal weights.
pub fn fibonacci_sphere(n: usize, radius: f64, phase: f64) -> (Vec<Vec3>, Vec<f64>) {
    let w = 4.0 * PI * radius * radius / n as f64;
    let pts = (0..n)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            let s = (1.0 - z * z).max(0.0).sqrt();
            let phi = i as f64 * GOLDEN_ANGLE + phase;
            Vec3::new(radius * s * phi.cos(), radius * s * phi.sin(), radius * z)
        })
        .collect();
    (pts, vec![w; n])
}

fn cylinder_surface(center: Vec3, radius: f64, hh: f64, n: usize) -> (Vec<Vec3>, Vec<f64>) {
    let lateral = 4.0 * PI * radius * hh;
    let cap = PI * radius * radius;
    let total = lateral + 2.0 * cap;
    let n_lat = ((n as f64 * lateral / total).max(8.0)) as usize;
    let n_cap = ((n as f64 * cap / total).max(4.0)) as usize;

    let mut pts = Vec::with_capacity(n + 64);
    let mut w = Vec::with_capacity(n + 64);

    // lateral: n_theta x n_z with aspect matching the unrolled surface
    let aspect = 2.0 * PI * radius / (2.0 * hh);
    let n_z = ((n_lat as f64 / aspect).sqrt().round() as usize).max(2);
    let n_theta = (n_lat / n_z).max(4);
    let dth = 2.0 * PI / n_theta as f64;
    let dz = 2.0 * hh / n_z as f64;
    for a in 0..n_theta {
        let th = (a as f64 + 0.5) * dth;
        for b in 0..n_z {
            let z = -hh + (b as f64 + 0.5) * dz;
            pts.push(center + Vec3::new(radius * th.cos(), radius * th.sin(), z));
            w.push(radius * dth * dz);
        }
    }

    // caps: polar midpoint rule, exact in r for the area element r dr
    let n_r = ((n_cap as f64 / PI).sqrt().round() as usize).max(1);
    let n_phi = (n_cap / n_r).max(4);
    let dr = radius / n_r as f64;
    let dphi = 2.0 * PI / n_phi as f64;
    for z in [-hh, hh] {
        for a in 0..n_r {
            let r = (a as f64 + 0.5) * dr;
            for b in 0..n_phi {
                let ph = (b as f64 + 0.5) * dphi;
                pts.push(center + Vec3::new(r * ph.cos(), r * ph.sin(), z));
                w.push(r * dr * dphi);
            }
        }
    }
    (pts, w)
}

fn box_surface(min: Vec3, max: Vec3, n: usize) -> (Vec<Vec3>, Vec<f64>) {
    let d = max - min;
    let faces = [(d.x2 * d.x3, 0usize), (d.x1 * d.x3, 1), (d.x1 * d.x2, 2)];
    let total: f64 = 2.0 * faces.iter().map(|f| f.0).sum::<f64>();
    let lo = min.to_array();
    let hi = max.to_array();
    let mut pts = Vec::new();
    let mut w = Vec::new();
    for &(area, axis) in &faces {
        let (a1, a2) = match axis {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        let len1 = hi[a1] - lo[a1];
        let len2 = hi[a2] - lo[a2];
        let m = (n as f64 * area / total).max(4.0);
        let n1 = ((m * len1 / len2).sqrt().round() as usize).max(2);
        let n2 = ((m / n1 as f64).round() as usize).max(2);
        let d1 = len1 / n1 as f64;
        let d2 = len2 / n2 as f64;
        for side in [lo[axis], hi[axis]] {
            for i in 0..n1 {
                for j in 0..n2 {
                    let mut p = [0.0; 3];
                    p[axis] = side;
                    p[a1] = lo[a1] + (i as f64 + 0.5) * d1;
                    p[a2] = lo[a2] + (j as f64 + 0.5) * d2;
                    pts.push(Vec3::from(p));
                    w.push(d1 * d2);
                }
            }
        }
    }
    (pts, w)
}
