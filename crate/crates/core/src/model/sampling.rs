use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::region::fibonacci_sphere;
use crate::model::{RegionSpec, TatPatConfig, Vec3};

/// Minimum number of requested surface points.
pub const MIN_SURFACE_POINTS: usize = 32;

/// Which measurement surface a sampling lives on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "surface", rename_all = "snake_case")]
pub enum Surface {
    /// The boundary of the support region.
    Omega { region: RegionSpec },
    /// The sphere `|x| = radius`.
    Sphere { radius: f64 },
}

impl Surface {
    pub fn area(&self) -> f64 {
        match self {
            Surface::Omega { region } => region.surface_area(),
            Surface::Sphere { radius } => 4.0 * std::f64::consts::PI * radius * radius,
        }
    }

    pub fn sphere_radius(&self) -> Option<f64> {
        match self {
            Surface::Sphere { radius } => Some(*radius),
            Surface::Omega { region: RegionSpec::Ball { center, radius } } if center.norm() == 0.0 => Some(*radius),
            Surface::Omega { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurfaceId {
    /// `∂Ω`
    Omega,
    /// `∂B_R`
    ReferenceSphere,
}

/// Quadrature points and weights on a measurement surface.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySampling {
    pub surface: Surface,
    pub points: Vec<Vec3>,
    pub weights: Vec<f64>,
}

impl BoundarySampling {
    pub fn new(surface: Surface, points: Vec<Vec3>, weights: Vec<f64>) -> Result<Self> {
        if points.len() != weights.len() || points.is_empty() {
            return Err(Error::Mismatch(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidParameter {
                name: "weights".into(),
                reason: "surface weights must be positive".into(),
            });
        }
        Ok(BoundarySampling { surface, points, weights })
    }

    /// Fibonacci lattice on `|x| = radius`, azimuthally rotated by `phase`.
    pub fn sphere(radius: f64, n_points: usize, phase: f64) -> Result<Self> {
        if n_points < MIN_SURFACE_POINTS {
            return Err(Error::Precondition(format!(
                "need at least {MIN_SURFACE_POINTS} surface points, got {n_points}"
            )));
        }
        let (points, weights) = fibonacci_sphere(n_points, radius, phase);
        BoundarySampling::new(Surface::Sphere { radius }, points, weights)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Weighted L2 norm of complex or real samples on the surface.
    pub fn l2_norm(&self, values: impl IntoIterator<Item = f64>) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v * v).sum::<f64>().sqrt()
    }
}

/// Samples `∂Ω` or `∂B_R` of a configuration.
pub fn sample_surface(surface: SurfaceId, config: &TatPatConfig, n_points: usize) -> Result<BoundarySampling> {
    sample_surface_with_phase(surface, config, n_points, 0.0)
}

/// As [`sample_surface`], with the sphere lattices rotated by `phase` radians.
pub fn sample_surface_with_phase(
    surface: SurfaceId,
    config: &TatPatConfig,
    n_points: usize,
    phase: f64,
) -> Result<BoundarySampling> {
    if n_points < MIN_SURFACE_POINTS {
        return Err(Error::Precondition(format!(
            "need at least {MIN_SURFACE_POINTS} surface points, got {n_points}"
        )));
    }
    match surface {
        SurfaceId::ReferenceSphere => BoundarySampling::sphere(config.radius, n_points, phase),
        SurfaceId::Omega => {
            let (points, weights) = match config.omega {
                RegionSpec::Ball { center, radius } => {
                    let (p, w) = fibonacci_sphere(n_points, radius, phase);
                    (p.into_iter().map(|x| x + center).collect(), w)
                }
                region => region.surface_quadrature(n_points),
            };
            BoundarySampling::new(Surface::Omega { region: config.omega }, points, weights)
        }
    }
}
