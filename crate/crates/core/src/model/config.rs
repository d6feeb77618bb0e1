use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{RealField, RegionSpec, Vec3, VoxelGrid};

/// Sound speed `c` and source `f` on a grid, with the support region `omega`
/// and the reference ball `B_R` (centered at the origin) that contains it.
#[derive(Debug, Clone, PartialEq)]
pub struct TatPatConfig {
    pub omega: RegionSpec,
    pub radius: f64,
    pub c: RealField,
    pub f: RealField,
    pub c0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Invariant {
    GridMismatch,
    GridContainsBall,
    RegionValid,
    OmegaInsideBall,
    SpeedBoundPositive,
    SpeedBound,
    SpeedOutsideOmega,
    SourceOutsideOmega,
}

impl fmt::Display for Invariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Invariant::GridMismatch => "c and f share one grid",
            Invariant::GridContainsBall => "grid box strictly contains B_R",
            Invariant::RegionValid => "omega has positive volume",
            Invariant::OmegaInsideBall => "omega lies inside B_R",
            Invariant::SpeedBoundPositive => "c0 > 0",
            Invariant::SpeedBound => "c >= c0",
            Invariant::SpeedOutsideOmega => "c = 1 outside omega",
            Invariant::SourceOutsideOmega => "f = 0 outside omega",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub invariant: Invariant,
    pub voxel: Option<[usize; 3]>,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.voxel {
            Some(v) => write!(f, "{} violated at voxel {:?}: {}", self.invariant, v, self.detail),
            None => write!(f, "{} violated: {}", self.invariant, self.detail),
        }
    }
}

const EXTERIOR_TOL: f64 = 1e-12;

impl TatPatConfig {
    pub fn grid(&self) -> &VoxelGrid {
        self.c.grid()
    }

    /// Builds a config and rejects it if any invariant fails.
    pub fn new(omega: RegionSpec, radius: f64, c: RealField, f: RealField, c0: f64) -> Result<Self> {
        let cfg = TatPatConfig { omega, radius, c, f, c0 };
        let violations = cfg.validate();
        if let Some(v) = violations.first() {
            return Err(Error::Precondition(v.to_string()));
        }
        Ok(cfg)
    }

    /// All invariant violations, one witness per invariant. Never fails.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let grid = *self.c.grid();
        if self.f.grid() != &grid {
            out.push(Violation {
                invariant: Invariant::GridMismatch,
                voxel: None,
                detail: "c and f are sampled on different grids".into(),
            });
            return out;
        }
        if !grid.strictly_contains_ball(Vec3::ZERO, self.radius) {
            out.push(Violation {
                invariant: Invariant::GridContainsBall,
                voxel: None,
                detail: format!("R = {} not strictly inside the grid box", self.radius),
            });
        }
        if let Err(e) = self.omega.validate() {
            out.push(Violation { invariant: Invariant::RegionValid, voxel: None, detail: e.to_string() });
        }
        if self.omega.max_radius() >= self.radius {
            out.push(Violation {
                invariant: Invariant::OmegaInsideBall,
                voxel: None,
                detail: format!("omega reaches radius {} >= R = {}", self.omega.max_radius(), self.radius),
            });
        }
        if !(self.c0 > 0.0 && self.c0.is_finite()) {
            out.push(Violation {
                invariant: Invariant::SpeedBoundPositive,
                voxel: None,
                detail: format!("c0 = {}", self.c0),
            });
        }

        let mut seen = [false; 3];
        for idx in 0..grid.len() {
            let p = grid.center_of(idx);
            let inside = self.omega.contains(p);
            let c = self.c.values()[idx];
            let f = self.f.values()[idx];
            if !seen[0] && c < self.c0 {
                seen[0] = true;
                out.push(Violation {
                    invariant: Invariant::SpeedBound,
                    voxel: Some(grid.unravel(idx)),
                    detail: format!("c = {c} < c0 = {}", self.c0),
                });
            }
            if !seen[1] && !inside && (c - 1.0).abs() > EXTERIOR_TOL {
                seen[1] = true;
                out.push(Violation {
                    invariant: Invariant::SpeedOutsideOmega,
                    voxel: Some(grid.unravel(idx)),
                    detail: format!("c = {c} at a voxel outside omega"),
                });
            }
            if !seen[2] && !inside && f != 0.0 {
                seen[2] = true;
                out.push(Violation {
                    invariant: Invariant::SourceOutsideOmega,
                    voxel: Some(grid.unravel(idx)),
                    detail: format!("f = {f} at a voxel outside omega"),
                });
            }
        }
        out
    }

    /// `c^{-2}`.
    pub fn slowness_sq(&self) -> RealField {
        self.c.map(|c| 1.0 / (c * c))
    }

    /// `q = c^{-2} f`, the combination fixed by the leading low-frequency data.
    pub fn q(&self) -> RealField {
        self.c.zip_map(&self.f, |c, f| f / (c * c)).expect("c and f share a grid")
    }

    /// `1 - c^{-2}`, supported in omega.
    pub fn contrast(&self) -> RealField {
        self.c.map(|c| 1.0 - 1.0 / (c * c))
    }

    /// Indicator of omega sampled at voxel centers.
    pub fn omega_mask(&self) -> RealField {
        region_mask(self.grid(), &self.omega)
    }

    pub fn max_speed(&self) -> f64 {
        self.c.values().iter().copied().fold(0.0, f64::max)
    }

    /// Same config with the source scaled by `alpha`.
    pub fn with_scaled_source(&self, alpha: f64) -> Self {
        TatPatConfig { f: self.f.scale(alpha), ..self.clone() }
    }
}

/// Center-sampled indicator of a region.
pub fn region_mask(grid: &VoxelGrid, region: &RegionSpec) -> RealField {
    RealField::from_fn(*grid, |p| if region.contains(p) { 1.0 } else { 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> TatPatConfig {
        let grid = VoxelGrid::centered_cube(16, 1.1).unwrap();
        let omega = RegionSpec::ball(Vec3::ZERO, 0.5);
        let c = RealField::from_fn(grid, |p| if omega.contains(p) { 1.3 } else { 1.0 });
        let f = RealField::from_fn(grid, |p| if omega.contains(p) { (-p.norm_sq() * 10.0).exp() } else { 0.0 });
        TatPatConfig { omega, radius: 1.0, c, f, c0: 1.0 }
    }

    #[test]
    fn valid_config_has_no_violations() {
        assert!(base().validate().is_empty());
    }

    #[test]
    fn speed_bound_violation_names_voxel() {
        let mut cfg = base();
        let idx = cfg.grid().index([8, 8, 8]);
        cfg.c.values_mut()[idx] = 0.9 * cfg.c0;
        let v = cfg.validate();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].invariant, Invariant::SpeedBound);
        assert_eq!(v[0].voxel, Some([8, 8, 8]));
    }

    #[test]
    fn source_outside_omega_is_reported() {
        let mut cfg = base();
        cfg.f.values_mut()[0] = 1.0;
        let v = cfg.validate();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].invariant, Invariant::SourceOutsideOmega);
        assert_eq!(v[0].voxel, Some([0, 0, 0]));
    }

    #[test]
    fn omega_must_fit_in_reference_ball() {
        let mut cfg = base();
        cfg.radius = 0.45;
        let kinds: Vec<_> = cfg.validate().into_iter().map(|v| v.invariant).collect();
        assert!(kinds.contains(&Invariant::OmegaInsideBall));
    }
}
