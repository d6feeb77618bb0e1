//! Geometry, grids, fields and configurations shared by every stage.

mod config;
mod grid;
mod region;
mod sampling;
mod sweep;
mod vec3;

pub use config::{region_mask, Invariant, TatPatConfig, Violation};
pub use grid::{trilinear_stencil, ComplexField, FieldValue, RealField, ScalarField, VoxelGrid, MIN_DIM};
pub use region::{fibonacci_sphere, RegionSpec};
pub use sampling::{
    sample_surface, sample_surface_with_phase, BoundarySampling, Surface, SurfaceId, MIN_SURFACE_POINTS,
};
pub use sweep::KSweep;
pub use vec3::Vec3;
