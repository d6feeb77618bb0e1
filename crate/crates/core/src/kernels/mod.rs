//! Kernels, potentials and spherical-harmonic machinery.

mod convolver;
mod green;
mod potential;
mod sph;

pub use convolver::{static_potential_on, GridConvolver};
pub use green::{phi, phi0, phi_r, phi_smooth_r, INV_FOUR_PI};
pub use potential::{
    distance_moment, helmholtz_potential, newtonian_potential, newtonian_potential_real, voxel_weight,
    EQUAL_VOLUME_RADIUS,
};
pub use sph::{
    addition_series, harmonic_plane_wave, lm_count, lm_index, solid_harmonic, solid_harmonics_all,
    solid_harmonics_into, sph_harm, MomentSet,
};
