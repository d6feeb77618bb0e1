//! Low-frequency identities: harmonic moments, the second-order functional
//! and the k-expansion of boundary data.

mod expansion;
mod moments;

pub use expansion::{
    certify_sign, composed_density, displayed_terms, expansion_terms, k_expansion_fit, loglog_slope,
    orth2_functional, relative_surface_error, ted1_check, ted1_check_with, ExpansionTerms, FitModel, KFit,
    SignCertificate, Ted1Options, Ted1Report, MAX_CONDITION,
};
pub use moments::{
    harmonic_moments, max_boundary_degree, moments_from_boundary, orth1_by_degree, orth1_residual,
    orth1_residual_moments, sphere_fit,
};
