//! Reconstruction of `q = c⁻²f`, the sound speed and the source from
//! low-frequency boundary data.

mod pipeline;
mod prior;
mod probe;
mod recover;
mod speed;
mod tikhonov;

pub use pipeline::{
    constant_speed_from_q, reconstruct_constant_speed, reconstruct_inclusion, InclusionOptions,
    ReconstructionDiagnostics, ReconstructionResult,
};
pub use prior::{Prior, PriorKind};
pub use probe::{fourier_probe, ProbeResult};
pub use recover::{potential_from_fit, recover_q, recover_q_from_moments, QDiagnostics, QRecovery, RecoverOptions};
pub use speed::{
    positivity_check, recover_constant_c, recover_constant_c_with, recover_inclusion_gamma, recover_source,
    ConstantSpeedEstimate, GammaEstimate, GammaOptions, PositivityReport, SpeedModel, SpeedOptions, DEGENERACY,
    PARTICIPATION, POSITIVITY_TOL,
};
pub use tikhonov::{Regularization, TikhonovReport};
