use serde::{Deserialize, Serialize};

use super::prior::Prior;
use super::recover::{recover_q, QDiagnostics, QRecovery, RecoverOptions};
use super::speed::{
    positivity_check, recover_constant_c_with, recover_inclusion_gamma, recover_source, ConstantSpeedEstimate,
    GammaEstimate, GammaOptions, PositivityReport, SpeedModel, SpeedOptions,
};
use crate::error::{Error, Result};
use crate::helmholtz::FreqTrace;
use crate::model::{region_mask, RealField, RegionSpec, VoxelGrid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionDiagnostics {
    /// Absent when `q` was supplied rather than recovered.
    pub q: Option<QDiagnostics>,
    pub positivity: PositivityReport,
    pub speed: Option<ConstantSpeedEstimate>,
    pub contrast: Option<GammaEstimate>,
    /// Alternating sweeps used by the inclusion pipeline.
    pub sweeps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionResult {
    pub q: RealField,
    pub c_value: Option<f64>,
    pub gamma: Option<f64>,
    pub f: RealField,
    pub diagnostics: ReconstructionDiagnostics,
}

/// Speed and source from a known `q` under the constant-speed model.
pub fn constant_speed_from_q(
    q: RealField,
    freq: &FreqTrace,
    omega: &RegionSpec,
    opts: &SpeedOptions,
) -> Result<ReconstructionResult> {
    let positivity = positivity_check(&q, omega);
    let speed = recover_constant_c_with(&q, freq, omega, opts)?;
    let f = recover_source(&q, &SpeedModel::Constant(speed.c))?;
    Ok(ReconstructionResult {
        c_value: Some(speed.c),
        gamma: None,
        f,
        diagnostics: ReconstructionDiagnostics { q: None, positivity, speed: Some(speed), contrast: None, sweeps: 0 },
        q,
    })
}

/// `q`, then the constant speed, then `f`.
pub fn reconstruct_constant_speed(
    freq: &FreqTrace,
    grid: &VoxelGrid,
    omega: &RegionSpec,
    prior: &Prior,
    opts: &RecoverOptions,
) -> Result<ReconstructionResult> {
    let QRecovery { q, diagnostics, .. } = recover_q(freq, grid, omega, prior, opts)?;
    let speed_opts = SpeedOptions { fit_model: opts.fit_model, ..SpeedOptions::default() };
    let mut out = constant_speed_from_q(q, freq, omega, &speed_opts)?;
    out.diagnostics.q = Some(diagnostics);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InclusionOptions {
    pub recover: RecoverOptions,
    pub gamma: GammaOptions,
    pub pixel_block: usize,
    pub max_sweeps: usize,
    /// Stop once `γ⁻²` changes by less than this between sweeps.
    pub tol: f64,
}

impl Default for InclusionOptions {
    fn default() -> Self {
        InclusionOptions {
            recover: RecoverOptions::default(),
            gamma: GammaOptions::default(),
            pixel_block: 1,
            max_sweeps: 20,
            tol: 1e-6,
        }
    }
}

/// Inclusion contrast with an `x3`-independent source: alternates between
/// `q = (c_b⁻² + g χ_Σ) f0(x1, x2)` and the estimate of `g = γ⁻²`.
pub fn reconstruct_inclusion(
    freq: &FreqTrace,
    grid: &VoxelGrid,
    omega: &RegionSpec,
    background: &RealField,
    sigma: &RegionSpec,
    opts: &InclusionOptions,
) -> Result<ReconstructionResult> {
    if background.grid() != grid {
        return Err(Error::Mismatch("background speed lives on another grid".into()));
    }
    let chi = region_mask(grid, sigma);
    let mut g = 0.0;
    let mut sweeps = 0;
    loop {
        sweeps += 1;
        let weight = background.zip_map(&chi, |c, m| c.powi(-2) + g * m)?;
        let prior = Prior::X3IndependentCylinder { pixel_block: opts.pixel_block, weight: Some(weight) };
        let rec = recover_q(freq, grid, omega, &prior, &opts.recover)?;
        let est = recover_inclusion_gamma(&rec.q, freq, background, sigma, &opts.gamma)?;
        let next = if est.no_contrast() { 0.0 } else { est.inverse_sq };
        let converged = (next - g).abs() < opts.tol;
        g = next;
        if converged || sweeps >= opts.max_sweeps {
            let positivity = positivity_check(&rec.q, omega);
            let speed = SpeedModel::Inclusion { background: background.clone(), gamma: est.gamma, sigma: *sigma };
            let f = recover_source(&rec.q, &speed)?;
            return Ok(ReconstructionResult {
                c_value: None,
                gamma: est.gamma,
                f,
                diagnostics: ReconstructionDiagnostics {
                    q: Some(rec.diagnostics),
                    positivity,
                    speed: None,
                    contrast: Some(est),
                    sweeps,
                },
                q: rec.q,
            });
        }
    }
}
