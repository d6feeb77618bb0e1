use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::prior::{real_rows, Basis, Prior, PriorKind};
use super::tikhonov::{Regularization, TikhonovReport, TikhonovSolver};
use crate::error::{Error, Result};
use crate::helmholtz::FreqTrace;
use crate::identity::{harmonic_moments, k_expansion_fit, moments_from_boundary, FitModel};
use crate::kernels::MomentSet;
use crate::model::{RealField, RegionSpec, VoxelGrid};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecoverOptions {
    /// Highest moment degree matched.
    pub l_max: usize,
    pub regularization: Regularization,
    pub fit_model: FitModel,
    /// Lower bound on the relative noise level used by the discrepancy rule.
    pub noise_floor: f64,
}

impl Default for RecoverOptions {
    fn default() -> Self {
        RecoverOptions {
            l_max: 8,
            regularization: Regularization::default(),
            fit_model: FitModel::Parity,
            noise_floor: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QDiagnostics {
    pub prior: PriorKind,
    pub l_max: usize,
    pub unknowns: usize,
    pub tikhonov: TikhonovReport,
    /// RMS relative residual of the k-fit over the boundary points.
    pub fit_residual: f64,
    pub fit_condition: f64,
    /// Relative misfit between moments of the recovered `q` and the data moments.
    pub moment_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QRecovery {
    pub q: RealField,
    pub data_moments: MomentSet,
    pub diagnostics: QDiagnostics,
}

/// Newtonian potential of `q` on the sampling: `V₀q = 2πi u1`.
pub fn potential_from_fit(u1: &[Complex64]) -> Vec<Complex64> {
    u1.iter().map(|u| u * Complex64::new(0.0, 2.0 * std::f64::consts::PI)).collect()
}

/// Recovers `q = c⁻²f` from boundary spectra by moment matching.
pub fn recover_q(
    freq: &FreqTrace,
    grid: &VoxelGrid,
    omega: &RegionSpec,
    prior: &Prior,
    opts: &RecoverOptions,
) -> Result<QRecovery> {
    let fit = k_expansion_fit(freq, opts.fit_model)?;
    let potential = potential_from_fit(&fit.u1);
    let moments = moments_from_boundary(&potential, &freq.sampling, opts.l_max)?;
    let w = &freq.sampling.weights;
    let total: f64 = w.iter().sum();
    let fit_residual = (w.iter().zip(&fit.residual).map(|(w, r)| w * r * r).sum::<f64>() / total).sqrt();
    let noise = fit_residual.max(opts.noise_floor);
    let mut out = recover_q_from_moments(&moments, grid, omega, prior, opts.regularization, noise)?;
    out.diagnostics.fit_residual = fit_residual;
    out.diagnostics.fit_condition = fit.condition;
    Ok(out)
}

/// Moment-matching step alone; `noise` is relative to the data norm.
pub fn recover_q_from_moments(
    moments: &MomentSet,
    grid: &VoxelGrid,
    omega: &RegionSpec,
    prior: &Prior,
    reg: Regularization,
    noise: f64,
) -> Result<QRecovery> {
    if !(noise >= 0.0) {
        return Err(Error::param("noise", "must be non-negative"));
    }
    let l_max = moments.l_max();
    let basis = Basis::build(prior, grid, omega)?;
    let a = basis.moment_matrix(grid, l_max);
    let b = real_rows(moments.values(), l_max);
    let b_norm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let solver = TikhonovSolver::new(a)?;
    let (coef, tikhonov) = if b_norm == 0.0 {
        let (_, r) = solver.solve(&b, Regularization::Fixed { lambda: 0.0 }, 0.0);
        (vec![0.0; basis.len()], r)
    } else {
        solver.solve(&b, reg, noise * b_norm)
    };
    if tikhonov.rank == 0 {
        return Err(Error::IllConditioned(f64::INFINITY));
    }
    let q = basis.embed(grid, &coef);
    let fitted = harmonic_moments(&q, l_max);
    let misfit = real_rows(fitted.values(), l_max)
        .iter()
        .zip(&b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt();
    let moment_residual = if b_norm == 0.0 { misfit } else { misfit / b_norm };
    Ok(QRecovery {
        q,
        data_moments: moments.clone(),
        diagnostics: QDiagnostics {
            prior: prior.kind(),
            l_max,
            unknowns: basis.len(),
            tikhonov,
            fit_residual: 0.0,
            fit_condition: 1.0,
            moment_residual,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Vec3;

    fn setup() -> (VoxelGrid, RegionSpec) {
        (VoxelGrid::centered_cube(16, 1.0).unwrap(), RegionSpec::cylinder(Vec3::ZERO, 0.5, 0.5))
    }

    #[test]
    fn zero_moments_give_zero_q() {
        let (g, omega) = setup();
        let prior = Prior::X3IndependentCylinder { pixel_block: 1, weight: None };
        let r = recover_q_from_moments(&MomentSet::zeros(6), &g, &omega, &prior, Regularization::default(), 1e-8)
            .unwrap();
        assert!(r.q.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn representable_source_reproduced_without_regularization() {
        let (g, omega) = setup();
        let prior = Prior::X3IndependentCylinder { pixel_block: 4, weight: None };
        let basis = Basis::build(&prior, &g, &omega).unwrap();
        let truth: Vec<f64> = (0..basis.len()).map(|j| 1.0 + 0.25 * j as f64).collect();
        let q = basis.embed(&g, &truth);
        let m = harmonic_moments(&q, 8);
        let r = recover_q_from_moments(&m, &g, &omega, &prior, Regularization::Fixed { lambda: 0.0 }, 0.0).unwrap();
        assert!(r.diagnostics.tikhonov.rank >= basis.len());
        let err = r.q.relative_l2_error(&q).unwrap();
        let cond = r.diagnostics.tikhonov.sigma_max / r.diagnostics.tikhonov.sigma_min;
        assert!(err < 1e-15 * cond * 100.0, "err {err:.3e} cond {cond:.3e}");
        assert!(r.diagnostics.moment_residual < 1e-10);
    }

    #[test]
    fn radial_prior_matches_mass() {
        let g = VoxelGrid::centered_cube(20, 1.0).unwrap();
        let omega = RegionSpec::ball(Vec3::ZERO, 0.7);
        let q = RealField::from_fn(g, |x| if omega.contains(x) { (-4.0 * x.norm_sq()).exp() } else { 0.0 });
        let m = harmonic_moments(&q, 4);
        let r = recover_q_from_moments(&m, &g, &omega, &Prior::Radial, Regularization::default(), 1e-8).unwrap();
        let m0 = harmonic_moments(&r.q, 0).values()[0];
        assert!((m0 - m.values()[0]).norm() < 1e-3 * m.values()[0].norm());
    }
}
