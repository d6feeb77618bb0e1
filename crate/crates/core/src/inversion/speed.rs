use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::helmholtz::FreqTrace;
use crate::identity::{harmonic_moments, k_expansion_fit, moments_from_boundary, FitModel};
use crate::kernels::{distance_moment, newtonian_potential_real, static_potential_on};
use crate::model::{region_mask, RealField, RegionSpec, Vec3};

/// Relative participation threshold for weights and pairing denominators.
pub const PARTICIPATION: f64 = 1e-6;
/// Weights whose maximum falls below this fraction of the same quantity
/// computed from `|q|` count as vanishing.
pub const DEGENERACY: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedOptions {
    pub fit_model: FitModel,
    pub participation: f64,
    pub degeneracy: f64,
}

impl Default for SpeedOptions {
    fn default() -> Self {
        SpeedOptions { fit_model: FitModel::Parity, participation: PARTICIPATION, degeneracy: DEGENERACY }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantSpeedEstimate {
    pub c: f64,
    /// Estimate of `1 - c⁻²`.
    pub contrast: f64,
    pub weight_max: f64,
    pub weight_reference: f64,
    pub participating: usize,
    /// Relative weighted misfit of the scalar model.
    pub residual: f64,
}

/// `-2πi u3 - (1/8π) ∫ q |x - y| dy` on the sampling.
fn cubic_remainder(q: &RealField, freq: &FreqTrace, model: FitModel) -> Result<Vec<f64>> {
    let fit = k_expansion_fit(freq, model)?;
    let dist = distance_moment(q, &freq.sampling.points);
    Ok(fit
        .u3
        .iter()
        .zip(dist)
        .map(|(u, d)| (u * Complex64::new(0.0, -2.0 * PI)).re - d.re / (8.0 * PI))
        .collect())
}

/// `∫_region Δ⁻¹(q)(y) Φ0(x - y) dy` at `targets`.
fn layered_potential(q: &RealField, region: &RealField, targets: &[Vec3]) -> Result<Vec<f64>> {
    let r = region.values().to_vec();
    let pot = static_potential_on(q, |i| r[i] != 0.0);
    let density = pot.zip_map(region, |p, m| p * m)?;
    Ok(newtonian_potential_real(&density, targets))
}

fn check_q(q: &RealField) -> Result<()> {
    if q.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidField("non-finite q".into()));
    }
    Ok(())
}

/// Constant speed on `omega` from the cubic coefficient of the data, given `q`.
pub fn recover_constant_c(q: &RealField, freq: &FreqTrace, omega: &RegionSpec) -> Result<ConstantSpeedEstimate> {
    recover_constant_c_with(q, freq, omega, &SpeedOptions::default())
}

pub fn recover_constant_c_with(
    q: &RealField,
    freq: &FreqTrace,
    omega: &RegionSpec,
    opts: &SpeedOptions,
) -> Result<ConstantSpeedEstimate> {
    check_q(q)?;
    let pts = &freq.sampling.points;
    let chi = region_mask(q.grid(), omega);
    let w = layered_potential(q, &chi, pts)?;
    let w_ref = layered_potential(&q.map(f64::abs), &chi, pts)?
        .iter()
        .fold(0.0, |m: f64, v| m.max(v.abs()));
    let w_max = w.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    if !(w_ref > 0.0) || w_max < opts.degeneracy * w_ref {
        return Err(Error::DegenerateWeights(format!(
            "max |W| = {w_max:.3e} against reference {w_ref:.3e}"
        )));
    }
    let r = cubic_remainder(q, freq, opts.fit_model)?;
    let (mut num, mut den, mut n) = (0.0, 0.0, 0);
    for ((wi, ri), qw) in w.iter().zip(&r).zip(&freq.sampling.weights) {
        if wi.abs() >= opts.participation * w_max {
            num += qw * wi * ri;
            den += qw * wi * wi;
            n += 1;
        }
    }
    let e = num / den;
    let (mut res, mut norm) = (0.0, 0.0);
    for ((wi, ri), qw) in w.iter().zip(&r).zip(&freq.sampling.weights) {
        res += qw * (ri - e * wi).powi(2);
        norm += qw * ri * ri;
    }
    let residual = if norm > 0.0 { (res / norm).sqrt() } else { 0.0 };
    if !(e < 1.0) {
        return Err(Error::NonPhysical(format!("1 - c⁻² estimated as {e:.4}")));
    }
    Ok(ConstantSpeedEstimate {
        c: (1.0 - e).powf(-0.5),
        contrast: e,
        weight_max: w_max,
        weight_reference: w_ref,
        participating: n,
        residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaOptions {
    pub l_max: usize,
    pub fit_model: FitModel,
    pub participation: f64,
    pub degeneracy: f64,
    /// Estimates of `γ⁻²` below this are reported as no contrast.
    pub contrast_tol: f64,
}

impl Default for GammaOptions {
    fn default() -> Self {
        GammaOptions {
            l_max: 8,
            fit_model: FitModel::Parity,
            participation: PARTICIPATION,
            degeneracy: DEGENERACY,
            contrast_tol: 1e-2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaEstimate {
    /// `None` when no contrast was detected.
    pub gamma: Option<f64>,
    /// Estimate of `γ⁻²`.
    pub inverse_sq: f64,
    /// Standard error of `inverse_sq` from the pairing residual.
    pub std_error: f64,
    pub denominator_max: f64,
    pub denominator_reference: f64,
    pub participating: usize,
}

impl GammaEstimate {
    pub fn no_contrast(&self) -> bool {
        self.gamma.is_none()
    }
}

/// Inclusion contrast on a known `sigma` inside a known background speed.
pub fn recover_inclusion_gamma(
    q: &RealField,
    freq: &FreqTrace,
    background: &RealField,
    sigma: &RegionSpec,
    opts: &GammaOptions,
) -> Result<GammaEstimate> {
    check_q(q)?;
    if background.grid() != q.grid() {
        return Err(Error::Mismatch("background speed lives on another grid".into()));
    }
    if background.values().iter().any(|&c| !(c > 0.0 && c.is_finite())) {
        return Err(Error::InvalidField("background speed must be positive".into()));
    }
    let pts = &freq.sampling.points;
    let bg = background.map(|c| 1.0 - c.powi(-2));
    let known = layered_potential(q, &bg, pts)?;
    let r: Vec<Complex64> = cubic_remainder(q, freq, opts.fit_model)?
        .iter()
        .zip(&known)
        .map(|(r, k)| Complex64::new(r - k, 0.0))
        .collect();
    let measured = moments_from_boundary(&r, &freq.sampling, opts.l_max)?;

    let chi = region_mask(q.grid(), sigma);
    let pairing = |q: &RealField| {
        let c = chi.values().to_vec();
        let pot = static_potential_on(q, |i| c[i] != 0.0);
        harmonic_moments(&pot.zip_map(&chi, |p, m| p * m).expect("same grid"), opts.l_max)
    };
    let d = pairing(q);
    let d_ref = pairing(&q.map(f64::abs)).max_abs();
    let d_max = d.max_abs();
    if !(d_ref > 0.0) || d_max < opts.degeneracy * d_ref {
        return Err(Error::DegenerateWeights(format!(
            "max pairing denominator {d_max:.3e} against reference {d_ref:.3e}"
        )));
    }
    let (mut num, mut den, mut n) = (0.0, 0.0, 0usize);
    for (dv, mv) in d.values().iter().zip(measured.values()) {
        if dv.norm() >= opts.participation * d_max {
            num += (dv.conj() * mv).re;
            den += dv.norm_sqr();
            n += 1;
        }
    }
    let g = -num / den;
    let mut res = 0.0;
    for (dv, mv) in d.values().iter().zip(measured.values()) {
        if dv.norm() >= opts.participation * d_max {
            res += (mv + dv * g).norm_sqr();
        }
    }
    let dof = (2 * n).saturating_sub(1).max(1) as f64;
    let std_error = (res / dof / den).sqrt();
    let detected = g.abs() >= opts.contrast_tol.max(3.0 * std_error);
    if detected && g < 0.0 {
        return Err(Error::NonPhysical(format!("γ⁻² estimated as {g:.4}")));
    }
    Ok(GammaEstimate {
        gamma: detected.then(|| g.powf(-0.5)),
        inverse_sq: g,
        std_error,
        denominator_max: d_max,
        denominator_reference: d_ref,
        participating: n,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositivityReport {
    pub pass: bool,
    /// Most negative voxel when `q` dips below the tolerance.
    pub witness: Option<[usize; 3]>,
    pub min_q: f64,
    pub integral: f64,
    /// Minimum of `Δ⁻¹q` over omega.
    pub min_potential: f64,
}

/// Relative tolerance of [`positivity_check`].
pub const POSITIVITY_TOL: f64 = 1e-6;

pub fn positivity_check(q: &RealField, omega: &RegionSpec) -> PositivityReport {
    let grid = *q.grid();
    let max = q.max_abs();
    let tol = POSITIVITY_TOL * max;
    let (mut min_q, mut at) = (f64::INFINITY, 0);
    for (i, &v) in q.values().iter().enumerate() {
        if v < min_q {
            min_q = v;
            at = i;
        }
    }
    let integral = q.integral();
    let abs_integral = q.map(f64::abs).integral();
    let inside: Vec<bool> = (0..grid.len()).map(|i| omega.contains(grid.center_of(i))).collect();
    let pot = static_potential_on(q, |i| inside[i]);
    let min_potential = pot
        .values()
        .iter()
        .zip(&inside)
        .filter(|(_, &m)| m)
        .map(|(p, _)| *p)
        .fold(f64::INFINITY, f64::min);
    let negative = min_q < -tol;
    let pass = !negative && max > 0.0 && integral > POSITIVITY_TOL * abs_integral;
    PositivityReport {
        pass,
        witness: negative.then(|| grid.unravel(at)),
        min_q,
        integral,
        min_potential,
    }
}

/// Sound speed used to turn `q` back into `f`.
#[derive(Debug, Clone, PartialEq)]
pub enum SpeedModel {
    Constant(f64),
    Inclusion { background: RealField, gamma: Option<f64>, sigma: RegionSpec },
}

/// `f = c² q` voxelwise.
pub fn recover_source(q: &RealField, speed: &SpeedModel) -> Result<RealField> {
    match speed {
        SpeedModel::Constant(c) => {
            if !(*c > 0.0 && c.is_finite()) {
                return Err(Error::param("c", "must be positive"));
            }
            Ok(q.scale(c * c))
        }
        SpeedModel::Inclusion { background, gamma, sigma } => {
            if background.grid() != q.grid() {
                return Err(Error::Mismatch("background speed lives on another grid".into()));
            }
            let g = match gamma {
                Some(g) if *g > 0.0 => g.powi(-2),
                Some(_) => return Err(Error::param("gamma", "must be positive")),
                None => 0.0,
            };
            let chi = region_mask(q.grid(), sigma);
            let slow = background.zip_map(&chi, |c, m| c.powi(-2) + g * m)?;
            q.zip_map(&slow, |q, s| q / s)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::VoxelGrid;

    fn gaussian(g: VoxelGrid, omega: RegionSpec) -> RealField {
        RealField::from_fn(g, |x| if omega.contains(x) { (-6.0 * x.norm_sq()).exp() } else { 0.0 })
    }

    #[test]
    fn gaussian_passes_positivity() {
        let g = VoxelGrid::centered_cube(16, 1.0).unwrap();
        let omega = RegionSpec::ball(Vec3::ZERO, 0.6);
        let r = positivity_check(&gaussian(g, omega), &omega);
        assert!(r.pass && r.witness.is_none());
        assert!(r.min_potential > 0.0);
    }

    #[test]
    fn zero_q_fails_positivity() {
        let g = VoxelGrid::centered_cube(8, 1.0).unwrap();
        let r = positivity_check(&RealField::zeros(g), &RegionSpec::ball(Vec3::ZERO, 0.5));
        assert!(!r.pass);
    }

    #[test]
    fn negative_lobe_gives_witness() {
        let g = VoxelGrid::centered_cube(16, 1.0).unwrap();
        let omega = RegionSpec::ball(Vec3::ZERO, 0.8);
        let q = RealField::from_fn(g, |x| {
            let a = (-20.0 * (x - Vec3::new(0.3, 0.0, 0.0)).norm_sq()).exp();
            let b = (-20.0 * (x + Vec3::new(0.3, 0.0, 0.0)).norm_sq()).exp();
            a - b
        });
        let r = positivity_check(&q, &omega);
        assert!(!r.pass);
        let w = r.witness.unwrap();
        assert!(g.center(w).x1 < 0.0);
    }

    #[test]
    fn source_from_constant_speed() {
        let g = VoxelGrid::centered_cube(8, 1.0).unwrap();
        let omega = RegionSpec::ball(Vec3::ZERO, 0.6);
        let q = gaussian(g, omega);
        assert_eq!(recover_source(&q, &SpeedModel::Constant(1.0)).unwrap(), q);
        let f = recover_source(&q, &SpeedModel::Constant(1.5)).unwrap();
        for (a, b) in f.values().iter().zip(q.values()) {
            assert_eq!(*a, 2.25 * b);
        }
        let zero = recover_source(&RealField::zeros(g), &SpeedModel::Constant(1.3)).unwrap();
        assert!(zero.values().iter().all(|&v| v == 0.0));
        assert!(recover_source(&q, &SpeedModel::Constant(0.0)).is_err());
    }

    #[test]
    fn source_from_inclusion_model() {
        let g = VoxelGrid::centered_cube(8, 1.0).unwrap();
        let sigma = RegionSpec::ball(Vec3::ZERO, 0.3);
        let bg = RealField::constant(g, 1.2);
        let q = RealField::constant(g, 1.0);
        let f = recover_source(&q, &SpeedModel::Inclusion { background: bg, gamma: Some(2.0), sigma }).unwrap();
        for i in 0..g.len() {
            let s = if sigma.contains(g.center_of(i)) { 1.2f64.powi(-2) + 0.25 } else { 1.2f64.powi(-2) };
            assert!((f.values()[i] - 1.0 / s).abs() < 1e-14);
        }
    }
}
