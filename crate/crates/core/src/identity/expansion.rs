use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::helmholtz::{ls_freq_trace, FreqTrace};
use crate::kernels::{distance_moment, newtonian_potential_real, static_potential_on};
use crate::model::{BoundarySampling, KSweep, RealField, TatPatConfig, Vec3};

const I: Complex64 = Complex64::new(0.0, 1.0);
/// Fits with a larger condition number are rejected.
pub const MAX_CONDITION: f64 = 1e8;

/// `(1 - c^{-2}) Δ^{-1}(c^{-2} f)` on the grid.
pub fn composed_density(config: &TatPatConfig) -> RealField {
    let m = config.contrast();
    let mv = m.values().to_vec();
    let pot = static_potential_on(&config.q(), |i| mv[i] != 0.0);
    pot.zip_map(&m, |p, m| p * m).expect("same grid")
}

/// `∫(1 - c^{-2}) Δ^{-1}(c^{-2}f) Φ0(x - y) dy + (1/8π) ∫ c^{-2}f |x - y| dy`.
pub fn orth2_functional(config: &TatPatConfig, targets: &[Vec3]) -> Vec<f64> {
    let composed = newtonian_potential_real(&composed_density(config), targets);
    let dist = distance_moment(&config.q(), targets);
    composed.iter().zip(dist).map(|(a, d)| a + d.re / (8.0 * PI)).collect()
}

/// Quadrature values of the low-frequency coefficients of `û` on a point set:
/// `û ≈ t1 k + t2 k² + (t3 + t4) k³`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionTerms {
    /// `-(i/2π) Δ^{-1}(q)(x)`
    pub t1: Vec<Complex64>,
    /// `(1/8π²) ∫ q`
    pub t2: Complex64,
    /// `(i/2π) ∫(1 - c^{-2}) Δ^{-1}(q) Φ0(x - y) dy`
    pub t3: Vec<Complex64>,
    /// `(i/16π²) ∫ q |x - y| dy`
    pub t4: Vec<Complex64>,
    /// True when `1 - c^{-2}` vanishes identically, so `t3 = 0` exactly.
    pub t3_vanishes: bool,
}

pub fn expansion_terms(config: &TatPatConfig, targets: &[Vec3]) -> ExpansionTerms {
    let q = config.q();
    let v0 = newtonian_potential_real(&q, targets);
    let t1 = v0.iter().map(|v| -I * (v / (2.0 * PI))).collect();
    let t2 = Complex64::new(q.integral() / (8.0 * PI * PI), 0.0);
    let t3_vanishes = config.contrast().values().iter().all(|&m| m == 0.0);
    let t3 = if t3_vanishes {
        vec![Complex64::new(0.0, 0.0); targets.len()]
    } else {
        newtonian_potential_real(&composed_density(config), targets)
            .iter()
            .map(|v| I * (v / (2.0 * PI)))
            .collect()
    };
    let t4 = distance_moment(&q, targets).iter().map(|d| I * (d.re / (16.0 * PI * PI))).collect();
    ExpansionTerms { t1, t2, t3, t4, t3_vanishes }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    /// Complex least squares on `{k, k², k³}`.
    Cubic,
    /// Imaginary part on `{k, k³, k⁵}`, real part on `{k², k⁴}`; uses that the
    /// k^n coefficient of `û` is `i^n` times a real field.
    Parity,
}

/// Per-point coefficients of `k`, `k²`, `k³` in `û(x, k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KFit {
    pub model: FitModel,
    pub u1: Vec<Complex64>,
    pub u2: Vec<Complex64>,
    pub u3: Vec<Complex64>,
    /// Relative fit residual per point.
    pub residual: Vec<f64>,
    pub condition: f64,
}

/// Real least-squares solver on the scaled monomials `(k/k_max)^p`.
struct PolyLs {
    powers: Vec<i32>,
    k_max: f64,
    svd: nalgebra::SVD<f64, nalgebra::Dyn, nalgebra::Dyn>,
    design: DMatrix<f64>,
    condition: f64,
}

impl PolyLs {
    fn new(ks: &[f64], powers: &[i32]) -> Result<Self> {
        if ks.len() < powers.len() {
            return Err(Error::Precondition(format!(
                "{} sweep values cannot determine {} coefficients",
                ks.len(),
                powers.len()
            )));
        }
        let k_max = ks.iter().copied().fold(0.0, f64::max);
        let design = DMatrix::from_fn(ks.len(), powers.len(), |i, j| (ks[i] / k_max).powi(powers[j]));
        let svd = design.clone().svd(true, true);
        let sv = &svd.singular_values;
        let condition = sv.max() / sv.min();
        if !(condition < MAX_CONDITION) {
            return Err(Error::IllConditioned(condition));
        }
        Ok(PolyLs { powers: powers.to_vec(), k_max, svd, design, condition })
    }

    /// Unscaled coefficients and the residual vector.
    fn solve(&self, data: &[f64]) -> (Vec<f64>, DVector<f64>) {
        let b = DVector::from_column_slice(data);
        let x = self.svd.solve(&b, 0.0).expect("SVD has both factors");
        let r = &self.design * &x - b;
        let coef = x.iter().zip(&self.powers).map(|(c, &p)| c / self.k_max.powi(p)).collect();
        (coef, r)
    }
}

/// Fits `û(x, k) ≈ u1 k + u2 k² + u3 k³` at every point (no constant term).
pub fn k_expansion_fit(freq: &FreqTrace, model: FitModel) -> Result<KFit> {
    let ks = freq.ks.values();
    if ks.len() < KSweep::MIN_LEN {
        return Err(Error::Precondition("sweep too small for a cubic fit".into()));
    }
    let n = freq.sampling.len();
    let mut u1 = Vec::with_capacity(n);
    let mut u2 = Vec::with_capacity(n);
    let mut u3 = Vec::with_capacity(n);
    let mut residual = Vec::with_capacity(n);
    let condition;
    match model {
        FitModel::Cubic => {
            let ls = PolyLs::new(ks, &[1, 2, 3])?;
            condition = ls.condition;
            for i in 0..n {
                let d = freq.at_point(i);
                let (cr, rr) = ls.solve(&d.iter().map(|z| z.re).collect::<Vec<_>>());
                let (ci, ri) = ls.solve(&d.iter().map(|z| z.im).collect::<Vec<_>>());
                u1.push(Complex64::new(cr[0], ci[0]));
                u2.push(Complex64::new(cr[1], ci[1]));
                u3.push(Complex64::new(cr[2], ci[2]));
                residual.push(relative(rr.norm_squared() + ri.norm_squared(), d));
            }
        }
        FitModel::Parity => {
            let odd = PolyLs::new(ks, &[1, 3, 5])?;
            let even = PolyLs::new(ks, &[2, 4])?;
            condition = odd.condition.max(even.condition);
            for i in 0..n {
                let d = freq.at_point(i);
                let (co, ro) = odd.solve(&d.iter().map(|z| z.im).collect::<Vec<_>>());
                let (ce, re) = even.solve(&d.iter().map(|z| z.re).collect::<Vec<_>>());
                u1.push(Complex64::new(0.0, co[0]));
                u2.push(Complex64::new(ce[0], 0.0));
                u3.push(Complex64::new(0.0, co[1]));
                residual.push(relative(ro.norm_squared() + re.norm_squared(), d));
            }
        }
    }
    Ok(KFit { model, u1, u2, u3, residual, condition })
}

fn relative(res_sq: f64, data: &[Complex64]) -> f64 {
    let norm: f64 = data.iter().map(|z| z.norm_sqr()).sum();
    if norm == 0.0 {
        0.0
    } else {
        (res_sq / norm).sqrt()
    }
}

fn weighted_norm(w: &[f64], v: impl Iterator<Item = Complex64>) -> f64 {
    w.iter().zip(v).map(|(w, z)| w * z.norm_sqr()).sum::<f64>().sqrt()
}

/// Weighted relative L2 error of `a` against `b` on the sampling.
pub fn relative_surface_error(s: &BoundarySampling, a: &[Complex64], b: &[Complex64]) -> f64 {
    let num = weighted_norm(&s.weights, a.iter().zip(b).map(|(x, y)| x - y));
    let den = weighted_norm(&s.weights, b.iter().copied());
    if num == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// The expansion as commonly displayed, normalized as `-û/k`: coefficients of
/// `k⁰, k¹, k², k²` (the last two being the composed and `|x - y|` terms).
pub fn displayed_terms(terms: &ExpansionTerms) -> [Vec<Complex64>; 4] {
    [
        terms.t1.iter().map(|v| -v).collect(),
        vec![-terms.t2; terms.t1.len()],
        terms.t3.iter().map(|v| -v).collect(),
        terms.t4.iter().map(|v| -v).collect(),
    ]
}

/// Overall sign relating fitted `û` coefficients to the displayed terms,
/// with the worst relative mismatch of the three nonvanishing terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignCertificate {
    pub sign: f64,
    pub mismatch: f64,
}

/// Fixes the sign on a constant-speed-one configuration, where the composed term vanishes.
pub fn certify_sign(config: &TatPatConfig, n_points: usize, ks: &KSweep) -> Result<SignCertificate> {
    if config.contrast().values().iter().any(|&m| m != 0.0) {
        return Err(Error::Precondition("sign certification needs c = 1 everywhere".into()));
    }
    let s = BoundarySampling::sphere(config.radius, n_points, 0.0)?;
    let fit = k_expansion_fit(&ls_freq_trace(config, &s, ks)?, FitModel::Parity)?;
    let shown = displayed_terms(&expansion_terms(config, &s.points));
    let pairs = [(&fit.u1, &shown[0]), (&fit.u2, &shown[1]), (&fit.u3, &shown[3])];
    let mut signs = Vec::new();
    let mut mismatch = 0.0f64;
    for (f, d) in pairs {
        let dot: f64 = s.weights.iter().zip(f.iter().zip(d.iter())).map(|(w, (a, b))| w * (a * b.conj()).re).sum();
        let sign = dot.signum();
        let flipped: Vec<Complex64> = d.iter().map(|v| v * sign).collect();
        mismatch = mismatch.max(relative_surface_error(&s, f, &flipped));
        signs.push(sign);
    }
    if signs.iter().any(|&v| v != signs[0]) || mismatch > 0.05 {
        return Err(Error::NonPhysical(format!("inconsistent expansion signs {signs:?}, mismatch {mismatch:.3}")));
    }
    Ok(SignCertificate { sign: signs[0], mismatch })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ted1Options {
    pub n_points: usize,
    pub sweep: KSweep,
    pub model: FitModel,
    /// Certified sign; `û` coefficients equal `sign ×` the displayed terms.
    pub sign: f64,
}

impl Ted1Options {
    pub fn for_config(config: &TatPatConfig) -> Self {
        Ted1Options { n_points: 256, sweep: KSweep::default_for_radius(config.radius), model: FitModel::Parity, sign: -1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ted1Report {
    /// Relative errors of the fitted coefficients against the four quadrature terms.
    pub term_errors: [f64; 4],
    /// The composed term is identically zero (reported exact).
    pub third_term_exact: bool,
    /// Slope of `‖û - t1 k - t2 k²‖` against `k` on a log-log scale.
    pub remainder_slope: f64,
    pub condition: f64,
    pub sign: f64,
}

/// Compares the `k`-fit of Lippmann-Schwinger data with each expansion term.
pub fn ted1_check(config: &TatPatConfig) -> Result<Ted1Report> {
    ted1_check_with(config, &Ted1Options::for_config(config))
}

pub fn ted1_check_with(config: &TatPatConfig, opts: &Ted1Options) -> Result<Ted1Report> {
    let s = BoundarySampling::sphere(config.radius, opts.n_points, 0.0)?;
    let freq = ls_freq_trace(config, &s, &opts.sweep)?;
    let fit = k_expansion_fit(&freq, opts.model)?;
    let terms = expansion_terms(config, &s.points);
    let shown = displayed_terms(&terms);
    let pred: Vec<Vec<Complex64>> = shown.iter().map(|t| t.iter().map(|v| v * opts.sign).collect()).collect();
    let e1 = relative_surface_error(&s, &fit.u1, &pred[0]);
    let e2 = relative_surface_error(&s, &fit.u2, &pred[1]);
    let u3_minus_4: Vec<Complex64> = fit.u3.iter().zip(&pred[3]).map(|(a, b)| a - b).collect();
    let e3 = if terms.t3_vanishes { 0.0 } else { relative_surface_error(&s, &u3_minus_4, &pred[2]) };
    let u3_minus_3: Vec<Complex64> = fit.u3.iter().zip(&pred[2]).map(|(a, b)| a - b).collect();
    let e4 = relative_surface_error(&s, &u3_minus_3, &pred[3]);
    let ks = opts.sweep.values();
    let rem: Vec<f64> = ks
        .iter()
        .enumerate()
        .map(|(m, &k)| {
            let data = freq.at_k(m);
            weighted_norm(
                &s.weights,
                data.iter().zip(pred[0].iter()).zip(pred[1].iter()).map(|((u, a), b)| u - a * k - b * k * k),
            )
        })
        .collect();
    Ok(Ted1Report {
        term_errors: [e1, e2, e3, e4],
        third_term_exact: terms.t3_vanishes,
        remainder_slope: loglog_slope(ks, &rem),
        condition: fit.condition,
        sign: opts.sign,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::MomentSet;
    use crate::model::VoxelGrid;
    use crate::phantom::{build_phantom, ParamMap};

    fn synthetic(coef: [Complex64; 3], ks: &KSweep) -> FreqTrace {
        let s = BoundarySampling::sphere(1.0, 32, 0.0).unwrap();
        let mut v = Vec::new();
        for _ in 0..s.len() {
            for &k in ks.values() {
                v.push(coef[0] * k + coef[1] * k * k + coef[2] * k * k * k);
            }
        }
        FreqTrace::new(s, ks.clone(), v).unwrap()
    }

    #[test]
    fn cubic_fit_is_exact_on_cubic_data() {
        let ks = KSweep::default_for_radius(1.0);
        let c = [Complex64::new(0.3, -1.2), Complex64::new(2.0, 0.4), Complex64::new(-0.7, 5.0)];
        let fit = k_expansion_fit(&synthetic(c, &ks), FitModel::Cubic).unwrap();
        for i in 0..fit.u1.len() {
            assert!((fit.u1[i] - c[0]).norm() < 1e-9);
            assert!((fit.u2[i] - c[1]).norm() < 1e-8);
            assert!((fit.u3[i] - c[2]).norm() < 1e-7);
        }
        let zero = k_expansion_fit(&synthetic([Complex64::new(0.0, 0.0); 3], &ks), FitModel::Cubic).unwrap();
        assert!(zero.u1.iter().chain(&zero.u2).chain(&zero.u3).all(|v| v.norm() == 0.0));
        let parity = [Complex64::new(0.0, 1.5), Complex64::new(-0.2, 0.0), Complex64::new(0.0, 3.0)];
        let fit = k_expansion_fit(&synthetic(parity, &ks), FitModel::Parity).unwrap();
        assert!((fit.u3[0] - parity[2]).norm() < 1e-7);
    }

    #[test]
    fn unit_speed_functional_is_distance_term() {
        let g = VoxelGrid::centered_cube(16, 1.1).unwrap();
        let mut p = ParamMap::new();
        p.insert("amplitude".into(), crate::phantom::ParamValue::Number(1.0));
        let cfg = build_phantom("free_space", g, &p).unwrap();
        let x = [Vec3::new(1.0, 0.0, 0.0)];
        let f = orth2_functional(&cfg, &x);
        let d = distance_moment(&cfg.f, &x)[0].re / (8.0 * PI);
        assert!((f[0] - d).abs() < 1e-15);
        let _ = MomentSet::zeros(0);
    }

    #[test]
    fn slope_of_power_law() {
        let x = [0.1, 0.2, 0.4];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powi(3)).collect();
        assert!((loglog_slope(&x, &y) - 3.0).abs() < 1e-12);
    }
}
