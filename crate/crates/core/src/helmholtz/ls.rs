use std::f64::consts::PI;

use log::debug;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::helmholtz::FreqTrace;
use crate::kernels::{newtonian_potential_real, voxel_weight, GridConvolver};
use crate::model::{BoundarySampling, ComplexField, KSweep, TatPatConfig, Vec3, VoxelGrid};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LsOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for LsOptions {
    fn default() -> Self {
        LsOptions { tol: 1e-10, max_iter: 200 }
    }
}

/// Solution of `û = -(ik/2π) V_k[q] - k² V_k[(1 - c^{-2}) û]` represented by
/// its induced density `ρ = -(ik/2π) q - k² (1 - c^{-2}) û`, so that
/// `û = V_k[ρ]` everywhere.
#[derive(Debug, Clone)]
pub struct LsSolution {
    pub k: f64,
    pub iterations: usize,
    /// Ratio of the last two update norms; zero when one step was exact.
    pub contraction: f64,
    pub residual: f64,
    grid: VoxelGrid,
    density: Vec<(usize, Complex64)>,
}

pub fn ls_solve(config: &TatPatConfig, k: f64) -> Result<LsSolution> {
    ls_solve_with(config, k, LsOptions::default())
}

pub fn ls_solve_with(config: &TatPatConfig, k: f64, opts: LsOptions) -> Result<LsSolution> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::param("k", format!("must be positive, got {k}")));
    }
    let grid = *config.grid();
    let q = config.q();
    let m = config.contrast();
    let qv = q.values();
    let mv = m.values();
    let Some((lo, dims)) = grid.bounding_box(|i| qv[i] != 0.0 || mv[i] != 0.0) else {
        return Ok(LsSolution { k, iterations: 0, contraction: 0.0, residual: 0.0, grid, density: Vec::new() });
    };
    let sub = grid.box_indices(lo, dims);
    let conv = GridConvolver::new(dims, grid.spacing(), k);
    let pref = Complex64::new(0.0, -k / (2.0 * PI));
    let qs: Vec<Complex64> = sub.iter().map(|&i| pref * qv[i]).collect();
    let ms: Vec<f64> = sub.iter().map(|&i| mv[i]).collect();
    let source = conv.apply(&qs);
    let norm = |v: &[Complex64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let mut u = source.clone();
    let mut iterations = 1;
    let mut contraction = 0.0;
    let mut residual = 0.0;
    let has_contrast = ms.iter().any(|&x| x != 0.0);
    if has_contrast {
        let mut last_update = f64::NAN;
        loop {
            let mu: Vec<Complex64> = u.iter().zip(&ms).map(|(u, m)| u * (m * k * k)).collect();
            let vmu = conv.apply(&mu);
            let next: Vec<Complex64> = source.iter().zip(&vmu).map(|(s, v)| s - v).collect();
            let upd = norm(&next.iter().zip(&u).map(|(a, b)| a - b).collect::<Vec<_>>());
            let scale = norm(&next);
            u = next;
            iterations += 1;
            if last_update.is_finite() && last_update > 0.0 {
                contraction = upd / last_update;
                if contraction >= 1.0 {
                    return Err(Error::NonContraction { k, ratio: contraction });
                }
            }
            last_update = upd;
            residual = if scale > 0.0 { upd / scale } else { 0.0 };
            if residual < opts.tol || upd == 0.0 {
                break;
            }
            if iterations >= opts.max_iter {
                debug!("Neumann iteration stopped at the cap with relative update {residual:.2e}");
                break;
            }
        }
    }
    let density = sub
        .iter()
        .zip(u.iter().zip(qs.iter().zip(&ms)))
        .filter_map(|(&idx, (u, (q, m)))| {
            let rho = q - u * (m * k * k);
            (rho != Complex64::new(0.0, 0.0)).then_some((idx, rho))
        })
        .collect();
    Ok(LsSolution { k, iterations, contraction, residual, grid, density })
}

impl LsSolution {
    pub fn grid(&self) -> &VoxelGrid {
        &self.grid
    }

    /// Induced density as a field on the configuration grid.
    pub fn density(&self) -> ComplexField {
        let mut f = ComplexField::zeros(self.grid);
        for &(i, v) in &self.density {
            f.values_mut()[i] = v;
        }
        f
    }

    /// `û` at arbitrary points by direct summation.
    pub fn evaluate(&self, targets: &[Vec3]) -> Vec<Complex64> {
        let h = self.grid.spacing();
        let pts: Vec<(Vec3, Complex64)> = self.density.iter().map(|&(i, v)| (self.grid.center_of(i), v)).collect();
        targets
            .par_iter()
            .map(|&x| {
                let mut acc = Complex64::new(0.0, 0.0);
                for (p, v) in &pts {
                    acc += voxel_weight(x - *p, h, self.k) * v;
                }
                acc
            })
            .collect()
    }

    /// `û` at every voxel center of the configuration grid.
    pub fn on_grid(&self) -> ComplexField {
        let conv = GridConvolver::new(self.grid.dims(), self.grid.spacing(), self.k);
        let values = conv.apply(self.density().values());
        ComplexField::new(self.grid, values).expect("convolution preserves the grid")
    }
}

/// Solves at each sweep value and samples `û` on `sampling`.
pub fn ls_freq_trace(config: &TatPatConfig, sampling: &BoundarySampling, ks: &KSweep) -> Result<FreqTrace> {
    let sols = ks.values().iter().map(|&k| ls_solve(config, k)).collect::<Result<Vec<_>>>()?;
    let cols: Vec<Vec<Complex64>> = sols.iter().map(|s| s.evaluate(&sampling.points)).collect();
    let nk = ks.len();
    let mut values = vec![Complex64::new(0.0, 0.0); sampling.len() * nk];
    for (m, col) in cols.iter().enumerate() {
        for (i, v) in col.iter().enumerate() {
            values[i * nk + m] = *v;
        }
    }
    FreqTrace::new(sampling.clone(), ks.clone(), values)
}

/// Newtonian potential of `q = c^{-2} f`; `û(x, k) ≈ -(ik/2π)` times this as `k → 0`.
pub fn low_freq_leading(config: &TatPatConfig, targets: &[Vec3]) -> Vec<f64> {
    newtonian_potential_real(&config.q(), targets)
}

/// Weighted norm of `û(·, k) + (ik/2π) Δ⁻¹q` on the sampling at each sweep value.
pub fn leading_order_remainder(freq: &FreqTrace, config: &TatPatConfig) -> Vec<f64> {
    let lead = low_freq_leading(config, &freq.sampling.points);
    let w = &freq.sampling.weights;
    (0..freq.ks.len())
        .map(|m| {
            let k = freq.ks.values()[m];
            let i_k = Complex64::new(0.0, k / (2.0 * std::f64::consts::PI));
            freq.at_k(m)
                .iter()
                .zip(&lead)
                .zip(w)
                .map(|((u, v), w)| w * (u + i_k * v).norm_sqr())
                .sum::<f64>()
                .sqrt()
        })
        .collect()
}
