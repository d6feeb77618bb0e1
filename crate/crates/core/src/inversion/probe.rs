use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::harmonic_plane_wave;
use crate::model::{RealField, RegionSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    /// `∫ q(x) e^{iζ·x} dx` by the voxel midpoint rule.
    pub direct: Complex64,
    /// Planar transform of the column means times the exact chord factor.
    pub factorized: Complex64,
    pub difference: Complex64,
}

/// Pairs `q` with the harmonic exponential `e^{iζ·x}`, `ζ = (ξ1, ξ2, i|ξ|)`, both
/// directly and in the product form valid for `x3`-independent `q` on a cylinder.
pub fn fourier_probe(q: &RealField, omega: &RegionSpec, xi1: f64, xi2: f64) -> Result<ProbeResult> {
    let RegionSpec::Cylinder { center, half_height, .. } = *omega else {
        return Err(Error::Precondition("the Fourier probe needs a cylindrical omega".into()));
    };
    let grid = *q.grid();
    let h = grid.spacing();
    let [n1, n2, n3] = grid.dims();
    let mut direct = Complex64::new(0.0, 0.0);
    for (i, &v) in q.values().iter().enumerate() {
        if v != 0.0 {
            direct += v * harmonic_plane_wave(xi1, xi2, 1, grid.center_of(i))?;
        }
    }
    direct *= grid.voxel_volume();

    let mut planar = Complex64::new(0.0, 0.0);
    for i in 0..n1 {
        for j in 0..n2 {
            let (mut sum, mut count) = (0.0, 0usize);
            for k in 0..n3 {
                let idx = grid.index([i, j, k]);
                if omega.contains(grid.center_of(idx)) {
                    sum += q.values()[idx];
                    count += 1;
                }
            }
            if count > 0 {
                let p = grid.center([i, j, 0]);
                planar += Complex64::from_polar(sum / count as f64, xi1 * p.x1 + xi2 * p.x2);
            }
        }
    }
    planar *= h * h;
    let s = xi1.hypot(xi2);
    let (lo, hi) = (center.x3 - half_height, center.x3 + half_height);
    let chord = -(-s * lo).exp() * (-s * (hi - lo)).exp_m1() / s;
    let factorized = planar * chord;
    Ok(ProbeResult { direct, factorized, difference: direct - factorized })
}
