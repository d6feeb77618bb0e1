use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{lm_count, lm_index, solid_harmonics_into};
use crate::model::{RealField, RegionSpec, VoxelGrid};

/// Parameterization of the unknown `q`.
#[derive(Debug, Clone, PartialEq)]
pub enum Prior {
    /// `q(x) = w(x) q0(x1, x2)` in a cylindrical omega; unknowns are column
    /// pixels, grouped into `pixel_block²` blocks. `w` defaults to 1.
    X3IndependentCylinder { pixel_block: usize, weight: Option<RealField> },
    /// `q` is a harmonic polynomial of degree at most `degree` in omega.
    Harmonic { degree: usize },
    /// `q` depends on `|x|` only, piecewise constant on shells one voxel thick.
    Radial,
    /// One unknown per voxel of omega.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorKind {
    X3IndependentCylinder,
    Harmonic,
    Radial,
    None,
}

impl Prior {
    pub fn kind(&self) -> PriorKind {
        match self {
            Prior::X3IndependentCylinder { .. } => PriorKind::X3IndependentCylinder,
            Prior::Harmonic { .. } => PriorKind::Harmonic,
            Prior::Radial => PriorKind::Radial,
            Prior::None => PriorKind::None,
        }
    }
}

/// Basis functions on the grid: each is a list of (voxel, value).
pub(crate) struct Basis {
    pub functions: Vec<Vec<(usize, f64)>>,
}

impl Basis {
    pub fn build(prior: &Prior, grid: &VoxelGrid, omega: &RegionSpec) -> Result<Self> {
        let inside: Vec<usize> = (0..grid.len()).filter(|&i| omega.contains(grid.center_of(i))).collect();
        if inside.is_empty() {
            return Err(Error::Precondition("omega contains no voxel centers".into()));
        }
        let functions = match prior {
            Prior::X3IndependentCylinder { pixel_block, weight } => {
                let RegionSpec::Cylinder { .. } = omega else {
                    return Err(Error::Precondition("the x3-independent prior needs a cylindrical omega".into()));
                };
                if *pixel_block == 0 {
                    return Err(Error::param("pixel_block", "must be at least 1"));
                }
                if let Some(w) = weight {
                    if w.grid() != grid {
                        return Err(Error::Mismatch("prior weight lives on another grid".into()));
                    }
                }
                let b = *pixel_block;
                let mut map = std::collections::BTreeMap::<(usize, usize), Vec<(usize, f64)>>::new();
                for &idx in &inside {
                    let [i, j, _] = grid.unravel(idx);
                    let w = weight.as_ref().map_or(1.0, |w| w.values()[idx]);
                    map.entry((i / b, j / b)).or_default().push((idx, w));
                }
                map.into_values().collect()
            }
            Prior::Harmonic { degree } => {
                let n = lm_count(*degree);
                let mut s = vec![Complex64::new(0.0, 0.0); n];
                let mut funcs: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
                for &idx in &inside {
                    solid_harmonics_into(grid.center_of(idx), *degree, &mut s);
                    for a in 0..=*degree {
                        // real basis: Re S_{a0}, Re S_{ab}, Im S_{ab} for b > 0
                        funcs[a * a].push((idx, s[lm_index(a, 0)].re));
                        for b in 1..=a {
                            let v = s[lm_index(a, b as i64)];
                            funcs[a * a + 2 * b - 1].push((idx, v.re));
                            funcs[a * a + 2 * b].push((idx, v.im));
                        }
                    }
                }
                funcs
            }
            Prior::Radial => {
                let RegionSpec::Ball { center, .. } = omega else {
                    return Err(Error::Precondition("the radial prior needs a ball omega".into()));
                };
                let h = grid.spacing();
                let mut map = std::collections::BTreeMap::<usize, Vec<(usize, f64)>>::new();
                for &idx in &inside {
                    let shell = ((grid.center_of(idx) - *center).norm() / h).floor() as usize;
                    map.entry(shell).or_default().push((idx, 1.0));
                }
                map.into_values().collect()
            }
            Prior::None => inside.iter().map(|&i| vec![(i, 1.0)]).collect(),
        };
        Ok(Basis { functions })
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    /// Real moment matrix: rows `Re m_{α0}`, then `Re m_{αβ}`, `Im m_{αβ}` for `β > 0`.
    pub fn moment_matrix(&self, grid: &VoxelGrid, l_max: usize) -> DMatrix<f64> {
        let vol = grid.voxel_volume();
        let n = lm_count(l_max);
        let columns: Vec<Vec<f64>> = self
            .functions
            .par_iter()
            .map(|f| {
                let mut s = vec![Complex64::new(0.0, 0.0); n];
                let mut acc = vec![Complex64::new(0.0, 0.0); n];
                for &(idx, w) in f {
                    solid_harmonics_into(grid.center_of(idx), l_max, &mut s);
                    for (a, v) in acc.iter_mut().zip(&s) {
                        *a += v.conj() * w;
                    }
                }
                real_rows(&acc, l_max)
            })
            .collect();
        DMatrix::from_fn(n, self.len(), |r, j| columns[j][r] * vol)
    }

    pub fn embed(&self, grid: &VoxelGrid, coef: &[f64]) -> RealField {
        let mut q = RealField::zeros(*grid);
        for (f, c) in self.functions.iter().zip(coef) {
            for &(idx, w) in f {
                q.values_mut()[idx] += c * w;
            }
        }
        q
    }
}

/// Real row vector of a complex moment set (β >= 0 entries, symmetrized).
pub(crate) fn real_rows(m: &[Complex64], l_max: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(lm_count(l_max));
    for a in 0..=l_max {
        out.push(m[lm_index(a, 0)].re);
        for b in 1..=a as i64 {
            let p = m[lm_index(a, b)];
            let n = m[lm_index(a, -b)];
            let mirrored = if b % 2 == 0 { n.conj() } else { -n.conj() };
            let v = 0.5 * (p + mirrored);
            out.push(v.re);
            out.push(v.im);
        }
    }
    out
}
