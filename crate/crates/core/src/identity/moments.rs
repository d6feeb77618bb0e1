use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernels::{lm_count, solid_harmonics_into, MomentSet};
use crate::model::{BoundarySampling, FieldValue, ScalarField};

/// `m_{αβ} = ∫ q(y) |y|^α conj(Y_α^β(ŷ)) dy` by the midpoint rule.
pub fn harmonic_moments<T: FieldValue>(q: &ScalarField<T>, l_max: usize) -> MomentSet {
    let grid = q.grid();
    let vol = grid.voxel_volume();
    let n = lm_count(l_max);
    let support = q.support();
    // fixed chunking keeps the reduction order independent of the thread count
    let partials: Vec<Vec<Complex64>> = support
        .par_chunks(4096)
        .map(|chunk| {
            let mut acc = vec![Complex64::new(0.0, 0.0); n];
            let mut s = vec![Complex64::new(0.0, 0.0); n];
            for &idx in chunk {
                let v = q.values()[idx].to_complex();
                solid_harmonics_into(grid.center_of(idx), l_max, &mut s);
                for (a, y) in acc.iter_mut().zip(&s) {
                    *a += v * y.conj();
                }
            }
            acc
        })
        .collect();
    let mut m = vec![Complex64::new(0.0, 0.0); n];
    for p in partials {
        for (a, b) in m.iter_mut().zip(p) {
            *a += b * vol;
        }
    }
    MomentSet::new(l_max, m).expect("length matches degree")
}

/// Largest degree resolvable from `n` surface points.
pub fn max_boundary_degree(n_points: usize) -> usize {
    ((n_points as f64).sqrt() / 2.0).floor() as usize
}

/// Projects a Newtonian-type potential sampled on `|x| = R` onto spherical
/// harmonics and rescales to moments, `m_{αβ} = (2α+1) R^{α+1} ⟨V, Y_α^β⟩`.
///
/// The projection is a weighted least-squares fit over all degrees up to
/// `√n / 2`, which removes the aliasing of the lattice rule.
pub fn moments_from_boundary(values: &[Complex64], sampling: &BoundarySampling, l_max: usize) -> Result<MomentSet> {
    let radius = sampling
        .surface
        .sphere_radius()
        .ok_or_else(|| Error::Precondition("moment projection needs an origin-centered sphere".into()))?;
    if values.len() != sampling.len() {
        return Err(Error::Mismatch(format!("{} values for {} points", values.len(), sampling.len())));
    }
    let l_fit = max_boundary_degree(sampling.len());
    if l_max > l_fit {
        return Err(Error::Precondition(format!(
            "degree {l_max} exceeds the aliasing limit {l_fit} for {} points",
            sampling.len()
        )));
    }
    let coeffs = sphere_fit(values, sampling, radius, l_fit)?;
    let mut m = vec![Complex64::new(0.0, 0.0); lm_count(l_max)];
    for a in 0..=l_max {
        let scale = (2 * a + 1) as f64 * radius.powi(a as i32 + 1);
        for i in a * a..(a + 1) * (a + 1) {
            m[i] = coeffs[i] * scale;
        }
    }
    MomentSet::new(l_max, m)
}

/// Weighted least-squares coefficients `c_{αβ}` with `V ≈ Σ c_{αβ} Y_α^β(x̂)`.
pub fn sphere_fit(values: &[Complex64], sampling: &BoundarySampling, radius: f64, l_fit: usize) -> Result<Vec<Complex64>> {
    let n = lm_count(l_fit);
    let rows = sampling.len();
    let mut a = DMatrix::<Complex64>::zeros(rows, n);
    let mut b = DVector::<Complex64>::zeros(rows);
    let mut s = vec![Complex64::new(0.0, 0.0); n];
    for (i, (p, w)) in sampling.points.iter().zip(&sampling.weights).enumerate() {
        let sw = w.sqrt();
        solid_harmonics_into(*p / radius, l_fit, &mut s);
        for j in 0..n {
            a[(i, j)] = s[j] * sw;
        }
        b[i] = values[i] * sw;
    }
    let gram = a.adjoint() * &a;
    let rhs = a.adjoint() * b;
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::IllConditioned(f64::INFINITY))?;
    Ok(chol.solve(&rhs).iter().copied().collect())
}

/// `max |m_{αβ}(q1) - m_{αβ}(q2)| / (1 + |m_{αβ}(q1)|)` over `α <= L`.
pub fn orth1_residual<T: FieldValue>(q1: &ScalarField<T>, q2: &ScalarField<T>, l_max: usize) -> Result<f64> {
    if q1.grid() != q2.grid() {
        return Err(Error::Mismatch("orth1 residual needs both densities on one grid".into()));
    }
    orth1_residual_moments(&harmonic_moments(q1, l_max), &harmonic_moments(q2, l_max))
}

/// As [`orth1_residual`], on precomputed moments (which may come from different grids).
pub fn orth1_residual_moments(m1: &MomentSet, m2: &MomentSet) -> Result<f64> {
    if m1.l_max() != m2.l_max() {
        return Err(Error::Mismatch("moment sets of different degree".into()));
    }
    Ok(m1
        .values()
        .iter()
        .zip(m2.values())
        .map(|(a, b)| (a - b).norm() / (1.0 + a.norm()))
        .fold(0.0, f64::max))
}

/// Per-degree version of [`orth1_residual_moments`].
pub fn orth1_by_degree(m1: &MomentSet, m2: &MomentSet) -> Vec<f64> {
    let l = m1.l_max().min(m2.l_max());
    (0..=l)
        .map(|a| {
            (a * a..(a + 1) * (a + 1))
                .map(|i| (m1.values()[i] - m2.values()[i]).norm() / (1.0 + m1.values()[i].norm()))
                .fold(0.0, f64::max)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::newtonian_potential;
    use crate::model::{RealField, Vec3, VoxelGrid};
    use std::f64::consts::PI;

    #[test]
    fn radial_density_has_only_monopole() {
        let g = VoxelGrid::centered_cube(24, 1.1).unwrap();
        let q = RealField::from_fn(g, |p| (-4.0 * p.norm_sq()).exp());
        let m = harmonic_moments(&q, 4);
        let m00 = m.get(0, 0).unwrap();
        assert!((m00.re - q.integral() / (4.0 * PI).sqrt()).abs() < 1e-12);
        for (a, _, v) in m.iter() {
            if a > 0 && a % 2 == 1 {
                assert!(v.norm() < 1e-12);
            }
        }
        assert!(m.conjugation_defect() < 1e-14);
    }

    #[test]
    fn boundary_roundtrip_monopole_and_dipole() {
        let g = VoxelGrid::centered_cube(32, 1.1).unwrap();
        let c = Vec3::new(0.2, -0.1, 0.15);
        let q = RealField::from_fn(g, |p| if (p - c).norm() < 0.4 { 1.0 } else { 0.0 });
        let s = BoundarySampling::sphere(2.0, 1024, 0.0).unwrap();
        let pot = newtonian_potential(&q, &s.points);
        let from_data = moments_from_boundary(&pot, &s, 4).unwrap();
        let direct = harmonic_moments(&q, 4);
        for (a, b, v) in direct.iter() {
            if a <= 1 {
                let w = from_data.get(a, b).unwrap();
                assert!((v - w).norm() <= 1e-3 * v.norm().max(1e-12), "{a} {b}: {v} vs {w}");
            }
        }
    }

    #[test]
    fn aliasing_guard() {
        let s = BoundarySampling::sphere(1.0, 64, 0.0).unwrap();
        let v = vec![Complex64::new(0.0, 0.0); 64];
        assert!(moments_from_boundary(&v, &s, 4).is_ok());
        assert!(moments_from_boundary(&v, &s, 5).is_err());
    }

    #[test]
    fn orth1_basic() {
        let g = VoxelGrid::centered_cube(16, 1.1).unwrap();
        let q = RealField::from_fn(g, |p| (-4.0 * p.norm_sq()).exp());
        assert_eq!(orth1_residual(&q, &q, 6).unwrap(), 0.0);
        let bump = RealField::from_fn(g, |p| if (p - Vec3::new(0.3, 0.0, 0.0)).norm() < 0.15 { 1.0 } else { 0.0 });
        let q2 = q.zip_map(&bump, |a, b| a + b).unwrap();
        let by = orth1_by_degree(&harmonic_moments(&q, 3), &harmonic_moments(&q2, 3));
        assert!(by[0] > 1e-3);
    }
}
