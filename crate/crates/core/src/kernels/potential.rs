use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::kernels::green::{phi_r, phi_smooth_r};
use crate::model::{FieldValue, ScalarField, Vec3};

/// Radius of the ball with the volume of a unit cube.
pub const EQUAL_VOLUME_RADIUS: f64 = 0.620_350_490_899_400_1; // (3/4π)^{1/3}

const SUBDIVISIONS: usize = 3;
/// Near-field radius in voxels; kept off lattice distances so grid and
/// direct evaluations classify offsets identically.
const NEAR_RADIUS: f64 = 2.1;

/// Potential at offset `d` (target minus voxel center) of a unit-density voxel
/// of side `h` under the kernel `Φ(·, k)`. Includes the voxel volume.
///
/// Targets inside the voxel use the equal-volume ball plus the smooth part of
/// the kernel; targets within about `2h` use a `3³` subdivision; everything else is
/// the midpoint rule.
pub fn voxel_weight(d: Vec3, h: f64, k: f64) -> Complex64 {
    let half = 0.5 * h;
    let r = d.norm();
    let vol = h * h * h;
    if d.x1.abs() <= half && d.x2.abs() <= half && d.x3.abs() <= half {
        let a = EQUAL_VOLUME_RADIUS * h;
        let stat = if r <= a { (3.0 * a * a - r * r) / 6.0 } else { a * a * a / (3.0 * r) };
        let smooth = if k == 0.0 { Complex64::new(0.0, 0.0) } else { phi_smooth_r(r, k) * vol };
        return Complex64::new(stat, 0.0) + smooth;
    }
    if r < NEAR_RADIUS * h {
        let s = h / SUBDIVISIONS as f64;
        let sub_vol = s * s * s;
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..SUBDIVISIONS {
            for j in 0..SUBDIVISIONS {
                for l in 0..SUBDIVISIONS {
                    let c = Vec3::new(
                        (i as f64 - 1.0) * s,
                        (j as f64 - 1.0) * s,
                        (l as f64 - 1.0) * s,
                    );
                    acc += phi_r((d - c).norm(), k) * sub_vol;
                }
            }
        }
        return acc;
    }
    phi_r(r, k) * vol
}

/// Nonzero voxels of a field as (center, value) pairs.
pub(crate) fn sources<T: FieldValue>(psi: &ScalarField<T>) -> (Vec<Vec3>, Vec<Complex64>) {
    let grid = psi.grid();
    psi.values()
        .iter()
        .enumerate()
        .filter(|(_, v)| !v.is_zero())
        .map(|(i, v)| (grid.center_of(i), v.to_complex()))
        .unzip()
}

/// `∫ Φ(x - y, k) ψ(y) dy` at each target, by direct summation.
pub fn helmholtz_potential<T: FieldValue>(psi: &ScalarField<T>, targets: &[Vec3], k: f64) -> Vec<Complex64> {
    let (pts, vals) = sources(psi);
    let h = psi.grid().spacing();
    targets
        .par_iter()
        .map(|&x| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (p, v) in pts.iter().zip(&vals) {
                acc += voxel_weight(x - *p, h, k) * v;
            }
            acc
        })
        .collect()
}

/// Newtonian potential `Δ^{-1}ψ(x) = ∫ Φ0(x - y) ψ(y) dy` at each target.
pub fn newtonian_potential<T: FieldValue>(psi: &ScalarField<T>, targets: &[Vec3]) -> Vec<Complex64> {
    helmholtz_potential(psi, targets, 0.0)
}

/// Real-valued Newtonian potential of a real density.
pub fn newtonian_potential_real(psi: &ScalarField<f64>, targets: &[Vec3]) -> Vec<f64> {
    let grid = psi.grid();
    let h = grid.spacing();
    let (pts, vals): (Vec<Vec3>, Vec<f64>) = psi
        .values()
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(i, v)| (grid.center_of(i), *v))
        .unzip();
    targets
        .par_iter()
        .map(|&x| {
            let mut acc = 0.0;
            for (p, v) in pts.iter().zip(&vals) {
                let d = x - *p;
                let r = d.norm();
                let w = if r >= NEAR_RADIUS * h { h * h * h / (4.0 * PI * r) } else { voxel_weight(d, h, 0.0).re };
                acc += w * v;
            }
            acc
        })
        .collect()
}

/// `∫ ψ(y) |x - y| dy` at each target by the midpoint rule.
pub fn distance_moment<T: FieldValue>(psi: &ScalarField<T>, targets: &[Vec3]) -> Vec<Complex64> {
    let (pts, vals) = sources(psi);
    let vol = psi.grid().voxel_volume();
    targets
        .par_iter()
        .map(|&x| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (p, v) in pts.iter().zip(&vals) {
                acc += v * x.distance(*p);
            }
            acc * vol
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{RealField, VoxelGrid};

    fn ball(n: usize) -> RealField {
        let g = VoxelGrid::centered_cube(n, 1.25).unwrap();
        RealField::from_fn(g, |p| if p.norm() <= 1.0 { 1.0 } else { 0.0 })
    }

    #[test]
    fn equal_volume_radius_constant() {
        assert!((EQUAL_VOLUME_RADIUS - (3.0 / (4.0 * PI)).cbrt()).abs() < 1e-15);
    }

    #[test]
    fn self_weight_is_ball_value() {
        let h = 0.1;
        let a = EQUAL_VOLUME_RADIUS * h;
        assert!((voxel_weight(Vec3::ZERO, h, 0.0).re - a * a / 2.0).abs() < 1e-16);
        let w = voxel_weight(Vec3::ZERO, h, 0.5);
        assert!((w.im - 0.5 * h * h * h / (4.0 * PI)).abs() < 1e-15);
    }

    #[test]
    fn near_weight_approaches_far_rule() {
        let h = 0.1;
        let d = Vec3::new(1.5 * h, 0.5 * h, 0.0);
        let near = voxel_weight(d, h, 0.0).re;
        let far = h * h * h / (4.0 * PI * d.norm());
        assert!((near / far - 1.0).abs() < 0.05);
    }

    #[test]
    fn unit_ball_interior_and_exterior() {
        let psi = ball(40);
        let v = newtonian_potential(&psi, &[Vec3::ZERO, Vec3::new(2.0, 0.0, 0.0)]);
        assert!((v[0].re - 0.5).abs() < 0.01, "{}", v[0]);
        assert!((v[1].re - 1.0 / 6.0).abs() < 0.01 / 6.0, "{}", v[1]);
        let r = newtonian_potential_real(&psi, &[Vec3::ZERO]);
        assert!((r[0] - v[0].re).abs() < 1e-12);
        let zero = RealField::zeros(*psi.grid());
        assert_eq!(newtonian_potential(&zero, &[Vec3::ZERO])[0], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn distance_moment_far_field() {
        let psi = ball(40);
        let mass = psi.integral();
        let v = distance_moment(&psi, &[Vec3::new(10.0, 0.0, 0.0)]);
        assert!((v[0].re / (4.0 * PI / 3.0 * 10.0) - 1.0).abs() < 0.01);
        assert!((v[0].re / (mass * 10.0) - 1.0).abs() < 0.01);
    }

    #[test]
    fn concentrated_mass_distance() {
        let g = VoxelGrid::centered_cube(9, 1.0).unwrap();
        let h = g.spacing();
        let mut psi = RealField::zeros(g);
        let idx = g.index([4, 4, 4]);
        psi.values_mut()[idx] = 1.0 / (h * h * h);
        let v = distance_moment(&psi, &[Vec3::new(0.0, 3.0, 0.0)]);
        assert!((v[0].re - 3.0).abs() < 1e-12);
    }
}
