use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{fibonacci_sphere, ComplexField, Vec3};

const DIRECTIONS: usize = 64;

/// `max |x|·|∂_r û - ik û|` over each sphere `|x| = r`, for a field given by
/// an evaluator. The radial derivative is a centered difference with step `dr`.
pub fn radiation_diagnostic(
    eval: impl Fn(&[Vec3]) -> Vec<Complex64>,
    k: f64,
    radii: &[f64],
    dr: f64,
) -> Vec<f64> {
    let (dirs, _) = fibonacci_sphere(DIRECTIONS, 1.0, 0.0);
    radii
        .iter()
        .map(|&r| {
            let mut pts = Vec::with_capacity(3 * dirs.len());
            for d in &dirs {
                pts.push(*d * (r - dr));
                pts.push(*d * r);
                pts.push(*d * (r + dr));
            }
            let v = eval(&pts);
            v.chunks(3)
                .map(|c| {
                    let du = (c[2] - c[0]) / (2.0 * dr);
                    r * (du - Complex64::new(0.0, k) * c[1]).norm()
                })
                .fold(0.0, f64::max)
        })
        .collect()
}

/// Sommerfeld diagnostic of a grid field on spheres inside the grid.
pub fn radiation_check(u: &ComplexField, k: f64, radii: &[f64]) -> Result<Vec<f64>> {
    let g = u.grid();
    let h = g.spacing();
    for &r in radii {
        if !(r > h) || !g.strictly_contains_ball(Vec3::ZERO, r + 1.5 * h) {
            return Err(Error::param("radii", format!("sphere of radius {r} does not fit in the grid")));
        }
    }
    Ok(radiation_diagnostic(
        |pts| pts.iter().map(|p| u.interpolate(*p).unwrap_or_default()).collect(),
        k,
        radii,
        h,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::phi_r;
    use crate::model::VoxelGrid;

    #[test]
    fn point_source_decays_like_inverse_radius() {
        let k = 0.3;
        let eval = |pts: &[Vec3]| pts.iter().map(|p| phi_r(p.norm(), k)).collect::<Vec<_>>();
        let radii = [2.0, 4.0, 8.0, 16.0];
        let d = radiation_diagnostic(eval, k, &radii, 1e-3);
        for (r, v) in radii.iter().zip(&d) {
            // |x|·|Φ/|x|| = 1/(4π|x|)
            assert!((v * 4.0 * std::f64::consts::PI * r - 1.0).abs() < 1e-4, "{r}: {v}");
        }
    }

    #[test]
    fn zero_field_zero_diagnostic() {
        let g = VoxelGrid::centered_cube(16, 1.0).unwrap();
        let u = ComplexField::zeros(g);
        assert_eq!(radiation_check(&u, 0.1, &[0.5, 0.7]).unwrap(), vec![0.0, 0.0]);
        assert!(radiation_check(&u, 0.1, &[2.0]).is_err());
    }
}
