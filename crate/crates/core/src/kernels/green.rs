use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::Vec3;

pub const INV_FOUR_PI: f64 = 1.0 / (4.0 * PI);

/// `Φ0(x - y) = 1 / (4π|x - y|)`.
pub fn phi0(x: Vec3, y: Vec3) -> Result<f64> {
    let r = x.distance(y);
    if r == 0.0 {
        return Err(Error::CoincidentPoints);
    }
    Ok(INV_FOUR_PI / r)
}

/// Outgoing fundamental solution of `-Δ - k²`: `e^{ik|x-y|} / (4π|x-y|)`.
pub fn phi(x: Vec3, y: Vec3, k: f64) -> Result<Complex64> {
    if !(k >= 0.0 && k.is_finite()) {
        return Err(Error::param("k", format!("must be finite and >= 0, got {k}")));
    }
    let r = x.distance(y);
    if r == 0.0 {
        return Err(Error::CoincidentPoints);
    }
    Ok(phi_r(r, k))
}

/// Radial form of [`phi`]; `r` must be positive.
#[inline]
pub fn phi_r(r: f64, k: f64) -> Complex64 {
    if k == 0.0 {
        return Complex64::new(INV_FOUR_PI / r, 0.0);
    }
    let (s, c) = (k * r).sin_cos();
    Complex64::new(c, s) * (INV_FOUR_PI / r)
}

/// `(e^{ikr} - 1) / (4πr)`, continuous at `r = 0` where it equals `ik / 4π`.
#[inline]
pub fn phi_smooth_r(r: f64, k: f64) -> Complex64 {
    let kr = k * r;
    if kr.abs() < 1e-4 {
        // series: (ikr - k²r²/2 - i k³r³/6) / (4πr)
        let re = -0.5 * k * kr;
        let im = k * (1.0 - kr * kr / 6.0);
        return Complex64::new(re, im) * INV_FOUR_PI;
    }
    let (s, c) = kr.sin_cos();
    Complex64::new(c - 1.0, s) * (INV_FOUR_PI / r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi0_values() {
        let o = Vec3::ZERO;
        assert!((phi0(Vec3::new(1.0, 0.0, 0.0), o).unwrap() - 0.07957747154594767).abs() < 1e-15);
        assert!((phi0(Vec3::new(0.0, 2.0, 0.0), o).unwrap() - 1.0 / (8.0 * PI)).abs() < 1e-15);
        assert!(matches!(phi0(o, o), Err(Error::CoincidentPoints)));
    }

    #[test]
    fn phi_reduces_and_rotates() {
        let x = Vec3::new(0.3, -0.4, 0.0);
        let y = Vec3::new(0.3, -0.4, 1.0);
        assert_eq!(phi(x, y, 0.0).unwrap().re, phi0(x, y).unwrap());
        let v = phi(x, y, PI).unwrap();
        assert!((v.re + 1.0 / (4.0 * PI)).abs() < 1e-15 && v.im.abs() < 1e-15);
        for k in [0.1, 1.0, 7.3] {
            assert!((phi(x, y, k).unwrap().norm() - phi0(x, y).unwrap()).abs() < 1e-15);
        }
        assert!(phi(x, x, 1.0).is_err());
    }

    #[test]
    fn smooth_remainder_is_continuous() {
        let k: f64 = 0.7;
        for r in [1e-7f64, 1e-5, 1.43e-4, 2e-4, 1e-3] {
            // e^{iθ} - 1 = -2 sin²(θ/2) + i sin θ
            let t = k * r;
            let exact = Complex64::new(-2.0 * (0.5 * t).sin().powi(2), t.sin()) * (INV_FOUR_PI / r);
            assert!((phi_smooth_r(r, k) - exact).norm() < 1e-12, "{r}");
        }
    }
}
