use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::Vec3;

/// Flat index of `(alpha, beta)` in degree-major order.
#[inline]
pub fn lm_index(alpha: usize, beta: i64) -> usize {
    ((alpha * alpha + alpha) as i64 + beta) as usize
}

/// Number of `(alpha, beta)` pairs with `alpha <= l_max`.
pub fn lm_count(l_max: usize) -> usize {
    (l_max + 1) * (l_max + 1)
}

fn check_index(alpha: usize, beta: i64) -> Result<()> {
    if beta.unsigned_abs() as usize > alpha {
        return Err(Error::IndexOutOfRange(format!("|beta| = {} > alpha = {alpha}", beta.abs())));
    }
    Ok(())
}

/// All regular solid harmonics `|x|^α Y_α^β(x̂)` for `α <= l_max`, indexed by
/// [`lm_index`]. Complex, orthonormal on the unit sphere, Condon-Shortley phase.
pub fn solid_harmonics_all(x: Vec3, l_max: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); lm_count(l_max)];
    solid_harmonics_into(x, l_max, &mut out);
    out
}

/// As [`solid_harmonics_all`], writing into `out` (length at least `(l_max+1)²`).
pub fn solid_harmonics_into(x: Vec3, l_max: usize, out: &mut [Complex64]) {
    let z = x.x3;
    let r2 = x.norm_sq();
    let xy = Complex64::new(x.x1, x.x2);
    let idx = |l: usize, m: usize| l * l + l + m;
    out[0] = Complex64::new((1.0 / (4.0 * PI)).sqrt(), 0.0);
    for m in 0..=l_max {
        if m > 0 {
            let mf = m as f64;
            let prev = out[idx(m - 1, m - 1)];
            out[idx(m, m)] = -((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * xy * prev;
        }
        if m + 1 <= l_max {
            out[idx(m + 1, m)] = (2.0 * m as f64 + 3.0).sqrt() * z * out[idx(m, m)];
        }
        let mf = m as f64;
        for l in (m + 2)..=l_max {
            let lf = l as f64;
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let l1 = lf - 1.0;
            let b = ((l1 * l1 - mf * mf) / (4.0 * l1 * l1 - 1.0)).sqrt();
            out[idx(l, m)] = a * (z * out[idx(l - 1, m)] - b * r2 * out[idx(l - 2, m)]);
        }
    }
    for l in 1..=l_max {
        for m in 1..=l {
            let v = out[idx(l, m)].conj();
            out[l * l + l - m] = if m % 2 == 0 { v } else { -v };
        }
    }
}

/// `|x|^α Y_α^β(x̂)`.
pub fn solid_harmonic(alpha: usize, beta: i64, x: Vec3) -> Result<Complex64> {
    check_index(alpha, beta)?;
    Ok(solid_harmonics_all(x, alpha)[lm_index(alpha, beta)])
}

/// Orthonormal complex spherical harmonic at a unit direction.
pub fn sph_harm(alpha: usize, beta: i64, dir: Vec3) -> Result<Complex64> {
    check_index(alpha, beta)?;
    if !dir.is_finite() || (dir.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::param("dir", format!("must be a unit vector, |dir| = {}", dir.norm())));
    }
    solid_harmonic(alpha, beta, dir)
}

/// Truncated addition series for `Φ0(x - y)`, `|x| > |y|`.
pub fn addition_series(x: Vec3, y: Vec3, l_max: usize) -> Result<f64> {
    let (rx, ry) = (x.norm(), y.norm());
    if !(rx > ry) {
        return Err(Error::Precondition(format!("addition series needs |x| > |y|, got {rx} and {ry}")));
    }
    let sx = solid_harmonics_all(x, l_max);
    let sy = solid_harmonics_all(y, l_max);
    let mut total = 0.0;
    for l in 0..=l_max {
        let scale = 1.0 / ((2 * l + 1) as f64 * rx.powi(2 * l as i32 + 1));
        let mut s = 0.0;
        for i in l * l..(l + 1) * (l + 1) {
            s += (sx[i] * sy[i].conj()).re;
        }
        total += scale * s;
    }
    Ok(total)
}

/// `e^{iζ·x}` with `ζ = (ξ1, ξ2, i·sign·|ξ|)`, a harmonic exponential.
pub fn harmonic_plane_wave(xi1: f64, xi2: f64, sign: i32, x: Vec3) -> Result<Complex64> {
    if sign != 1 && sign != -1 {
        return Err(Error::param("sign", "must be +1 or -1"));
    }
    let xi3 = xi1.hypot(xi2);
    if xi3 == 0.0 {
        return Err(Error::param("xi", "transverse frequency must be nonzero"));
    }
    let phase = xi1 * x.x1 + xi2 * x.x2;
    Ok(Complex64::from_polar((-(sign as f64) * xi3 * x.x3).exp(), phase))
}

/// Complex harmonic moments `m_{αβ}`, `α <= l_max`, `|β| <= α`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSet {
    l_max: usize,
    values: Vec<Complex64>,
}

impl MomentSet {
    pub fn new(l_max: usize, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != lm_count(l_max) {
            return Err(Error::Mismatch(format!(
                "{} moments for degree {l_max}, expected {}",
                values.len(),
                lm_count(l_max)
            )));
        }
        Ok(MomentSet { l_max, values })
    }

    pub fn zeros(l_max: usize) -> Self {
        MomentSet { l_max, values: vec![Complex64::new(0.0, 0.0); lm_count(l_max)] }
    }

    pub fn l_max(&self) -> usize {
        self.l_max
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn get(&self, alpha: usize, beta: i64) -> Result<Complex64> {
        check_index(alpha, beta)?;
        if alpha > self.l_max {
            return Err(Error::IndexOutOfRange(format!("alpha = {alpha} > L = {}", self.l_max)));
        }
        Ok(self.values[lm_index(alpha, beta)])
    }

    /// Iterates `(alpha, beta, value)`.
    pub fn iter(&self) -> impl Iterator<Item = (usize, i64, Complex64)> + '_ {
        (0..=self.l_max).flat_map(move |a| {
            (-(a as i64)..=a as i64).map(move |b| (a, b, self.values[lm_index(a, b)]))
        })
    }

    /// Truncates to a lower degree.
    pub fn truncate(&self, l_max: usize) -> Self {
        let l = l_max.min(self.l_max);
        MomentSet { l_max: l, values: self.values[..lm_count(l)].to_vec() }
    }

    /// Largest violation of `m_{α,-β} = (-1)^β conj(m_{αβ})`, the symmetry of real densities.
    pub fn conjugation_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for a in 0..=self.l_max {
            for b in 1..=a as i64 {
                let p = self.values[lm_index(a, b)];
                let n = self.values[lm_index(a, -b)];
                let expect = if b % 2 == 0 { p.conj() } else { -p.conj() };
                worst = worst.max((n - expect).norm());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::green::phi0;
    use crate::model::fibonacci_sphere;

    #[test]
    fn low_degree_closed_forms() {
        let d = Vec3::new(0.0, 0.0, 1.0);
        let y00 = sph_harm(0, 0, d).unwrap();
        assert!((y00.re - 1.0 / (4.0 * PI).sqrt()).abs() < 1e-15);
        let y10 = sph_harm(1, 0, d).unwrap();
        assert!((y10.re - (3.0 / (4.0 * PI)).sqrt()).abs() < 1e-15);
        // Y_1^1 = -sqrt(3/8π) (x + iy)
        let p = Vec3::new(0.3, -0.2, 0.5);
        let y11 = solid_harmonic(1, 1, p).unwrap();
        let want = -(3.0 / (8.0 * PI)).sqrt() * Complex64::new(0.3, -0.2);
        assert!((y11 - want).norm() < 1e-15);
        // Y_2^0 = sqrt(5/16π) (3z² - r²)
        let y20 = solid_harmonic(2, 0, p).unwrap();
        let want = (5.0 / (16.0 * PI)).sqrt() * (3.0 * 0.25 - p.norm_sq());
        assert!((y20.re - want).abs() < 1e-15);
    }

    #[test]
    fn index_and_direction_checks() {
        assert!(sph_harm(1, 2, Vec3::new(0.0, 0.0, 1.0)).is_err());
        assert!(sph_harm(1, 0, Vec3::new(0.0, 0.0, 1.1)).is_err());
        assert!(solid_harmonic(3, -4, Vec3::ZERO).is_err());
    }

    #[test]
    fn origin_values() {
        let s = solid_harmonics_all(Vec3::ZERO, 6);
        assert!((s[0].re - 1.0 / (4.0 * PI).sqrt()).abs() < 1e-15);
        assert!(s[1..].iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn gram_matrix_on_sphere_rule() {
        let l = 10;
        let (pts, w) = fibonacci_sphere(2000, 1.0, 0.0);
        let n = lm_count(l);
        let vals: Vec<Vec<Complex64>> = pts.iter().map(|p| solid_harmonics_all(*p, l)).collect();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..=i {
                let g: Complex64 = vals.iter().zip(&w).map(|(v, w)| v[i] * v[j].conj() * *w).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g - target).norm());
            }
        }
        // Fibonacci rules are not exact; the 1e-6 bar is met after the Gram
        // correction used by the moment projection.
        assert!(worst < 5e-3, "{worst}");
    }

    #[test]
    fn addition_series_converges_to_phi0() {
        let x = Vec3::new(1.2, -1.0, 1.0).normalized().unwrap() * 2.0;
        let y = Vec3::new(0.1, 0.7, -0.7).normalized().unwrap();
        let s = addition_series(x, y, 20).unwrap();
        assert!((s - phi0(x, y).unwrap()).abs() < 1e-5);
        let tiny = Vec3::new(1e-9, 0.0, 0.0);
        let m = addition_series(x, tiny, 0).unwrap();
        assert!((m - 1.0 / (4.0 * PI * 2.0)).abs() < 1e-12);
        assert!(addition_series(y, y, 4).is_err());
    }

    #[test]
    fn plane_wave_modulus() {
        let x = Vec3::new(0.2, 0.4, -0.3);
        assert_eq!(harmonic_plane_wave(1.0, 2.0, 1, Vec3::ZERO).unwrap(), Complex64::new(1.0, 0.0));
        let v = harmonic_plane_wave(3.0, 4.0, 1, x).unwrap();
        assert!((v.norm() - (5.0f64 * 0.3).exp()).abs() < 1e-12);
        assert!(harmonic_plane_wave(0.0, 0.0, 1, x).is_err());
        assert!(harmonic_plane_wave(1.0, 0.0, 0, x).is_err());
    }
}
