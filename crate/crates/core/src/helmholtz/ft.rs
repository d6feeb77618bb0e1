use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BoundarySampling, KSweep};
use crate::wave::TimeTrace;

/// Interior energy ratio below which a trace counts as fully decayed.
pub const ENERGY_STOP: f64 = 1e-6;
/// Fraction of `[0, T]` covered by the taper.
pub const TAPER_FRACTION: f64 = 0.1;

/// Boundary samples `û(x_i, k_m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FreqTrace {
    pub sampling: BoundarySampling,
    pub ks: KSweep,
    /// Point-major: `values[i * ks.len() + m]`.
    pub values: Vec<Complex64>,
    /// True when the time-domain data were tapered before transforming.
    pub tapered: bool,
}

impl FreqTrace {
    pub fn new(sampling: BoundarySampling, ks: KSweep, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != sampling.len() * ks.len() {
            return Err(Error::Mismatch(format!(
                "{} values for {} points x {} frequencies",
                values.len(),
                sampling.len(),
                ks.len()
            )));
        }
        if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::InvalidField("non-finite spectrum value".into()));
        }
        Ok(FreqTrace { sampling, ks, values, tapered: false })
    }

    /// Values at point `i` over the sweep.
    pub fn at_point(&self, i: usize) -> &[Complex64] {
        let n = self.ks.len();
        &self.values[i * n..(i + 1) * n]
    }

    /// Values at frequency index `m` over the points.
    pub fn at_k(&self, m: usize) -> Vec<Complex64> {
        let n = self.ks.len();
        (0..self.sampling.len()).map(|i| self.values[i * n + m]).collect()
    }

    /// Relative weighted L2 difference at frequency index `m`, against `reference`.
    pub fn relative_error_at(&self, reference: &FreqTrace, m: usize) -> Result<f64> {
        if self.sampling.points != reference.sampling.points || self.ks.len() != reference.ks.len() {
            return Err(Error::Mismatch("spectra are not comparable".into()));
        }
        let a = self.at_k(m);
        let b = reference.at_k(m);
        let num: f64 = self.sampling.weights.iter().zip(a.iter().zip(&b)).map(|(w, (x, y))| w * (x - y).norm_sqr()).sum();
        let den: f64 = self.sampling.weights.iter().zip(&b).map(|(w, y)| w * y.norm_sqr()).sum();
        Ok(if num == 0.0 { 0.0 } else { (num / den).sqrt() })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeQuadrature {
    Simpson,
    Trapezoid,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FtOptions {
    pub quadrature: TimeQuadrature,
    /// Allow the half-Tukey taper when the trace has not decayed.
    pub allow_taper: bool,
}

impl Default for FtOptions {
    fn default() -> Self {
        FtOptions { quadrature: TimeQuadrature::Simpson, allow_taper: true }
    }
}

/// Quadrature weights on `n_steps + 1` equispaced samples (unit spacing).
pub fn time_weights(n_steps: usize, quadrature: TimeQuadrature) -> Vec<f64> {
    let mut w = vec![0.0; n_steps + 1];
    match quadrature {
        TimeQuadrature::Trapezoid => {
            w.iter_mut().for_each(|v| *v = 1.0);
            w[0] = 0.5;
            w[n_steps] = 0.5;
        }
        TimeQuadrature::Simpson => {
            // Simpson on an even number of intervals, 3/8 rule on the last three if odd
            let simpson_end = if n_steps % 2 == 0 { n_steps } else { n_steps - 3 };
            for i in (0..simpson_end).step_by(2) {
                w[i] += 1.0 / 3.0;
                w[i + 1] += 4.0 / 3.0;
                w[i + 2] += 1.0 / 3.0;
            }
            if simpson_end < n_steps {
                let s = simpson_end;
                w[s] += 3.0 / 8.0;
                w[s + 1] += 9.0 / 8.0;
                w[s + 2] += 9.0 / 8.0;
                w[s + 3] += 3.0 / 8.0;
            }
        }
    }
    w
}

/// Half-Tukey window over the last [`TAPER_FRACTION`] of the samples.
pub fn half_tukey(n_steps: usize) -> Vec<f64> {
    let start = ((1.0 - TAPER_FRACTION) * n_steps as f64).floor() as usize;
    (0..=n_steps)
        .map(|n| {
            if n <= start {
                1.0
            } else {
                let s = (n - start) as f64 / (n_steps - start) as f64;
                0.5 * (1.0 + (PI * s).cos())
            }
        })
        .collect()
}

/// `û(x, k) = (1/2π) ∫_0^T u(x, t) e^{ikt} dt` for each point and sweep value.
pub fn temporal_ft(trace: &TimeTrace, ks: &KSweep) -> Result<FreqTrace> {
    temporal_ft_with(trace, ks, FtOptions::default())
}

pub fn temporal_ft_with(trace: &TimeTrace, ks: &KSweep, opts: FtOptions) -> Result<FreqTrace> {
    trace.check()?;
    let n = trace.n_steps;
    if opts.quadrature == TimeQuadrature::Simpson && n < 3 {
        return Err(Error::param("n_steps", "Simpson's rule needs at least three intervals"));
    }
    let decayed = trace.energy_ratio.map_or(true, |r| r < ENERGY_STOP);
    if !decayed && !opts.allow_taper {
        return Err(Error::Precondition(format!(
            "interior energy ratio {:.2e} at T has not reached {ENERGY_STOP:.0e} and tapering is disabled",
            trace.energy_ratio.unwrap_or(f64::NAN)
        )));
    }
    let mut w = time_weights(n, opts.quadrature);
    if !decayed {
        w.iter_mut().zip(half_tukey(n)).for_each(|(a, b)| *a *= b);
    }
    let scale = trace.dt / (2.0 * PI);
    // kernel e^{ik t_n} times weights, per k
    let kernels: Vec<Vec<Complex64>> = ks
        .values()
        .iter()
        .map(|&k| {
            (0..=n)
                .map(|s| Complex64::from_polar(w[s] * scale, k * s as f64 * trace.dt))
                .collect()
        })
        .collect();
    let nk = ks.len();
    let mut values = vec![Complex64::new(0.0, 0.0); trace.sampling.len() * nk];
    for i in 0..trace.sampling.len() {
        let s = trace.series(i);
        for (m, kern) in kernels.iter().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (u, e) in s.iter().zip(kern) {
                acc += e * *u;
            }
            values[i * nk + m] = acc;
        }
    }
    let mut out = FreqTrace::new(trace.sampling.clone(), ks.clone(), values)?;
    out.tapered = !decayed;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_integrate_polynomials() {
        for n in [6usize, 7, 10, 13] {
            let w = time_weights(n, TimeQuadrature::Simpson);
            let h = 1.0 / n as f64;
            let cubic: f64 = w.iter().enumerate().map(|(i, w)| w * h * (i as f64 * h).powi(3)).sum();
            assert!((cubic - 0.25).abs() < 1e-14, "{n}: {cubic}");
        }
        let w = time_weights(5, TimeQuadrature::Trapezoid);
        assert_eq!(w.iter().sum::<f64>(), 5.0);
    }

    #[test]
    fn taper_shape() {
        let t = half_tukey(100);
        assert_eq!(t[0], 1.0);
        assert_eq!(t[90], 1.0);
        assert!(t[100].abs() < 1e-15);
        assert!(t[95] > 0.0 && t[95] < 1.0);
    }
}
