use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the Tikhonov parameter is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Regularization {
    /// Fixed `λ`.
    Fixed { lambda: f64 },
    /// Largest `λ` whose residual stays within `tau` times the noise level.
    Discrepancy { tau: f64 },
}

impl Default for Regularization {
    fn default() -> Self {
        Regularization::Discrepancy { tau: 1.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TikhonovReport {
    pub lambda: f64,
    pub residual: f64,
    pub data_norm: f64,
    pub noise_level: f64,
    pub sigma_max: f64,
    pub sigma_min: f64,
    pub rank: usize,
}

pub(crate) struct TikhonovSolver {
    svd: nalgebra::SVD<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl TikhonovSolver {
    pub fn new(a: DMatrix<f64>) -> Result<Self> {
        if a.iter().all(|v| *v == 0.0) {
            return Err(Error::IllConditioned(f64::INFINITY));
        }
        Ok(TikhonovSolver { svd: a.svd(true, true) })
    }

    fn parts(&self, b: &DVector<f64>) -> (Vec<f64>, Vec<f64>, f64) {
        let u = self.svd.u.as_ref().unwrap();
        let beta = u.transpose() * b;
        let outside = (b.norm_squared() - beta.norm_squared()).max(0.0);
        (self.svd.singular_values.iter().copied().collect(), beta.iter().copied().collect(), outside)
    }

    fn residual(sig: &[f64], beta: &[f64], outside: f64, lambda: f64) -> f64 {
        let l2 = lambda * lambda;
        let mut r = outside;
        for (s, b) in sig.iter().zip(beta) {
            let f = l2 / (s * s + l2);
            r += f * f * b * b;
        }
        r.sqrt()
    }

    pub fn solve(&self, b: &[f64], reg: Regularization, noise: f64) -> (Vec<f64>, TikhonovReport) {
        let b = DVector::from_column_slice(b);
        let (sig, beta, outside) = self.parts(&b);
        let smax = sig.iter().copied().fold(0.0, f64::max);
        let cutoff = smax * 1e-14;
        let rank = sig.iter().filter(|&&s| s > cutoff).count();
        let smin = sig.iter().copied().filter(|&s| s > cutoff).fold(f64::INFINITY, f64::min);
        let lambda = match reg {
            Regularization::Fixed { lambda } => lambda,
            Regularization::Discrepancy { tau } => {
                let floor = Self::residual(&sig, &beta, outside, smin * 1e-6);
                let target = (tau * noise).max(1.5 * floor);
                let (mut lo, mut hi) = ((smin * 1e-6).ln(), (smax * 1e3).ln());
                if Self::residual(&sig, &beta, outside, lo.exp()) >= target {
                    lo.exp()
                } else {
                    for _ in 0..200 {
                        let mid = 0.5 * (lo + hi);
                        if Self::residual(&sig, &beta, outside, mid.exp()) > target {
                            hi = mid;
                        } else {
                            lo = mid;
                        }
                    }
                    lo.exp()
                }
            }
        };
        let v = self.svd.v_t.as_ref().unwrap().transpose();
        let mut x = DVector::<f64>::zeros(v.nrows());
        for (i, (&s, &bt)) in sig.iter().zip(&beta).enumerate() {
            if s <= cutoff {
                continue;
            }
            let f = s / (s * s + lambda * lambda);
            x += v.column(i) * (f * bt);
        }
        let report = TikhonovReport {
            lambda,
            residual: Self::residual(&sig, &beta, outside, lambda),
            data_norm: b.norm(),
            noise_level: noise,
            sigma_max: smax,
            sigma_min: smin,
            rank,
        };
        (x.iter().copied().collect(), report)
    }
}
