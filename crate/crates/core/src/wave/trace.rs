use crate::error::{Error, Result};
use crate::model::BoundarySampling;

/// Boundary samples `u(x_i, t_n)` for `t_n = n·dt`, `n = 0..=n_steps`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeTrace {
    pub sampling: BoundarySampling,
    pub dt: f64,
    pub n_steps: usize,
    /// Point-major: `values[i * (n_steps + 1) + n]`.
    pub values: Vec<f64>,
    /// Largest stable step of the producing run, `h / (√3 max c)`.
    pub dt_bound: f64,
    /// Interior energy at `T` over its initial value, when measured.
    pub energy_ratio: Option<f64>,
}

impl TimeTrace {
    pub fn new(sampling: BoundarySampling, dt: f64, n_steps: usize, values: Vec<f64>) -> Result<Self> {
        let trace = TimeTrace { sampling, dt, n_steps, values, dt_bound: dt, energy_ratio: None };
        trace.check()?;
        Ok(trace)
    }

    pub(crate) fn check(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::param("dt", "must be positive"));
        }
        if self.n_steps < 2 {
            return Err(Error::param("n_steps", "need at least two steps"));
        }
        if self.values.len() != self.sampling.len() * self.n_samples() {
            return Err(Error::Mismatch(format!(
                "{} trace values for {} points x {} samples",
                self.values.len(),
                self.sampling.len(),
                self.n_samples()
            )));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidField("non-finite trace value".into()));
        }
        if self.dt > self.dt_bound * (1.0 + 1e-12) {
            return Err(Error::Unstable(format!("dt {} exceeds bound {}", self.dt, self.dt_bound)));
        }
        Ok(())
    }

    pub fn n_samples(&self) -> usize {
        self.n_steps + 1
    }

    pub fn t_final(&self) -> f64 {
        self.dt * self.n_steps as f64
    }

    /// Time series at point `i`.
    pub fn series(&self, i: usize) -> &[f64] {
        let n = self.n_samples();
        &self.values[i * n..(i + 1) * n]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Relative `L²(surface × [0, T])` discrepancy of `b` against `a`.
pub fn equal_data_check(a: &TimeTrace, b: &TimeTrace) -> Result<f64> {
    if a.sampling.points != b.sampling.points || a.sampling.weights != b.sampling.weights {
        return Err(Error::Mismatch("traces are sampled at different points".into()));
    }
    if a.n_steps != b.n_steps || (a.dt - b.dt).abs() > 1e-12 * a.dt {
        return Err(Error::Mismatch("traces have different time axes".into()));
    }
    let n = a.n_samples();
    let (mut num, mut den) = (0.0, 0.0);
    for (i, w) in a.sampling.weights.iter().enumerate() {
        let (sa, sb) = (a.series(i), b.series(i));
        for t in 0..n {
            let wt = if t == 0 || t == n - 1 { 0.5 } else { 1.0 };
            let d = sa[t] - sb[t];
            num += w * wt * d * d;
            den += w * wt * sa[t] * sa[t];
        }
    }
    if num == 0.0 {
        return Ok(0.0);
    }
    if den == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((num / den).sqrt())
}
