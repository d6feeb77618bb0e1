use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Strictly increasing wavenumbers in `(0, eps0)` used for low-frequency fits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSweep {
    values: Vec<f64>,
    eps0: f64,
}

impl KSweep {
    pub const MIN_LEN: usize = 4;

    pub fn new(values: Vec<f64>, eps0: f64) -> Result<Self> {
        if values.len() < Self::MIN_LEN {
            return Err(Error::Precondition(format!(
                "a k sweep needs at least {} values, got {}",
                Self::MIN_LEN,
                values.len()
            )));
        }
        if !(eps0 > 0.0 && eps0.is_finite()) {
            return Err(Error::param("eps0", "must be positive"));
        }
        if values.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::param("ks", "must be strictly increasing"));
        }
        let (lo, hi) = (values[0], values[values.len() - 1]);
        if !(lo > 0.0 && hi < eps0) {
            return Err(Error::param("ks", format!("must lie in (0, {eps0}), got [{lo}, {hi}]")));
        }
        Ok(KSweep { values, eps0 })
    }

    /// `count` equally spaced values `step, 2 step, ..., count * step`.
    pub fn uniform(step: f64, count: usize, eps0: f64) -> Result<Self> {
        KSweep::new((1..=count).map(|i| step * i as f64).collect(), eps0)
    }

    /// `{0.02, 0.04, ..., 0.20} / R` with `eps0 = 0.3 / R`.
    pub fn default_for_radius(radius: f64) -> Self {
        KSweep::uniform(0.02 / radius, 10, 0.3 / radius).expect("default sweep is valid")
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn eps0(&self) -> f64 {
        self.eps0
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn k_max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn contains(&self, k: f64) -> bool {
        k > 0.0 && k < self.eps0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_ordering_and_range() {
        assert!(KSweep::new(vec![0.1, 0.2, 0.3], 1.0).is_err());
        assert!(KSweep::new(vec![0.1, 0.2, 0.2, 0.3], 1.0).is_err());
        assert!(KSweep::new(vec![0.0, 0.1, 0.2, 0.3], 1.0).is_err());
        assert!(KSweep::new(vec![0.1, 0.2, 0.3, 1.0], 1.0).is_err());
        let s = KSweep::default_for_radius(1.0);
        assert_eq!(s.len(), 10);
        assert!((s.k_max() - 0.2).abs() < 1e-15);
    }
}
