use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::helmholtz::TimeQuadrature;
use crate::identity::FitModel;
use crate::inversion::{Prior, Regularization};
use crate::model::{KSweep, VoxelGrid};
use crate::phantom::{ParamMap, PhantomKind};

/// A complete experiment description, read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub phantom: PhantomBlock,
    pub grid: GridBlock,
    #[serde(default)]
    pub sweep: SweepBlock,
    #[serde(default)]
    pub simulate: SimulateBlock,
    #[serde(default)]
    pub spectrum: SpectrumBlock,
    #[serde(default)]
    pub identity: IdentityBlock,
    #[serde(default)]
    pub inversion: InversionBlock,
    /// Output directory, relative to the spec file; `--out` overrides it.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhantomBlock {
    pub name: String,
    #[serde(default)]
    pub params: ParamMap,
}

/// The grid is the cube `[-(R + h), R + h]³`, so it strictly contains `B_R`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    #[serde(default = "one")]
    pub radius: f64,
    /// Voxels spanning `[-R, R]`; exactly one of `dims` and `h` is given.
    pub dims: Option<usize>,
    pub h: Option<f64>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    /// Explicit wavenumbers; defaults to `{0.02, ..., 0.20} / R`.
    pub values: Option<Vec<f64>>,
    pub eps0: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateBlock {
    pub t_final: Option<f64>,
    pub cfl: Option<f64>,
    pub layer_width: Option<usize>,
    pub n_sphere: Option<usize>,
    pub n_omega: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumSource {
    /// Temporal transform of the simulated sphere trace.
    Wave,
    /// Lippmann-Schwinger solves at each sweep value.
    #[default]
    Ls,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumBlock {
    #[serde(default)]
    pub source: SpectrumSource,
    /// Sphere points for the Lippmann-Schwinger route.
    #[serde(default = "default_points")]
    pub n_sphere: usize,
    #[serde(default = "default_quadrature")]
    pub quadrature: TimeQuadrature,
    #[serde(default = "yes")]
    pub allow_taper: bool,
}

fn default_points() -> usize {
    1024
}
fn default_quadrature() -> TimeQuadrature {
    TimeQuadrature::Simpson
}
fn yes() -> bool {
    true
}

impl Default for SpectrumBlock {
    fn default() -> Self {
        SpectrumBlock { source: SpectrumSource::Ls, n_sphere: 1024, quadrature: TimeQuadrature::Simpson, allow_taper: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentityBlock {
    #[serde(default = "eight")]
    pub l_max: usize,
    #[serde(default = "ted1_points")]
    pub ted1_points: usize,
    /// Second phantom for the moment comparison; the spec phantom itself when absent.
    pub compare: Option<PhantomBlock>,
}

fn eight() -> usize {
    8
}
fn ted1_points() -> usize {
    256
}

impl Default for IdentityBlock {
    fn default() -> Self {
        IdentityBlock { l_max: 8, ted1_points: 256, compare: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorName {
    #[default]
    X3IndependentCylinder,
    Harmonic,
    Radial,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpeedModelName {
    /// Constant speed on omega.
    #[default]
    Constant,
    /// Known background and inclusion region from the phantom, unknown contrast.
    Inclusion,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QSource {
    #[default]
    Recovered,
    /// Use the phantom's own `q`; isolates the speed step.
    Phantom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InversionBlock {
    #[serde(default)]
    pub prior: PriorName,
    #[serde(default = "one_usize")]
    pub pixel_block: usize,
    #[serde(default = "four")]
    pub harmonic_degree: usize,
    #[serde(default = "eight")]
    pub l_max: usize,
    /// Fixed Tikhonov parameter; discrepancy principle when absent.
    pub lambda: Option<f64>,
    #[serde(default = "tau")]
    pub tau: f64,
    #[serde(default = "parity")]
    pub fit_model: FitModel,
    #[serde(default)]
    pub speed_model: SpeedModelName,
    #[serde(default)]
    pub q_source: QSource,
}

fn one_usize() -> usize {
    1
}
fn four() -> usize {
    4
}
fn tau() -> f64 {
    1.5
}
fn parity() -> FitModel {
    FitModel::Parity
}

impl Default for InversionBlock {
    fn default() -> Self {
        InversionBlock {
            prior: PriorName::default(),
            pixel_block: 1,
            harmonic_degree: 4,
            l_max: 8,
            lambda: None,
            tau: 1.5,
            fit_model: FitModel::Parity,
            speed_model: SpeedModelName::default(),
            q_source: QSource::default(),
        }
    }
}

impl InversionBlock {
    pub fn regularization(&self) -> Regularization {
        match self.lambda {
            Some(lambda) => Regularization::Fixed { lambda },
            None => Regularization::Discrepancy { tau: self.tau },
        }
    }

    pub fn prior(&self) -> Prior {
        match self.prior {
            PriorName::X3IndependentCylinder => {
                Prior::X3IndependentCylinder { pixel_block: self.pixel_block, weight: None }
            }
            PriorName::Harmonic => Prior::Harmonic { degree: self.harmonic_degree },
            PriorName::Radial => Prior::Radial,
            PriorName::None => Prior::None,
        }
    }
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: ExperimentSpec = toml::from_str(text).map_err(|e| Error::Spec(e.to_string()))?;
        spec.check()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut spec = Self::from_toml(&text)?;
        if let Some(out) = &spec.output {
            if out.is_relative() {
                spec.output = Some(path.parent().unwrap_or(Path::new(".")).join(out));
            }
        }
        Ok(spec)
    }

    fn check(&self) -> Result<()> {
        self.phantom.name.parse::<PhantomKind>()?;
        if let Some(c) = &self.identity.compare {
            c.name.parse::<PhantomKind>()?;
        }
        self.grid()?;
        self.sweep()?;
        if self.inversion.tau <= 0.0 || self.inversion.lambda.is_some_and(|l| !(l >= 0.0)) {
            return Err(Error::Spec("inversion.tau must be positive and inversion.lambda non-negative".into()));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<VoxelGrid> {
        let r = self.grid.radius;
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::Spec("grid.radius must be positive".into()));
        }
        let h = match (self.grid.dims, self.grid.h) {
            (Some(n), None) if n > 0 => 2.0 * r / n as f64,
            (None, Some(h)) if h > 0.0 && h.is_finite() => h,
            _ => return Err(Error::Spec("give exactly one of grid.dims (> 0) and grid.h (> 0)".into())),
        };
        let n = (2.0 * r / h).round() as usize + 2;
        let half = 0.5 * n as f64 * h;
        VoxelGrid::new(crate::model::Vec3::new(-half, -half, -half), h, [n; 3])
            .map_err(|e| Error::Spec(e.to_string()))
    }

    pub fn sweep(&self) -> Result<KSweep> {
        let r = self.grid.radius;
        match (&self.sweep.values, self.sweep.eps0) {
            (None, None) => Ok(KSweep::default_for_radius(r)),
            (Some(v), eps0) => KSweep::new(v.clone(), eps0.unwrap_or(0.3 / r)).map_err(|e| Error::Spec(e.to_string())),
            (None, Some(_)) => Err(Error::Spec("sweep.eps0 needs sweep.values".into())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[phantom]
name = "constant_speed_cyl_source"
params = { speed = 1.3 }

[grid]
dims = 32
"#;

    #[test]
    fn minimal_spec_uses_defaults() {
        let s = ExperimentSpec::from_toml(MINIMAL).unwrap();
        assert_eq!(s.inversion.l_max, 8);
        assert_eq!(s.spectrum.source, SpectrumSource::Ls);
        let g = s.grid().unwrap();
        assert_eq!(g.dims(), [34; 3]);
        assert!(g.strictly_contains_ball(crate::model::Vec3::ZERO, 1.0));
        assert_eq!(s.sweep().unwrap(), KSweep::default_for_radius(1.0));
    }

    #[test]
    fn schema_violations_rejected() {
        assert!(ExperimentSpec::from_toml("[grid]\ndims = 8\n").is_err());
        let typo = MINIMAL.replace("dims", "dimz");
        assert!(ExperimentSpec::from_toml(&typo).is_err());
        let both = format!("{MINIMAL}h = 0.1\n");
        assert!(ExperimentSpec::from_toml(&both).is_err());
        let unknown = MINIMAL.replace("constant_speed_cyl_source", "nope");
        assert!(ExperimentSpec::from_toml(&unknown).is_err());
    }

    #[test]
    fn spec_round_trips_through_toml() {
        let s = ExperimentSpec::from_toml(MINIMAL).unwrap();
        let text = toml::to_string(&s).unwrap();
        assert_eq!(ExperimentSpec::from_toml(&text).unwrap(), s);
    }
}
