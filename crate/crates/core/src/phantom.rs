//! Synthetic configurations used by the experiments and tests.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::GridConvolver;
use crate::model::{RealField, RegionSpec, TatPatConfig, Vec3, VoxelGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhantomKind {
    FreeSpace,
    ConstantSpeedCylSource,
    InclusionInBackground,
    RadialBall,
}

impl PhantomKind {
    pub const ALL: [PhantomKind; 4] = [
        PhantomKind::FreeSpace,
        PhantomKind::ConstantSpeedCylSource,
        PhantomKind::InclusionInBackground,
        PhantomKind::RadialBall,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PhantomKind::FreeSpace => "free_space",
            PhantomKind::ConstantSpeedCylSource => "constant_speed_cyl_source",
            PhantomKind::InclusionInBackground => "inclusion_in_background",
            PhantomKind::RadialBall => "radial_ball",
        }
    }
}

impl fmt::Display for PhantomKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PhantomKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        PhantomKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::UnknownPhantom(s.to_string()))
    }
}

/// A phantom parameter value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Number(f64),
    Vector(Vec<f64>),
    Text(String),
}

pub type ParamMap = BTreeMap<String, ParamValue>;

/// Known structure of an inclusion phantom: `c^{-2} = c_b^{-2} + gamma^{-2} chi_sigma` in omega.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InclusionInfo {
    pub sigma: RegionSpec,
    pub background_speed: f64,
    pub gamma: f64,
}

/// A built phantom: the configuration plus the structural facts the
/// reconstruction priors need.
#[derive(Debug, Clone)]
pub struct Phantom {
    pub kind: PhantomKind,
    pub config: TatPatConfig,
    pub inclusion: Option<InclusionInfo>,
    /// Constant speed on omega, when there is one.
    pub speed: Option<f64>,
}

impl Phantom {
    /// Background speed field: `c_b` on omega and 1 outside.
    pub fn background_speed_field(&self) -> Option<RealField> {
        let inc = self.inclusion?;
        let omega = self.config.omega;
        Some(RealField::from_fn(*self.config.grid(), |p| {
            if omega.contains(p) {
                inc.background_speed
            } else {
                1.0
            }
        }))
    }
}

/// Builds a named phantom on `grid`. See [`build`] for the structural extras.
pub fn build_phantom(name: &str, grid: VoxelGrid, params: &ParamMap) -> Result<TatPatConfig> {
    build(name.parse()?, grid, params).map(|p| p.config)
}

struct Params<'a> {
    map: &'a ParamMap,
    used: Vec<&'static str>,
}

impl<'a> Params<'a> {
    fn new(map: &'a ParamMap) -> Self {
        Params { map, used: Vec::new() }
    }

    fn num(&mut self, key: &'static str, default: f64) -> Result<f64> {
        self.used.push(key);
        match self.map.get(key) {
            None => Ok(default),
            Some(ParamValue::Number(x)) if x.is_finite() => Ok(*x),
            Some(other) => Err(Error::param(key, format!("expected a finite number, got {other:?}"))),
        }
    }

    fn positive(&mut self, key: &'static str, default: f64) -> Result<f64> {
        let x = self.num(key, default)?;
        if x > 0.0 {
            Ok(x)
        } else {
            Err(Error::param(key, format!("must be positive, got {x}")))
        }
    }

    fn vector<const N: usize>(&mut self, key: &'static str, default: [f64; N]) -> Result<[f64; N]> {
        self.used.push(key);
        match self.map.get(key) {
            None => Ok(default),
            Some(ParamValue::Vector(v)) if v.len() == N && v.iter().all(|x| x.is_finite()) => {
                let mut out = [0.0; N];
                out.copy_from_slice(v);
                Ok(out)
            }
            Some(other) => Err(Error::param(key, format!("expected {N} numbers, got {other:?}"))),
        }
    }

    fn text(&mut self, key: &'static str, default: &'static str) -> Result<String> {
        self.used.push(key);
        match self.map.get(key) {
            None => Ok(default.to_string()),
            Some(ParamValue::Text(s)) => Ok(s.clone()),
            Some(other) => Err(Error::param(key, format!("expected text, got {other:?}"))),
        }
    }

    fn finish(self) -> Result<()> {
        match self.map.keys().find(|k| !self.used.contains(&k.as_str())) {
            Some(k) => Err(Error::param(k, "unknown parameter for this phantom")),
            None => Ok(()),
        }
    }
}

/// Builds a phantom, returning its structural metadata alongside the config.
pub fn build(kind: PhantomKind, grid: VoxelGrid, params: &ParamMap) -> Result<Phantom> {
    let mut p = Params::new(params);
    let radius = p.positive("radius", 1.0)?;
    let phantom = match kind {
        PhantomKind::FreeSpace => free_space(&mut p, grid, radius)?,
        PhantomKind::ConstantSpeedCylSource => constant_speed_cyl(&mut p, grid, radius)?,
        PhantomKind::InclusionInBackground => inclusion(&mut p, grid, radius)?,
        PhantomKind::RadialBall => radial_ball(&mut p, grid, radius)?,
    };
    p.finish()?;
    let violations = phantom.config.validate();
    if let Some(v) = violations.first() {
        return Err(Error::param("params", v.to_string()));
    }
    Ok(phantom)
}

fn default_c0(c: &RealField) -> f64 {
    c.values().iter().copied().fold(1.0, f64::min)
}

fn finish_config(p: &mut Params<'_>, omega: RegionSpec, radius: f64, c: RealField, f: RealField) -> Result<TatPatConfig> {
    let c0 = p.num("c0", default_c0(&c))?;
    Ok(TatPatConfig { omega, radius, c, f, c0 })
}

fn free_space(p: &mut Params<'_>, grid: VoxelGrid, radius: f64) -> Result<Phantom> {
    let amplitude = p.num("amplitude", 0.0)?;
    let sigma = p.positive("sigma", 0.12 * radius)?;
    let omega = RegionSpec::ball(Vec3::ZERO, p.positive("ball_radius", 0.5 * radius)?);
    let c = RealField::constant(grid, 1.0);
    let f = RealField::from_fn(grid, |x| {
        if amplitude != 0.0 && omega.contains(x) {
            amplitude * (-x.norm_sq() / (2.0 * sigma * sigma)).exp()
        } else {
            0.0
        }
    });
    let config = finish_config(p, omega, radius, c, f)?;
    Ok(Phantom { kind: PhantomKind::FreeSpace, config, inclusion: None, speed: Some(1.0) })
}

/// Gaussian in `(x1, x2)` restricted to `omega`, independent of `x3`.
fn gaussian_disk(grid: VoxelGrid, omega: RegionSpec, amplitude: f64, sigma: f64, center: [f64; 2]) -> RealField {
    RealField::from_fn(grid, |x| {
        if omega.contains(x) {
            let d1 = x.x1 - center[0];
            let d2 = x.x2 - center[1];
            amplitude * (-(d1 * d1 + d2 * d2) / (2.0 * sigma * sigma)).exp()
        } else {
            0.0
        }
    })
}

fn cylinder_omega(p: &mut Params<'_>, radius: f64) -> Result<RegionSpec> {
    let rho = p.positive("cyl_radius", 0.5 * radius)?;
    let hh = p.positive("half_height", 0.5 * radius)?;
    Ok(RegionSpec::cylinder(Vec3::ZERO, rho, hh))
}

fn constant_speed_cyl(p: &mut Params<'_>, grid: VoxelGrid, radius: f64) -> Result<Phantom> {
    let speed = p.positive("speed", 1.5)?;
    let amplitude = p.num("amplitude", 1.0)?;
    let sigma = p.positive("sigma", 0.2 * radius)?;
    let center = p.vector("source_center", [0.1 * radius, -0.05 * radius])?;
    let omega = cylinder_omega(p, radius)?;
    let c = RealField::from_fn(grid, |x| if omega.contains(x) { speed } else { 1.0 });
    let f = gaussian_disk(grid, omega, amplitude, sigma, center);
    let config = finish_config(p, omega, radius, c, f)?;
    Ok(Phantom { kind: PhantomKind::ConstantSpeedCylSource, config, inclusion: None, speed: Some(speed) })
}

fn inclusion(p: &mut Params<'_>, grid: VoxelGrid, radius: f64) -> Result<Phantom> {
    let cb = p.positive("background_speed", 1.2)?;
    let gamma = p.positive("gamma", 2.0)?;
    let amplitude = p.num("amplitude", 1.0)?;
    let sigma_width = p.positive("sigma", 0.2 * radius)?;
    let center = p.vector("source_center", [0.1 * radius, -0.05 * radius])?;
    let inc_center = p.vector("inclusion_center", [0.1 * radius, 0.0, 0.1 * radius])?;
    let inc_radius = p.positive("inclusion_radius", 0.2 * radius)?;
    let omega = cylinder_omega(p, radius)?;
    let sigma = RegionSpec::ball(Vec3::from(inc_center), inc_radius);
    if !omega.contains_region(&sigma) {
        return Err(Error::param("inclusion_center", "the inclusion must lie inside omega"));
    }
    let inv_cb2 = 1.0 / (cb * cb);
    let inv_g2 = 1.0 / (gamma * gamma);
    let c = RealField::from_fn(grid, |x| {
        if !omega.contains(x) {
            1.0
        } else if sigma.contains(x) {
            1.0 / (inv_cb2 + inv_g2).sqrt()
        } else {
            cb
        }
    });
    let f = gaussian_disk(grid, omega, amplitude, sigma_width, center);
    let config = finish_config(p, omega, radius, c, f)?;
    Ok(Phantom {
        kind: PhantomKind::InclusionInBackground,
        config,
        inclusion: Some(InclusionInfo { sigma, background_speed: cb, gamma }),
        speed: None,
    })
}

fn radial_ball(p: &mut Params<'_>, grid: VoxelGrid, radius: f64) -> Result<Phantom> {
    let speed = p.positive("speed", 1.0)?;
    let amplitude = p.num("amplitude", 1.0)?;
    let sigma = p.positive("sigma", 0.15 * radius)?;
    let rho = p.positive("ball_radius", 0.75 * radius)?;
    let profile = p.text("profile", "gaussian")?;
    let omega = RegionSpec::ball(Vec3::ZERO, rho);
    let c = RealField::from_fn(grid, |x| if omega.contains(x) { speed } else { 1.0 });
    let f = match profile.as_str() {
        "gaussian" => RealField::from_fn(grid, |x| {
            if omega.contains(x) {
                amplitude * (-x.norm_sq() / (2.0 * sigma * sigma)).exp()
            } else {
                0.0
            }
        }),
        "sign_cancelling" => sign_cancelling(grid, omega, amplitude, sigma)?.scale(speed * speed),
        other => return Err(Error::param("profile", format!("unknown profile `{other}`"))),
    };
    let config = finish_config(p, omega, radius, c, f)?;
    Ok(Phantom { kind: PhantomKind::RadialBall, config, inclusion: None, speed: Some(speed) })
}

/// Radial `q` of three Gaussians whose discrete mass and discrete
/// `sum_omega Δ^{-1} q` both vanish, so `∫ Δ^{-1}(q) Φ0(x - y) dy` is
/// numerically zero outside omega.
fn sign_cancelling(grid: VoxelGrid, omega: RegionSpec, amplitude: f64, sigma: f64) -> Result<RealField> {
    let widths = [0.6 * sigma, sigma, 1.5 * sigma];
    let profiles: Vec<RealField> = widths
        .iter()
        .map(|&s| {
            RealField::from_fn(grid, |x| {
                if omega.contains(x) {
                    (-x.norm_sq() / (2.0 * s * s)).exp()
                } else {
                    0.0
                }
            })
        })
        .collect();
    let mask: Vec<bool> = (0..grid.len()).map(|i| omega.contains(grid.center_of(i))).collect();
    let conv = GridConvolver::new(grid.dims(), grid.spacing(), 0.0);
    let mass: Vec<f64> = profiles.iter().map(|g| g.values().iter().sum()).collect();
    let pot: Vec<f64> = profiles
        .iter()
        .map(|g| {
            let v = conv.apply_real(g.values());
            v.iter().zip(&mask).filter(|(_, &m)| m).map(|(x, _)| *x).sum()
        })
        .collect();
    // a1 fixed; solve for a2, a3.
    let (a11, a12, b1) = (mass[1], mass[2], -amplitude * mass[0]);
    let (a21, a22, b2) = (pot[1], pot[2], -amplitude * pot[0]);
    let det = a11 * a22 - a12 * a21;
    if det.abs() < 1e-300 {
        return Err(Error::param("sigma", "degenerate sign-cancelling profile"));
    }
    let a2 = (b1 * a22 - a12 * b2) / det;
    let a3 = (a11 * b2 - a21 * b1) / det;
    let coeffs = [amplitude, a2, a3];
    let values = (0..grid.len())
        .map(|i| coeffs.iter().zip(&profiles).map(|(a, g)| a * g.values()[i]).sum())
        .collect();
    RealField::new(grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> VoxelGrid {
        VoxelGrid::centered_cube(24, 1.1).unwrap()
    }

    fn params(pairs: &[(&str, ParamValue)]) -> ParamMap {
        pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
    }

    #[test]
    fn every_phantom_validates() {
        for kind in PhantomKind::ALL {
            let ph = build(kind, grid(), &ParamMap::new()).unwrap();
            assert!(ph.config.validate().is_empty(), "{kind}");
        }
    }

    #[test]
    fn free_space_is_trivial() {
        let cfg = build_phantom("free_space", grid(), &ParamMap::new()).unwrap();
        assert!(cfg.c.values().iter().all(|&c| c == 1.0));
        assert!(cfg.f.values().iter().all(|&f| f == 0.0));
    }

    #[test]
    fn unknown_name_and_param_rejected() {
        assert!(matches!(build_phantom("nope", grid(), &ParamMap::new()), Err(Error::UnknownPhantom(_))));
        let p = params(&[("spede", ParamValue::Number(1.0))]);
        assert!(build_phantom("constant_speed_cyl_source", grid(), &p).is_err());
    }

    #[test]
    fn cylinder_source_is_x3_independent_and_positive() {
        let p = params(&[("speed", ParamValue::Number(1.5))]);
        let cfg = build_phantom("constant_speed_cyl_source", grid(), &p).unwrap();
        let g = *cfg.grid();
        for idx in 0..g.len() {
            let [i, j, l] = g.unravel(idx);
            let x = g.center([i, j, l]);
            if cfg.omega.contains(x) {
                assert_eq!(cfg.c.values()[idx], 1.5);
                // compare with the column's first inside voxel
                let l0 = (0..g.dims()[2]).find(|&m| cfg.omega.contains(g.center([i, j, m]))).unwrap();
                assert_eq!(cfg.f.get([i, j, l]), cfg.f.get([i, j, l0]));
            } else {
                assert_eq!(cfg.c.values()[idx], 1.0);
            }
            assert!(cfg.f.values()[idx] >= 0.0);
        }
        assert!(cfg.f.integral() > 0.0);
    }

    #[test]
    fn inclusion_slowness_is_two_valued() {
        let ph = build(PhantomKind::InclusionInBackground, grid(), &ParamMap::new()).unwrap();
        let inc = ph.inclusion.unwrap();
        let g2 = inc.gamma.powi(-2);
        let cb2 = inc.background_speed.powi(-2);
        let mut hits = [0usize; 2];
        for (idx, &c) in ph.config.c.values().iter().enumerate() {
            let x = ph.config.grid().center_of(idx);
            if !ph.config.omega.contains(x) {
                continue;
            }
            let d = c.powi(-2) - cb2;
            if d.abs() < 1e-14 {
                hits[0] += 1;
            } else {
                assert!((d - g2).abs() < 1e-14, "{d}");
                hits[1] += 1;
            }
        }
        assert!(hits[0] > 0 && hits[1] > 0);
    }

    #[test]
    fn inclusion_outside_omega_rejected() {
        let p = params(&[("inclusion_center", ParamValue::Vector(vec![0.45, 0.0, 0.0]))]);
        assert!(build_phantom("inclusion_in_background", grid(), &p).is_err());
    }

    #[test]
    fn sign_cancelling_profile_has_zero_mass() {
        let p = params(&[("profile", ParamValue::Text("sign_cancelling".into()))]);
        let cfg = build_phantom("radial_ball", grid(), &p).unwrap();
        let q = cfg.q();
        let total: f64 = q.values().iter().map(|v| v.abs()).sum();
        assert!(q.values().iter().sum::<f64>().abs() < 1e-12 * total);
        assert!(q.min_value() < 0.0);
    }
}
