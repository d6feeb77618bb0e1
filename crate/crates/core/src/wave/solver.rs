use log::debug;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{
    sample_surface_with_phase, trilinear_stencil, BoundarySampling, SurfaceId, TatPatConfig, Vec3, VoxelGrid,
};
use crate::wave::TimeTrace;

/// Integrated cubic sponge strength `σ_max·L`; one round trip through the
/// layer attenuates by `exp(-σ_max L / 2)`.
const SPONGE_STRENGTH: f64 = 37.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Padding {
    /// Extend the box so no wave reflected at the sponge reaches `B_R` before `T`.
    ReflectionFree,
    /// Extra voxels on every side of the configuration grid.
    Voxels(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateOptions {
    pub t_final: f64,
    pub cfl: f64,
    pub layer_width: usize,
    pub padding: Padding,
    pub n_sphere: usize,
    pub n_omega: usize,
    /// Azimuthal rotation of the sphere lattices.
    pub phase: f64,
}

impl SimulateOptions {
    /// Defaults: `T = 6R/c0`, CFL 0.5, 16-voxel sponge, reflection-free box.
    pub fn for_config(config: &TatPatConfig) -> Self {
        SimulateOptions {
            t_final: 6.0 * config.radius / config.c0,
            cfl: 0.5,
            layer_width: 16,
            padding: Padding::ReflectionFree,
            n_sphere: 1024,
            n_omega: 512,
            phase: 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimulationOutput {
    pub omega: TimeTrace,
    pub sphere: TimeTrace,
    /// Interior energy in `B_R` at the half steps, starting with the initial energy.
    pub energy: Vec<f64>,
    pub box_grid: VoxelGrid,
}

impl SimulationOutput {
    pub fn energy_ratio(&self) -> f64 {
        let e0 = self.energy[0];
        if e0 == 0.0 {
            0.0
        } else {
            *self.energy.last().unwrap() / e0
        }
    }
}

/// The simulation box: the configuration lattice extended by padding, the sponge and one wall voxel.
fn simulation_box(config: &TatPatConfig, opts: &SimulateOptions) -> Result<(VoxelGrid, [usize; 3])> {
    let g = config.grid();
    let h = g.spacing();
    let lo = g.origin();
    let hi = g.upper();
    let (lo, hi) = (lo.to_array(), hi.to_array());
    let mut ext_lo = [0usize; 3];
    let mut ext_hi = [0usize; 3];
    for a in 0..3 {
        let (el, eh) = match opts.padding {
            Padding::Voxels(n) => (n, n),
            Padding::ReflectionFree => {
                let w = 0.5 * (opts.t_final + config.radius + config.omega.max_radius()) + h;
                let need = |d: f64| ((w - d) / h).ceil().max(0.0) as usize;
                (need(-lo[a]), need(hi[a]))
            }
        };
        ext_lo[a] = el + opts.layer_width + 1;
        ext_hi[a] = eh + opts.layer_width + 1;
    }
    let dims = [0, 1, 2].map(|a| g.dims()[a] + ext_lo[a] + ext_hi[a]);
    let origin = Vec3::new(
        lo[0] - ext_lo[0] as f64 * h,
        lo[1] - ext_lo[1] as f64 * h,
        lo[2] - ext_lo[2] as f64 * h,
    );
    let grid = VoxelGrid::new(origin, h, dims)?;
    Ok((grid, ext_lo))
}

/// Sponge damping per index along one axis; zero in the interior.
fn sponge_profile(n: usize, layer: usize, h: f64) -> Vec<f64> {
    let mut s = vec![0.0; n];
    if layer == 0 {
        return s;
    }
    let len = layer as f64 * h;
    let smax = SPONGE_STRENGTH / len;
    for i in 0..n {
        // depth into the layer, measured from its inner edge
        let from_lo = (layer + 1) as f64 - i as f64 - 0.5;
        let from_hi = i as f64 + 0.5 - (n - layer - 1) as f64;
        let d = from_lo.max(from_hi).clamp(0.0, layer as f64) / layer as f64;
        s[i] = smax * d * d * d;
    }
    s
}

struct Recorder {
    stencils: Vec<([usize; 8], [f64; 8])>,
    values: Vec<f64>,
    n_samples: usize,
}

impl Recorder {
    fn new(grid: &VoxelGrid, sampling: &BoundarySampling, n_samples: usize) -> Result<Self> {
        let stencils = sampling
            .points
            .iter()
            .map(|p| {
                trilinear_stencil(grid, *p)
                    .ok_or_else(|| Error::Precondition(format!("sample point {p:?} outside simulation box")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Recorder { values: vec![0.0; stencils.len() * n_samples], stencils, n_samples })
    }

    fn record(&mut self, n: usize, u: &[f64]) {
        for (i, (idx, w)) in self.stencils.iter().enumerate() {
            let mut v = 0.0;
            for j in 0..8 {
                v += w[j] * u[idx[j]];
            }
            self.values[i * self.n_samples + n] = v;
        }
    }
}

/// Leapfrog solution of `c^{-2} u_tt = Δu`, `u(0) = f`, `u_t(0) = 0`, with
/// traces recorded on `∂Ω` and `∂B_R` at every step.
pub fn simulate(config: &TatPatConfig, opts: &SimulateOptions) -> Result<SimulationOutput> {
    if !(opts.cfl > 0.0 && opts.cfl < 1.0) {
        return Err(Error::Unstable(format!("cfl must lie in (0, 1), got {}", opts.cfl)));
    }
    if !(opts.t_final > 0.0 && opts.t_final.is_finite()) {
        return Err(Error::param("t_final", "must be positive"));
    }
    if let Some(v) = config.validate().first() {
        return Err(Error::Precondition(v.to_string()));
    }
    let (grid, offset) = simulation_box(config, opts)?;
    let cgrid = config.grid();
    let h = grid.spacing();
    let [n0, n1, n2] = grid.dims();
    let max_c = config.max_speed().max(1.0);
    let dt_bound = h / (3f64.sqrt() * max_c);
    let n_steps = ((opts.t_final / (opts.cfl * dt_bound)).ceil() as usize).max(2);
    let dt = opts.t_final / n_steps as f64;
    debug!("simulation box {:?}, dt {dt:.3e}, {n_steps} steps", grid.dims());

    let inside_cfg = |i: usize, j: usize, l: usize| -> Option<usize> {
        let [c0, c1, c2] = cgrid.dims();
        let (a, b, c) = (i.checked_sub(offset[0])?, j.checked_sub(offset[1])?, l.checked_sub(offset[2])?);
        (a < c0 && b < c1 && c < c2).then(|| cgrid.index([a, b, c]))
    };
    let total = grid.len();
    let r2 = (dt / h) * (dt / h);
    let mut coef = vec![r2; total];
    let mut u = vec![0.0; total];
    let mut inv_c2 = vec![1.0; total];
    for i in 0..n0 {
        for j in 0..n1 {
            for l in 0..n2 {
                if let Some(ci) = inside_cfg(i, j, l) {
                    let idx = grid.index([i, j, l]);
                    let c = config.c.values()[ci];
                    coef[idx] = r2 * c * c;
                    inv_c2[idx] = 1.0 / (c * c);
                    u[idx] = config.f.values()[ci];
                }
            }
        }
    }
    let layer = opts.layer_width;
    let sig = [0, 1, 2].map(|a| sponge_profile(grid.dims()[a], layer, h));

    let sphere = sample_surface_with_phase(SurfaceId::ReferenceSphere, config, opts.n_sphere, opts.phase)?;
    let omega = sample_surface_with_phase(SurfaceId::Omega, config, opts.n_omega, opts.phase)?;
    let n_samples = n_steps + 1;
    let mut rec_s = Recorder::new(&grid, &sphere, n_samples)?;
    let mut rec_o = Recorder::new(&grid, &omega, n_samples)?;

    // energy over voxels with centers in B_R
    let ball: Vec<usize> = (0..total).filter(|&i| grid.center_of(i).norm() < config.radius).collect();
    let grad_dot = |a: &[f64], b: &[f64], idx: usize| -> f64 {
        let s = [n1 * n2, n2, 1];
        let mut acc = 0.0;
        for st in s {
            acc += (a[idx + st] - a[idx]) * (b[idx + st] - b[idx]);
        }
        acc / (h * h)
    };
    let vol = h * h * h;
    let mut energy = vec![ball.iter().map(|&i| grad_dot(&u, &u, i)).sum::<f64>() * vol];

    rec_s.record(0, &u);
    rec_o.record(0, &u);
    // Taylor first step, u_t(0) = 0
    let mut prev = u.clone();
    let slab = n1 * n2;
    let lap = |u: &[f64], idx: usize| -> f64 {
        u[idx - slab] + u[idx + slab] + u[idx - n2] + u[idx + n2] + u[idx - 1] + u[idx + 1] - 6.0 * u[idx]
    };
    {
        let src = &u;
        prev.par_chunks_mut(slab).enumerate().for_each(|(i, out)| {
            if i == 0 || i == n0 - 1 {
                return;
            }
            for j in 1..n1 - 1 {
                for l in 1..n2 - 1 {
                    let idx = (i * n1 + j) * n2 + l;
                    out[j * n2 + l] = src[idx] + 0.5 * coef[idx] * lap(src, idx);
                }
            }
        });
    }
    // prev now holds u^1; swap so `u` is the current level
    std::mem::swap(&mut u, &mut prev);
    let kinetic_potential = |cur: &[f64], old: &[f64]| -> f64 {
        ball.iter()
            .map(|&i| {
                let v = (cur[i] - old[i]) / dt;
                v * v * inv_c2[i] + grad_dot(cur, old, i)
            })
            .sum::<f64>()
            * vol
    };
    energy.push(kinetic_potential(&u, &prev));
    rec_s.record(1, &u);
    rec_o.record(1, &u);

    for n in 1..n_steps {
        {
            let cur = &u;
            prev.par_chunks_mut(slab).enumerate().for_each(|(i, out)| {
                if i == 0 || i == n0 - 1 {
                    return;
                }
                let si = sig[0][i];
                for j in 1..n1 - 1 {
                    let sij = si + sig[1][j];
                    let row = (i * n1 + j) * n2;
                    for l in 1..n2 - 1 {
                        let idx = row + l;
                        let s = sij + sig[2][l];
                        let o = j * n2 + l;
                        let next = 2.0 * cur[idx] + coef[idx] * lap(cur, idx);
                        out[o] = if s == 0.0 {
                            next - out[o]
                        } else {
                            let a = 0.5 * s * dt;
                            (next - (1.0 - a) * out[o]) / (1.0 + a)
                        };
                    }
                }
            });
        }
        std::mem::swap(&mut u, &mut prev);
        energy.push(kinetic_potential(&u, &prev));
        rec_s.record(n + 1, &u);
        rec_o.record(n + 1, &u);
    }

    let ratio = if energy[0] > 0.0 { *energy.last().unwrap() / energy[0] } else { 0.0 };
    let make = |sampling: BoundarySampling, rec: Recorder| -> Result<TimeTrace> {
        let t = TimeTrace {
            sampling,
            dt,
            n_steps,
            values: rec.values,
            dt_bound,
            energy_ratio: Some(ratio),
        };
        t.check()?;
        Ok(t)
    };
    Ok(SimulationOutput {
        sphere: make(sphere, rec_s)?,
        omega: make(omega, rec_o)?,
        energy,
        box_grid: grid,
    })
}
