use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::kernels::potential::voxel_weight;
use crate::model::{RealField, Vec3};

/// Discrete convolution with the voxel kernel of [`voxel_weight`] on a box of
/// `dims` voxels, via zero-padded FFTs. Equivalent to the direct sum over the
/// same voxels evaluated at every voxel center.
pub struct GridConvolver {
    dims: [usize; 3],
    padded: [usize; 3],
    k: f64,
    kernel_hat: Vec<Complex64>,
    forward: [Arc<dyn Fft<f64>>; 3],
    inverse: [Arc<dyn Fft<f64>>; 3],
}

impl std::fmt::Debug for GridConvolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GridConvolver").field("dims", &self.dims).field("k", &self.k).finish()
    }
}

impl GridConvolver {
    pub fn new(dims: [usize; 3], h: f64, k: f64) -> Self {
        let padded = dims.map(|n| 2 * n);
        let mut planner = FftPlanner::new();
        let forward = padded.map(|n| planner.plan_fft_forward(n));
        let inverse = padded.map(|n| planner.plan_fft_inverse(n));
        let total = padded.iter().product::<usize>();
        let offset = |j: usize, n: usize, p: usize| -> Option<f64> {
            if j < n {
                Some(j as f64)
            } else if j > p - n {
                Some(j as f64 - p as f64)
            } else {
                None
            }
        };
        let mut kernel = vec![Complex64::new(0.0, 0.0); total];
        for i in 0..padded[0] {
            let Some(oi) = offset(i, dims[0], padded[0]) else { continue };
            for j in 0..padded[1] {
                let Some(oj) = offset(j, dims[1], padded[1]) else { continue };
                for l in 0..padded[2] {
                    let Some(ol) = offset(l, dims[2], padded[2]) else { continue };
                    let d = Vec3::new(oi * h, oj * h, ol * h);
                    kernel[(i * padded[1] + j) * padded[2] + l] = voxel_weight(d, h, k);
                }
            }
        }
        let mut conv = GridConvolver { dims, padded, k, kernel_hat: Vec::new(), forward, inverse };
        conv.transform(&mut kernel, false);
        let norm = 1.0 / total as f64;
        kernel.iter_mut().for_each(|v| *v *= norm);
        conv.kernel_hat = kernel;
        conv
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    fn transform(&self, data: &mut [Complex64], inverse: bool) {
        let plans = if inverse { &self.inverse } else { &self.forward };
        let [p0, p1, p2] = self.padded;
        // x3 lines are contiguous
        let mut scratch = vec![Complex64::new(0.0, 0.0); plans[2].get_inplace_scratch_len().max(plans[1].get_inplace_scratch_len()).max(plans[0].get_inplace_scratch_len())];
        plans[2].process_with_scratch(data, &mut scratch);
        let mut line = vec![Complex64::new(0.0, 0.0); p0.max(p1)];
        for i in 0..p0 {
            for l in 0..p2 {
                for j in 0..p1 {
                    line[j] = data[(i * p1 + j) * p2 + l];
                }
                plans[1].process_with_scratch(&mut line[..p1], &mut scratch);
                for j in 0..p1 {
                    data[(i * p1 + j) * p2 + l] = line[j];
                }
            }
        }
        let stride = p1 * p2;
        for jl in 0..stride {
            for i in 0..p0 {
                line[i] = data[i * stride + jl];
            }
            plans[0].process_with_scratch(&mut line[..p0], &mut scratch);
            for i in 0..p0 {
                data[i * stride + jl] = line[i];
            }
        }
    }

    /// Potential at every voxel center of the box due to `input` (one value per voxel).
    pub fn apply(&self, input: &[Complex64]) -> Vec<Complex64> {
        let [n0, n1, n2] = self.dims;
        assert_eq!(input.len(), n0 * n1 * n2, "input does not match convolver dims");
        let [_, p1, p2] = self.padded;
        let mut work = vec![Complex64::new(0.0, 0.0); self.kernel_hat.len()];
        for i in 0..n0 {
            for j in 0..n1 {
                let src = (i * n1 + j) * n2;
                let dst = (i * p1 + j) * p2;
                work[dst..dst + n2].copy_from_slice(&input[src..src + n2]);
            }
        }
        self.transform(&mut work, false);
        work.iter_mut().zip(&self.kernel_hat).for_each(|(w, k)| *w *= k);
        self.transform(&mut work, true);
        let mut out = Vec::with_capacity(input.len());
        for i in 0..n0 {
            for j in 0..n1 {
                let src = (i * p1 + j) * p2;
                out.extend_from_slice(&work[src..src + n2]);
            }
        }
        out
    }

    /// Real convolution; only meaningful for the static kernel (`k = 0`).
    pub fn apply_real(&self, input: &[f64]) -> Vec<f64> {
        debug_assert!(self.k == 0.0, "real convolution needs the static kernel");
        let c: Vec<Complex64> = input.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.apply(&c).into_iter().map(|v| v.re).collect()
    }
}

/// Static potential `Δ^{-1}ψ` at the voxels where `within` holds, computed on
/// the bounding box of `supp ψ` and those voxels; zero elsewhere.
pub fn static_potential_on(psi: &RealField, within: impl Fn(usize) -> bool) -> RealField {
    let grid = *psi.grid();
    let v = psi.values();
    let mut out = RealField::zeros(grid);
    let Some((lo, dims)) = grid.bounding_box(|i| v[i] != 0.0 || within(i)) else {
        return out;
    };
    let sub = grid.box_indices(lo, dims);
    let input: Vec<f64> = sub.iter().map(|&i| v[i]).collect();
    let pot = GridConvolver::new(dims, grid.spacing(), 0.0).apply_real(&input);
    for (&i, p) in sub.iter().zip(pot) {
        if within(i) {
            out.values_mut()[i] = p;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::potential::helmholtz_potential;
    use crate::model::{ComplexField, VoxelGrid};

    #[test]
    fn matches_direct_sum() {
        let g = VoxelGrid::new(Vec3::new(-0.5, -0.4, -0.3), 0.1, [9, 8, 10]).unwrap();
        let psi = ComplexField::from_fn(g, |p| Complex64::new((3.0 * p.x1).sin() + p.x3, p.x2 * p.x2));
        let k = 0.8;
        let conv = GridConvolver::new(g.dims(), g.spacing(), k);
        let fast = conv.apply(psi.values());
        let targets: Vec<Vec3> = (0..g.len()).map(|i| g.center_of(i)).collect();
        let slow = helmholtz_potential(&psi, &targets, k);
        let scale = slow.iter().map(|v| v.norm()).fold(0.0, f64::max);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).norm() < 1e-12 * scale, "{a} vs {b}");
        }
    }
}
