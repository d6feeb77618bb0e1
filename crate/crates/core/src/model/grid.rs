//! Regular voxel grids and the cell-centered fields living on them.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Vec3;

/// Smallest admissible number of voxels along any axis.
pub const MIN_DIM: usize = 8;

/// Uniform isotropic voxel grid. `origin` is the minimum corner of the box;
/// voxel centers sit at `origin + (i + 1/2) h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VoxelGrid {
    origin: Vec3,
    spacing: f64,
    dims: [usize; 3],
}

impl VoxelGrid {
    pub fn new(origin: Vec3, spacing: f64, dims: [usize; 3]) -> Result<Self> {
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::InvalidGrid(format!("spacing must be positive, got {spacing}")));
        }
        if !origin.is_finite() {
            return Err(Error::InvalidGrid("origin must be finite".into()));
        }
        if dims.iter().any(|&n| n < MIN_DIM) {
            return Err(Error::InvalidGrid(format!(
                "dims {dims:?} below the minimum of {MIN_DIM} per axis"
            )));
        }
        Ok(VoxelGrid { origin, spacing, dims })
    }

    /// Cube `[-half_width, half_width]^3` split into `n` voxels per axis.
    pub fn centered_cube(n: usize, half_width: f64) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGrid(format!("half width must be positive, got {half_width}")));
        }
        let h = 2.0 * half_width / n as f64;
        VoxelGrid::new(Vec3::new(-half_width, -half_width, -half_width), h, [n; 3])
    }

    /// Centered cube with spacing `h` whose half width is the smallest
    /// multiple of `h` that is at least `half_width`.
    pub fn centered_with_spacing(h: f64, half_width: f64) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidGrid(format!("spacing must be positive, got {h}")));
        }
        let half = (half_width / h - 1e-9).ceil().max(1.0) as usize;
        let hw = half as f64 * h;
        VoxelGrid::new(Vec3::new(-hw, -hw, -hw), h, [2 * half; 3])
    }

    pub fn origin(&self) -> Vec3 {
        self.origin
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn voxel_volume(&self) -> f64 {
        self.spacing.powi(3)
    }

    /// Maximum corner of the box.
    pub fn upper(&self) -> Vec3 {
        let h = self.spacing;
        self.origin
            + Vec3::new(
                self.dims[0] as f64 * h,
                self.dims[1] as f64 * h,
                self.dims[2] as f64 * h,
            )
    }

    /// Row-major linear index, `x3` fastest.
    #[inline]
    pub fn index(&self, i: [usize; 3]) -> usize {
        (i[0] * self.dims[1] + i[1]) * self.dims[2] + i[2]
    }

    #[inline]
    pub fn unravel(&self, idx: usize) -> [usize; 3] {
        let n23 = self.dims[1] * self.dims[2];
        [idx / n23, (idx % n23) / self.dims[2], idx % self.dims[2]]
    }

    #[inline]
    pub fn center(&self, i: [usize; 3]) -> Vec3 {
        let h = self.spacing;
        self.origin
            + Vec3::new(
                (i[0] as f64 + 0.5) * h,
                (i[1] as f64 + 0.5) * h,
                (i[2] as f64 + 0.5) * h,
            )
    }

    #[inline]
    pub fn center_of(&self, idx: usize) -> Vec3 {
        self.center(self.unravel(idx))
    }

    /// Voxel containing `p`, if `p` lies in the box.
    pub fn locate(&self, p: Vec3) -> Option<[usize; 3]> {
        let rel = (p - self.origin) / self.spacing;
        let mut out = [0usize; 3];
        for (a, r) in rel.to_array().into_iter().enumerate() {
            if !(r >= 0.0 && r < self.dims[a] as f64) {
                return None;
            }
            out[a] = r.floor() as usize;
        }
        Some(out)
    }

    /// Whether the closed ball `|x - center| <= radius` lies strictly inside the box.
    pub fn strictly_contains_ball(&self, center: Vec3, radius: f64) -> bool {
        let lo = self.origin;
        let hi = self.upper();
        center.x1 - radius > lo.x1
            && center.x2 - radius > lo.x2
            && center.x3 - radius > lo.x3
            && center.x1 + radius < hi.x1
            && center.x2 + radius < hi.x2
            && center.x3 + radius < hi.x3
    }

    /// Iterator over all voxel multi-indices in storage order.
    pub fn indices(&self) -> impl Iterator<Item = [usize; 3]> + '_ {
        let [n1, n2, n3] = self.dims;
        (0..n1).flat_map(move |i| (0..n2).flat_map(move |j| (0..n3).map(move |l| [i, j, l])))
    }

    /// Smallest index box `(lo, dims)` holding every voxel where `pred` holds.
    pub fn bounding_box(&self, pred: impl Fn(usize) -> bool) -> Option<([usize; 3], [usize; 3])> {
        let mut lo = [usize::MAX; 3];
        let mut hi = [0usize; 3];
        let mut any = false;
        for idx in 0..self.len() {
            if pred(idx) {
                any = true;
                let ijk = self.unravel(idx);
                for a in 0..3 {
                    lo[a] = lo[a].min(ijk[a]);
                    hi[a] = hi[a].max(ijk[a]);
                }
            }
        }
        any.then(|| (lo, [0, 1, 2].map(|a| hi[a] - lo[a] + 1)))
    }

    /// Flat indices of the sub-box `(lo, dims)` in storage order.
    pub fn box_indices(&self, lo: [usize; 3], dims: [usize; 3]) -> Vec<usize> {
        let mut out = Vec::with_capacity(dims.iter().product());
        for i in 0..dims[0] {
            for j in 0..dims[1] {
                for l in 0..dims[2] {
                    out.push(self.index([lo[0] + i, lo[1] + j, lo[2] + l]));
                }
            }
        }
        out
    }

    /// Same lattice (origin offsets are whole voxels apart) and spacing.
    pub fn same_lattice(&self, other: &VoxelGrid) -> bool {
        if (self.spacing - other.spacing).abs() > 1e-12 * self.spacing {
            return false;
        }
        let d = (other.origin - self.origin) / self.spacing;
        d.to_array()
            .iter()
            .all(|c| (c - c.round()).abs() < 1e-9)
    }
}

/// Scalar types a [`ScalarField`] can carry.
pub trait FieldValue:
    Copy
    + Send
    + Sync
    + Default
    + PartialEq
    + std::fmt::Debug
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<f64, Output = Self>
    + std::ops::AddAssign
    + 'static
{
    const IS_COMPLEX: bool;
    fn is_finite_value(&self) -> bool;
    fn abs_value(&self) -> f64;
    fn to_complex(self) -> Complex64;
    fn from_real(x: f64) -> Self;
    fn is_zero(&self) -> bool {
        *self == Self::default()
    }
}

impl FieldValue for f64 {
    const IS_COMPLEX: bool = false;
    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }
    fn abs_value(&self) -> f64 {
        self.abs()
    }
    fn to_complex(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
    fn from_real(x: f64) -> Self {
        x
    }
}

impl FieldValue for Complex64 {
    const IS_COMPLEX: bool = true;
    fn is_finite_value(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
    fn abs_value(&self) -> f64 {
        self.norm()
    }
    fn to_complex(self) -> Complex64 {
        self
    }
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
}

/// Cell-centered values on a [`VoxelGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField<T = f64> {
    grid: VoxelGrid,
    values: Vec<T>,
}

pub type RealField = ScalarField<f64>;
pub type ComplexField = ScalarField<Complex64>;

impl<T: FieldValue> ScalarField<T> {
    pub fn new(grid: VoxelGrid, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidField(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite_value()) {
            return Err(Error::InvalidField(format!(
                "non-finite value at voxel {:?}",
                grid.unravel(i)
            )));
        }
        Ok(ScalarField { grid, values })
    }

    pub fn zeros(grid: VoxelGrid) -> Self {
        ScalarField { grid, values: vec![T::default(); grid.len()] }
    }

    pub fn constant(grid: VoxelGrid, value: T) -> Self {
        ScalarField { grid, values: vec![value; grid.len()] }
    }

    /// Samples `f` at every voxel center.
    pub fn from_fn(grid: VoxelGrid, mut f: impl FnMut(Vec3) -> T) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.center_of(i))).collect();
        ScalarField { grid, values }
    }

    pub fn grid(&self) -> &VoxelGrid {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn get(&self, i: [usize; 3]) -> T {
        self.values[self.grid.index(i)]
    }

    pub fn map<U: FieldValue>(&self, f: impl Fn(T) -> U) -> ScalarField<U> {
        ScalarField { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map<U: FieldValue, V: FieldValue>(
        &self,
        other: &ScalarField<U>,
        f: impl Fn(T, U) -> V,
    ) -> Result<ScalarField<V>> {
        if self.grid != other.grid {
            return Err(Error::Mismatch("fields live on different grids".into()));
        }
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(ScalarField { grid: self.grid, values })
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| v * s)
    }

    /// Midpoint-rule integral over the grid.
    pub fn integral(&self) -> T {
        let mut acc = T::default();
        for &v in &self.values {
            acc += v;
        }
        acc * self.grid.voxel_volume()
    }

    /// Discrete L2 norm (midpoint rule).
    pub fn l2_norm(&self) -> f64 {
        let s: f64 = self.values.iter().map(|v| v.abs_value().powi(2)).sum();
        (s * self.grid.voxel_volume()).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs_value()))
    }

    /// Relative L2 distance `|self - other| / |other|`.
    pub fn relative_l2_error(&self, reference: &ScalarField<T>) -> Result<f64> {
        let diff = self.zip_map(reference, |a, b| a - b)?;
        let denom = reference.l2_norm();
        Ok(if denom == 0.0 { diff.l2_norm() } else { diff.l2_norm() / denom })
    }

    /// Indices of voxels with nonzero value.
    pub fn support(&self) -> Vec<usize> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_zero())
            .map(|(i, _)| i)
            .collect()
    }

    pub fn to_complex(&self) -> ComplexField {
        self.map(|v| v.to_complex())
    }

    /// Trilinear interpolation from voxel centers; `None` outside the hull of
    /// the centers.
    pub fn interpolate(&self, p: Vec3) -> Option<T> {
        let (idx, w) = trilinear_stencil(&self.grid, p)?;
        let mut acc = T::default();
        for (i, wi) in idx.iter().zip(w.iter()) {
            acc += self.values[*i] * *wi;
        }
        Some(acc)
    }
}

impl RealField {
    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// The 8 voxel indices and weights for trilinear interpolation at `p`.
pub fn trilinear_stencil(grid: &VoxelGrid, p: Vec3) -> Option<([usize; 8], [f64; 8])> {
    let h = grid.spacing();
    let rel = (p - grid.origin()) / h - Vec3::new(0.5, 0.5, 0.5);
    let dims = grid.dims();
    let mut base = [0usize; 3];
    let mut frac = [0.0; 3];
    for (a, r) in rel.to_array().into_iter().enumerate() {
        let max = (dims[a] - 1) as f64;
        if !(r >= 0.0 && r <= max) {
            return None;
        }
        let b = (r.floor() as usize).min(dims[a] - 2);
        base[a] = b;
        frac[a] = r - b as f64;
    }
    let mut idx = [0usize; 8];
    let mut w = [0.0; 8];
    for c in 0..8 {
        let o = [(c >> 2) & 1, (c >> 1) & 1, c & 1];
        let mut wc = 1.0;
        for a in 0..3 {
            wc *= if o[a] == 1 { frac[a] } else { 1.0 - frac[a] };
        }
        idx[c] = grid.index([base[0] + o[0], base[1] + o[1], base[2] + o[2]]);
        w[c] = wc;
    }
    Some((idx, w))
}
