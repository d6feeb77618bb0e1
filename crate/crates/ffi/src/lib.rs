//! C ABI for the `tatpat` workbench.
//!
//! Objects are opaque handles created by `tp_*` constructors and released with
//! the matching `tp_*_free`. Every fallible call returns a [`TpStatus`]; on
//! failure [`tp_last_error_message`] describes the error for the calling thread.
//! Output pointers are written only on success.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::panic::{catch_unwind, AssertUnwindSafe};

use tatpat::helmholtz::{ls_freq_trace, temporal_ft, FreqTrace};
use tatpat::inversion::{
    reconstruct_constant_speed, recover_constant_c, recover_inclusion_gamma, recover_q, GammaOptions, Prior,
    RecoverOptions,
};
use tatpat::io;
use tatpat::model::{BoundarySampling, KSweep, RealField, VoxelGrid};
use tatpat::phantom::{build, ParamMap, Phantom, PhantomKind};
use tatpat::wave::{simulate, SimulateOptions, TimeTrace};
use tatpat::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TpStatus {
    Ok = 0,
    /// Null pointer, bad UTF-8 or a buffer of the wrong length.
    InvalidArgument = 1,
    /// Inputs violate a documented precondition.
    Validation = 2,
    /// Non-contraction, degenerate weights, ill-conditioning or a non-physical estimate.
    NumericalGuard = 3,
    /// File system or file format failure.
    Io = 4,
    /// Internal panic; the library state is unchanged.
    Panic = 5,
}

/// A phantom: grid, support region, speed and source.
pub struct TpConfig {
    inner: Phantom,
}

/// A real scalar field on a voxel grid.
pub struct TpField {
    inner: RealField,
}

/// Boundary samples in time on the reference sphere.
pub struct TpTrace {
    inner: TimeTrace,
}

/// Boundary spectra over a wavenumber sweep.
pub struct TpFreqTrace {
    inner: FreqTrace,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> TpStatus {
    if e.is_numerical_guard() {
        TpStatus::NumericalGuard
    } else if matches!(e, Error::Io(_) | Error::Format(_)) {
        TpStatus::Io
    } else {
        TpStatus::Validation
    }
}

enum Fail {
    Arg(String),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> TpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            TpStatus::Ok
        }
        Ok(Err(Fail::Arg(m))) => {
            set_error(m);
            TpStatus::InvalidArgument
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            TpStatus::Panic
        }
    }
}

unsafe fn arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| Fail::Arg(format!("`{name}` is null")))
}

unsafe fn text<'a>(p: *const c_char, name: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail::Arg(format!("`{name}` is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail::Arg(format!("`{name}` is not UTF-8")))
}

unsafe fn out<'a, T>(p: *mut *mut T, name: &str) -> Result<&'a mut *mut T, Fail> {
    p.as_mut().ok_or_else(|| Fail::Arg(format!("`{name}` is null")))
}

unsafe fn slice<'a>(p: *const f64, len: usize, name: &str) -> Result<&'a [f64], Fail> {
    if p.is_null() {
        return Err(Fail::Arg(format!("`{name}` is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a>(p: *mut f64, len: usize, expected: usize, name: &str) -> Result<&'a mut [f64], Fail> {
    if p.is_null() {
        return Err(Fail::Arg(format!("`{name}` is null")));
    }
    if len != expected {
        return Err(Fail::Arg(format!("`{name}` holds {len} values, expected {expected}")));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn sweep(ks: *const f64, n: usize, radius: f64) -> Result<KSweep, Fail> {
    if ks.is_null() {
        return Ok(KSweep::default_for_radius(radius));
    }
    let v = slice(ks, n, "ks")?.to_vec();
    let eps0 = 1.5 * v.last().copied().unwrap_or(0.0);
    Ok(KSweep::new(v, eps0)?)
}

fn boxed<T>(slot: &mut *mut T, v: T) {
    *slot = Box::into_raw(Box::new(v));
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next `tp_*` call on the same thread.
#[no_mangle]
pub extern "C" fn tp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a named phantom on the cube `[-(R + h), R + h]³` with `dims` voxels
/// across `[-R, R]`. `params_toml` may be null or a TOML table of parameters.
#[no_mangle]
pub unsafe extern "C" fn tp_phantom_build(
    name: *const c_char,
    dims: usize,
    radius: f64,
    params_toml: *const c_char,
    out_config: *mut *mut TpConfig,
) -> TpStatus {
    guard(|| {
        let kind: PhantomKind = text(name, "name")?.parse()?;
        let params: ParamMap = if params_toml.is_null() {
            ParamMap::new()
        } else {
            toml::from_str(text(params_toml, "params_toml")?).map_err(|e| Fail::Lib(Error::Spec(e.to_string())))?
        };
        let slot = out(out_config, "out_config")?;
        if dims == 0 || !(radius > 0.0 && radius.is_finite()) {
            return Err(Fail::Arg("dims and radius must be positive".into()));
        }
        let h = 2.0 * radius / dims as f64;
        let half = 0.5 * (dims + 2) as f64 * h;
        let grid = VoxelGrid::new(tatpat::model::Vec3::new(-half, -half, -half), h, [dims + 2; 3])?;
        let mut p = params;
        p.insert("radius".into(), tatpat::phantom::ParamValue::Number(radius));
        boxed(slot, TpConfig { inner: build(kind, grid, &p)? });
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn tp_config_free(config: *mut TpConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Which field of a configuration to copy out.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TpQuantity {
    Speed = 0,
    Source = 1,
    /// `c⁻² f`
    Q = 2,
}

#[no_mangle]
pub unsafe extern "C" fn tp_config_field(
    config: *const TpConfig,
    quantity: TpQuantity,
    out_field: *mut *mut TpField,
) -> TpStatus {
    guard(|| {
        let c = &arg(config, "config")?.inner.config;
        let slot = out(out_field, "out_field")?;
        let f = match quantity {
            TpQuantity::Speed => c.c.clone(),
            TpQuantity::Source => c.f.clone(),
            TpQuantity::Q => c.q(),
        };
        boxed(slot, TpField { inner: f });
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn tp_field_free(field: *mut TpField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// Grid shape, spacing and minimum corner.
#[no_mangle]
pub unsafe extern "C" fn tp_field_grid(
    field: *const TpField,
    out_dims: *mut usize,
    out_spacing: *mut f64,
    out_origin: *mut f64,
) -> TpStatus {
    guard(|| {
        let g = arg(field, "field")?.inner.grid();
        if out_dims.is_null() || out_spacing.is_null() || out_origin.is_null() {
            return Err(Fail::Arg("output pointer is null".into()));
        }
        let o = g.origin();
        for (i, (d, x)) in g.dims().iter().zip([o.x1, o.x2, o.x3]).enumerate() {
            *out_dims.add(i) = *d;
            *out_origin.add(i) = x;
        }
        *out_spacing = g.spacing();
        Ok(())
    })
}

/// Copies the `x3`-fastest values into `buf`, which must hold exactly `n1 n2 n3` doubles.
#[no_mangle]
pub unsafe extern "C" fn tp_field_copy_values(field: *const TpField, buf: *mut f64, len: usize) -> TpStatus {
    guard(|| {
        let f = &arg(field, "field")?.inner;
        slice_mut(buf, len, f.values().len(), "buf")?.copy_from_slice(f.values());
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn tp_field_write(field: *const TpField, path: *const c_char) -> TpStatus {
    guard(|| {
        let f = &arg(field, "field")?.inner;
        let mut w = BufWriter::new(File::create(text(path, "path")?).map_err(Error::from)?);
        io::write_real_field(&mut w, f, &io::Metadata::new())?;
        w.flush().map_err(Error::from)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn tp_field_read(path: *const c_char, out_field: *mut *mut TpField) -> TpStatus {
    guard(|| {
        let p = text(path, "path")?;
        let slot = out(out_field, "out_field")?;
        let (f, _) = io::read_field(BufReader::new(File::open(p).map_err(Error::from)?))?;
        boxed(slot, TpField { inner: f.into_real()? });
        Ok(())
    })
}

/// Runs the wave solver and returns the trace on the reference sphere.
/// `t_final <= 0` selects the default `6R / c0`.
#[no_mangle]
pub unsafe extern "C" fn tp_simulate(
    config: *const TpConfig,
    t_final: f64,
    n_sphere: usize,
    out_trace: *mut *mut TpTrace,
) -> TpStatus {
    guard(|| {
        let c = &arg(config, "config")?.inner.config;
        let slot = out(out_trace, "out_trace")?;
        let mut opts = SimulateOptions::for_config(c);
        if t_final > 0.0 {
            opts.t_final = t_final;
        }
        opts.n_sphere = n_sphere;
        boxed(slot, TpTrace { inner: simulate(c, &opts)?.sphere });
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn tp_trace_free(trace: *mut TpTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

#[no_mangle]
pub unsafe extern "C" fn tp_trace_shape(
    trace: *const TpTrace,
    out_points: *mut usize,
    out_samples: *mut usize,
    out_dt: *mut f64,
) -> TpStatus {
    guard(|| {
        let t = &arg(trace, "trace")?.inner;
        if out_points.is_null() || out_samples.is_null() || out_dt.is_null() {
            return Err(Fail::Arg("output pointer is null".into()));
        }
        *out_points = t.sampling.len();
        *out_samples = t.n_samples();
        *out_dt = t.dt;
        Ok(())
    })
}

/// Point-major samples; `buf` must hold `points × samples` doubles.
#[no_mangle]
pub unsafe extern "C" fn tp_trace_copy_values(trace: *const TpTrace, buf: *mut f64, len: usize) -> TpStatus {
    guard(|| {
        let t = &arg(trace, "trace")?.inner;
        slice_mut(buf, len, t.values.len(), "buf")?.copy_from_slice(&t.values);
        Ok(())
    })
}

/// Temporal Fourier transform at `n_k` wavenumbers (`ks` null: default sweep).
#[no_mangle]
pub unsafe extern "C" fn tp_temporal_ft(
    trace: *const TpTrace,
    ks: *const f64,
    n_k: usize,
    out_freq: *mut *mut TpFreqTrace,
) -> TpStatus {
    guard(|| {
        let t = &arg(trace, "trace")?.inner;
        let slot = out(out_freq, "out_freq")?;
        let radius = t.sampling.surface.sphere_radius().unwrap_or(1.0);
        let ks = sweep(ks, n_k, radius)?;
        boxed(slot, TpFreqTrace { inner: temporal_ft(t, &ks)? });
        Ok(())
    })
}

/// Lippmann-Schwinger spectra on `n_sphere` points of the reference sphere.
#[no_mangle]
pub unsafe extern "C" fn tp_ls_spectrum(
    config: *const TpConfig,
    n_sphere: usize,
    ks: *const f64,
    n_k: usize,
    out_freq: *mut *mut TpFreqTrace,
) -> TpStatus {
    guard(|| {
        let c = &arg(config, "config")?.inner.config;
        let slot = out(out_freq, "out_freq")?;
        let ks = sweep(ks, n_k, c.radius)?;
        let s = BoundarySampling::sphere(c.radius, n_sphere, 0.0)?;
        boxed(slot, TpFreqTrace { inner: ls_freq_trace(c, &s, &ks)? });
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn tp_freq_free(freq: *mut TpFreqTrace) {
    if !freq.is_null() {
        drop(Box::from_raw(freq));
    }
}

#[no_mangle]
pub unsafe extern "C" fn tp_freq_shape(freq: *const TpFreqTrace, out_points: *mut usize, out_k: *mut usize) -> TpStatus {
    guard(|| {
        let f = &arg(freq, "freq")?.inner;
        if out_points.is_null() || out_k.is_null() {
            return Err(Fail::Arg("output pointer is null".into()));
        }
        *out_points = f.sampling.len();
        *out_k = f.ks.len();
        Ok(())
    })
}

/// Point-major real and imaginary parts; each buffer holds `points × n_k` doubles.
#[no_mangle]
pub unsafe extern "C" fn tp_freq_copy_values(freq: *const TpFreqTrace, re: *mut f64, im: *mut f64, len: usize) -> TpStatus {
    guard(|| {
        let f = &arg(freq, "freq")?.inner;
        let n = f.values.len();
        let re = slice_mut(re, len, n, "re")?;
        let im = slice_mut(im, len, n, "im")?;
        for (i, v) in f.values.iter().enumerate() {
            re[i] = v.re;
            im[i] = v.im;
        }
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn tp_freq_write(freq: *const TpFreqTrace, path: *const c_char) -> TpStatus {
    guard(|| {
        let f = &arg(freq, "freq")?.inner;
        let mut w = BufWriter::new(File::create(text(path, "path")?).map_err(Error::from)?);
        io::write_spectrum(&mut w, f, &io::Metadata::new())?;
        w.flush().map_err(Error::from)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn tp_freq_read(path: *const c_char, out_freq: *mut *mut TpFreqTrace) -> TpStatus {
    guard(|| {
        let p = text(path, "path")?;
        let slot = out(out_freq, "out_freq")?;
        let (f, _) = io::read_spectrum(BufReader::new(File::open(p).map_err(Error::from)?))?;
        boxed(slot, TpFreqTrace { inner: f });
        Ok(())
    })
}

fn cylinder_prior(pixel_block: usize) -> Prior {
    Prior::X3IndependentCylinder { pixel_block: pixel_block.max(1), weight: None }
}

fn recover_opts(l_max: usize) -> RecoverOptions {
    RecoverOptions { l_max: if l_max == 0 { 8 } else { l_max }, ..RecoverOptions::default() }
}

/// Recovers `q` on the grid and support region of `domain` under the
/// `x3`-independent cylinder prior. `l_max = 0` selects degree 8.
#[no_mangle]
pub unsafe extern "C" fn tp_recover_q(
    freq: *const TpFreqTrace,
    domain: *const TpConfig,
    pixel_block: usize,
    l_max: usize,
    out_q: *mut *mut TpField,
) -> TpStatus {
    guard(|| {
        let f = &arg(freq, "freq")?.inner;
        let d = &arg(domain, "domain")?.inner.config;
        let slot = out(out_q, "out_q")?;
        let r = recover_q(f, d.grid(), &d.omega, &cylinder_prior(pixel_block), &recover_opts(l_max))?;
        boxed(slot, TpField { inner: r.q });
        Ok(())
    })
}

/// Constant speed on the support of `domain` from a given `q`.
#[no_mangle]
pub unsafe extern "C" fn tp_recover_constant_c(
    q: *const TpField,
    freq: *const TpFreqTrace,
    domain: *const TpConfig,
    out_c: *mut f64,
) -> TpStatus {
    guard(|| {
        let q = &arg(q, "q")?.inner;
        let f = &arg(freq, "freq")?.inner;
        let d = &arg(domain, "domain")?.inner.config;
        if out_c.is_null() {
            return Err(Fail::Arg("`out_c` is null".into()));
        }
        *out_c = recover_constant_c(q, f, &d.omega)?.c;
        Ok(())
    })
}

/// Full constant-speed reconstruction; `out_q` and `out_f` may be null.
#[no_mangle]
pub unsafe extern "C" fn tp_reconstruct_constant_speed(
    freq: *const TpFreqTrace,
    domain: *const TpConfig,
    pixel_block: usize,
    out_c: *mut f64,
    out_q: *mut *mut TpField,
    out_f: *mut *mut TpField,
) -> TpStatus {
    guard(|| {
        let f = &arg(freq, "freq")?.inner;
        let d = &arg(domain, "domain")?.inner.config;
        if out_c.is_null() {
            return Err(Fail::Arg("`out_c` is null".into()));
        }
        let r = reconstruct_constant_speed(f, d.grid(), &d.omega, &cylinder_prior(pixel_block), &recover_opts(0))?;
        *out_c = r.c_value.expect("constant-speed pipeline sets c");
        if let Some(s) = out_q.as_mut() {
            boxed(s, TpField { inner: r.q });
        }
        if let Some(s) = out_f.as_mut() {
            boxed(s, TpField { inner: r.f });
        }
        Ok(())
    })
}

/// Inclusion contrast for an inclusion phantom `domain`, given `q`.
/// `out_detected` is 0 when no contrast was detected, in which case `out_gamma` is infinite.
#[no_mangle]
pub unsafe extern "C" fn tp_recover_inclusion_gamma(
    q: *const TpField,
    freq: *const TpFreqTrace,
    domain: *const TpConfig,
    out_gamma: *mut f64,
    out_detected: *mut i32,
) -> TpStatus {
    guard(|| {
        let q = &arg(q, "q")?.inner;
        let f = &arg(freq, "freq")?.inner;
        let d = &arg(domain, "domain")?.inner;
        if out_gamma.is_null() || out_detected.is_null() {
            return Err(Fail::Arg("output pointer is null".into()));
        }
        let inc = d
            .inclusion
            .ok_or_else(|| Fail::Lib(Error::Precondition("domain is not an inclusion phantom".into())))?;
        let bg = d.background_speed_field().expect("inclusion phantom");
        let est = recover_inclusion_gamma(q, f, &bg, &inc.sigma, &GammaOptions::default())?;
        *out_gamma = est.gamma.unwrap_or(f64::INFINITY);
        *out_detected = est.gamma.is_some() as i32;
        Ok(())
    })
}
