//! Little-endian binary formats for fields (`TPKF`), time traces (`TPKT`)
//! and spectra (`TPKS`).

use std::io::{Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::helmholtz::FreqTrace;
use crate::model::{BoundarySampling, ComplexField, KSweep, RealField, Surface, Vec3, VoxelGrid};
use crate::wave::TimeTrace;

pub const FORMAT_VERSION: u16 = 1;
pub const FIELD_MAGIC: &[u8; 4] = b"TPKF";
pub const TRACE_MAGIC: &[u8; 4] = b"TPKT";
pub const SPECTRUM_MAGIC: &[u8; 4] = b"TPKS";

const KIND_REAL: u16 = 0;
const KIND_COMPLEX: u16 = 1;

/// A field read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyField {
    Real(RealField),
    Complex(ComplexField),
}

impl AnyField {
    pub fn into_real(self) -> Result<RealField> {
        match self {
            AnyField::Real(f) => Ok(f),
            AnyField::Complex(_) => Err(Error::Format("expected a real field".into())),
        }
    }
}

/// Free-form provenance stored as a TOML block in every file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub code_version: String,
    #[serde(default, skip_serializing_if = "std::collections::BTreeMap::is_empty")]
    pub entries: std::collections::BTreeMap<String, String>,
}

impl Metadata {
    pub fn new() -> Self {
        Metadata { code_version: env!("CARGO_PKG_VERSION").to_string(), entries: Default::default() }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.entries.insert(key.to_string(), value.to_string());
        self
    }
}

struct Out<W: Write>(W);

impl<W: Write> Out<W> {
    fn bytes(&mut self, b: &[u8]) -> Result<()> {
        self.0.write_all(b)?;
        Ok(())
    }
    fn u8(&mut self, v: u8) -> Result<()> {
        self.bytes(&[v])
    }
    fn u16(&mut self, v: u16) -> Result<()> {
        self.bytes(&v.to_le_bytes())
    }
    fn u32(&mut self, v: usize) -> Result<()> {
        let v = u32::try_from(v).map_err(|_| Error::Format(format!("{v} does not fit in u32")))?;
        self.bytes(&v.to_le_bytes())
    }
    fn f64(&mut self, v: f64) -> Result<()> {
        self.bytes(&v.to_le_bytes())
    }
    fn vec3(&mut self, v: Vec3) -> Result<()> {
        self.f64(v.x1)?;
        self.f64(v.x2)?;
        self.f64(v.x3)
    }
    fn meta<T: Serialize>(&mut self, m: &T) -> Result<()> {
        let text = toml::to_string(m).map_err(|e| Error::Format(e.to_string()))?;
        self.u32(text.len())?;
        self.bytes(text.as_bytes())
    }
}

struct In<R: Read>(R);

impl<R: Read> In<R> {
    fn bytes(&mut self, n: usize) -> Result<Vec<u8>> {
        let mut b = vec![0; n];
        self.0.read_exact(&mut b).map_err(|e| match e.kind() {
            std::io::ErrorKind::UnexpectedEof => Error::Format("truncated file".into()),
            _ => Error::Io(e),
        })?;
        Ok(b)
    }
    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.bytes(N)?.try_into().expect("length checked"))
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.array::<1>()?[0])
    }
    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.array()?))
    }
    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.array()?) as usize)
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.array()?))
    }
    fn vec3(&mut self) -> Result<Vec3> {
        Ok(Vec3::new(self.f64()?, self.f64()?, self.f64()?))
    }
    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.bytes(n.checked_mul(8).ok_or_else(|| Error::Format("size overflow".into()))?)?;
        Ok(raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }
    fn meta<T: for<'de> Deserialize<'de>>(&mut self) -> Result<T> {
        let n = self.u32()?;
        let text = String::from_utf8(self.bytes(n)?).map_err(|_| Error::Format("metadata is not UTF-8".into()))?;
        toml::from_str(&text).map_err(|e| Error::Format(e.to_string()))
    }
    fn header(&mut self, magic: &[u8; 4]) -> Result<u16> {
        if &self.array::<4>()? != magic {
            return Err(Error::Format(format!("bad magic, expected {}", String::from_utf8_lossy(magic))));
        }
        let v = self.u16()?;
        if v != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported version {v}")));
        }
        self.u16()
    }
    fn end(&mut self) -> Result<()> {
        let mut rest = Vec::new();
        self.0.read_to_end(&mut rest)?;
        if rest.is_empty() {
            Ok(())
        } else {
            Err(Error::Format(format!("{} trailing bytes", rest.len())))
        }
    }
}

fn write_grid<W: Write>(o: &mut Out<W>, g: &VoxelGrid) -> Result<()> {
    for d in g.dims() {
        o.u32(d)?;
    }
    o.vec3(g.origin())?;
    o.f64(g.spacing())
}

/// Header, then `x3`-fastest values, then the metadata block.
pub fn write_real_field(w: impl Write, field: &RealField, meta: &Metadata) -> Result<()> {
    let mut o = Out(w);
    o.bytes(FIELD_MAGIC)?;
    o.u16(FORMAT_VERSION)?;
    o.u16(KIND_REAL)?;
    write_grid(&mut o, field.grid())?;
    for v in field.values() {
        o.f64(*v)?;
    }
    o.meta(meta)
}

pub fn write_complex_field(w: impl Write, field: &ComplexField, meta: &Metadata) -> Result<()> {
    let mut o = Out(w);
    o.bytes(FIELD_MAGIC)?;
    o.u16(FORMAT_VERSION)?;
    o.u16(KIND_COMPLEX)?;
    write_grid(&mut o, field.grid())?;
    for v in field.values() {
        o.f64(v.re)?;
        o.f64(v.im)?;
    }
    o.meta(meta)
}

pub fn read_field(r: impl Read) -> Result<(AnyField, Metadata)> {
    let mut i = In(r);
    let kind = i.header(FIELD_MAGIC)?;
    let dims = [i.u32()?, i.u32()?, i.u32()?];
    let origin = i.vec3()?;
    let spacing = i.f64()?;
    let grid = VoxelGrid::new(origin, spacing, dims)?;
    let field = match kind {
        KIND_REAL => AnyField::Real(RealField::new(grid, i.f64s(grid.len())?)?),
        KIND_COMPLEX => {
            let raw = i.f64s(2 * grid.len())?;
            let v = raw.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect();
            AnyField::Complex(ComplexField::new(grid, v)?)
        }
        k => return Err(Error::Format(format!("unknown field kind {k}"))),
    };
    let meta = i.meta()?;
    i.end()?;
    Ok((field, meta))
}

#[derive(Serialize, Deserialize)]
struct TraceMeta {
    surface: Surface,
    #[serde(flatten)]
    meta: Metadata,
}

fn write_points<W: Write>(o: &mut Out<W>, s: &BoundarySampling) -> Result<()> {
    for (p, w) in s.points.iter().zip(&s.weights) {
        o.vec3(*p)?;
        o.f64(*w)?;
    }
    Ok(())
}

fn read_points<R: Read>(i: &mut In<R>, n: usize, surface: Surface) -> Result<BoundarySampling> {
    let raw = i.f64s(4 * n)?;
    let points = raw.chunks_exact(4).map(|c| Vec3::new(c[0], c[1], c[2])).collect();
    let weights = raw.chunks_exact(4).map(|c| c[3]).collect();
    BoundarySampling::new(surface, points, weights)
}

pub fn write_trace(w: impl Write, trace: &TimeTrace, meta: &Metadata) -> Result<()> {
    let mut o = Out(w);
    o.bytes(TRACE_MAGIC)?;
    o.u16(FORMAT_VERSION)?;
    o.u16(KIND_REAL)?;
    o.u32(trace.sampling.len())?;
    o.u32(trace.n_steps)?;
    o.f64(trace.dt)?;
    o.f64(trace.dt_bound)?;
    o.f64(trace.energy_ratio.unwrap_or(f64::NAN))?;
    o.meta(&TraceMeta { surface: trace.sampling.surface, meta: meta.clone() })?;
    write_points(&mut o, &trace.sampling)?;
    for v in &trace.values {
        o.f64(*v)?;
    }
    Ok(())
}

pub fn read_trace(r: impl Read) -> Result<(TimeTrace, Metadata)> {
    let mut i = In(r);
    if i.header(TRACE_MAGIC)? != KIND_REAL {
        return Err(Error::Format("time traces are real".into()));
    }
    let n = i.u32()?;
    let n_steps = i.u32()?;
    let dt = i.f64()?;
    let dt_bound = i.f64()?;
    let energy = i.f64()?;
    let tm: TraceMeta = i.meta()?;
    let sampling = read_points(&mut i, n, tm.surface)?;
    let values = i.f64s(n * (n_steps + 1))?;
    i.end()?;
    let trace = TimeTrace {
        sampling,
        dt,
        n_steps,
        values,
        dt_bound,
        energy_ratio: (!energy.is_nan()).then_some(energy),
    };
    trace.check()?;
    Ok((trace, tm.meta))
}

pub fn write_spectrum(w: impl Write, freq: &FreqTrace, meta: &Metadata) -> Result<()> {
    let mut o = Out(w);
    o.bytes(SPECTRUM_MAGIC)?;
    o.u16(FORMAT_VERSION)?;
    o.u16(KIND_COMPLEX)?;
    o.u32(freq.sampling.len())?;
    o.u32(freq.ks.len())?;
    o.f64(freq.ks.eps0())?;
    o.u8(freq.tapered as u8)?;
    o.meta(&TraceMeta { surface: freq.sampling.surface, meta: meta.clone() })?;
    for k in freq.ks.values() {
        o.f64(*k)?;
    }
    write_points(&mut o, &freq.sampling)?;
    for v in &freq.values {
        o.f64(v.re)?;
        o.f64(v.im)?;
    }
    Ok(())
}

pub fn read_spectrum(r: impl Read) -> Result<(FreqTrace, Metadata)> {
    let mut i = In(r);
    if i.header(SPECTRUM_MAGIC)? != KIND_COMPLEX {
        return Err(Error::Format("spectra are complex".into()));
    }
    let n = i.u32()?;
    let nk = i.u32()?;
    let eps0 = i.f64()?;
    let tapered = match i.u8()? {
        0 => false,
        1 => true,
        b => return Err(Error::Format(format!("bad taper flag {b}"))),
    };
    let tm: TraceMeta = i.meta()?;
    let ks = KSweep::new(i.f64s(nk)?, eps0)?;
    let sampling = read_points(&mut i, n, tm.surface)?;
    let raw = i.f64s(2 * n * nk)?;
    i.end()?;
    let values = raw.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect();
    let mut freq = FreqTrace::new(sampling, ks, values)?;
    freq.tapered = tapered;
    Ok((freq, tm.meta))
}
