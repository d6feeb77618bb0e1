use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use super::spec::{ExperimentSpec, PhantomBlock, QSource, SpectrumSource, SpeedModelName};
use crate::error::{Error, Result};
use crate::helmholtz::{leading_order_remainder, ls_freq_trace, temporal_ft_with, FreqTrace, FtOptions};
use crate::identity::{
    harmonic_moments, k_expansion_fit, loglog_slope, moments_from_boundary, orth1_by_degree, orth1_residual,
    orth1_residual_moments, orth2_functional, relative_surface_error, ted1_check_with, Ted1Options, Ted1Report,
};
use crate::inversion::{
    constant_speed_from_q, potential_from_fit, reconstruct_constant_speed, reconstruct_inclusion,
    recover_inclusion_gamma, recover_source, GammaOptions, InclusionOptions, ReconstructionResult, RecoverOptions,
    SpeedModel, SpeedOptions,
};
use crate::io::{self, csv, svg, Metadata};
use crate::model::{BoundarySampling, RealField, RegionSpec, TatPatConfig};
use crate::phantom::{build, InclusionInfo, ParamMap, Phantom, PhantomKind};
use crate::wave::{simulate, SimulateOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Phantom,
    Simulate,
    Spectrum,
    Verify,
    Invert,
    Report,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Phantom => "phantom",
            Stage::Simulate => "simulate",
            Stage::Spectrum => "spectrum",
            Stage::Verify => "verify",
            Stage::Invert => "invert",
            Stage::Report => "report",
        }
    }
}

/// Everything a stage needs: the spec, where to write, and the sampling seed.
pub struct Context {
    pub spec: ExperimentSpec,
    pub out: PathBuf,
    pub seed: Option<u64>,
}

impl Context {
    fn path(&self, stage: Stage, file: &str) -> PathBuf {
        self.out.join(stage.name()).join(file)
    }

    /// Azimuthal rotation of the sampling lattices.
    fn phase(&self) -> f64 {
        match self.seed {
            None => 0.0,
            Some(s) => rand_chacha::ChaCha8Rng::seed_from_u64(s).gen::<f64>() * std::f64::consts::TAU,
        }
    }

    fn meta(&self, stage: Stage) -> Metadata {
        let mut m = Metadata::new().with("stage", stage.name()).with("phantom", &self.spec.phantom.name);
        if let Ok(g) = self.spec.grid() {
            m = m.with("grid_dims", format!("{:?}", g.dims())).with("grid_spacing", g.spacing());
        }
        if let Ok(s) = self.spec.sweep() {
            m = m.with("sweep", format!("{:?}", s.values()));
        }
        m.with("seed", self.seed.map_or("none".to_string(), |s| s.to_string()))
    }

    fn require(&self, stage: Stage, file: &str) -> Result<PathBuf> {
        let p = self.path(stage, file);
        if p.exists() {
            Ok(p)
        } else {
            Err(Error::Spec(format!("stage `{}` has not run: {} is missing", stage.name(), p.display())))
        }
    }
}

/// Structural record of a phantom, stored next to its fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhantomRecord {
    pub name: String,
    pub params: ParamMap,
    pub radius: f64,
    pub c0: f64,
    pub omega: RegionSpec,
    pub speed: Option<f64>,
    pub inclusion: Option<InclusionInfo>,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn write_toml<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = toml::to_string(value).map_err(|e| Error::Format(e.to_string()))?;
    let mut w = create(path)?;
    w.write_all(text.as_bytes())?;
    w.flush()?;
    Ok(())
}

fn read_toml<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    toml::from_str(&fs::read_to_string(path)?).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

fn build_block(block: &PhantomBlock, spec: &ExperimentSpec) -> Result<Phantom> {
    build(block.name.parse::<PhantomKind>()?, spec.grid()?, &block.params)
}

fn load_phantom(ctx: &Context) -> Result<(PhantomRecord, TatPatConfig)> {
    let record: PhantomRecord = read_toml(&ctx.require(Stage::Phantom, "config.toml")?)?;
    let read = |name: &str| -> Result<RealField> {
        let p = ctx.require(Stage::Phantom, name)?;
        io::read_field(BufReader::new(File::open(p)?))?.0.into_real()
    };
    let config = TatPatConfig::new(record.omega, record.radius, read("c.tpkf")?, read("f.tpkf")?, record.c0)?;
    Ok((record, config))
}

fn load_spectrum(ctx: &Context) -> Result<FreqTrace> {
    let p = ctx.require(Stage::Spectrum, "sphere.tpks")?;
    Ok(io::read_spectrum(BufReader::new(File::open(p)?))?.0)
}

fn write_field(path: &Path, f: &RealField, meta: &Metadata) -> Result<()> {
    let mut w = create(path)?;
    io::write_real_field(&mut w, f, meta)?;
    w.flush()?;
    Ok(())
}

pub fn run_stage(stage: Stage, ctx: &Context) -> Result<Vec<PathBuf>> {
    let files = match stage {
        Stage::Phantom => cmd_phantom(ctx)?,
        Stage::Simulate => cmd_simulate(ctx)?,
        Stage::Spectrum => cmd_spectrum(ctx)?,
        Stage::Verify => cmd_verify(ctx)?,
        Stage::Invert => cmd_invert(ctx)?,
        Stage::Report => cmd_report(ctx)?,
    };
    update_manifest(ctx, stage, &files)?;
    Ok(files)
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct Manifest {
    code_version: String,
    stages: BTreeMap<String, Vec<String>>,
}

fn update_manifest(ctx: &Context, stage: Stage, files: &[PathBuf]) -> Result<()> {
    let path = ctx.out.join("manifest.toml");
    let mut m: Manifest = if path.exists() { read_toml(&path)? } else { Manifest::default() };
    m.code_version = env!("CARGO_PKG_VERSION").to_string();
    let rel = files
        .iter()
        .map(|f| f.strip_prefix(&ctx.out).unwrap_or(f).to_string_lossy().replace('\\', "/"))
        .collect();
    m.stages.insert(stage.name().to_string(), rel);
    write_toml(&path, &m)
}

fn cmd_phantom(ctx: &Context) -> Result<Vec<PathBuf>> {
    let ph = build_block(&ctx.spec.phantom, &ctx.spec)?;
    let cfg = &ph.config;
    let record = PhantomRecord {
        name: ph.kind.as_str().to_string(),
        params: ctx.spec.phantom.params.clone(),
        radius: cfg.radius,
        c0: cfg.c0,
        omega: cfg.omega,
        speed: ph.speed,
        inclusion: ph.inclusion,
    };
    let meta = ctx.meta(Stage::Phantom);
    let mut files = Vec::new();
    let p = ctx.path(Stage::Phantom, "config.toml");
    write_toml(&p, &record)?;
    files.push(p);
    for (name, field) in [("c.tpkf", &cfg.c), ("f.tpkf", &cfg.f), ("q.tpkf", &cfg.q())] {
        let p = ctx.path(Stage::Phantom, name);
        write_field(&p, field, &meta.clone().with("quantity", &name[..1]))?;
        files.push(p);
    }
    Ok(files)
}

fn cmd_simulate(ctx: &Context) -> Result<Vec<PathBuf>> {
    let (_, cfg) = load_phantom(ctx)?;
    let s = &ctx.spec.simulate;
    let mut opts = SimulateOptions::for_config(&cfg);
    opts.t_final = s.t_final.unwrap_or(opts.t_final);
    opts.cfl = s.cfl.unwrap_or(opts.cfl);
    opts.layer_width = s.layer_width.unwrap_or(opts.layer_width);
    opts.n_sphere = s.n_sphere.unwrap_or(opts.n_sphere);
    opts.n_omega = s.n_omega.unwrap_or(opts.n_omega);
    opts.phase = ctx.phase();
    let out = simulate(&cfg, &opts)?;
    let meta = ctx
        .meta(Stage::Simulate)
        .with("dt", out.sphere.dt)
        .with("t_final", out.sphere.t_final())
        .with("energy_ratio", out.energy_ratio());
    let mut files = Vec::new();
    for (name, trace) in [("omega", &out.omega), ("sphere", &out.sphere)] {
        let p = ctx.path(Stage::Simulate, &format!("{name}.tpkt"));
        let mut w = create(&p)?;
        io::write_trace(&mut w, trace, &meta)?;
        w.flush()?;
        files.push(p);
    }
    let p = ctx.path(Stage::Simulate, "sphere.csv");
    let mut w = create(&p)?;
    csv::write_trace_csv(&mut w, &out.sphere, &meta)?;
    w.flush()?;
    files.push(p);
    let p = ctx.path(Stage::Simulate, "energy.csv");
    let rows: Vec<Vec<f64>> = out.energy.iter().enumerate().map(|(n, e)| vec![n as f64, *e]).collect();
    let mut w = create(&p)?;
    csv::write_table(&mut w, &meta, &["half_step", "energy"], &rows)?;
    w.flush()?;
    files.push(p);
    Ok(files)
}

fn cmd_spectrum(ctx: &Context) -> Result<Vec<PathBuf>> {
    let ks = ctx.spec.sweep()?;
    let sp = &ctx.spec.spectrum;
    let (freq, source) = match sp.source {
        SpectrumSource::Wave => {
            let p = ctx.require(Stage::Simulate, "sphere.tpkt")?;
            let (trace, _) = io::read_trace(BufReader::new(File::open(p)?))?;
            let opts = FtOptions { quadrature: sp.quadrature, allow_taper: sp.allow_taper };
            (temporal_ft_with(&trace, &ks, opts)?, "wave")
        }
        SpectrumSource::Ls => {
            let (_, cfg) = load_phantom(ctx)?;
            let s = BoundarySampling::sphere(cfg.radius, sp.n_sphere, ctx.phase())?;
            (ls_freq_trace(&cfg, &s, &ks)?, "ls")
        }
    };
    let meta = ctx.meta(Stage::Spectrum).with("source", source).with("tapered", freq.tapered);
    let p = ctx.path(Stage::Spectrum, "sphere.tpks");
    let mut w = create(&p)?;
    io::write_spectrum(&mut w, &freq, &meta)?;
    w.flush()?;
    let c = ctx.path(Stage::Spectrum, "sphere.csv");
    let mut w = create(&c)?;
    csv::write_spectrum_csv(&mut w, &freq, &meta)?;
    w.flush()?;
    Ok(vec![p, c])
}

#[derive(Debug, Serialize)]
struct VerifyReport {
    l_max: usize,
    /// Moment residual between the phantom and the comparison phantom.
    orth1_residual: f64,
    /// Moment residual between the phantom and the moments read off the data.
    orth1_data_residual: f64,
    orth1_data_by_degree: Vec<f64>,
    /// Relative error of the cubic data coefficient against the second-order functional.
    orth2_relative_error: f64,
    ted1: Ted1Report,
}

fn cmd_verify(ctx: &Context) -> Result<Vec<PathBuf>> {
    let (_, cfg) = load_phantom(ctx)?;
    let freq = load_spectrum(ctx)?;
    let l = ctx.spec.identity.l_max;
    let q = cfg.q();
    let other = match &ctx.spec.identity.compare {
        Some(b) => build_block(b, &ctx.spec)?.config.q(),
        None => build_block(&ctx.spec.phantom, &ctx.spec)?.config.q(),
    };
    let orth1 = orth1_residual(&q, &other, l)?;
    let fit = k_expansion_fit(&freq, ctx.spec.inversion.fit_model)?;
    let data_m = moments_from_boundary(&potential_from_fit(&fit.u1), &freq.sampling, l)?;
    let vol_m = harmonic_moments(&q, l);
    let orth2 = orth2_functional(&cfg, &freq.sampling.points);
    let measured: Vec<Complex64> = fit.u3.iter().map(|u| u * Complex64::new(0.0, -2.0 * std::f64::consts::PI)).collect();
    let predicted: Vec<Complex64> = orth2.iter().map(|v| Complex64::new(*v, 0.0)).collect();
    let ted1 = ted1_check_with(
        &cfg,
        &Ted1Options { n_points: ctx.spec.identity.ted1_points, ..Ted1Options::for_config(&cfg) },
    )?;
    let report = VerifyReport {
        l_max: l,
        orth1_residual: orth1,
        orth1_data_residual: orth1_residual_moments(&vol_m, &data_m)?,
        orth1_data_by_degree: orth1_by_degree(&vol_m, &data_m),
        orth2_relative_error: relative_surface_error(&freq.sampling, &measured, &predicted),
        ted1: ted1.clone(),
    };
    let p = ctx.path(Stage::Verify, "report.toml");
    write_toml(&p, &report)?;
    let c = ctx.path(Stage::Verify, "ted1.csv");
    let rows = (0..4).map(|i| vec![(i + 1) as f64, ted1.term_errors[i]]).collect::<Vec<_>>();
    let mut w = create(&c)?;
    csv::write_table(
        &mut w,
        &ctx.meta(Stage::Verify).with("remainder_slope", ted1.remainder_slope),
        &["term", "relative_error"],
        &rows,
    )?;
    w.flush()?;
    Ok(vec![p, c])
}

#[derive(Debug, Serialize)]
struct InvertReport {
    q_source: QSource,
    speed_model: SpeedModelName,
    c_value: Option<f64>,
    gamma: Option<f64>,
    no_contrast: bool,
    truth: Truth,
    diagnostics: crate::inversion::ReconstructionDiagnostics,
}

#[derive(Debug, Serialize)]
struct Truth {
    c: Option<f64>,
    gamma: Option<f64>,
    q_relative_error: f64,
    f_relative_error: f64,
}

#[derive(Debug, Serialize)]
struct Failure {
    error: String,
    numerical_guard: bool,
}

fn cmd_invert(ctx: &Context) -> Result<Vec<PathBuf>> {
    let (record, cfg) = load_phantom(ctx)?;
    let freq = load_spectrum(ctx)?;
    let inv = &ctx.spec.inversion;
    let grid = *cfg.grid();
    let ropts = RecoverOptions { l_max: inv.l_max, regularization: inv.regularization(), fit_model: inv.fit_model, ..Default::default() };
    let failure = ctx.path(Stage::Invert, "failure.toml");
    if failure.exists() {
        fs::remove_file(&failure)?;
    }
    let result = (|| -> Result<ReconstructionResult> {
        match inv.speed_model {
            SpeedModelName::Constant => match inv.q_source {
                QSource::Recovered => reconstruct_constant_speed(&freq, &grid, &cfg.omega, &inv.prior(), &ropts),
                QSource::Phantom => {
                    let sopts = SpeedOptions { fit_model: inv.fit_model, ..SpeedOptions::default() };
                    constant_speed_from_q(cfg.q(), &freq, &cfg.omega, &sopts)
                }
            },
            SpeedModelName::Inclusion => {
                let inc = record
                    .inclusion
                    .ok_or_else(|| Error::Spec("the inclusion speed model needs an inclusion phantom".into()))?;
                let background = RealField::from_fn(grid, |p| {
                    if cfg.omega.contains(p) {
                        inc.background_speed
                    } else {
                        1.0
                    }
                });
                let gopts = GammaOptions { l_max: inv.l_max, fit_model: inv.fit_model, ..GammaOptions::default() };
                match inv.q_source {
                    QSource::Recovered => {
                        let opts = InclusionOptions { recover: ropts, gamma: gopts, pixel_block: inv.pixel_block, ..Default::default() };
                        reconstruct_inclusion(&freq, &grid, &cfg.omega, &background, &inc.sigma, &opts)
                    }
                    QSource::Phantom => {
                        let q = cfg.q();
                        let est = recover_inclusion_gamma(&q, &freq, &background, &inc.sigma, &gopts)?;
                        let speed = SpeedModel::Inclusion { background, gamma: est.gamma, sigma: inc.sigma };
                        let f = recover_source(&q, &speed)?;
                        Ok(ReconstructionResult {
                            c_value: None,
                            gamma: est.gamma,
                            f,
                            diagnostics: crate::inversion::ReconstructionDiagnostics {
                                q: None,
                                positivity: crate::inversion::positivity_check(&q, &cfg.omega),
                                speed: None,
                                contrast: Some(est),
                                sweeps: 0,
                            },
                            q,
                        })
                    }
                }
            }
        }
    })();
    let r = match result {
        Ok(r) => r,
        Err(e) => {
            write_toml(&failure, &Failure { error: e.to_string(), numerical_guard: e.is_numerical_guard() })?;
            return Err(e);
        }
    };
    let meta = ctx.meta(Stage::Invert);
    let report = InvertReport {
        q_source: inv.q_source,
        speed_model: inv.speed_model,
        c_value: r.c_value,
        gamma: r.gamma,
        no_contrast: r.diagnostics.contrast.as_ref().is_some_and(|c| c.no_contrast()),
        truth: Truth {
            c: record.speed,
            gamma: record.inclusion.map(|i| i.gamma),
            q_relative_error: r.q.relative_l2_error(&cfg.q())?,
            f_relative_error: r.f.relative_l2_error(&cfg.f)?,
        },
        diagnostics: r.diagnostics.clone(),
    };
    let mut files = Vec::new();
    for (name, field) in [("q.tpkf", &r.q), ("f.tpkf", &r.f)] {
        let p = ctx.path(Stage::Invert, name);
        write_field(&p, field, &meta.clone().with("quantity", &name[..1]))?;
        files.push(p);
    }
    let p = ctx.path(Stage::Invert, "result.toml");
    write_toml(&p, &report)?;
    files.push(p);
    Ok(files)
}

/// Upper end of the fitted range for the leading-order remainder, times `1/R`.
const SLOPE_K_MAX: f64 = 0.16;

#[derive(Debug, Serialize)]
struct ReportSummary {
    leading_remainder_slope: f64,
    slope_k_max: f64,
}

fn cmd_report(ctx: &Context) -> Result<Vec<PathBuf>> {
    let (_, cfg) = load_phantom(ctx)?;
    let freq = load_spectrum(ctx)?;
    let rem = leading_order_remainder(&freq, &cfg);
    let ks = freq.ks.values();
    let k_max = SLOPE_K_MAX / cfg.radius * (1.0 + 1e-9);
    let (kx, ry): (Vec<f64>, Vec<f64>) = ks.iter().zip(&rem).filter(|(k, _)| **k <= k_max).map(|(k, r)| (*k, *r)).unzip();
    let slope = loglog_slope(&kx, &ry);
    let meta = ctx.meta(Stage::Report).with("leading_remainder_slope", slope);

    let c = ctx.path(Stage::Report, "low_freq.csv");
    let rows: Vec<Vec<f64>> = ks.iter().zip(&rem).map(|(k, r)| vec![*k, *r]).collect();
    let mut w = create(&c)?;
    csv::write_table(&mut w, &meta, &["k", "remainder"], &rows)?;
    w.flush()?;

    let anchor = ry.first().copied().unwrap_or(1.0) / kx.first().copied().unwrap_or(1.0).powf(slope);
    let plot = svg::Plot {
        title: format!("leading-order remainder, slope {slope:.3}"),
        x_label: "k".into(),
        y_label: "remainder".into(),
        x_scale: svg::Scale::Log,
        y_scale: svg::Scale::Log,
        series: vec![
            svg::Series { label: "data".into(), x: ks.to_vec(), y: rem.clone(), points: true },
            svg::Series {
                label: format!("fit k^{slope:.2}"),
                x: kx.clone(),
                y: kx.iter().map(|k| anchor * k.powf(slope)).collect(),
                points: false,
            },
        ],
    };
    let s = ctx.path(Stage::Report, "low_freq.svg");
    let mut w = create(&s)?;
    w.write_all(plot.to_svg().as_bytes())?;
    w.flush()?;

    let t = ctx.path(Stage::Report, "summary.toml");
    write_toml(&t, &ReportSummary { leading_remainder_slope: slope, slope_k_max: SLOPE_K_MAX })?;
    Ok(vec![c, s, t])
}
