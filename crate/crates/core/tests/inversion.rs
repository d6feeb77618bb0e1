use proptest::prelude::*;
use tatpat::helmholtz::{ls_freq_trace, FreqTrace};
use tatpat::identity::{harmonic_moments, k_expansion_fit, relative_surface_error, FitModel};
use tatpat::inversion::{
    constant_speed_from_q, recover_constant_c, recover_q, reconstruct_constant_speed, Prior, RecoverOptions,
    SpeedOptions,
};
use tatpat::model::{BoundarySampling, KSweep, TatPatConfig, VoxelGrid};
use tatpat::phantom::{build_phantom, ParamMap, ParamValue};

fn grid(n: usize) -> VoxelGrid {
    VoxelGrid::centered_cube(n, 1.0 + 1.0 / n as f64).unwrap()
}

fn cylinder(n: usize, speed: f64, amplitude: f64) -> TatPatConfig {
    let p: ParamMap =
        [("speed", speed), ("amplitude", amplitude)].iter().map(|(k, v)| (k.to_string(), ParamValue::Number(*v))).collect();
    build_phantom("constant_speed_cyl_source", grid(n), &p).unwrap()
}

fn data(cfg: &TatPatConfig) -> FreqTrace {
    let s = BoundarySampling::sphere(1.0, 512, 0.0).unwrap();
    ls_freq_trace(cfg, &s, &KSweep::default_for_radius(1.0)).unwrap()
}

fn cyl_prior() -> Prior {
    Prior::X3IndependentCylinder { pixel_block: 2, weight: None }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(3))]

    #[test]
    fn scaling_the_source_scales_q_and_keeps_c(alpha in 0.05f64..20.0) {
        let base = cylinder(24, 1.3, 1.0);
        let scaled = base.with_scaled_source(alpha);
        let opts = RecoverOptions::default();
        let a = reconstruct_constant_speed(&data(&base), base.grid(), &base.omega, &cyl_prior(), &opts).unwrap();
        let b = reconstruct_constant_speed(&data(&scaled), scaled.grid(), &scaled.omega, &cyl_prior(), &opts).unwrap();
        let expect = a.q.scale(alpha);
        prop_assert!(b.q.relative_l2_error(&expect).unwrap() <= 1e-6);
        let (ca, cb) = (a.c_value.unwrap(), b.c_value.unwrap());
        prop_assert!((ca - cb).abs() <= 1e-8 * ca, "{} vs {}", ca, cb);
    }
}

#[test]
fn equal_q_gives_equal_leading_data_and_separable_speeds() {
    // (f, c) and (f̃, c̃) with c̃⁻² f̃ = c⁻² f.
    let (c, ct) = (1.3, 1.5);
    let one = cylinder(32, c, 1.0);
    let two = cylinder(32, ct, (ct / c) * (ct / c));
    let q_gap = two.q().relative_l2_error(&one.q()).unwrap();
    assert!(q_gap < 1e-14, "{q_gap}");
    let (d1, d2) = (data(&one), data(&two));
    let (f1, f2) = (k_expansion_fit(&d1, FitModel::Parity).unwrap(), k_expansion_fit(&d2, FitModel::Parity).unwrap());
    let s = &d1.sampling;
    let u1_gap = relative_surface_error(s, &f2.u1, &f1.u1);
    let u3_gap = relative_surface_error(s, &f2.u3, &f1.u3);
    assert!(u1_gap < 1e-5, "{u1_gap}");
    assert!(u3_gap > 1e-2, "{u3_gap}");
    let q = one.q();
    let e1 = recover_constant_c(&q, &d1, &one.omega).unwrap();
    let e2 = recover_constant_c(&q, &d2, &two.omega).unwrap();
    assert!((e1.c - c).abs() < 0.02 * c, "{}", e1.c);
    assert!((e2.c - ct).abs() < 0.02 * ct, "{}", e2.c);
}

#[test]
fn recovered_moments_match_data_within_reported_residual() {
    let cfg = cylinder(24, 1.3, 1.0);
    let rec = recover_q(&data(&cfg), cfg.grid(), &cfg.omega, &cyl_prior(), &RecoverOptions::default()).unwrap();
    let fitted = harmonic_moments(&rec.q, rec.data_moments.l_max());
    // Misfit over the independent real coordinates of a real density: Re m_α0
    // and Re/Im of the conjugation-symmetrized m_αβ for β > 0.
    let (mut num, mut den) = (0.0, 0.0);
    for (a, b, v) in rec.data_moments.iter() {
        if b < 0 {
            continue;
        }
        let mirrored = rec.data_moments.get(a, -b).unwrap().conj() * if b % 2 == 0 { 1.0 } else { -1.0 };
        let sym = (v + mirrored) * 0.5;
        let w = fitted.get(a, b).unwrap();
        let (dr, di) = if b == 0 { (w.re - sym.re, 0.0) } else { (w.re - sym.re, w.im - sym.im) };
        num += dr * dr + di * di;
        den += sym.re * sym.re + if b == 0 { 0.0 } else { sym.im * sym.im };
    }
    let misfit = (num / den).sqrt();
    let d = &rec.diagnostics;
    assert!((misfit - d.moment_residual).abs() <= 1e-6 * d.moment_residual.max(1e-12), "{misfit} vs {}", d.moment_residual);
    assert!((d.tikhonov.residual / d.tikhonov.data_norm - d.moment_residual).abs() <= 1e-6 * d.moment_residual);
}

#[test]
fn unit_speed_source_equals_q() {
    let cfg = cylinder(24, 1.0, 1.0);
    let r = constant_speed_from_q(cfg.q(), &data(&cfg), &cfg.omega, &SpeedOptions::default()).unwrap();
    let c = r.c_value.unwrap();
    assert!((c - 1.0).abs() < 0.02, "{c}");
    for (f, q) in r.f.values().iter().zip(r.q.values()) {
        assert_eq!(*f, c * c * q);
    }
}
