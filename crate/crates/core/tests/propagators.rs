//! Low-energy propagators, the model integral and decay fits.

use conispec::cone_kernels::ConePoint;
use conispec::cross_section::sphere_spectrum;
use conispec::propagators::*;
use conispec::radial::{Perturbation, RadialModel};
use conispec::specfun::gamma;
use conispec::{Complex64, Error};
use proptest::prelude::*;
use std::f64::consts::PI;

fn free(n: usize) -> RadialModel {
    RadialModel::new(sphere_spectrum(n, 0.0, 60).unwrap(), Perturbation::None, 1e-12).unwrap()
}

fn pt(r: f64, theta: f64) -> ConePoint {
    ConePoint::new(r, theta).unwrap()
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm()
}

fn dyadic(t0: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| t0 * 2f64.powf(k as f64 / 2.0)).collect()
}

#[test]
fn cutoff_examples_and_shape() {
    assert_eq!(cutoff_chi(0.1, 1.0), 1.0);
    assert_eq!(cutoff_chi(1.0, 1.0), 0.0);
    assert!((cutoff_chi(0.75, 1.0) - 0.7165).abs() < 1e-4);
    assert!((cutoff_chi(0.75, 1.0) - (-1.0f64 / 3.0).exp()).abs() < 1e-15);
    assert_eq!(cutoff_chi(3.0, 2.0), cutoff_chi(0.75, 0.5));
    // flat to all orders at both ends of the transition
    for eps in [1e-2, 2e-2, 4e-2] {
        assert!(1.0 - cutoff_chi(0.5 + eps, 1.0) < eps.powi(4));
        assert!(cutoff_chi(1.0 - eps, 1.0) < eps.powi(4));
    }
    assert!(Cutoff::new(0.0).is_err());
}

proptest! {
    #[test]
    fn cutoff_monotone(a in 0.0f64..1.2, b in 0.0f64..1.2) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let (x, y) = (cutoff_chi(lo, 1.0), cutoff_chi(hi, 1.0));
        prop_assert!(y <= x);
        prop_assert!((0.0..=1.0).contains(&x));
    }
}

#[test]
fn model_integral_examples() {
    let c = Cutoff::new(1.0).unwrap();
    let (q, closed) = model_integral(2.0, 100.0, c).unwrap();
    assert!(rel(closed, Complex64::new(0.0, -2e-6)) < 1e-12);
    assert!(rel(q, closed) < 1e-6, "{}", rel(q, closed));
    let (q, closed) = model_integral(1.0, 1000.0, c).unwrap();
    assert!(rel(closed, Complex64::new(-1e-6, 0.0)) < 1e-12);
    assert!(rel(q, closed) < 1e-6);
    let (q, closed) = model_integral(3.0, 200.0, c).unwrap();
    assert!(rel(closed, Complex64::new(6.0 * 200f64.powi(-4), 0.0)) < 1e-12);
    assert!(rel(q, closed) < 1e-6);
}

#[test]
fn model_integral_sweep() {
    let c = Cutoff::new(1.0).unwrap();
    for s in [1.0, 2.0, 3.0] {
        for t in [100.0, 1000.0, 10000.0] {
            let (q, closed) = model_integral(s, t, c).unwrap();
            assert!(rel(q, closed) < 1e-6, "s {s} t {t}: {}", rel(q, closed));
        }
    }
    assert!(matches!(model_integral(1.0, 5.0, c), Err(Error::Sampling(_))));
    assert!(model_integral(-1.0, 100.0, c).is_err());
}

#[test]
fn synthetic_decay_fits() {
    let ts: Vec<f64> = (0..=12).map(|k| 100.0 * 10f64.powf(k as f64 / 6.0)).collect();
    let pure: Vec<Complex64> = ts.iter().map(|t| Complex64::new(5.0 * t.powi(-3), 0.0)).collect();
    let f = fit_decay(&ts, &pure, None).unwrap();
    assert!((f.exponent - 3.0).abs() < 1e-6);
    assert!((f.coefficient.re - 5.0).abs() < 1e-6);
    assert!(f.warning.is_none());
    let mixed: Vec<Complex64> = ts.iter().map(|t| Complex64::new(5.0 * t.powi(-3) + t.powi(-4), 0.0)).collect();
    let f = fit_decay(&ts, &mixed, Some((3.0, Complex64::new(5.0, 0.0)))).unwrap();
    assert!((f.exponent - 3.0).abs() < 0.02);
    assert_eq!(f.predicted_exponent, Some(3.0));
    let wobble: Vec<Complex64> = ts
        .iter()
        .enumerate()
        .map(|(k, t)| Complex64::new(t.powi(-2) * if k % 2 == 0 { 1.0 } else { 3.0 }, 0.0))
        .collect();
    assert!(fit_decay(&ts, &wobble, None).unwrap().warning.is_some());
    assert!(fit_decay(&ts[..11], &pure[..11], None).is_err());
}

#[test]
fn predicted_constants_examples() {
    let z = pt(1.0, 0.3);
    let (e, c) = predicted_constants(&free(3), PropagatorKind::WaveSin, z, z).unwrap();
    assert_eq!(e, 3.0);
    assert_eq!(c, Complex64::new(0.0, 0.0));
    let (e, c) = predicted_constants(&free(4), PropagatorKind::WaveSin, z, pt(2.0, 1.0)).unwrap();
    assert_eq!(e, 3.0);
    assert!((c.re + 1.0 / (4.0 * PI * PI)).abs() < 1e-8 / (4.0 * PI * PI));
    let (e, c) = predicted_constants(&free(3), PropagatorKind::Schrodinger, z, z).unwrap();
    assert_eq!(e, 1.5);
    let want = Complex64::from_polar(0.5 * gamma(1.5).unwrap() / (2.0 * PI * PI), 0.75 * PI);
    assert!(rel(c, want) < 1e-8);
}

#[test]
fn wave_small_time_is_linear() {
    let m = free(3);
    let z = pt(1.0, 0.2);
    let c = Cutoff::new(1.0).unwrap();
    let a = stone_quadrature(&m, PropagatorKind::WaveSin, c, 1e-3, z, z, 20).unwrap();
    let b = stone_quadrature(&m, PropagatorKind::WaveSin, c, 2e-3, z, z, 20).unwrap();
    assert!((b.re / a.re - 2.0).abs() < 1e-3);
    assert_eq!(a.im, 0.0);
}

#[test]
fn undersampling_is_rejected() {
    let m = free(3);
    let z = pt(1.0, 0.2);
    let c = Cutoff::new(1.0).unwrap();
    let need = required_panels(PropagatorKind::Schrodinger, 1.0, 500.0);
    assert!(matches!(
        stone_quadrature(&m, PropagatorKind::Schrodinger, c, 500.0, z, z, need - 1),
        Err(Error::Sampling(_))
    ));
    let table = DensityTable::build(&m, c, z, z, 100, 1e-12).unwrap();
    assert!(matches!(table.integrate(PropagatorKind::WaveCos, 500.0), Err(Error::Sampling(_))));
}

#[test]
fn doubling_convergence_at_t500() {
    let m = free(3);
    let (z, zp) = (pt(1.0, 0.2), pt(1.5, 1.1));
    let c = Cutoff::new(1.0).unwrap();
    for kind in [PropagatorKind::Schrodinger, PropagatorKind::WaveSin, PropagatorKind::WaveCos] {
        let n = required_panels(kind, 1.0, 500.0);
        let (v, change) = stone_quadrature_checked(&m, kind, c, 500.0, z, zp, n).unwrap();
        assert!(change < 1e-3, "{kind:?}: {change}");
        if kind != PropagatorKind::Schrodinger {
            assert_eq!(v.im, 0.0);
        }
    }
}

#[test]
fn free_density_table_matches_model_integral() {
    // the diagonal density of the free 3-cone is λ²/(2π²) exactly
    let m = free(3);
    let z = pt(1.3, 0.7);
    let c = Cutoff::new(2.0).unwrap();
    let table = DensityTable::build(&m, c, z, z, 2000, 1e-12).unwrap();
    let synth = DensityTable::from_fn(c, 2000, |l| Ok(l * l / (2.0 * PI * PI))).unwrap();
    for t in [10.0, 100.0, 500.0] {
        let a = table.integrate(PropagatorKind::WaveCos, t).unwrap();
        let b = synth.integrate(PropagatorKind::WaveCos, t).unwrap();
        assert!((a - b).norm() < 1e-12 * (1.0 + b.norm()), "t {t}: {a} {b}");
    }
}

#[test]
fn schrodinger_free_n3_decay() {
    let m = free(3);
    let z = pt(1.0, 0.4);
    let c = Cutoff::new(1.0).unwrap();
    let ts = dyadic(200.0, 13);
    let panels = required_panels(PropagatorKind::Schrodinger, 1.0, *ts.last().unwrap());
    let table = DensityTable::build(&m, c, z, z, panels, 1e-12).unwrap();
    let vals = table.series(PropagatorKind::Schrodinger, &ts).unwrap();
    let pred = predicted_constants(&m, PropagatorKind::Schrodinger, z, z).unwrap();
    let f = fit_decay(&ts, &vals, Some(pred)).unwrap();
    assert!((f.exponent - 1.5).abs() < 0.075, "{}", f.exponent);
    assert!(rel(f.coefficient, pred.1) < 0.1, "{} vs {}", f.coefficient, pred.1);
}

#[test]
fn bound_state_scan() {
    let spec = sphere_spectrum(3, 0.0, 20).unwrap();
    let shallow = RadialModel::new(spec.clone(), Perturbation::bump(1.5, 1.0, -0.1).unwrap(), 1e-10).unwrap();
    assert!(bound_state_warning(&shallow).unwrap().is_none());
    let deep = RadialModel::new(spec, Perturbation::bump(1.5, 1.0, -5.0).unwrap(), 1e-10).unwrap();
    assert!(bound_state_warning(&deep).unwrap().is_some());
    assert!(bound_state_warning(&free(3)).unwrap().is_none());
}
