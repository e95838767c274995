//! Perturbed-cone radial solutions, Green functions and the zero mode.

use conispec::cone_kernels::{mode_green_exact, spectral_measure_density, ConePoint, Sign};
use conispec::cross_section::{sphere_spectrum, ModeSpectrum};
use conispec::numerics::logspace;
use conispec::radial::*;
use conispec::specfun::{bessel_j, gamma, hankel1, Order};
use conispec::{Complex64, Error};
use proptest::prelude::*;
use std::f64::consts::PI;

fn o(nu: f64) -> Order {
    Order::new(nu).unwrap()
}

fn free(n: usize) -> RadialModel {
    RadialModel::new(sphere_spectrum(n, 0.0, 60).unwrap(), Perturbation::None, 1e-10).unwrap()
}

fn bumped(n: usize, amplitude: f64) -> RadialModel {
    let w = Perturbation::bump(1.5, 1.0, amplitude).unwrap();
    RadialModel::new(sphere_spectrum(n, 0.0, 60).unwrap(), w, 1e-10).unwrap()
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm()
}

#[test]
fn liouville_examples() {
    let m = free(3);
    let q = liouville_reduce(&m, o(0.5)).unwrap();
    assert_eq!(q.eval(0.7), 0.0);
    let m4 = free(4);
    let q = liouville_reduce(&m4, o(1.0)).unwrap();
    assert!((q.eval(2.0) - 0.75 / 4.0).abs() < 1e-15);
    let b = bumped(3, 0.8);
    let q = liouville_reduce(&b, o(1.5)).unwrap();
    for r in [0.6, 1.5, 2.2, 3.0] {
        assert!((q.eval(r) - (2.0 / (r * r) + b.w_pert.value(r))).abs() < 1e-15);
    }
}

/// The n-dimensional mode operator −f″ − (n−1)f′/r + (ν² − (n−2)²/4)/r² f + W f
/// applied to f = r^{−(n−1)/2}u, by central differences.
#[test]
fn liouville_transform_by_sampling() {
    let b = bumped(4, 0.8);
    let nu = 1.7;
    let u = |r: f64| r * r * (1.3 * r).sin() + 0.2 * r.powi(3);
    let upp = |r: f64| 2.0 * (1.3 * r).sin() + 4.0 * 1.3 * r * (1.3 * r).cos() - 1.69 * r * r * (1.3 * r).sin() + 1.2 * r;
    for n in [3usize, 4, 5] {
        let k = (n as f64 - 1.0) / 2.0;
        let f = |r: f64| r.powf(-k) * u(r);
        let q = liouville_reduce(&b, o(nu)).unwrap();
        let d2 = |r: f64, h: f64| (f(r + h) - 2.0 * f(r) + f(r - h)) / (h * h);
        let d1 = |r: f64, h: f64| (f(r + h) - f(r - h)) / (2.0 * h);
        for r in [0.7, 1.2, 2.0, 3.1] {
            // Richardson-extrapolated central differences
            let h = 1e-2;
            let f2 = (4.0 * d2(r, h / 2.0) - d2(r, h)) / 3.0;
            let f1 = (4.0 * d1(r, h / 2.0) - d1(r, h)) / 3.0;
            let nf = n as f64;
            let lhs = -f2 - (nf - 1.0) / r * f1 + (nu * nu - (nf - 2.0).powi(2) / 4.0) / (r * r) * f(r) + b.w_pert.value(r) * f(r);
            let rhs = r.powf(-k) * (-upp(r) + q.eval(r) * u(r));
            assert!((lhs - rhs).abs() < 1e-8 * rhs.abs().max(1.0), "n={n} r={r} {lhs} {rhs}");
        }
    }
}

#[test]
fn regular_solution_zero_energy_is_power() {
    let m = free(3);
    let pts = [0.01, 0.3, 0.9];
    for nu in [0.5, 1.0, 2.5, 6.0] {
        let s = regular_solution(&m, o(nu), 0.0, &pts).unwrap();
        for r in pts.iter().copied().chain([1.0, 5.0, 40.0]) {
            let (u, _) = s.eval(r).unwrap();
            let want = r.powf(nu + 0.5);
            assert!((u - want).abs() < 1e-9 * want, "nu={nu} r={r} {u} {want}");
        }
    }
}

#[test]
fn regular_solution_matches_scaled_bessel() {
    let m = free(3);
    let s = regular_solution(&m, o(0.5), 1.0, &[1.0]).unwrap();
    assert!((s.eval(1.0).unwrap().0 - 1f64.sin()).abs() < 1e-7 * 1f64.sin());
    let pts = [0.05, 0.4, 0.77];
    for nu in [0.3, 1.0, 2.5, 7.0, 30.0] {
        for lambda in [0.01, 0.5, 2.0] {
            let s = regular_solution(&m, o(nu), lambda, &pts).unwrap();
            for r in pts.iter().copied().chain([3.0, 12.0]) {
                let want = r.sqrt() * bessel_j(o(nu), lambda * r).unwrap() * 2f64.powf(nu) * gamma(nu + 1.0).unwrap()
                    / lambda.powf(nu);
                let (u, _) = s.eval(r).unwrap();
                assert!((u - want).abs() < 1e-7 * want.abs().max(1e-300), "nu={nu} l={lambda} r={r} {u} {want}");
            }
        }
    }
}

#[test]
fn regular_solution_under_refinement() {
    let b = bumped(3, 2.0);
    let fine = RadialModel { tol: b.tol / 32.0, ..b.clone() };
    let pts = [0.5, 1.2, 1.9, 2.4];
    for nu in [0.5, 1.5, 4.5] {
        let s1 = regular_solution(&b, o(nu), 1.0, &pts).unwrap();
        let s2 = regular_solution(&fine, o(nu), 1.0, &pts).unwrap();
        for r in pts.iter().copied().chain([5.0]) {
            let (a, c) = (s1.eval(r).unwrap().0, s2.eval(r).unwrap().0);
            assert!((a - c).abs() < 1e-7 * c.abs(), "nu={nu} r={r}");
        }
    }
}

#[test]
fn outgoing_solution_free() {
    let m = free(3);
    let s = outgoing_solution(&m, o(0.5), 1.0, &[0.5]).unwrap();
    // √2·H_{1/2}(2) = −i√(2/π)e^{2i}
    let want = Complex64::new(0.0, -(2.0 / PI).sqrt()) * Complex64::from_polar(1.0, 2.0);
    assert!((want / 2f64.sqrt() - Complex64::new(0.513_016_136_561_828, 0.234_785_710_406_248)).norm() < 1e-14);
    assert!(rel(s.eval(2.0).unwrap().0, want) < 1e-7);
    for nu in [0.5, 1.3, 4.0, 25.0] {
        let s = outgoing_solution(&m, o(nu), 0.7, &[0.05, 0.3, 0.8]).unwrap();
        for r in [0.05f64, 0.3, 0.8, 1.0, 2.0, 9.0] {
            let want = r.sqrt() * hankel1(o(nu), 0.7 * r).unwrap();
            assert!(rel(s.eval(r).unwrap().0, want) < 1e-7, "nu={nu} r={r}");
        }
    }
}

#[test]
fn outgoing_phase_is_constant_beyond_matching() {
    let b = bumped(3, 1.0);
    let s = outgoing_solution(&b, o(0.5), 1.3, &[0.5]).unwrap();
    let phase = |r: f64| (s.eval(r).unwrap().0 * Complex64::from_polar(1.0, -1.3 * r)).arg();
    let p0 = phase(b.r_match);
    for k in 1..20 {
        let r = b.r_match * (1.0 + 0.37 * k as f64);
        assert!((phase(r) - p0).abs() < 1e-4);
    }
}

#[test]
fn perturbed_green_reduces_to_exact_cone() {
    let m = free(3);
    let pts = [(0.3, 0.5), (0.4, 2.5), (1.5, 0.2), (3.0, 7.0), (0.9, 0.9)];
    for nu in [0.5, 1.0, 2.3, 10.0, 40.0] {
        for lambda in [0.3, 1.0, 2.0] {
            for &(r, rp) in &pts {
                let g = mode_green_perturbed(&m, o(nu), lambda, r, rp, Sign::Outgoing).unwrap();
                let e = mode_green_exact(o(nu), lambda, r, rp, Sign::Outgoing).unwrap();
                assert!(rel(g, e) < 1e-7, "nu={nu} l={lambda} r={r} r'={rp}: {g} {e}");
            }
        }
    }
}

#[test]
fn perturbed_green_symmetries() {
    let b = bumped(3, -1.5);
    for nu in [0.5, 2.5] {
        let g = mode_green_perturbed(&b, o(nu), 0.8, 0.7, 1.9, Sign::Outgoing).unwrap();
        let gt = mode_green_perturbed(&b, o(nu), 0.8, 1.9, 0.7, Sign::Outgoing).unwrap();
        assert_eq!(g, gt);
        let gi = mode_green_perturbed(&b, o(nu), 0.8, 0.7, 1.9, Sign::Incoming).unwrap();
        assert_eq!(gi, g.conj());
    }
}

#[test]
fn wronskian_constancy() {
    for m in [free(3), bumped(3, 3.0), bumped(4, -2.0)] {
        for nu in [0.5, 1.5, 3.0, 12.0] {
            for lambda in [0.2, 1.0, 2.5] {
                let s = solve_mode(&m, o(nu), lambda, &[0.05, 0.6, 1.4]).unwrap();
                assert!(s.wronskian_variation <= 1e-8, "nu={nu} l={lambda}: {}", s.wronskian_variation);
            }
        }
    }
}

#[test]
fn density_is_imaginary_part_of_green() {
    let b = bumped(3, 2.0);
    for (r, rp) in [(0.5, 1.7), (1.0, 1.0), (2.2, 4.0)] {
        let s = solve_mode(&b, o(1.5), 0.9, &[r, rp]).unwrap();
        let g = s.green(r, rp, Sign::Outgoing).unwrap();
        let d = s.density(r, rp).unwrap();
        assert!((d - 2.0 * 0.9 / PI * g.im).abs() < 1e-9 * d.abs().max(1e-12));
    }
}

#[test]
fn perturbed_sum_reduces_to_exact_density() {
    let m = free(3);
    let (a, b) = (ConePoint::new(0.7, 0.0).unwrap(), ConePoint::new(1.6, 0.9).unwrap());
    for lambda in [0.05, 0.8, 2.0] {
        let p = perturbed_density(&m, lambda, a, b, 1e-10).unwrap();
        let e = spectral_measure_density(&m.spectrum, lambda, a, b, 1e-10).unwrap();
        assert!((p.density - e.density).abs() < 1e-7 * e.density.abs(), "{lambda}");
    }
    let r = perturbed_resolvent(&m, 1.0, a, b, Sign::Outgoing, 1e-9).unwrap();
    let e = conispec::cone_kernels::resolvent_kernel(&m.spectrum, 1.0, a, b, Sign::Outgoing, 1e-9).unwrap();
    assert!(rel(r.value, e.value) < 1e-7);
}

#[test]
fn continuity_in_bump_amplitude() {
    let b = bumped(3, 1e-6);
    for nu in [0.5, 1.5] {
        for (r, rp) in [(0.6, 1.8), (1.2, 3.0)] {
            let g = mode_green_perturbed(&b, o(nu), 1.0, r, rp, Sign::Outgoing).unwrap();
            let e = mode_green_exact(o(nu), 1.0, r, rp, Sign::Outgoing).unwrap();
            let d = rel(g, e);
            assert!(d < 1e-5 && d > 0.0, "{d}");
        }
    }
}

#[test]
fn zero_mode_free_examples() {
    let s3 = free(3);
    let z = zero_mode(&s3).unwrap();
    let p = ConePoint::new(0.8, 0.4).unwrap();
    let w = z.w_eval(&s3.spectrum, p).unwrap();
    assert!((w - 1.0 / (PI * 2f64.sqrt())).abs() < 1e-9);
    assert!((w * w - 1.0 / (2.0 * PI * PI)).abs() < 1e-9);
    assert_eq!(z.bound_states, 0);
    let s4 = free(4);
    let z = zero_mode(&s4).unwrap();
    let q = ConePoint::new(2.5, 1.0).unwrap();
    let c = z.leading_coefficient(&s4.spectrum, q, q).unwrap();
    assert!((c - 1.0 / (8.0 * PI * PI)).abs() < 1e-9);
    assert!((z.a_coeff - 1.0).abs() < 1e-9);
}

#[test]
fn zero_mode_exact_cone_with_potential() {
    let m = RadialModel::new(sphere_spectrum(3, 0.75, 20).unwrap(), Perturbation::None, 1e-10).unwrap();
    let z = zero_mode_at(&m, &[0.3]).unwrap();
    assert_eq!(z.nu0.get(), 1.0);
    assert!((z.a_coeff - 1.0).abs() < 1e-9);
    assert!(z.b_coeff.abs() < 1e-9);
    let (u, _) = z.solution.eval(0.3).unwrap();
    assert!((u - 0.3f64.powf(1.5)).abs() < 1e-9 * u);
}

fn a_coeff(amplitude: f64) -> f64 {
    let m = bumped(3, amplitude);
    let s = regular_solution(&m, o(0.5), 0.0, &[]).unwrap();
    match s.tail {
        Tail::Power { a, ln_a, .. } => a * ln_a.exp(),
        _ => unreachable!(),
    }
}

#[test]
fn zero_resonance_detected() {
    // the first attractive threshold crossing, by bisection on a
    let (mut lo, mut hi) = (-0.1, -1.0);
    assert!(a_coeff(lo) > 0.0 && a_coeff(hi) < 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if a_coeff(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if lo == mid && hi == mid {
            break;
        }
    }
    let tuned = if a_coeff(lo).abs() < a_coeff(hi).abs() { lo } else { hi };
    match zero_mode(&bumped(3, tuned)) {
        Err(Error::ZeroResonance { a, b }) => assert!(a.abs() < 1e-10 * b.abs()),
        other => panic!("expected zero resonance, got {other:?}"),
    }
    // just past the threshold the bound state is counted
    let z = zero_mode(&bumped(3, 1.05 * tuned)).unwrap();
    assert_eq!(z.bound_states, 1);
}

#[test]
fn matching_radius() {
    let b = bumped(3, 1.0);
    assert_eq!(b.r_match, 4.0);
    assert!(matches!(b.clone().with_r_match(2.0), Err(Error::Config(_))));
    assert!(b.with_r_match(8.0).is_ok());
    assert_eq!(free(3).r_match, 1.0);
}

#[test]
fn tabulated_perturbation_from_csv() {
    let bump = Perturbation::bump(1.5, 1.0, 1.0).unwrap();
    let dir = std::env::temp_dir().join(format!("conispec-radial-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("w.csv");
    let mut text = String::from("r,W\n");
    for i in 0..=800 {
        let r = 0.5 + i as f64 * (2.0 / 800.0);
        text.push_str(&format!("{r},{}\n", bump.value(r)));
    }
    std::fs::write(&path, text).unwrap();
    let tab = Perturbation::from_csv(&path).unwrap();
    assert!((tab.value(1.3) - bump.value(1.3)).abs() < 1e-6);
    assert_eq!(tab.value(2.6), 0.0);
    let sp = sphere_spectrum(3, 0.0, 10).unwrap();
    let mt = RadialModel::new(sp.clone(), tab, 1e-10).unwrap();
    let mb = RadialModel::new(sp, bump, 1e-10).unwrap();
    let gt = mode_green_perturbed(&mt, o(0.5), 1.0, 0.7, 2.2, Sign::Outgoing).unwrap();
    let gb = mode_green_perturbed(&mb, o(0.5), 1.0, 0.7, 2.2, Sign::Outgoing).unwrap();
    assert!(rel(gt, gb) < 1e-5);
    std::fs::write(&path, "r,W\n1,2\nx,y\n").unwrap();
    assert!(matches!(Perturbation::from_csv(&path), Err(Error::Parse(_))));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn low_energy_fits() {
    let grid = logspace(1e-3, 1e-2, 10);
    let z = ConePoint::new(1.0, 0.0).unwrap();
    let f = low_energy_fit(&free(3), z, z, &grid, 1e-10).unwrap();
    assert!((f.fit.slope - 2.0).abs() < 0.02);
    assert!((f.coefficient / (1.0 / (2.0 * PI * PI)) - 1.0).abs() < 0.01);
    assert!(f.remainder_slope.unwrap() >= f.predicted_remainder - 0.1);
    let f = low_energy_fit(&free(4), z, z, &grid, 1e-10).unwrap();
    assert!((f.fit.slope - 3.0).abs() < 0.03);
    let zp = ConePoint::new(1.8, 0.6).unwrap();
    let b = bumped(3, 2.0);
    let f = low_energy_fit(&b, z, zp, &grid, 1e-10).unwrap();
    assert!((f.fit.slope - 2.0).abs() < 0.02);
    assert!((f.coefficient / f.predicted_coefficient - 1.0).abs() < 0.02);
}

#[test]
fn fit_rejects_short_grid() {
    let z = ConePoint::new(1.0, 0.0).unwrap();
    assert!(matches!(low_energy_fit(&free(3), z, z, &[1e-3, 2e-3], 1e-10), Err(Error::Config(_))));
}

fn spectrum_of(n: usize) -> ModeSpectrum {
    sphere_spectrum(n, 0.0, 60).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn per_mode_density_nonnegative(lambda in 0.05f64..3.0, r in 0.05f64..5.0, amp in -3.0f64..3.0, l in 0usize..6) {
        let m = RadialModel::new(spectrum_of(3), Perturbation::bump(1.5, 1.0, amp).unwrap(), 1e-10).unwrap();
        let nu = m.spectrum.modes[l].nu;
        let s = solve_mode(&m, nu, lambda, &[r]).unwrap();
        let d = 2.0 * lambda / PI * s.green(r, r, Sign::Outgoing).unwrap().im;
        prop_assert!(d >= -1e-12);
        prop_assert!(s.density(r, r).unwrap() >= 0.0);
        prop_assert!(s.wronskian_variation <= 1e-8);
    }
}
