//! Exact-cone kernels against closed forms, free-space oracles and the
//! symmetry/positivity invariants.

use conispec::cone_kernels::*;
use conispec::cross_section::{sphere_spectrum, sphere_volume};
use conispec::numerics::{fit_line, gauss_legendre, logspace};
use conispec::specfun::{bessel_i, bessel_k, gamma, Order};
use conispec::{Complex64, Error};
use proptest::prelude::*;
use std::f64::consts::PI;

fn o(nu: f64) -> Order {
    Order::new(nu).unwrap()
}

fn p(r: f64, theta: f64) -> ConePoint {
    ConePoint::new(r, theta).unwrap()
}

fn chord(a: ConePoint, b: ConePoint) -> f64 {
    (a.r * a.r + b.r * b.r - 2.0 * a.r * b.r * (a.theta - b.theta).cos()).sqrt()
}

#[test]
fn mode_green_examples() {
    let g = mode_green_exact(o(0.5), 1.0, 1.0, 2.0, Sign::Outgoing).unwrap();
    let want = 1f64.sin() * Complex64::new(0.0, 2.0).exp();
    assert!((g - want).norm() < 1e-14);
    let gm = mode_green_exact(o(0.5), 1.0, 1.0, 2.0, Sign::Incoming).unwrap();
    assert_eq!(gm, g.conj());
    let swapped = mode_green_exact(o(0.5), 1.0, 2.0, 1.0, Sign::Outgoing).unwrap();
    assert_eq!(swapped, g);
}

#[test]
fn imaginary_energy_examples() {
    let v = mode_green_imag(o(0.5), 1.0, 1.0, 2.0).unwrap();
    let want = 2f64.sqrt() * bessel_i(o(0.5), 1.0).unwrap() * bessel_k(o(0.5), 2.0).unwrap();
    assert!((v - want).abs() < 1e-15);
    assert!((v - 0.159_046_186_401_789).abs() < 1e-7);
    assert_eq!(v, mode_green_imag(o(0.5), 1.0, 2.0, 1.0).unwrap());
    let mut prev = f64::INFINITY;
    for k in [0.01, 0.1, 0.5, 1.0, 3.0, 10.0] {
        let g = mode_green_imag(o(1.3), k, 1.0, 2.0).unwrap();
        assert!(g > 0.0 && g < prev);
        prev = g;
    }
}

#[test]
fn zero_energy_examples() {
    let z = zero_energy_inverse(o(1.0), 1.0, 2.0).unwrap();
    assert!((z - 0.353_553_390_593_273_8).abs() < 1e-15);
    let k = mode_green_imag(o(1.0), 1e-4, 1.0, 2.0).unwrap();
    assert!((k - z).abs() < 1e-6);
    assert!((zero_energy_inverse(o(2.0), 3.0, 3.0).unwrap() - 3.0 / 4.0).abs() < 1e-15);
    assert!(zero_energy_inverse(o(0.0), 1.0, 2.0).is_err());
}

#[test]
fn euclid_examples() {
    let e = euclid_free_resolvent(3, 1.0, 1.0).unwrap();
    let want = Complex64::new(0.0, 1.0).exp() / (4.0 * PI);
    assert!((e - want).norm() < 1e-15);
    let e = euclid_free_resolvent(3, 2.0, 0.5).unwrap();
    assert!((e - want / 0.5).norm() < 1e-15);
}

/// H⁽¹⁾_ν(x) from its Laplace-type integral
/// √(2/(πx)) e^{i(x−νπ/2−π/4)}/Γ(ν+½) ∫₀^∞ e^{−u}u^{ν−½}(1+iu/(2x))^{ν−½} du,
/// with u = s² to remove the endpoint singularity.
fn hankel_integral(nu: f64, x: f64) -> Complex64 {
    let (gx, gw) = gauss_legendre(32);
    let mut acc = Complex64::new(0.0, 0.0);
    let panels = 64;
    let smax = 8.0;
    for k in 0..panels {
        let (a, b) = (smax * k as f64 / panels as f64, smax * (k + 1) as f64 / panels as f64);
        for (xi, wi) in gx.iter().zip(&gw) {
            let s = 0.5 * (a + b) + 0.5 * (b - a) * xi;
            let u = s * s;
            let f = (-u).exp() * u.powf(nu - 0.5) * Complex64::new(1.0, u / (2.0 * x)).powf(nu - 0.5) * 2.0 * s;
            acc += f * wi * 0.5 * (b - a);
        }
    }
    let phase = Complex64::new(0.0, x - nu * PI / 2.0 - PI / 4.0).exp();
    (2.0 / (PI * x)).sqrt() * phase * acc / gamma(nu + 0.5).unwrap()
}

#[test]
fn four_dimensional_free_resolvent_against_integral_oracle() {
    for &(lambda, d) in &[(1.0, 1.0), (0.5, 3.0), (2.0, 0.5)] {
        let want = Complex64::new(0.0, 0.25) * (lambda / (2.0 * PI * d)) * hankel_integral(1.0, lambda * d);
        let got = euclid_free_resolvent(4, lambda, d).unwrap();
        assert!((got - want).norm() < 1e-4 * want.norm(), "{got} {want}");
        assert!((got - want).norm() < 1e-10 * want.norm());
    }
}

#[test]
fn resolvent_matches_free_space_3d_on_a_ray() {
    let s = sphere_spectrum(3, 0.0, 300).unwrap();
    let k = resolvent_kernel(&s, 1.0, p(1.0, 0.0), p(2.0, 0.0), Sign::Outgoing, 1e-10).unwrap();
    let want = Complex64::new(0.0, 1.0).exp() / (4.0 * PI);
    assert!((k.value - want).norm() < 1e-6 * want.norm());
    assert!((k.value.re - 0.0430).abs() < 1e-4 && (k.value.im - 0.0670).abs() < 1e-4);
    let km = resolvent_kernel(&s, 1.0, p(1.0, 0.0), p(2.0, 0.0), Sign::Incoming, 1e-10).unwrap();
    assert_eq!(km.value, k.value.conj());
}

#[test]
fn free_space_identities() {
    for n in [3usize, 4] {
        let s = sphere_spectrum(n, 0.0, 400).unwrap();
        for lambda in [0.5, 1.0, 2.0] {
            for d in [0.5, 1.0, 3.0] {
                // along a ray with r_< / r_> ≤ 1/2, and off the ray
                let pairs = [(p(d, 0.0), p(2.0 * d, 0.0)), (p(0.4 * d, 0.3), p(d, 1.2))];
                for (a, b) in pairs {
                    let dist = chord(a, b);
                    let want = euclid_free_resolvent(n, lambda, dist).unwrap();
                    let got = resolvent_kernel(&s, lambda, a, b, Sign::Outgoing, 1e-10).unwrap();
                    assert!(
                        (got.value - want).norm() < 1e-6 * want.norm(),
                        "n={n} lambda={lambda} d={dist}: {} vs {want}",
                        got.value
                    );
                }
            }
        }
    }
}

#[test]
fn diagonal_density_plane_wave_oracle() {
    for n in [3usize, 4] {
        let s = sphere_spectrum(n, 0.0, 200).unwrap();
        for lambda in [0.5, 1.0, 2.0] {
            let z = p(1.3, 0.4);
            let d = spectral_measure_density(&s, lambda, z, z, 1e-12).unwrap();
            let want = lambda.powi(n as i32 - 1) * sphere_volume(n) / (2.0 * PI).powi(n as i32);
            assert!((d.density - want).abs() < 1e-6 * want, "n={n} {} {want}", d.density);
        }
    }
    let s = sphere_spectrum(3, 0.0, 100).unwrap();
    let d = spectral_measure_density(&s, 1.0, p(2.0, 0.0), p(2.0, 0.0), 1e-10).unwrap();
    assert!((d.density - 0.050_660_6).abs() < 1e-6);
}

#[test]
fn off_diagonal_density_matches_free_space() {
    // dE/dλ = (2λ/π) Im R_free(λ) with R_free from the Euclidean oracle
    for n in [3usize, 4] {
        let s = sphere_spectrum(n, 0.0, 200).unwrap();
        let (a, b) = (p(0.7, 0.2), p(1.9, 2.0));
        for lambda in [0.5, 1.0, 2.0] {
            let want = 2.0 * lambda / PI * euclid_free_resolvent(n, lambda, chord(a, b)).unwrap().im;
            let got = spectral_measure_density(&s, lambda, a, b, 1e-12).unwrap().density;
            assert!((got - want).abs() < 1e-8 * want.abs().max(1e-3), "{got} {want}");
        }
    }
}

#[test]
fn rejects_diagonal_and_reports_convergence() {
    let s = sphere_spectrum(3, 0.0, 50).unwrap();
    let z = p(1.0, 0.5);
    assert_eq!(resolvent_kernel(&s, 1.0, z, z, Sign::Outgoing, 1e-8), Err(Error::Diagonal));
    let short = sphere_spectrum(3, 0.0, 3).unwrap();
    match spectral_measure_density(&short, 5.0, p(3.0, 0.0), p(3.0, 0.0), 1e-10) {
        Err(Error::Convergence { modes, achieved }) => {
            assert_eq!(modes, 4);
            assert!(achieved > 1e-10);
        }
        other => panic!("expected convergence error, got {other:?}"),
    }
}

#[test]
fn low_energy_slope_exact_cones() {
    let lams = logspace(1e-3, 1e-2, 10);
    for (n, v0, nu0) in [(3usize, 0.0, 0.5), (4, 0.0, 1.0), (3, 0.75, 1.0)] {
        let s = sphere_spectrum(n, v0, 20).unwrap();
        let (a, b) = (p(1.0, 0.0), p(1.5, 0.7));
        let y: Vec<f64> = lams
            .iter()
            .map(|&l| spectral_measure_density(&s, l, a, b, 1e-12).unwrap().density.ln())
            .collect();
        let x: Vec<f64> = lams.iter().map(|l| l.ln()).collect();
        let f = fit_line(&x, &y);
        assert!((f.slope - (2.0 * nu0 + 1.0)).abs() < 0.01 * (2.0 * nu0 + 1.0));
        let coef = exact_leading_coefficient(&s, a, b);
        assert!((f.intercept.exp() / coef - 1.0).abs() < 0.02);
    }
}

#[test]
fn batch_preserves_order() {
    let s = sphere_spectrum(3, 0.0, 100).unwrap();
    let samples: Vec<_> = (1..20).map(|k| (0.1 * k as f64, p(1.0, 0.0), p(2.5, 0.3))).collect();
    let batch = resolvent_batch(&s, &samples, Sign::Outgoing, 1e-9);
    for (res, &(l, a, b)) in batch.iter().zip(&samples) {
        let single = resolvent_kernel(&s, l, a, b, Sign::Outgoing, 1e-9).unwrap();
        assert_eq!(res.as_ref().unwrap().value, single.value);
    }
    let dens = density_batch(&s, &samples, 1e-9);
    assert_eq!(dens.len(), samples.len());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn involution_and_conjugacy(lambda in 0.1f64..3.0, r1 in 0.2f64..3.0, r2 in 0.2f64..3.0,
                                t1 in 0.0f64..3.0, t2 in 0.0f64..3.0, n in 3usize..5) {
        prop_assume!((r1 - r2).abs() > 1e-3 || (t1 - t2).abs() > 1e-3);
        let s = sphere_spectrum(n, 0.2, 300).unwrap();
        let (a, b) = (p(r1, t1), p(r2, t2));
        let ab = resolvent_kernel(&s, lambda, a, b, Sign::Outgoing, 1e-9);
        prop_assume!(ab.is_ok());
        let ab = ab.unwrap();
        let ba = resolvent_kernel(&s, lambda, b, a, Sign::Outgoing, 1e-9).unwrap();
        prop_assert_eq!(ab.value, ba.value);
        let ab_in = resolvent_kernel(&s, lambda, a, b, Sign::Incoming, 1e-9).unwrap();
        prop_assert_eq!(ab_in.value, ab.value.conj());
    }

    #[test]
    fn stone_consistency(lambda in 0.1f64..3.0, r1 in 0.2f64..3.0, r2 in 0.2f64..3.0,
                         t1 in 0.0f64..3.0, n in 3usize..5) {
        // geometric convergence in r_</r_> on the ray
        prop_assume!(r1.min(r2) < 0.9 * r1.max(r2));
        let s = sphere_spectrum(n, 0.0, 800).unwrap();
        let (a, b) = (p(r1, t1), p(r2, 0.0));
        let plus = resolvent_kernel(&s, lambda, a, b, Sign::Outgoing, 1e-13).unwrap().value;
        let minus = resolvent_kernel(&s, lambda, a, b, Sign::Incoming, 1e-13).unwrap().value;
        let stone = (lambda / (PI * Complex64::new(0.0, 1.0)) * (plus - minus)).re;
        let d = spectral_measure_density(&s, lambda, a, b, 1e-13).unwrap();
        let scale = spectral_measure_density(&s, lambda, a, a, 1e-13).unwrap().density
            .max(spectral_measure_density(&s, lambda, b, b, 1e-13).unwrap().density);
        prop_assert!((stone - d.density).abs() <= 1e-10 * d.density.abs().max(1e-3 * scale),
            "{} vs {}", stone, d.density);
    }

    #[test]
    fn diagonal_positivity(lambda in 0.01f64..5.0, r in 0.05f64..5.0, t in 0.0f64..6.0,
                           tol in prop::sample::select(vec![1e-2, 1e-4, 1e-8, 1e-12]), n in 2usize..6) {
        let s = sphere_spectrum(n, 0.5, 400).unwrap();
        let z = p(r, t);
        let d = spectral_measure_density(&s, lambda, z, z, tol).unwrap();
        prop_assert!(d.density >= 0.0);
    }
}
