//! Finite-box eigendecomposition against the continuum mode densities.

use conispec::oracle::*;
use conispec::radial::{Perturbation, RadialModel};
use conispec::cross_section::sphere_spectrum;
use conispec::specfun::Order;
use conispec::Error;
use std::f64::consts::PI;

fn o(nu: f64) -> Order {
    Order::new(nu).unwrap()
}

#[test]
fn vibrating_string() {
    let p = BoxProblem::new(0.5, Perturbation::None, 0.0, PI, 2000).unwrap();
    assert!(p.matrix().0.iter().all(|d| *d == p.matrix().0[0]));
    let e = box_eigen(&p, &[1.0]).unwrap();
    for k in 1..=3 {
        let want = (k * k) as f64;
        assert!((e.values[k - 1] - want).abs() < 1e-3 * want, "{}", e.values[k - 1]);
    }
}

#[test]
fn residual_and_normalization() {
    let p = BoxProblem::new(1.3, Perturbation::bump(1.5, 1.0, 0.8).unwrap(), 1e-3, 10.0, 300).unwrap();
    let e = box_eigen(&p, &[]).unwrap();
    let (d, off) = p.matrix();
    let norm_a = d.iter().map(|v| v.abs()).fold(0.0, f64::max) + 2.0 * off[0].abs();
    for k in [0, 7, 150, 299] {
        let v = e.vector(k).unwrap();
        let mut res: f64 = 0.0;
        for i in 0..p.n {
            let mut av = d[i] * v[i];
            if i > 0 {
                av += off[i - 1] * v[i - 1];
            }
            if i + 1 < p.n {
                av += off[i] * v[i + 1];
            }
            res += (av - e.values[k] * v[i]).powi(2);
        }
        assert!(res.sqrt() <= 1e-8 * norm_a);
        let l2: f64 = (0..p.n).map(|i| p.h() * (v[i] / p.h().sqrt()).powi(2)).sum();
        assert!((l2 - 1.0).abs() < 1e-12);
    }
    assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn weyl_spacing() {
    let p = BoxProblem::new(1.5, Perturbation::None, 0.0, 20.0, 2000).unwrap();
    let e = box_eigen(&p, &[1.0]).unwrap();
    let gap = e.values[60].sqrt() - e.values[59].sqrt();
    assert!((gap / (PI / 20.0) - 1.0).abs() < 0.01, "{}", gap / (PI / 20.0));
}

#[test]
fn rejects_bad_boxes() {
    assert!(matches!(BoxProblem::new(0.5, Perturbation::None, 0.0, 10.0, 100), Err(Error::Config(_))));
    assert!(BoxProblem::new(0.5, Perturbation::None, 5.0, 1.0, 500).is_err());
    let p = BoxProblem::new(0.5, Perturbation::None, 0.0, 50.0, 2000).unwrap();
    let e = box_eigen(&p, &[1.0]).unwrap();
    assert!(matches!(mollified_density(&e, 0.05, 1.0, 1.0, 1.0), Err(Error::Resolution { .. })));
    assert!(e.eigenfunction(0, 2.0).is_err());
}

fn model(n: usize, w: Perturbation) -> RadialModel {
    RadialModel::new(sphere_spectrum(n, 0.0, 20).unwrap(), w, 1e-10).unwrap()
}

#[test]
fn free_half_mode_matches_closed_form() {
    let m = model(3, Perturbation::None);
    let p = BoxProblem::new(0.5, Perturbation::None, 0.0, 400.0, 10000).unwrap();
    let c = compare_with_modes(&m, o(0.5), &p, Some(0.05), &[1.0], 1.0, 1.0).unwrap();
    assert!(c.max_deviation < 0.05, "{c:?}");
    // the closed form itself, unmollified, is close at this σ
    let exact = free_mode_density(o(0.5), 1.0, 1.0, 1.0).unwrap();
    assert!((c.box_density[0] - exact).abs() < 0.05 * exact);
}

#[test]
fn mollification_and_box_size() {
    let m = model(4, Perturbation::None);
    let grid = [0.6, 1.0, 1.4];
    let small = BoxProblem::new(1.0, Perturbation::None, 0.0, 200.0, 5000).unwrap();
    let big = BoxProblem::new(1.0, Perturbation::None, 0.0, 400.0, 10000).unwrap();
    let a = compare_with_modes(&m, o(1.0), &small, Some(0.08), &grid, 1.2, 0.8).unwrap();
    let b = compare_with_modes(&m, o(1.0), &big, Some(0.08), &grid, 1.2, 0.8).unwrap();
    for (x, y) in a.box_density.iter().zip(&b.box_density) {
        assert!((x - y).abs() < 0.02 * y.abs(), "{x} {y}");
    }
    assert!(b.max_deviation < 0.05);
    let sharp = compare_with_modes(&m, o(1.0), &big, Some(0.03), &grid, 1.2, 0.8).unwrap();
    let broad = compare_with_modes(&m, o(1.0), &big, Some(0.15), &grid, 1.2, 0.8).unwrap();
    assert!(broad.max_deviation <= sharp.max_deviation + 1e-3);
}

#[test]
fn bump_mode_matches_perturbed_density() {
    let w = Perturbation::bump(1.5, 1.0, 0.8).unwrap();
    let m = model(3, w.clone());
    let p = BoxProblem::for_mode(&m, o(0.5), 0.0, 400.0, 10000).unwrap();
    let c = compare_with_modes(&m, o(0.5), &p, None, &[0.5, 1.0, 1.5], 1.0, 2.0).unwrap();
    assert!(c.max_deviation < 0.05, "{c:?}");
    let p = BoxProblem::for_mode(&m, o(1.5), 0.0, 400.0, 10000).unwrap();
    let c = compare_with_modes(&m, o(1.5), &p, None, &[0.8, 1.3], 2.0, 2.0).unwrap();
    assert!(c.max_deviation < 0.05, "{c:?}");
}

#[test]
fn completeness() {
    // Σ_{λ_k ≤ Λ} u_k(r)² vs ∫₀^Λ (2/π) sin²(λr) dλ
    let p = BoxProblem::new(0.5, Perturbation::None, 0.0, 200.0, 8000).unwrap();
    let r = 1.3;
    let e = box_eigen(&p, &[r]).unwrap();
    let cap = 3.0;
    let sum: f64 = (0..e.values.len())
        .filter(|&k| e.values[k] > 0.0 && e.values[k].sqrt() <= cap)
        .map(|k| e.eigenfunction(k, r).unwrap().powi(2))
        .sum();
    let want = (2.0 / PI) * (cap / 2.0 - (2.0 * cap * r).sin() / (4.0 * r));
    assert!((sum / want - 1.0).abs() < 0.1, "{sum} {want}");
}

#[test]
fn recessive_inner_condition() {
    // ν = 0.3 has an attractive inverse-square term; the one-sided relation at
    // small r0 keeps the oracle close to the continuum
    let m = RadialModel::new(conispec::cross_section::circle_spectrum(2.0 * PI, 0.09, 10).unwrap(), Perturbation::None, 1e-10).unwrap();
    let p = BoxProblem::new(0.3, Perturbation::None, 1e-3, 200.0, 8000).unwrap();
    let c = compare_with_modes(&m, o(0.3), &p, None, &[0.8, 1.2], 1.0, 1.0).unwrap();
    assert!(c.max_deviation < 0.05, "{c:?}");
}
