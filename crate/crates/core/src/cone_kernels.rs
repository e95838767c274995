//! Exact-cone kernels: per-mode Green functions, mode-summed resolvent and
//! spectral-measure densities, the zero-energy inverse and the Euclidean
//! free resolvent.
//!
//! Per-mode Green functions are in one-dimensional (Liouville) form,
//! solving −u″ + (ν²−¼)r⁻²u − λ²u = δ. Assembled kernels are scalars
//! against r^{n−1} dr dh:
//!   R(λ±i0) = Σ_j Π_j (rr′)^{−(n−2)/2} (±iπ/2) J_ν(λr_<) H^{(1|2)}_ν(λr_>),
//!   dE/dλ   = λ (rr′)^{−(n−2)/2} Σ_j Π_j J_ν(λr) J_ν(λr′).

use crate::cross_section::ModeSpectrum;
use crate::error::{Error, Result};
use crate::numerics::{ComplexSum, NeumaierSum};
use crate::specfun::{
    bessel_ik_product, bessel_j, bessel_j_hankel1_product, hankel1, ln_gamma, ln_j_leading, Order,
};
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Hard cap on the number of modes in one sum.
pub const MODE_CAP: usize = 5000;

/// Point of the cone: radius and angle along a fixed geodesic of Y.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConePoint {
    pub r: f64,
    pub theta: f64,
}

impl ConePoint {
    pub fn new(r: f64, theta: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite() && theta.is_finite()) {
            return Err(Error::Domain(format!("cone point needs r > 0, got r = {r}")));
        }
        Ok(ConePoint { r, theta })
    }
}

/// Outgoing (+, H⁽¹⁾) or incoming (−, H⁽²⁾) boundary value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Outgoing,
    Incoming,
}

/// Resolvent value with truncation data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSample {
    pub lambda: f64,
    pub left: ConePoint,
    pub right: ConePoint,
    pub value: Complex64,
    pub modes_used: usize,
    /// Absolute bound on the omitted modes; at most tol·Σ|terms|.
    pub tail_bound: f64,
}

/// Spectral-measure density with truncation data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensitySample {
    pub lambda: f64,
    pub left: ConePoint,
    pub right: ConePoint,
    pub density: f64,
    pub modes_used: usize,
    pub tail_bound: f64,
}

fn positive(x: f64, what: &str) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what} must be finite and positive, got {x}")))
    }
}

/// (±iπ/2)√(rr′) J_ν(λr_<) H_ν(λr_>); the incoming value is the exact
/// conjugate of the outgoing one.
pub fn mode_green_exact(nu: Order, lambda: f64, r: f64, r_prime: f64, sign: Sign) -> Result<Complex64> {
    positive(lambda, "lambda")?;
    positive(r, "r")?;
    positive(r_prime, "r'")?;
    let (a, b) = (r.min(r_prime), r.max(r_prime));
    let jh = bessel_j_hankel1_product(nu, lambda * a, lambda * b)?;
    let v = Complex64::new(0.0, 0.5 * PI) * (r * r_prime).sqrt() * jh;
    Ok(match sign {
        Sign::Outgoing => v,
        Sign::Incoming => v.conj(),
    })
}

/// √(rr′) I_ν(kr_<) K_ν(kr_>), the Green function at imaginary energy −k².
pub fn mode_green_imag(nu: Order, k: f64, r: f64, r_prime: f64) -> Result<f64> {
    positive(k, "k")?;
    positive(r, "r")?;
    positive(r_prime, "r'")?;
    let (a, b) = (r.min(r_prime), r.max(r_prime));
    Ok((r * r_prime).sqrt() * bessel_ik_product(nu, k * a, k * b)?)
}

/// √(rr′)(r_</r_>)^ν/(2ν), the k → 0 limit of [`mode_green_imag`].
pub fn zero_energy_inverse(nu: Order, r: f64, r_prime: f64) -> Result<f64> {
    positive(r, "r")?;
    positive(r_prime, "r'")?;
    let n = nu.get();
    if n == 0.0 {
        return Err(Error::Domain("zero-energy inverse needs nu > 0".into()));
    }
    let (a, b) = (r.min(r_prime), r.max(r_prime));
    Ok((r * r_prime).sqrt() * (a / b).powf(n) / (2.0 * n))
}

/// (i/4)(λ/(2πd))^{(n−2)/2} H⁽¹⁾_{(n−2)/2}(λd), the outgoing resolvent of
/// the flat Laplacian on ℝⁿ.
pub fn euclid_free_resolvent(n: usize, lambda: f64, d: f64) -> Result<Complex64> {
    if n < 2 {
        return Err(Error::Domain(format!("dimension must be >= 2, got {n}")));
    }
    positive(lambda, "lambda")?;
    positive(d, "d")?;
    let a = (n as f64 - 2.0) / 2.0;
    let h = hankel1(Order::new(a)?, lambda * d)?;
    Ok(Complex64::new(0.0, 0.25) * (lambda / (2.0 * PI * d)).powf(a) * h)
}

/// Compensated mode sum in ascending j. `bounds[j]` bounds |term j|; the
/// sum stops at the first J whose listed remainder Σ_{j>J} bounds[j] is
/// at most tol·Σ_{j≤J}|term j|, with at least one listed mode left over.
/// Returns (sum, modes used, absolute tail bound).
pub(crate) fn truncated_mode_sum<F>(bounds: &[f64], tol: f64, mut term: F) -> Result<(Complex64, usize, f64)>
where
    F: FnMut(usize) -> Result<Complex64>,
{
    let len = bounds.len().min(MODE_CAP);
    let mut suffix = vec![0.0; len + 1];
    for j in (0..len).rev() {
        suffix[j] = suffix[j + 1] + bounds[j];
    }
    let mut acc = ComplexSum::new();
    let mut mag = NeumaierSum::new();
    for j in 0..len.saturating_sub(1) {
        let t = term(j)?;
        acc.add(t);
        mag.add(t.norm());
        if suffix[j + 1] <= tol * mag.value() {
            return Ok((acc.value(), j + 1, suffix[j + 1]));
        }
    }
    // the last listed bound stands in for the unlisted remainder
    let achieved = match len {
        0 => f64::INFINITY,
        _ => bounds[len - 1] / mag.value(),
    };
    Err(Error::Convergence { modes: len, achieved })
}

pub(crate) fn radial_weight(n: usize, r: f64, r_prime: f64) -> f64 {
    (r * r_prime).powf(-(n as f64 - 2.0) / 2.0)
}

pub(crate) fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol < 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("tolerance must lie in (0, 1), got {tol}")))
    }
}

/// Bound on |J_ν(a)Y_ν(b)| + |J_ν(a)J_ν(b)| for a ≤ b, valid when ν > 1 + b;
/// +∞ otherwise. Uses |J_ν(x)| ≤ (x/2)^ν/Γ(ν+1) and
/// |Y_ν(b)| ≤ Γ(ν)(b/2)^{−ν}e^{b²/(4(ν−1))}/π.
pub(crate) fn jh_bound(nu: Order, a: f64, b: f64) -> f64 {
    let n = nu.get();
    if n <= 1.0 + b {
        return f64::INFINITY;
    }
    let lj_a = ln_j_leading(nu, a);
    let lj_b = ln_j_leading(nu, b);
    let ly_b = ln_gamma(n).unwrap_or(f64::INFINITY) - n * (0.5 * b).ln() + b * b / (4.0 * (n - 1.0)) - PI.ln();
    (lj_a + ly_b).exp() + (lj_a + lj_b).exp()
}

/// Mode-summed outgoing/incoming resolvent kernel.
pub fn resolvent_kernel(
    spectrum: &ModeSpectrum,
    lambda: f64,
    left: ConePoint,
    right: ConePoint,
    sign: Sign,
    tol: f64,
) -> Result<KernelSample> {
    positive(lambda, "lambda")?;
    check_tol(tol)?;
    if left.r == right.r && spectrum_separation(left, right) == 0.0 {
        return Err(Error::Diagonal);
    }
    let (a, b) = (lambda * left.r.min(right.r), lambda * left.r.max(right.r));
    let w = radial_weight(spectrum.n, left.r, right.r);
    let pb = spectrum.projector_bounds();
    let bounds: Vec<f64> = spectrum
        .modes
        .iter()
        .zip(&pb)
        .map(|(m, p)| p * w * 0.5 * PI * jh_bound(m.nu, a, b))
        .collect();
    let proj = spectrum.projectors_pair(left.theta, right.theta);
    let (sum, used, tail) = truncated_mode_sum(&bounds, tol, |j| {
        let nu = spectrum.modes[j].nu;
        let jh = bessel_j_hankel1_product(nu, a, b)?;
        Ok(Complex64::new(0.0, 0.5 * PI) * (proj[j] * w) * jh)
    })?;
    let value = match sign {
        Sign::Outgoing => sum,
        Sign::Incoming => sum.conj(),
    };
    Ok(KernelSample { lambda, left, right, value, modes_used: used, tail_bound: tail })
}

pub(crate) fn spectrum_separation(left: ConePoint, right: ConePoint) -> f64 {
    let d = (left.theta - right.theta).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

/// Bounds Π_j-weighted terms of the density: sup|Π_j| λ w (λ²rr′/4)^ν/Γ(ν+1)².
pub(crate) fn density_bounds(spectrum: &ModeSpectrum, lambda: f64, r: f64, r_prime: f64) -> Vec<f64> {
    let w = radial_weight(spectrum.n, r, r_prime);
    spectrum
        .modes
        .iter()
        .zip(spectrum.projector_bounds())
        .map(|(m, p)| p * lambda * w * (ln_j_leading(m.nu, lambda * r) + ln_j_leading(m.nu, lambda * r_prime)).exp())
        .collect()
}

/// Density of dE(λ)/dλ for P₊^{1/2}; smooth across the diagonal.
pub fn spectral_measure_density(
    spectrum: &ModeSpectrum,
    lambda: f64,
    left: ConePoint,
    right: ConePoint,
    tol: f64,
) -> Result<DensitySample> {
    positive(lambda, "lambda")?;
    check_tol(tol)?;
    let w = radial_weight(spectrum.n, left.r, right.r);
    let bounds = density_bounds(spectrum, lambda, left.r, right.r);
    let proj = spectrum.projectors_pair(left.theta, right.theta);
    let same_r = left.r == right.r;
    let (sum, used, tail) = truncated_mode_sum(&bounds, tol, |j| {
        let nu = spectrum.modes[j].nu;
        let ja = bessel_j(nu, lambda * left.r)?;
        // identical factors on the diagonal keep each term a square
        let jb = if same_r { ja } else { bessel_j(nu, lambda * right.r)? };
        Ok(Complex64::new(lambda * w * proj[j] * ja * jb, 0.0))
    })?;
    Ok(DensitySample { lambda, left, right, density: sum.re, modes_used: used, tail_bound: tail })
}

/// Leading low-energy coefficient of the exact-cone density:
/// Σ_{ν_j = ν₀} Π_j (rr′)^{ν₀−(n−2)/2}/(4^{ν₀}Γ(ν₀+1)²).
pub fn exact_leading_coefficient(spectrum: &ModeSpectrum, left: ConePoint, right: ConePoint) -> f64 {
    let nu0 = spectrum.modes[0].nu;
    let p = spectrum.modes[0].projector.eval_pair(left.theta, right.theta);
    let rr = left.r * right.r;
    let n = spectrum.n as f64;
    p * rr.powf(nu0.get() - (n - 2.0) / 2.0) * (2.0 * ln_j_leading(nu0, 1.0)).exp()
}

/// Batch resolvent over (λ, left, right) triples; results in input order.
pub fn resolvent_batch(
    spectrum: &ModeSpectrum,
    samples: &[(f64, ConePoint, ConePoint)],
    sign: Sign,
    tol: f64,
) -> Vec<Result<KernelSample>> {
    samples
        .par_iter()
        .map(|&(l, a, b)| resolvent_kernel(spectrum, l, a, b, sign, tol))
        .collect()
}

/// Batch density over (λ, left, right) triples; results in input order.
pub fn density_batch(
    spectrum: &ModeSpectrum,
    samples: &[(f64, ConePoint, ConePoint)],
    tol: f64,
) -> Vec<Result<DensitySample>> {
    samples
        .par_iter()
        .map(|&(l, a, b)| spectral_measure_density(spectrum, l, a, b, tol))
        .collect()
}
