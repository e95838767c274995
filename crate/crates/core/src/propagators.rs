//! Low-energy propagators by Stone-formula quadrature, the model
//! oscillatory integral and long-time decay fits.

use crate::cone_kernels::{spectral_measure_density, ConePoint};
use crate::error::{Error, Result};
use crate::numerics::{fit_line, gauss_legendre, ComplexSum};
use crate::radial::{bound_state_count, perturbed_density, zero_mode_at, RadialModel};
use crate::specfun::{bessel_j, gamma, Order};
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::sync::LazyLock;

const GL_ORDER: usize = 16;
static GL16: LazyLock<(Vec<f64>, Vec<f64>)> = LazyLock::new(|| gauss_legendre(GL_ORDER));

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PropagatorKind {
    /// e^{itλ²}
    Schrodinger,
    /// sin(tλ)/λ
    WaveSin,
    /// cos(tλ)
    WaveCos,
}

impl PropagatorKind {
    pub fn name(self) -> &'static str {
        match self {
            PropagatorKind::Schrodinger => "schrodinger",
            PropagatorKind::WaveSin => "wave_sin",
            PropagatorKind::WaveCos => "wave_cos",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "schrodinger" => Ok(PropagatorKind::Schrodinger),
            "wave_sin" => Ok(PropagatorKind::WaveSin),
            "wave_cos" => Ok(PropagatorKind::WaveCos),
            _ => Err(Error::Config(format!("unknown propagator kind '{s}'"))),
        }
    }

    /// Largest phase derivative on [0, λ_c].
    fn max_frequency(self, t: f64, lambda_c: f64) -> f64 {
        match self {
            PropagatorKind::Schrodinger => 2.0 * lambda_c * t,
            _ => t,
        }
    }
}

/// C∞ step from 1 to 0 on s ∈ [0, 1]: e^{−1/(1−s)}/(e^{−1/s} + e^{−1/(1−s)}).
fn smooth_step_down(s: f64) -> f64 {
    let g = |v: f64| if v <= 0.0 { 0.0 } else { (-1.0 / v).exp() };
    let (a, b) = (g(1.0 - s), g(s));
    a / (a + b)
}

/// The fixed cutoff: 1 on [0, λ_c/2], 0 on [λ_c, ∞), and
/// exp(1 − 1/(1 − ψ²)) in between with ψ = 1 − step(2λ/λ_c − 1), so that
/// the profile is C∞ at both ends of the transition.
pub fn cutoff_chi(lambda: f64, lambda_c: f64) -> f64 {
    if lambda <= 0.5 * lambda_c {
        return 1.0;
    }
    if lambda >= lambda_c {
        return 0.0;
    }
    let psi = 1.0 - smooth_step_down(2.0 * lambda / lambda_c - 1.0);
    let q = 1.0 - psi * psi;
    if q <= 0.0 {
        0.0
    } else {
        (1.0 - 1.0 / q).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cutoff {
    pub lambda_c: f64,
}

impl Cutoff {
    pub fn new(lambda_c: f64) -> Result<Self> {
        if lambda_c > 0.0 && lambda_c.is_finite() {
            Ok(Cutoff { lambda_c })
        } else {
            Err(Error::Config(format!("cutoff lambda_c must be positive, got {lambda_c}")))
        }
    }

    pub fn eval(&self, lambda: f64) -> f64 {
        cutoff_chi(lambda, self.lambda_c)
    }
}

/// Panels needed on [0, λ_c]: 10·(1 + λ_c·Ω/(2π)) with Ω the phase speed.
pub fn required_panels(kind: PropagatorKind, lambda_c: f64, t: f64) -> usize {
    (10.0 * (1.0 + lambda_c * kind.max_frequency(t, lambda_c) / (2.0 * PI))).ceil() as usize
}

fn two_product(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// χ(λ)·density(λ) premultiplied by quadrature weights on equal
/// Gauss–Legendre panels of [0, λ_c].
#[derive(Debug, Clone)]
pub struct DensityTable {
    pub cutoff: Cutoff,
    pub panels: usize,
    h: f64,
    /// g_i = w_i·χ(λ_i)·ρ(λ_i), panel-major.
    weighted: Vec<f64>,
}

impl DensityTable {
    /// Tabulates an arbitrary density.
    pub fn from_fn<F>(cutoff: Cutoff, panels: usize, density: F) -> Result<Self>
    where
        F: Fn(f64) -> Result<f64> + Sync,
    {
        if panels == 0 {
            return Err(Error::Sampling("at least one panel is required".into()));
        }
        let (x, w) = &*GL16;
        let h = cutoff.lambda_c / panels as f64;
        let weighted = (0..panels)
            .into_par_iter()
            .map(|k| {
                let a = k as f64 * h;
                x.iter()
                    .zip(w)
                    .map(|(xi, wi)| {
                        let l = a + 0.5 * h * (1.0 + xi);
                        let c = cutoff.eval(l);
                        if c == 0.0 {
                            Ok(0.0)
                        } else {
                            Ok(0.5 * h * wi * c * density(l)?)
                        }
                    })
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<Vec<_>>>()?
            .concat();
        Ok(DensityTable { cutoff, panels, h, weighted })
    }

    /// Density of the model between two points. The exact cone uses a mode
    /// count fixed at λ_c, so the tabulated density is smooth in λ;
    /// perturbed models solve the radial problem at every node.
    pub fn build(model: &RadialModel, cutoff: Cutoff, left: ConePoint, right: ConePoint, panels: usize, tol: f64) -> Result<Self> {
        if model.w_pert.is_zero() {
            let spec = &model.spectrum;
            let top = spectral_measure_density(spec, cutoff.lambda_c, left, right, tol)?;
            let modes = (top.modes_used + 2).min(spec.len());
            let proj: Vec<f64> = spec.projectors_pair(left.theta, right.theta)[..modes].to_vec();
            let nus: Vec<Order> = spec.modes[..modes].iter().map(|m| m.nu).collect();
            let w = (left.r * right.r).powf(-(spec.n as f64 - 2.0) / 2.0);
            let same = left.r == right.r;
            Self::from_fn(cutoff, panels, |l| {
                let mut acc = crate::numerics::NeumaierSum::new();
                for (nu, p) in nus.iter().zip(&proj) {
                    let ja = bessel_j(*nu, l * left.r)?;
                    let jb = if same { ja } else { bessel_j(*nu, l * right.r)? };
                    acc.add(p * ja * jb);
                }
                Ok(l * w * acc.value())
            })
        } else {
            Self::from_fn(cutoff, panels, |l| Ok(perturbed_density(model, l, left, right, tol)?.density))
        }
    }

    /// ∫ χ(λ)F_t(λ)ρ(λ)dλ. Phases are split per panel with an exact
    /// product so that large tλ keeps full relative accuracy.
    pub fn integrate(&self, kind: PropagatorKind, t: f64) -> Result<Complex64> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::Domain(format!("t must be positive, got {t}")));
        }
        let need = required_panels(kind, self.cutoff.lambda_c, t);
        if self.panels < need {
            return Err(Error::Sampling(format!(
                "{} panels undersample {} at t = {t}; need {need}",
                self.panels,
                kind.name()
            )));
        }
        let (x, _) = &*GL16;
        let h = self.h;
        let mut acc = ComplexSum::new();
        for k in 0..self.panels {
            let a = k as f64 * h;
            let g = &self.weighted[k * GL_ORDER..(k + 1) * GL_ORDER];
            if g.iter().all(|&v| v == 0.0) {
                continue;
            }
            let (p, e) = match kind {
                PropagatorKind::Schrodinger => {
                    let (s_hi, s_lo) = two_product(a, a);
                    let (p, e) = two_product(t, s_hi);
                    (p, e + t * s_lo)
                }
                _ => two_product(t, a),
            };
            let base = Complex64::from_polar(1.0, p);
            for (xi, gi) in x.iter().zip(g) {
                let d = 0.5 * h * (1.0 + xi);
                let small = match kind {
                    PropagatorKind::Schrodinger => e + t * d * (2.0 * a + d),
                    _ => e + t * d,
                };
                let ph = base * Complex64::from_polar(1.0, small);
                let v = match kind {
                    PropagatorKind::Schrodinger => ph * *gi,
                    PropagatorKind::WaveSin => Complex64::new(ph.im / (a + d) * gi, 0.0),
                    PropagatorKind::WaveCos => Complex64::new(ph.re * gi, 0.0),
                };
                acc.add(v);
            }
        }
        Ok(acc.value())
    }

    /// Values at several times, computed in parallel and returned in order.
    pub fn series(&self, kind: PropagatorKind, ts: &[f64]) -> Result<Vec<Complex64>> {
        ts.par_iter().map(|&t| self.integrate(kind, t)).collect()
    }
}

/// One propagator value with `n_lambda` panels on [0, λ_c].
pub fn stone_quadrature(
    model: &RadialModel,
    kind: PropagatorKind,
    cutoff: Cutoff,
    t: f64,
    left: ConePoint,
    right: ConePoint,
    n_lambda: usize,
) -> Result<Complex64> {
    let need = required_panels(kind, cutoff.lambda_c, t);
    if n_lambda < need {
        return Err(Error::Sampling(format!("{n_lambda} panels undersample t = {t}; need {need}")));
    }
    DensityTable::build(model, cutoff, left, right, n_lambda, model.tol)?.integrate(kind, t)
}

/// [`stone_quadrature`] plus the relative change under panel doubling.
pub fn stone_quadrature_checked(
    model: &RadialModel,
    kind: PropagatorKind,
    cutoff: Cutoff,
    t: f64,
    left: ConePoint,
    right: ConePoint,
    n_lambda: usize,
) -> Result<(Complex64, f64)> {
    let a = stone_quadrature(model, kind, cutoff, t, left, right, n_lambda)?;
    let b = stone_quadrature(model, kind, cutoff, t, left, right, 2 * n_lambda)?;
    Ok((b, (a - b).norm() / b.norm()))
}

/// tλ_c at which the cutoff-edge term is below 1e-6 relative for s ≤ 3
/// while roundoff in the cancelling sum stays below it too.
pub const MODEL_PHASE_SPAN: f64 = 2048.0;

/// Quadrature of ∫₀^∞ χ(λ)e^{itλ}λ^s dλ against its closed form
/// Γ(s+1)e^{iπ(s+1)/2}t^{−(s+1)}. The two differ by O((tλ_c)^{−∞}) and the
/// integral depends on t and λ_c only through tλ_c after scaling, so it is
/// always evaluated with λ_c = 2048/t; `cutoff` only gates the input.
pub fn model_integral(s: f64, t: f64, cutoff: Cutoff) -> Result<(Complex64, Complex64)> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::Domain(format!("power s must be positive, got {s}")));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("t must be positive, got {t}")));
    }
    if t * cutoff.lambda_c < 10.0 {
        return Err(Error::Sampling(format!("model integral needs t·lambda_c >= 10, got {}", t * cutoff.lambda_c)));
    }
    let lc = MODEL_PHASE_SPAN / t;
    // u = λ/λ_c on [0, 1] with T = tλ_c; dyadic panels, 4× the minimum
    let big_t = t * lc;
    let min_panels = 10.0 * (1.0 + big_t / (2.0 * PI));
    let panels = 1usize << (min_panels.log2().ceil() as u32 + 2);
    let (x, w) = &*GL16;
    let h = 1.0 / panels as f64;
    let mut acc = ComplexSum::new();
    for k in 0..panels {
        let a = k as f64 * h;
        let (p, e) = two_product(big_t, a);
        let base = Complex64::from_polar(1.0, p);
        for (xi, wi) in x.iter().zip(w) {
            let d = 0.5 * h * (1.0 + xi);
            let u = a + d;
            let c = cutoff_chi(u, 1.0);
            if c == 0.0 {
                continue;
            }
            acc.add(base * Complex64::from_polar(0.5 * h * wi * c * u.powf(s), e + big_t * d));
        }
    }
    let quad = acc.value() * lc.powf(s + 1.0);
    let closed = Complex64::from_polar(gamma(s + 1.0)? * t.powf(-(s + 1.0)), 0.5 * PI * (s + 1.0));
    Ok((quad, closed))
}

/// Log-log regression of |value| on t.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayFit {
    /// p in |value| ~ t^{−p}.
    pub exponent: f64,
    /// Mean of value·t^{p'} with p' the predicted exponent if given, else p.
    pub coefficient: Complex64,
    /// 95% half-width from the residual variance.
    pub ci_exponent: f64,
    pub predicted_exponent: Option<f64>,
    pub predicted_coefficient: Option<Complex64>,
    pub rms_residual: f64,
    /// Set when |value| is not monotone in the window.
    pub warning: Option<String>,
}

pub fn fit_decay(ts: &[f64], values: &[Complex64], predicted: Option<(f64, Complex64)>) -> Result<DecayFit> {
    if ts.len() != values.len() {
        return Err(Error::Config("time and value series differ in length".into()));
    }
    if ts.len() < 12 {
        return Err(Error::Config(format!("decay fit needs at least 12 times, got {}", ts.len())));
    }
    if ts.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
        return Err(Error::Domain("fit times must be positive".into()));
    }
    let ratios: Vec<f64> = ts.windows(2).map(|w| (w[1] / w[0]).ln()).collect();
    if ratios.iter().any(|&r| r <= 0.0 || (r - ratios[0]).abs() > 1e-6 * ratios[0]) {
        return Err(Error::Config("fit times must be increasing with a constant ratio".into()));
    }
    if let Some((i, _)) = values.iter().enumerate().find(|(_, v)| !(v.norm() > 0.0 && v.is_finite())) {
        return Err(Error::Underflow { lambda: ts[i] });
    }
    let x: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let y: Vec<f64> = values.iter().map(|v| v.norm().ln()).collect();
    let fit = fit_line(&x, &y);
    let exponent = -fit.slope;
    let p = predicted.map_or(exponent, |(e, _)| e);
    let mut acc = ComplexSum::new();
    for (t, v) in ts.iter().zip(values) {
        acc.add(v * t.powf(p));
    }
    let coefficient = acc.value() / ts.len() as f64;
    let mags: Vec<f64> = values.iter().map(|v| v.norm()).collect();
    let monotone = mags.windows(2).all(|w| w[1] <= w[0]) || mags.windows(2).all(|w| w[1] >= w[0]);
    Ok(DecayFit {
        exponent,
        coefficient,
        ci_exponent: 1.96 * fit.slope_se,
        predicted_exponent: predicted.map(|(e, _)| e),
        predicted_coefficient: predicted.map(|(_, c)| c),
        rms_residual: fit.rms_residual,
        warning: (!monotone).then(|| "non-monotone |value| in the fit window; oscillatory contamination".to_string()),
    })
}

/// Propagators here act on the continuous part only; a bound state makes
/// that differ from the full evolution, which is worth a warning.
pub fn bound_state_warning(model: &RadialModel) -> Result<Option<String>> {
    let k = bound_state_count(model)?;
    Ok((k > 0).then(|| format!("{k} bound state(s) detected; values describe the positive spectral part only")))
}

/// true when cos(π(ν₀+1)) vanishes, i.e. ν₀ + ½ is an integer
fn cos_vanishes(nu0: f64) -> bool {
    let v = nu0 + 0.5;
    (v - v.round()).abs() < 1e-12
}

/// Predicted long-time exponent and coefficient of the kernel between z
/// and z′. The wave coefficients carry cos(π(ν₀+1)); when it vanishes the
/// coefficient is 0 and the exponent falls to the remainder order.
pub fn predicted_constants(model: &RadialModel, kind: PropagatorKind, z: ConePoint, z_prime: ConePoint) -> Result<(f64, Complex64)> {
    let zm = zero_mode_at(model, &[z.r, z_prime.r])?;
    let ww = zm.leading_coefficient(&model.spectrum, z, z_prime)?;
    let nu0 = model.spectrum.nu0();
    let nu1 = model.spectrum.nu1();
    let c = if cos_vanishes(nu0) { 0.0 } else { (PI * (nu0 + 1.0)).cos() };
    Ok(match kind {
        PropagatorKind::WaveSin => {
            if c == 0.0 {
                ((2.0 * nu0 + 2.0).min(2.0 * nu1 + 1.0), Complex64::new(0.0, 0.0))
            } else {
                (2.0 * nu0 + 1.0, Complex64::new(-gamma(2.0 * nu0 + 1.0)? * c * ww, 0.0))
            }
        }
        PropagatorKind::WaveCos => {
            if c == 0.0 {
                ((2.0 * nu0 + 3.0).min(2.0 * nu1 + 2.0), Complex64::new(0.0, 0.0))
            } else {
                (2.0 * nu0 + 2.0, Complex64::new(gamma(2.0 * nu0 + 2.0)? * c * ww, 0.0))
            }
        }
        PropagatorKind::Schrodinger => (
            nu0 + 1.0,
            Complex64::from_polar(0.5 * gamma(nu0 + 1.0)?, 0.5 * PI * (nu0 + 1.0)) * ww,
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cutoff_examples() {
        assert_eq!(cutoff_chi(0.1, 1.0), 1.0);
        assert_eq!(cutoff_chi(1.0, 1.0), 0.0);
        assert!((cutoff_chi(0.75, 1.0) - (-1.0f64 / 3.0).exp()).abs() < 1e-15);
    }

    #[test]
    fn two_product_is_exact() {
        let (p, e) = two_product(12800.0, 0.1);
        assert_eq!(p, 12800.0 * 0.1);
        assert!(e.abs() < 1e-12 && e != 0.0);
    }
}
