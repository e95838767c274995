//! Radially perturbed cones. Each mode reduces to −u″ + Q u = λ²u on the
//! half-line with Q(r) = (ν² − ¼)/r² + W(r); solutions regular at the tip
//! and outgoing at infinity give the Green function by the Wronskian
//! construction. Sampled solutions carry a per-sample log scale so high
//! orders neither underflow near the tip nor overflow further out.

use crate::cone_kernels::{
    check_tol, density_bounds, jh_bound, radial_weight, spectrum_separation, truncated_mode_sum, ConePoint,
    DensitySample, KernelSample, Sign,
};
use crate::cross_section::ModeSpectrum;
use crate::error::{Error, Result};
use crate::numerics::{fit_line, LineFit};
use crate::ode::{integrate, OdeOptions};
use crate::specfun::{bessel_jy_log_scaled, ln_gamma, Order};
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::path::Path;

const RESCALE: f64 = 1e100;

/// Natural cubic spline through strictly increasing abscissae.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn natural(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n < 2 || y.len() != n {
            return Err(Error::Config("spline needs at least two (r, W) pairs".into()));
        }
        if x.windows(2).any(|w| w[1] <= w[0]) || x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::Config("spline abscissae must be finite and strictly increasing".into()));
        }
        let mut m = vec![0.0; n];
        if n > 2 {
            // Thomas algorithm on the interior second derivatives
            let k = n - 2;
            let mut c = vec![0.0; k];
            let mut d = vec![0.0; k];
            for i in 0..k {
                let (h0, h1) = (x[i + 1] - x[i], x[i + 2] - x[i + 1]);
                let a = h0;
                let b = 2.0 * (h0 + h1);
                let rhs = 6.0 * ((y[i + 2] - y[i + 1]) / h1 - (y[i + 1] - y[i]) / h0);
                let (cp, dp) = if i == 0 { (0.0, 0.0) } else { (c[i - 1], d[i - 1]) };
                let den = b - a * cp;
                c[i] = h1 / den;
                d[i] = (rhs - a * dp) / den;
            }
            for i in (0..k).rev() {
                m[i + 1] = d[i] - if i + 1 < k { c[i] * m[i + 2] } else { 0.0 };
            }
        }
        Ok(CubicSpline { x, y, m })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.x[0], self.x[self.x.len() - 1])
    }

    /// Value and slope; clamps t into the domain.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        let (lo, hi) = self.domain();
        let t = t.clamp(lo, hi);
        let i = match self.x.partition_point(|&v| v <= t) {
            0 => 0,
            p => (p - 1).min(self.x.len() - 2),
        };
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = (t - self.x[i]) / h;
        let (m0, m1) = (self.m[i], self.m[i + 1]);
        let v = a * self.y[i] + b * self.y[i + 1] + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
        let d = (self.y[i + 1] - self.y[i]) / h + ((1.0 - 3.0 * a * a) * m0 + (3.0 * b * b - 1.0) * m1) * h / 6.0;
        (v, d)
    }
}

/// Radial perturbation W(r), added to the centrifugal term in every mode.
#[derive(Debug, Clone, PartialEq)]
pub enum Perturbation {
    None,
    /// amplitude·exp(1 − 1/(1 − s²)), s = (r − center)/width, zero for |s| ≥ 1.
    Bump { center: f64, width: f64, amplitude: f64 },
    /// Spline through samples; W(r₀) below the first sample, 0 past the last.
    Tabulated(CubicSpline),
}

impl Perturbation {
    pub fn bump(center: f64, width: f64, amplitude: f64) -> Result<Self> {
        if !(center.is_finite() && width > 0.0 && width.is_finite() && amplitude.is_finite()) {
            return Err(Error::Config("bump needs finite center, width > 0 and finite amplitude".into()));
        }
        if center + width <= 0.0 {
            return Err(Error::Config("bump support must reach r > 0".into()));
        }
        Ok(Perturbation::Bump { center, width, amplitude })
    }

    pub fn tabulated(r: Vec<f64>, w: Vec<f64>) -> Result<Self> {
        if r.first().is_some_and(|&r0| r0 < 0.0) {
            return Err(Error::Config("tabulated radii must be nonnegative".into()));
        }
        Ok(Perturbation::Tabulated(CubicSpline::natural(r, w)?))
    }

    /// Two-column (r, W) CSV; a non-numeric first row is taken as a header.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_path(path)?;
        let (mut r, mut w) = (Vec::new(), Vec::new());
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() < 2 {
                return Err(Error::Parse(format!("{}: row {} needs two columns", path.display(), i + 1)));
            }
            match (rec[0].parse::<f64>(), rec[1].parse::<f64>()) {
                (Ok(a), Ok(b)) => {
                    r.push(a);
                    w.push(b);
                }
                _ if i == 0 => continue,
                _ => return Err(Error::Parse(format!("{}: row {} is not numeric", path.display(), i + 1))),
            }
        }
        Perturbation::tabulated(r, w)
    }

    /// (W(r), W′(r)).
    pub fn eval(&self, r: f64) -> (f64, f64) {
        match self {
            Perturbation::None => (0.0, 0.0),
            Perturbation::Bump { center, width, amplitude } => {
                let s = (r - center) / width;
                if s.abs() >= 1.0 {
                    return (0.0, 0.0);
                }
                let q = 1.0 - s * s;
                let v = amplitude * (1.0 - 1.0 / q).exp();
                (v, v * (-2.0 * s / (q * q)) / width)
            }
            Perturbation::Tabulated(sp) => {
                let (lo, hi) = sp.domain();
                if r > hi {
                    (0.0, 0.0)
                } else if r < lo {
                    (sp.eval(lo).0, 0.0)
                } else {
                    sp.eval(r)
                }
            }
        }
    }

    pub fn value(&self, r: f64) -> f64 {
        self.eval(r).0
    }

    /// W vanishes identically beyond this radius.
    pub fn support_end(&self) -> f64 {
        match self {
            Perturbation::None => 0.0,
            Perturbation::Bump { center, width, .. } => center + width,
            Perturbation::Tabulated(sp) => sp.domain().1,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Perturbation::None => true,
            Perturbation::Bump { amplitude, .. } => *amplitude == 0.0,
            Perturbation::Tabulated(sp) => sp.y.iter().all(|&v| v == 0.0),
        }
    }
}

/// Smallest power of two R ≥ 1 such that sup_{r ≥ R}|W(r)|r² < tol. All
/// supported perturbations have compact support, so this always exists.
pub fn default_r_match(w: &Perturbation, tol: f64) -> f64 {
    let mut r = 1.0;
    while tail_size(w, r) >= tol {
        r *= 2.0;
    }
    r
}

// sup_{r ≥ R}|W(r)|r², sampled
fn tail_size(w: &Perturbation, r_match: f64) -> f64 {
    let end = w.support_end();
    if end <= r_match {
        return 0.0;
    }
    let k = 4096;
    (0..=k)
        .map(|i| {
            let r = r_match + (end - r_match) * i as f64 / k as f64;
            w.value(r).abs() * r * r
        })
        .fold(0.0, f64::max)
}

/// Dimension, cross-section, perturbation and numerical controls.
#[derive(Debug, Clone)]
pub struct RadialModel {
    pub n: usize,
    pub spectrum: ModeSpectrum,
    pub w_pert: Perturbation,
    pub tol: f64,
    pub r_match: f64,
    /// Frobenius launch radius; `None` means 1e−3·min(1, 1/λ).
    pub r_min: Option<f64>,
}

impl RadialModel {
    pub fn new(spectrum: ModeSpectrum, w_pert: Perturbation, tol: f64) -> Result<Self> {
        check_tol(tol)?;
        let r_match = default_r_match(&w_pert, tol);
        let m = RadialModel { n: spectrum.n, spectrum, w_pert, tol, r_match, r_min: None };
        m.validate()?;
        Ok(m)
    }

    pub fn with_r_match(mut self, r_match: f64) -> Result<Self> {
        self.r_match = r_match;
        self.validate()?;
        Ok(self)
    }

    pub fn with_r_min(mut self, r_min: f64) -> Result<Self> {
        self.r_min = Some(r_min);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        check_tol(self.tol)?;
        if !(self.r_match > 0.0 && self.r_match.is_finite()) {
            return Err(Error::Config(format!("r_match must be positive, got {}", self.r_match)));
        }
        if let Some(r) = self.r_min {
            if !(r > 0.0 && r < self.r_match) {
                return Err(Error::Config(format!("r_min must lie in (0, r_match), got {r}")));
            }
        }
        let t = tail_size(&self.w_pert, self.r_match);
        if t >= self.tol {
            return Err(Error::Config(format!(
                "perturbation not negligible beyond r_match = {} (sup |W|r² = {t:.3e}); increase r_match",
                self.r_match
            )));
        }
        Ok(())
    }

    fn launch_radius(&self, lambda: f64) -> f64 {
        self.r_min.unwrap_or(1e-3 * (1.0f64).min(1.0 / lambda))
    }

    fn ode_options(&self) -> OdeOptions {
        OdeOptions { rtol: self.tol.min(1e-10), rescale_above: Some(RESCALE), ..OdeOptions::default() }
    }
}

/// Q(r) = (ν² − ¼)/r² + W(r) for one mode.
#[derive(Debug, Clone, Copy)]
pub struct EffectivePotential<'a> {
    pub nu: Order,
    w: &'a Perturbation,
}

impl EffectivePotential<'_> {
    pub fn eval(&self, r: f64) -> f64 {
        let nu = self.nu.get();
        (nu * nu - 0.25) / (r * r) + self.w.value(r)
    }
}

pub fn liouville_reduce(model: &RadialModel, nu: Order) -> Result<EffectivePotential<'_>> {
    model.validate()?;
    Ok(EffectivePotential { nu, w: &model.w_pert })
}

/// Behavior beyond r_match, where W is negligible.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tail {
    /// u = α√r J_ν(λr) + β√r Y_ν(λr), α = alpha·e^{ln_alpha}, β = beta·e^{ln_beta}.
    Bessel { alpha: f64, ln_alpha: f64, beta: f64, ln_beta: f64 },
    /// λ = 0: u = a r^{ν+½} + b r^{½−ν}, a = a·e^{ln_a}, b = b·e^{ln_b}.
    Power { a: f64, ln_a: f64, b: f64, ln_b: f64 },
}

/// √r J_ν(λr), √r Y_ν(λr) and r-derivatives, log-scaled.
struct BesselBasis {
    f1: f64,
    d1: f64,
    ln1: f64,
    f2: f64,
    d2: f64,
    ln2: f64,
}

fn bessel_basis(nu: Order, lambda: f64, r: f64) -> Result<BesselBasis> {
    let b = bessel_jy_log_scaled(nu, lambda * r)?;
    let s = r.sqrt();
    Ok(BesselBasis {
        f1: s * b.j,
        d1: b.j / (2.0 * s) + s * lambda * b.jp,
        ln1: b.ln_j,
        f2: s * b.y,
        d2: b.y / (2.0 * s) + s * lambda * b.yp,
        ln2: b.ln_y,
    })
}

/// a·e^{la} + b·e^{lb} as (mantissa, log scale).
fn add_scaled(a: f64, la: f64, b: f64, lb: f64) -> (f64, f64) {
    let l = if a == 0.0 {
        lb
    } else if b == 0.0 {
        la
    } else {
        la.max(lb)
    };
    (a * (la - l).exp() + b * (lb - l).exp(), l)
}

fn hermite5(x0: f64, x1: f64, f0: [f64; 3], f1: [f64; 3], x: f64) -> (f64, f64) {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let (t2, t3, t4, t5) = (t * t, t * t * t, t.powi(4), t.powi(5));
    let b = [
        1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5,
        t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5,
        0.5 * t2 - 1.5 * t3 + 1.5 * t4 - 0.5 * t5,
        0.5 * t3 - t4 + 0.5 * t5,
        -4.0 * t3 + 7.0 * t4 - 3.0 * t5,
        10.0 * t3 - 15.0 * t4 + 6.0 * t5,
    ];
    let db = [
        -30.0 * t2 + 60.0 * t3 - 30.0 * t4,
        1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4,
        t - 4.5 * t2 + 6.0 * t3 - 2.5 * t4,
        1.5 * t2 - 4.0 * t3 + 2.5 * t4,
        -12.0 * t2 + 28.0 * t3 - 15.0 * t4,
        30.0 * t2 - 60.0 * t3 + 30.0 * t4,
    ];
    let c = [f0[0], h * f0[1], h * h * f0[2], h * h * f1[2], h * f1[1], f1[0]];
    let v: f64 = b.iter().zip(&c).map(|(p, q)| p * q).sum();
    let d: f64 = db.iter().zip(&c).map(|(p, q)| p * q).sum::<f64>() / h;
    (v, d)
}

/// Sampled real solution on an ascending grid: true value = u·e^{ln_scale}.
#[derive(Debug, Clone)]
pub struct Sampled<T> {
    pub r: Vec<f64>,
    pub u: Vec<T>,
    pub du: Vec<T>,
    pub ln_scale: Vec<f64>,
    /// Q(r) − λ² at the samples, for interpolation.
    q: Vec<f64>,
}

impl<T> Sampled<T>
where
    T: Copy + std::ops::Mul<f64, Output = T>,
{
    fn locate(&self, r: f64) -> Option<usize> {
        let i = self.r.partition_point(|&v| v < r);
        (i < self.r.len() && self.r[i] == r).then_some(i)
    }

    /// (u, u′, ln scale) at r inside the grid; exact on grid points,
    /// quintic Hermite (from u, u′, u″ = (Q − λ²)u) between them.
    fn eval_with(&self, r: f64, interp: impl Fn(f64, f64, [T; 3], [T; 3], f64) -> (T, T)) -> Option<(T, T, f64)> {
        if let Some(i) = self.locate(r) {
            return Some((self.u[i], self.du[i], self.ln_scale[i]));
        }
        let n = self.r.len();
        if n < 2 || r < self.r[0] || r > self.r[n - 1] {
            return None;
        }
        let i = self.r.partition_point(|&v| v < r) - 1;
        let l = self.ln_scale[i];
        let k = (self.ln_scale[i + 1] - l).exp();
        let f0 = [self.u[i], self.du[i], self.u[i] * self.q[i]];
        let f1 = [self.u[i + 1] * k, self.du[i + 1] * k, self.u[i + 1] * (self.q[i + 1] * k)];
        let (v, d) = interp(self.r[i], self.r[i + 1], f0, f1, r);
        Some((v, d, l))
    }
}

fn hermite5_complex(x0: f64, x1: f64, f0: [Complex64; 3], f1: [Complex64; 3], x: f64) -> (Complex64, Complex64) {
    let (vr, dr) = hermite5(x0, x1, f0.map(|z| z.re), f1.map(|z| z.re), x);
    let (vi, di) = hermite5(x0, x1, f0.map(|z| z.im), f1.map(|z| z.im), x);
    (Complex64::new(vr, vi), Complex64::new(dr, di))
}

/// Solution regular at the tip, u ~ r^{ν+½}(1 + O(r²)), on [r_min, r_match]
/// with an analytic tail beyond.
#[derive(Debug, Clone)]
pub struct RegularSolution {
    pub nu: Order,
    pub lambda: f64,
    pub r_match: f64,
    pub samples: Sampled<f64>,
    pub tail: Tail,
}

impl RegularSolution {
    /// (u, u′, ln scale): true values are (u, u′)·e^{ln scale}.
    pub fn eval_scaled(&self, r: f64) -> Result<(f64, f64, f64)> {
        if r > self.r_match {
            return self.tail_eval(r);
        }
        self.samples
            .eval_with(r, hermite5)
            .ok_or_else(|| Error::Domain(format!("r = {r} lies below the solved range")))
    }

    pub fn eval(&self, r: f64) -> Result<(f64, f64)> {
        let (u, du, l) = self.eval_scaled(r)?;
        let (u, du) = (u * l.exp(), du * l.exp());
        if !(u.is_finite() && du.is_finite()) {
            return Err(Error::Range(format!("regular solution overflows at r = {r}")));
        }
        Ok((u, du))
    }

    fn tail_eval(&self, r: f64) -> Result<(f64, f64, f64)> {
        match self.tail {
            Tail::Bessel { alpha, ln_alpha, beta, ln_beta } => {
                let b = bessel_basis(self.nu, self.lambda, r)?;
                let (u, l) = add_scaled(alpha * b.f1, ln_alpha + b.ln1, beta * b.f2, ln_beta + b.ln2);
                let (du, ld) = add_scaled(alpha * b.d1, ln_alpha + b.ln1, beta * b.d2, ln_beta + b.ln2);
                let l2 = l.max(ld);
                Ok((u * (l - l2).exp(), du * (ld - l2).exp(), l2))
            }
            Tail::Power { a, ln_a, b, ln_b } => {
                let s = self.nu.get() + 0.5;
                let lr = r.ln();
                let (u, l) = add_scaled(a, ln_a + s * lr, b, ln_b + (1.0 - s) * lr);
                let (du, ld) = add_scaled(a * s, ln_a + (s - 1.0) * lr, b * (1.0 - s), ln_b - s * lr);
                let l2 = l.max(ld);
                Ok((u * (l - l2).exp(), du * (ld - l2).exp(), l2))
            }
        }
    }

    /// ln(α² + β²) for the Bessel tail.
    fn ln_norm2(&self) -> f64 {
        match self.tail {
            Tail::Bessel { alpha, ln_alpha, beta, ln_beta } => {
                let l = ln_alpha.max(ln_beta);
                let a = alpha * (ln_alpha - l).exp();
                let b = beta * (ln_beta - l).exp();
                (a * a + b * b).ln() + 2.0 * l
            }
            Tail::Power { .. } => f64::NAN,
        }
    }

    /// Sign changes of u on (r_min, ∞).
    pub fn node_count(&self) -> usize {
        let u = &self.samples.u;
        let mut count = u.windows(2).filter(|w| w[0] * w[1] < 0.0).count();
        if let Tail::Power { a, ln_a, b, ln_b } = self.tail {
            // a r^{2ν} + b = 0 beyond r_match
            if a * b < 0.0 {
                let r0 = ((ln_b - ln_a + (b / a).abs().ln()) / (2.0 * self.nu.get())).exp();
                if r0 > self.r_match {
                    count += 1;
                }
            }
        }
        count
    }
}

fn sorted_unique(points: &[f64]) -> Vec<f64> {
    let mut p: Vec<f64> = points.to_vec();
    p.sort_by(f64::total_cmp);
    p.dedup();
    p
}

fn check_points(points: &[f64]) -> Result<()> {
    if points.iter().all(|&r| r > 0.0 && r.is_finite()) {
        Ok(())
    } else {
        Err(Error::Domain("radii must be finite and positive".into()))
    }
}

/// Integrates the regular solution from the Frobenius launch point to
/// r_match, landing exactly on every requested radius in between.
pub fn regular_solution(model: &RadialModel, nu: Order, lambda: f64, points: &[f64]) -> Result<RegularSolution> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::Domain(format!("lambda must be finite and >= 0, got {lambda}")));
    }
    check_points(points)?;
    let q = liouville_reduce(model, nu)?;
    let r_match = model.r_match;
    let r0 = model.launch_radius(lambda);
    let mut outs: Vec<f64> = sorted_unique(points).into_iter().filter(|&r| r > r0 && r < r_match).collect();
    outs.push(r_match);
    if points.iter().any(|&r| r < r0) {
        return Err(Error::Domain(format!("requested radius below the launch radius {r0}")));
    }

    let n = nu.get();
    let s = n + 0.5;
    let (w0, w1) = model.w_pert.eval(0.0);
    let l2 = lambda * lambda;
    let c2 = (w0 - l2) / (4.0 * n + 4.0);
    let c3 = w1 / (6.0 * n + 9.0);
    let y0 = [1.0 + c2 * r0 * r0 + c3 * r0.powi(3), (s + (s + 2.0) * c2 * r0 * r0 + (s + 3.0) * c3 * r0.powi(3)) / r0];
    let ln0 = s * r0.ln();
    let rhs = |r: f64, y: &[f64; 2]| [y[1], (q.eval(r) - l2) * y[0]];
    let tr = integrate(rhs, r0, y0, &outs, model.ode_options())?;

    let ln_scale: Vec<f64> = tr.ln_scale.iter().map(|l| l + ln0).collect();
    let qs: Vec<f64> = tr.t.iter().map(|&r| q.eval(r) - l2).collect();
    let samples = Sampled {
        r: tr.t.clone(),
        u: tr.y.iter().map(|y| y[0]).collect(),
        du: tr.y.iter().map(|y| y[1]).collect(),
        ln_scale,
        q: qs,
    };
    let last = samples.r.len() - 1;
    let (um, dm, lm) = (samples.u[last], samples.du[last], samples.ln_scale[last]);
    let tail = if lambda > 0.0 {
        let b = bessel_basis(nu, lambda, r_match)?;
        // α = (π/2)W[u, φ₂], β = (π/2)W[φ₁, u] with W[φ₁, φ₂] = 2/π
        Tail::Bessel {
            alpha: 0.5 * PI * (um * b.d2 - dm * b.f2),
            ln_alpha: lm + b.ln2,
            beta: 0.5 * PI * (b.f1 * dm - b.d1 * um),
            ln_beta: lm + b.ln1,
        }
    } else {
        // basis r^s, r^{1−s} with Wronskian 1 − 2s = −2ν
        let lr = r_match.ln();
        Tail::Power {
            a: ((1.0 - s) * um - r_match * dm) / (-2.0 * n),
            ln_a: lm - s * lr,
            b: (r_match * dm - s * um) / (-2.0 * n),
            ln_b: lm + (s - 1.0) * lr,
        }
    };
    Ok(RegularSolution { nu, lambda, r_match, samples, tail })
}

/// Outgoing solution: √r H⁽¹⁾_ν(λr) beyond r_match, integrated inward.
#[derive(Debug, Clone)]
pub struct OutgoingSolution {
    pub nu: Order,
    pub lambda: f64,
    pub r_match: f64,
    pub samples: Sampled<Complex64>,
}

impl OutgoingSolution {
    pub fn eval_scaled(&self, r: f64) -> Result<(Complex64, Complex64, f64)> {
        if r > self.r_match {
            return hankel_tail(self.nu, self.lambda, r);
        }
        self.samples
            .eval_with(r, hermite5_complex)
            .ok_or_else(|| Error::Domain(format!("r = {r} lies below the solved range")))
    }

    pub fn eval(&self, r: f64) -> Result<(Complex64, Complex64)> {
        let (u, du, l) = self.eval_scaled(r)?;
        let (u, du) = (u * l.exp(), du * l.exp());
        if !(u.is_finite() && du.is_finite()) {
            return Err(Error::Range(format!("outgoing solution overflows at r = {r}")));
        }
        Ok((u, du))
    }
}

fn hankel_tail(nu: Order, lambda: f64, r: f64) -> Result<(Complex64, Complex64, f64)> {
    let b = bessel_basis(nu, lambda, r)?;
    let l = if b.f1 == 0.0 && b.d1 == 0.0 { b.ln2 } else { b.ln1.max(b.ln2) };
    let (e1, e2) = ((b.ln1 - l).exp(), (b.ln2 - l).exp());
    Ok((Complex64::new(b.f1 * e1, b.f2 * e2), Complex64::new(b.d1 * e1, b.d2 * e2), l))
}

/// Inward integration from r_match through the descending radii `outs`.
fn integrate_outgoing(
    model: &RadialModel,
    nu: Order,
    lambda: f64,
    outs_desc: &[f64],
) -> Result<(crate::ode::Trajectory<4>, f64)> {
    let q = liouville_reduce(model, nu)?;
    let (u, du, l0) = hankel_tail(nu, lambda, model.r_match)?;
    let l2 = lambda * lambda;
    let rhs = |r: f64, y: &[f64; 4]| {
        let k = q.eval(r) - l2;
        [y[2], y[3], k * y[0], k * y[1]]
    };
    let tr = integrate(rhs, model.r_match, [u.re, u.im, du.re, du.im], outs_desc, model.ode_options())?;
    Ok((tr, l0))
}

pub fn outgoing_solution(model: &RadialModel, nu: Order, lambda: f64, points: &[f64]) -> Result<OutgoingSolution> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Domain(format!("outgoing solution needs lambda > 0, got {lambda}")));
    }
    check_points(points)?;
    let mut outs: Vec<f64> = sorted_unique(points).into_iter().filter(|&r| r < model.r_match).collect();
    outs.reverse();
    let (tr, l0) = integrate_outgoing(model, nu, lambda, &outs)?;
    let q = liouville_reduce(model, nu)?;
    let mut idx: Vec<usize> = (0..tr.t.len()).collect();
    idx.reverse();
    let samples = Sampled {
        r: idx.iter().map(|&i| tr.t[i]).collect(),
        u: idx.iter().map(|&i| Complex64::new(tr.y[i][0], tr.y[i][1])).collect(),
        du: idx.iter().map(|&i| Complex64::new(tr.y[i][2], tr.y[i][3])).collect(),
        ln_scale: idx.iter().map(|&i| tr.ln_scale[i] + l0).collect(),
        q: idx.iter().map(|&i| q.eval(tr.t[i]) - lambda * lambda).collect(),
    };
    Ok(OutgoingSolution { nu, lambda, r_match: model.r_match, samples })
}

/// Regular and outgoing solutions on a shared grid, with their Wronskian.
#[derive(Debug, Clone)]
pub struct ModeSolution {
    pub regular: RegularSolution,
    /// Outgoing solution sampled on the regular grid from the smallest
    /// requested radius up to r_match.
    pub outgoing: OutgoingSolution,
    /// 𝒲 = u_reg·u_out′ − u_reg′·u_out = wronskian·e^{ln_wronskian}.
    pub wronskian: Complex64,
    pub ln_wronskian: f64,
    /// max |pointwise Wronskian/𝒲 − 1| over the shared grid.
    pub wronskian_variation: f64,
}

pub fn solve_mode(model: &RadialModel, nu: Order, lambda: f64, points: &[f64]) -> Result<ModeSolution> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Domain(format!("mode solution needs lambda > 0, got {lambda}")));
    }
    let regular = regular_solution(model, nu, lambda, points)?;
    let r_lo = points.iter().copied().fold(model.r_match, f64::min);
    let grid = &regular.samples;
    let start = grid.r.partition_point(|&r| r < r_lo);
    let outs_desc: Vec<f64> = grid.r[start..].iter().rev().copied().collect();
    let (tr, l0) = integrate_outgoing(model, nu, lambda, &outs_desc[1..])?;
    // outputs line up with outs_desc[1..]; the first sample is the launch state
    let mut u = vec![Complex64::new(tr.y[0][0], tr.y[0][1])];
    let mut du = vec![Complex64::new(tr.y[0][2], tr.y[0][3])];
    let mut ls = vec![l0];
    for (y, l) in tr.outputs.iter().zip(&tr.output_ln_scale) {
        u.push(Complex64::new(y[0], y[1]));
        du.push(Complex64::new(y[2], y[3]));
        ls.push(l + l0);
    }
    u.reverse();
    du.reverse();
    ls.reverse();
    let out_samples = Sampled {
        r: grid.r[start..].to_vec(),
        u,
        du,
        ln_scale: ls,
        q: grid.q[start..].to_vec(),
    };

    let Tail::Bessel { alpha, ln_alpha, beta, ln_beta } = regular.tail else {
        unreachable!("lambda > 0 gives a Bessel tail")
    };
    // 𝒲 = (2/π)(iα − β)
    let l = ln_alpha.max(ln_beta);
    let w = Complex64::new(-beta * (ln_beta - l).exp(), alpha * (ln_alpha - l).exp()) * (2.0 / PI);
    let mut variation: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for (k, i) in (start..grid.r.len()).enumerate() {
        let (ur, dr, lr) = (grid.u[i], grid.du[i], grid.ln_scale[i]);
        let (uo, d_o, lo) = (out_samples.u[k], out_samples.du[k], out_samples.ln_scale[k]);
        let f = (lr + lo - l).exp();
        let wi = (uo * dr - d_o * ur) * (-f);
        variation = variation.max((wi / w - 1.0).norm());
        scale = scale.max((ur * d_o.norm()).abs().max((dr * uo.norm()).abs()) * f);
    }
    if w.norm() < 1e-12 * scale {
        return Err(Error::NearResonance { wronskian: w.norm(), scale });
    }
    let outgoing = OutgoingSolution { nu, lambda, r_match: model.r_match, samples: out_samples };
    Ok(ModeSolution { regular, outgoing, wronskian: w, ln_wronskian: l, wronskian_variation: variation })
}

impl ModeSolution {
    /// −u_reg(r_<)u_out(r_>)/𝒲, the Green function of −∂² + Q − λ² on the
    /// half-line (outgoing); the incoming one is its conjugate.
    pub fn green(&self, r: f64, r_prime: f64, sign: Sign) -> Result<Complex64> {
        let (a, b) = (r.min(r_prime), r.max(r_prime));
        let (ur, _, lr) = self.regular.eval_scaled(a)?;
        let (uo, _, lo) = self.outgoing.eval_scaled(b)?;
        let v = -(uo * ur) / self.wronskian * (lr + lo - self.ln_wronskian).exp();
        if !v.is_finite() {
            return Err(Error::Range(format!("Green function overflows at ({r}, {r_prime})")));
        }
        Ok(match sign {
            Sign::Outgoing => v,
            Sign::Incoming => v.conj(),
        })
    }

    /// λ·u_reg(r)u_reg(r′)/(α² + β²) = (2λ/π) Im green(r, r′).
    pub fn density(&self, r: f64, r_prime: f64) -> Result<f64> {
        normalized_density(&self.regular, r, r_prime)
    }
}

fn normalized_density(reg: &RegularSolution, r: f64, r_prime: f64) -> Result<f64> {
    let (u1, _, l1) = reg.eval_scaled(r)?;
    let (u2, _, l2) = if r == r_prime { (u1, 0.0, l1) } else { reg.eval_scaled(r_prime)? };
    Ok(reg.lambda * u1 * u2 * (l1 + l2 - reg.ln_norm2()).exp())
}

/// Per-mode Green function of the perturbed cone, in the same
/// normalization as the exact-cone mode Green function.
pub fn mode_green_perturbed(
    model: &RadialModel,
    nu: Order,
    lambda: f64,
    r: f64,
    r_prime: f64,
    sign: Sign,
) -> Result<Complex64> {
    solve_mode(model, nu, lambda, &[r, r_prime])?.green(r, r_prime, sign)
}

/// Per-mode density (2λ/π) Im of the outgoing Green function.
pub fn mode_density_perturbed(model: &RadialModel, nu: Order, lambda: f64, r: f64, r_prime: f64) -> Result<f64> {
    let reg = regular_solution(model, nu, lambda, &[r, r_prime])?;
    if lambda == 0.0 {
        return Ok(0.0);
    }
    normalized_density(&reg, r, r_prime)
}

/// Mode-summed resolvent of the perturbed cone. Truncation uses the
/// exact-cone term bounds.
pub fn perturbed_resolvent(
    model: &RadialModel,
    lambda: f64,
    left: ConePoint,
    right: ConePoint,
    sign: Sign,
    tol: f64,
) -> Result<KernelSample> {
    check_tol(tol)?;
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!("lambda must be positive, got {lambda}")));
    }
    if left.r == right.r && spectrum_separation(left, right) == 0.0 {
        return Err(Error::Diagonal);
    }
    let spec = &model.spectrum;
    let (a, b) = (lambda * left.r.min(right.r), lambda * left.r.max(right.r));
    let w = radial_weight(spec.n, left.r, right.r);
    let bounds: Vec<f64> = spec
        .modes
        .iter()
        .zip(spec.projector_bounds())
        .map(|(m, p)| p * w * 0.5 * PI * jh_bound(m.nu, a, b))
        .collect();
    let proj = spec.projectors_pair(left.theta, right.theta);
    let w_u = (left.r * right.r).powf(-(spec.n as f64 - 1.0) / 2.0);
    let (sum, used, tail) = truncated_mode_sum(&bounds, tol, |j| {
        let g = mode_green_perturbed(model, spec.modes[j].nu, lambda, left.r, right.r, Sign::Outgoing)?;
        Ok(g * (proj[j] * w_u))
    })?;
    let value = match sign {
        Sign::Outgoing => sum,
        Sign::Incoming => sum.conj(),
    };
    Ok(KernelSample { lambda, left, right, value, modes_used: used, tail_bound: tail })
}

/// Mode-summed spectral-measure density of the perturbed cone.
pub fn perturbed_density(model: &RadialModel, lambda: f64, left: ConePoint, right: ConePoint, tol: f64) -> Result<DensitySample> {
    check_tol(tol)?;
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!("lambda must be positive, got {lambda}")));
    }
    let spec = &model.spectrum;
    let bounds = density_bounds(spec, lambda, left.r, right.r);
    let proj = spec.projectors_pair(left.theta, right.theta);
    let w_u = (left.r * right.r).powf(-(spec.n as f64 - 1.0) / 2.0);
    let (sum, used, tail) = truncated_mode_sum(&bounds, tol, |j| {
        let d = mode_density_perturbed(model, spec.modes[j].nu, lambda, left.r, right.r)?;
        Ok(Complex64::new(d * proj[j] * w_u, 0.0))
    })?;
    Ok(DensitySample { lambda, left, right, density: sum.re, modes_used: used, tail_bound: tail })
}

/// Zero-energy solution of the lowest mode and the scalar zero mode built
/// from it.
#[derive(Debug, Clone)]
pub struct ZeroMode {
    pub nu0: Order,
    pub n: usize,
    pub solution: RegularSolution,
    /// u₀ ≈ a r^{ν₀+½} + b r^{½−ν₀} beyond r_match.
    pub a_coeff: f64,
    pub b_coeff: f64,
    /// Bound states in the ν₀ channel (nodes of u₀).
    pub bound_states: usize,
    /// ln(2^{ν₀}Γ(ν₀+1)).
    ln_norm: f64,
}

pub fn zero_mode(model: &RadialModel) -> Result<ZeroMode> {
    zero_mode_at(model, &[])
}

/// [`zero_mode`] with the radial grid forced through `points`.
pub fn zero_mode_at(model: &RadialModel, points: &[f64]) -> Result<ZeroMode> {
    let nu0 = model.spectrum.modes[0].nu;
    let sol = regular_solution(model, nu0, 0.0, points)?;
    let Tail::Power { a, ln_a, b, ln_b } = sol.tail else {
        unreachable!("lambda = 0 gives a power tail")
    };
    let (a_coeff, b_coeff) = (a * ln_a.exp(), b * ln_b.exp());
    if a == 0.0 || a.abs().ln() + ln_a < (1e-10f64).ln() + b.abs().ln() + ln_b {
        return Err(Error::ZeroResonance { a: a_coeff, b: b_coeff });
    }
    let n0 = nu0.get();
    Ok(ZeroMode {
        nu0,
        n: model.n,
        bound_states: sol.node_count(),
        solution: sol,
        a_coeff,
        b_coeff,
        ln_norm: n0 * 2f64.ln() + ln_gamma(n0 + 1.0)?,
    })
}

impl ZeroMode {
    /// [u₀(r)/a]·r^{−(n−1)/2}/(2^{ν₀}Γ(ν₀+1)), the radial factor of w.
    pub fn radial(&self, r: f64) -> Result<f64> {
        let (u, _, l) = self.solution.eval_scaled(r)?;
        let v = u / self.a_coeff * (l - self.ln_norm - 0.5 * (self.n as f64 - 1.0) * r.ln()).exp();
        Ok(v)
    }

    /// w(z) with W(y) = √Π₀(y, y); exact when the ν₀ eigenspace is
    /// one-dimensional with constant modulus (spheres, circles).
    pub fn w_eval(&self, spectrum: &ModeSpectrum, z: ConePoint) -> Result<f64> {
        let p = spectrum.modes[0].projector.eval_pair(z.theta, z.theta);
        Ok(p.sqrt() * self.radial(z.r)?)
    }

    /// Σ_k w_k(z)w_k(z′) over the ν₀ eigenspace: Π₀(y, y′)·radial·radial.
    pub fn leading_coefficient(&self, spectrum: &ModeSpectrum, left: ConePoint, right: ConePoint) -> Result<f64> {
        let p = spectrum.modes[0].projector.eval_pair(left.theta, right.theta);
        Ok(p * self.radial(left.r)? * self.radial(right.r)?)
    }
}

/// Negative eigenvalues of P counted with multiplicity: nodes of the
/// zero-energy solution in each mode, scanning up in ν until a mode has none.
pub fn bound_state_count(model: &RadialModel) -> Result<usize> {
    if model.w_pert.is_zero() {
        return Ok(0);
    }
    let mut total = 0;
    for mode in &model.spectrum.modes {
        let nodes = regular_solution(model, mode.nu, 0.0, &[])?.node_count();
        if nodes == 0 {
            break;
        }
        total += nodes * mode.multiplicity;
    }
    Ok(total)
}

/// Log-log fit of the density at small λ against the predicted leading law.
#[derive(Debug, Clone, PartialEq)]
pub struct LowEnergyFit {
    pub lambdas: Vec<f64>,
    pub densities: Vec<f64>,
    pub fit: LineFit,
    /// e^{intercept} of the free fit.
    pub coefficient: f64,
    pub predicted_slope: f64,
    pub predicted_coefficient: f64,
    /// Slope of log|density − predicted law| against log λ, if positive
    /// residuals allow it; diagnostic only.
    pub remainder_slope: Option<f64>,
    pub predicted_remainder: f64,
}

pub fn low_energy_fit(model: &RadialModel, left: ConePoint, right: ConePoint, lambda_grid: &[f64], tol: f64) -> Result<LowEnergyFit> {
    if lambda_grid.len() < 8 {
        return Err(Error::Config("low-energy fit needs at least 8 lambda values".into()));
    }
    if lambda_grid.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
        return Err(Error::Domain("lambda grid must be positive".into()));
    }
    let zm = zero_mode_at(model, &[left.r, right.r])?;
    let predicted_coefficient = zm.leading_coefficient(&model.spectrum, left, right)?;
    let densities = lambda_grid
        .par_iter()
        .map(|&l| perturbed_density(model, l, left, right, tol).map(|d| d.density))
        .collect::<Result<Vec<f64>>>()?;
    if let Some((l, _)) = lambda_grid.iter().zip(&densities).find(|(_, &d)| d <= 0.0) {
        return Err(Error::Underflow { lambda: *l });
    }
    let x: Vec<f64> = lambda_grid.iter().map(|l| l.ln()).collect();
    let y: Vec<f64> = densities.iter().map(|d| d.ln()).collect();
    let fit = fit_line(&x, &y);
    let nu0 = model.spectrum.nu0();
    let predicted_slope = 2.0 * nu0 + 1.0;
    let rem: Vec<f64> = lambda_grid
        .iter()
        .zip(&densities)
        .map(|(l, d)| (d - predicted_coefficient * l.powf(predicted_slope)).abs())
        .collect();
    let remainder_slope = rem.iter().all(|&r| r > 0.0).then(|| {
        let yr: Vec<f64> = rem.iter().map(|r| r.ln()).collect();
        fit_line(&x, &yr).slope
    });
    let nu1 = model.spectrum.nu1();
    let predicted_remainder = (2.0 * nu0 + 2.0).min(2.0 * nu1 + 1.0);
    Ok(LowEnergyFit {
        lambdas: lambda_grid.to_vec(),
        densities,
        coefficient: fit.intercept.exp(),
        fit,
        predicted_slope,
        predicted_coefficient,
        remainder_slope,
        predicted_remainder,
    })
}
