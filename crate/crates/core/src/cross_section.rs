//! Cross-section eigendata: ν_j² are the eigenvalues of
//! Δ_Y + (n−2)²/4 + V₀, with multiplicities and angular projectors.
//!
//! Points of Y are labelled by an angle along a fixed closed geodesic.
//! Symmetric cross-sections depend only on the separation |y − y′|; the
//! discretized circle with varying V₀ uses the actual positions.

use crate::eigen::symmetric_eigen;
use crate::error::{Error, Result};
use crate::specfun::{gamma, Order};
use std::f64::consts::PI;

/// Tolerance for merging equal orders.
pub const TIE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum CrossSectionKind {
    /// Round unit sphere S^{n−1}.
    Sphere,
    /// Circle of the given length (n = 2).
    Circle { length: f64 },
    /// Explicit list of (ν, multiplicity) on a cross-section of volume `volume`.
    Custom { modes: Vec<(f64, usize)>, volume: f64 },
    /// Circle of length 2π, periodic second differences with sampled V₀.
    DiscretizedCircle { v0_samples: Vec<f64>, grid: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossSectionSpec {
    pub n: usize,
    pub kind: CrossSectionKind,
    /// Constant part of V₀ (ignored by `DiscretizedCircle`, which carries samples).
    pub v0: f64,
    /// Highest spherical degree / Fourier index kept.
    pub l_max: usize,
}

/// Angular projector onto one (merged) eigenspace.
#[derive(Debug, Clone, PartialEq)]
pub enum Projector {
    /// (mult/vol)·C_l^α(cos θ)/C_l^α(1), α = (n−2)/2.
    Gegenbauer { n: usize, l: usize, weight: f64 },
    /// weight·cos(2πkθ/L).
    Fourier { k: usize, length: f64, weight: f64 },
    /// Separation-independent value.
    Constant(f64),
    /// Σ φ(0)φ(θ) over grid eigenvectors normalized by Σφ_i²h = 1.
    Discrete { vectors: Vec<Vec<f64>> },
}

fn periodic_interp(v: &[f64], theta: f64) -> f64 {
    let n = v.len();
    let x = theta.rem_euclid(2.0 * PI) / (2.0 * PI) * n as f64;
    let i = x.floor() as usize % n;
    let t = x - x.floor();
    v[i] * (1.0 - t) + v[(i + 1) % n] * t
}

/// C_l^α(x)/C_l^α(1) for l = 0..=l_max via the normalized three-term
/// recurrence R_{k+1} = (2x(k+α)R_k − kR_{k−1})/(k+2α).
pub fn normalized_gegenbauer(n: usize, l_max: usize, x: f64) -> Vec<f64> {
    let alpha = (n as f64 - 2.0) / 2.0;
    let mut r = Vec::with_capacity(l_max + 1);
    r.push(1.0);
    if l_max >= 1 {
        r.push(x);
    }
    for k in 1..l_max {
        let kf = k as f64;
        let next = (2.0 * x * (kf + alpha) * r[k] - kf * r[k - 1]) / (kf + 2.0 * alpha);
        r.push(next);
    }
    r
}

impl Projector {
    /// Π(y, y′) for points at angles y, y′.
    pub fn eval_pair(&self, y: f64, y_prime: f64) -> f64 {
        match self {
            Projector::Discrete { vectors } => vectors
                .iter()
                .map(|v| periodic_interp(v, y) * periodic_interp(v, y_prime))
                .sum(),
            _ => self.eval(y - y_prime),
        }
    }

    /// Π at separation θ (left point at angle 0).
    pub fn eval(&self, theta: f64) -> f64 {
        match self {
            Projector::Gegenbauer { n, l, weight } => {
                weight * normalized_gegenbauer(*n, *l, theta.cos())[*l]
            }
            Projector::Fourier { k, length, weight } => {
                weight * (2.0 * PI * *k as f64 * theta / length).cos()
            }
            Projector::Constant(c) => *c,
            Projector::Discrete { vectors } => vectors
                .iter()
                .map(|v| v[0] * periodic_interp(v, theta))
                .sum(),
        }
    }

    /// sup over (y, y′) of |Π(y, y′)|.
    pub fn sup_bound(&self) -> f64 {
        match self {
            Projector::Gegenbauer { weight, .. } | Projector::Fourier { weight, .. } => weight.abs(),
            Projector::Constant(c) => c.abs(),
            Projector::Discrete { vectors } => {
                let n = vectors[0].len();
                (0..n)
                    .map(|i| vectors.iter().map(|v| v[i] * v[i]).sum::<f64>())
                    .fold(0.0, f64::max)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mode {
    pub nu: Order,
    pub multiplicity: usize,
    pub projector: Projector,
}

/// Eigendata of the cross-section operator, ν nondecreasing, ν₀ > 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSpectrum {
    pub n: usize,
    pub volume: f64,
    pub modes: Vec<Mode>,
}

impl ModeSpectrum {
    pub fn nu0(&self) -> f64 {
        self.modes[0].nu.get()
    }

    /// Second distinct order, or +∞ for a single-mode spectrum.
    pub fn nu1(&self) -> f64 {
        self.modes.get(1).map_or(f64::INFINITY, |m| m.nu.get())
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// Π_j(y, y′) for every mode.
    pub fn projectors_pair(&self, y: f64, y_prime: f64) -> Vec<f64> {
        if self.modes.iter().any(|m| matches!(m.projector, Projector::Discrete { .. })) {
            self.modes.iter().map(|m| m.projector.eval_pair(y, y_prime)).collect()
        } else {
            self.projectors_at(y - y_prime)
        }
    }

    /// sup |Π_j| for every mode.
    pub fn projector_bounds(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.projector.sup_bound()).collect()
    }

    /// Π_j(θ) for every mode, sharing one recurrence for sphere spectra.
    pub fn projectors_at(&self, theta: f64) -> Vec<f64> {
        let sphere_run = self.modes.iter().enumerate().all(|(j, m)| {
            matches!(m.projector, Projector::Gegenbauer { l, n, .. } if l == j && n == self.n)
        });
        if sphere_run && !self.modes.is_empty() {
            let r = normalized_gegenbauer(self.n, self.modes.len() - 1, theta.cos());
            return self
                .modes
                .iter()
                .zip(r)
                .map(|(m, rl)| match m.projector {
                    Projector::Gegenbauer { weight, .. } => weight * rl,
                    _ => unreachable!(),
                })
                .collect();
        }
        self.modes.iter().map(|m| m.projector.eval(theta)).collect()
    }
}

/// Volume of the unit sphere S^{n−1}.
pub fn sphere_volume(n: usize) -> f64 {
    let h = n as f64 / 2.0;
    2.0 * PI.powf(h) / gamma(h).expect("n >= 1")
}

fn binom(a: i64, b: i64) -> f64 {
    if a < b || b < 0 || a < 0 {
        return 0.0;
    }
    let mut r = 1.0;
    for i in 0..b {
        r = r * (a - i) as f64 / (i + 1) as f64;
    }
    r
}

/// Dimension of degree-l spherical harmonics on S^{n−1}.
pub fn sphere_multiplicity(n: usize, l: usize) -> usize {
    let (n, l) = (n as i64, l as i64);
    (binom(l + n - 1, n - 1) - binom(l + n - 3, n - 1)).round() as usize
}

fn hyp_check(nu0_sq: f64) -> Result<()> {
    if nu0_sq > 0.0 && nu0_sq.is_finite() {
        Ok(())
    } else {
        Err(Error::Hypothesis { nu0_sq })
    }
}

/// Sphere cross-section: ν_l = √(l(l+n−2) + (n−2)²/4 + v0), l = 0..=l_max.
pub fn sphere_spectrum(n: usize, v0: f64, l_max: usize) -> Result<ModeSpectrum> {
    if n < 2 {
        return Err(Error::Config(format!("dimension must be >= 2, got {n}")));
    }
    let shift = (n as f64 - 2.0).powi(2) / 4.0 + v0;
    hyp_check(shift)?;
    let vol = sphere_volume(n);
    let modes = (0..=l_max)
        .map(|l| {
            let lf = l as f64;
            let mult = sphere_multiplicity(n, l);
            Mode {
                nu: Order::new((lf * (lf + n as f64 - 2.0) + shift).sqrt()).expect("positive"),
                multiplicity: mult,
                projector: Projector::Gegenbauer { n, l, weight: mult as f64 / vol },
            }
        })
        .collect();
    Ok(ModeSpectrum { n, volume: vol, modes })
}

/// Circle of length L (n = 2): ν_k² = (2πk/L)² + v0.
pub fn circle_spectrum(length: f64, v0: f64, k_max: usize) -> Result<ModeSpectrum> {
    if !(length > 0.0 && length.is_finite()) {
        return Err(Error::Config(format!("circle length must be positive, got {length}")));
    }
    hyp_check(v0)?;
    let modes = (0..=k_max)
        .map(|k| {
            let mult = if k == 0 { 1 } else { 2 };
            let q = 2.0 * PI * k as f64 / length;
            Mode {
                nu: Order::new((q * q + v0).sqrt()).expect("positive"),
                multiplicity: mult,
                projector: Projector::Fourier { k, length, weight: mult as f64 / length },
            }
        })
        .collect();
    Ok(ModeSpectrum { n: 2, volume: length, modes })
}

/// Explicit orders with multiplicities; the projector of each merged mode is
/// the constant mult/volume (its diagonal value).
pub fn custom_spectrum(n: usize, modes: &[(f64, usize)], volume: f64) -> Result<ModeSpectrum> {
    if modes.is_empty() {
        return Err(Error::Config("custom spectrum needs at least one mode".into()));
    }
    if !(volume > 0.0) {
        return Err(Error::Config("custom spectrum volume must be positive".into()));
    }
    let mut sorted = modes.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    if sorted[0].0 <= 0.0 {
        return Err(Error::Hypothesis { nu0_sq: sorted[0].0 * sorted[0].0.abs() });
    }
    let mut out: Vec<Mode> = Vec::new();
    for (nu, mult) in sorted {
        if mult == 0 {
            return Err(Error::Config("multiplicities must be >= 1".into()));
        }
        if let Some(last) = out.last_mut() {
            if (last.nu.get() - nu).abs() <= TIE_TOL {
                last.multiplicity += mult;
                last.projector = Projector::Constant(last.multiplicity as f64 / volume);
                continue;
            }
        }
        out.push(Mode {
            nu: Order::new(nu)?,
            multiplicity: mult,
            projector: Projector::Constant(mult as f64 / volume),
        });
    }
    Ok(ModeSpectrum { n, volume, modes: out })
}

/// Periodic second-difference operator on a circle of length 2π plus the
/// sampled V₀ (samples are resampled to the grid by periodic linear
/// interpolation). Keeps at most `max_modes` merged modes.
pub fn discretized_circle_spectrum(v0_samples: &[f64], grid: usize, max_modes: usize) -> Result<ModeSpectrum> {
    if grid < 8 {
        return Err(Error::Config(format!("grid size must be >= 8, got {grid}")));
    }
    if v0_samples.is_empty() {
        return Err(Error::Config("V0 samples are empty".into()));
    }
    let h = 2.0 * PI / grid as f64;
    let v0: Vec<f64> = (0..grid)
        .map(|i| periodic_interp(v0_samples, i as f64 * h))
        .collect();
    let mut a = vec![0.0; grid * grid];
    let ih2 = 1.0 / (h * h);
    for i in 0..grid {
        a[i * grid + i] = 2.0 * ih2 + v0[i];
        let j = (i + 1) % grid;
        a[i * grid + j] -= ih2;
        a[j * grid + i] -= ih2;
    }
    let eig = symmetric_eigen(&a, grid, true)?;
    hyp_check(eig.values[0])?;
    let norm = 1.0 / h.sqrt();
    let mut modes: Vec<Mode> = Vec::new();
    for k in 0..grid {
        let nu = eig.values[k].sqrt();
        let mut v = eig.vector(k).expect("all rows tracked");
        for x in v.iter_mut() {
            *x *= norm;
        }
        if let Some(last) = modes.last_mut() {
            if (last.nu.get() - nu).abs() <= TIE_TOL {
                last.multiplicity += 1;
                if let Projector::Discrete { vectors } = &mut last.projector {
                    vectors.push(v);
                }
                continue;
            }
        }
        if modes.len() == max_modes {
            break;
        }
        modes.push(Mode {
            nu: Order::new(nu)?,
            multiplicity: 1,
            projector: Projector::Discrete { vectors: vec![v] },
        });
    }
    Ok(ModeSpectrum { n: 2, volume: 2.0 * PI, modes })
}

/// Builds the spectrum of a validated spec, failing when ν₀² ≤ 0.
pub fn check_hyp2(spec: &CrossSectionSpec) -> Result<ModeSpectrum> {
    match &spec.kind {
        CrossSectionKind::Sphere => sphere_spectrum(spec.n, spec.v0, spec.l_max),
        CrossSectionKind::Circle { length } => {
            if spec.n != 2 {
                return Err(Error::Config("a circle cross-section requires n = 2".into()));
            }
            circle_spectrum(*length, spec.v0, spec.l_max)
        }
        CrossSectionKind::Custom { modes, volume } => custom_spectrum(spec.n, modes, *volume),
        CrossSectionKind::DiscretizedCircle { v0_samples, grid } => {
            if spec.n != 2 {
                return Err(Error::Config("a discretized circle requires n = 2".into()));
            }
            discretized_circle_spectrum(v0_samples, *grid, spec.l_max + 1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multiplicities() {
        assert_eq!((0..4).map(|l| sphere_multiplicity(3, l)).collect::<Vec<_>>(), vec![1, 3, 5, 7]);
        assert_eq!((0..4).map(|l| sphere_multiplicity(4, l)).collect::<Vec<_>>(), vec![1, 4, 9, 16]);
        assert_eq!((0..3).map(|l| sphere_multiplicity(2, l)).collect::<Vec<_>>(), vec![1, 2, 2]);
    }

    #[test]
    fn volumes() {
        assert!((sphere_volume(2) - 2.0 * PI).abs() < 1e-14);
        assert!((sphere_volume(3) - 4.0 * PI).abs() < 1e-13);
        assert!((sphere_volume(4) - 2.0 * PI * PI).abs() < 1e-13);
    }
}
