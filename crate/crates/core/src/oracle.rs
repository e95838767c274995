//! Brute-force check of the radial spectral theory: one mode in a finite
//! box, second differences, full eigendecomposition, and a Gaussian
//! mollified spectral density.

use crate::eigen::{tridiagonal_eigen, Eigen};
use crate::error::{Error, Result};
use crate::numerics::{gauss_legendre, NeumaierSum};
use crate::radial::{mode_density_perturbed, Perturbation, RadialModel};
use crate::specfun::{bessel_j, Order};
use rayon::prelude::*;
use std::f64::consts::PI;

/// −u″ + Q u on (r0, R) with Q = (ν²−¼)/r² + W(r), Dirichlet at R and
/// u(r0) = (r0/r1)^{ν+½}u(r1) at the inner end (Dirichlet when r0 = 0).
#[derive(Debug, Clone)]
pub struct BoxProblem {
    pub nu: f64,
    pub w: Perturbation,
    pub r0: f64,
    pub r_max: f64,
    /// interior grid points
    pub n: usize,
}

impl BoxProblem {
    pub fn new(nu: f64, w: Perturbation, r0: f64, r_max: f64, n: usize) -> Result<Self> {
        if !(nu >= 0.0 && nu.is_finite()) {
            return Err(Error::Domain(format!("nu must be nonnegative, got {nu}")));
        }
        if !(r0 >= 0.0 && r_max > r0 && r_max.is_finite()) {
            return Err(Error::Config(format!("box needs 0 <= r0 < R, got ({r0}, {r_max})")));
        }
        if n < 200 {
            return Err(Error::Config(format!("box needs at least 200 grid points, got {n}")));
        }
        let p = BoxProblem { nu, w, r0, r_max, n };
        if r0 >= p.h() {
            return Err(Error::Config(format!("inner radius {r0} must be below the grid step {}", p.h())));
        }
        Ok(p)
    }

    /// The box for one mode of a radial model.
    pub fn for_mode(model: &RadialModel, nu: Order, r0: f64, r_max: f64, n: usize) -> Result<Self> {
        BoxProblem::new(nu.get(), model.w_pert.clone(), r0, r_max, n)
    }

    pub fn h(&self) -> f64 {
        (self.r_max - self.r0) / (self.n + 1) as f64
    }

    /// Radius of interior node i (0-based, i.e. r_{i+1}).
    pub fn radius(&self, i: usize) -> f64 {
        self.r0 + (i + 1) as f64 * self.h()
    }

    pub fn q(&self, r: f64) -> f64 {
        (self.nu * self.nu - 0.25) / (r * r) + self.w.value(r)
    }

    pub fn matrix(&self) -> (Vec<f64>, Vec<f64>) {
        let h = self.h();
        let ih2 = 1.0 / (h * h);
        let mut diag: Vec<f64> = (0..self.n).map(|i| 2.0 * ih2 + self.q(self.radius(i))).collect();
        if self.r0 > 0.0 {
            diag[0] -= (self.r0 / self.radius(0)).powf(self.nu + 0.5) * ih2;
        }
        (diag, vec![-ih2; self.n - 1])
    }

    /// Weyl spacing of √eigenvalues.
    pub fn weyl_spacing(&self) -> f64 {
        PI / (self.r_max - self.r0)
    }
}

#[derive(Debug, Clone)]
pub struct BoxEigen {
    pub problem: BoxProblem,
    /// Ascending eigenvalues λ_k².
    pub values: Vec<f64>,
    eigen: Eigen,
}

/// All eigenvalues, with eigenvector components kept at the four grid
/// rows around each requested radius (all rows when `radii` is empty).
pub fn box_eigen(problem: &BoxProblem, radii: &[f64]) -> Result<BoxEigen> {
    let (diag, off) = problem.matrix();
    let rows = if radii.is_empty() {
        None
    } else {
        let mut rows = Vec::new();
        for &r in radii {
            let (first, _) = stencil(problem, r)?;
            rows.extend(first..first + 4);
        }
        rows.sort_unstable();
        rows.dedup();
        Some(rows)
    };
    let eigen = tridiagonal_eigen(&diag, &off, rows.as_deref())?;
    Ok(BoxEigen { problem: problem.clone(), values: eigen.values.clone(), eigen })
}

/// First of four consecutive interior rows bracketing r, and r in grid units.
fn stencil(p: &BoxProblem, r: f64) -> Result<(usize, f64)> {
    let x = (r - p.r0) / p.h() - 1.0;
    if !(x >= 1.0 && x <= p.n as f64 - 3.0) {
        return Err(Error::Domain(format!("radius {r} too close to the box ends")));
    }
    let first = (x.floor() as usize - 1).min(p.n - 4);
    Ok((first, x - first as f64))
}

impl BoxEigen {
    /// Eigenfunction k at r, normalized so that Σ h u² = 1; cubic Lagrange
    /// interpolation between tracked grid rows.
    pub fn eigenfunction(&self, k: usize, r: f64) -> Result<f64> {
        let (first, t) = stencil(&self.problem, r)?;
        let mut acc = 0.0;
        for a in 0..4 {
            let slot = self
                .eigen
                .rows
                .binary_search(&(first + a))
                .map_err(|_| Error::Domain(format!("radius {r} was not tracked")))?;
            let mut basis = 1.0;
            for b in 0..4 {
                if b != a {
                    basis *= (t - b as f64) / (a as f64 - b as f64);
                }
            }
            acc += basis * self.eigen.component(slot, k);
        }
        Ok(acc / self.problem.h().sqrt())
    }

    /// Full discrete eigenvector (unit Euclidean norm) when all rows were kept.
    pub fn vector(&self, k: usize) -> Option<Vec<f64>> {
        self.eigen.vector(k)
    }

    /// Local spacing of √eigenvalues around λ.
    pub fn spacing_near(&self, lambda: f64) -> f64 {
        let roots: Vec<f64> = self.values.iter().filter(|v| **v > 0.0).map(|v| v.sqrt()).collect();
        let i = roots.partition_point(|&x| x < lambda);
        let lo = i.saturating_sub(1).min(roots.len().saturating_sub(2));
        if roots.len() < 2 {
            return self.problem.weyl_spacing();
        }
        roots[lo + 1] - roots[lo]
    }
}

pub fn gaussian(sigma: f64, x: f64) -> f64 {
    (-0.5 * (x / sigma).powi(2)).exp() / (sigma * (2.0 * PI).sqrt())
}

/// 5π/R·max(1, λ).
pub fn default_sigma(problem: &BoxProblem, lambda: f64) -> f64 {
    5.0 * problem.weyl_spacing() * lambda.max(1.0)
}

fn check_resolution(eig: &BoxEigen, sigma: f64, lambda: f64) -> Result<()> {
    let spacing = eig.spacing_near(lambda).max(eig.problem.weyl_spacing());
    if !(sigma >= 3.0 * spacing) {
        return Err(Error::Resolution { sigma, spacing });
    }
    Ok(())
}

/// Σ_k g_σ(λ − λ_k)u_k(r)u_k(r′) over positive levels, the box version of
/// the dλ spectral density of the mode.
pub fn mollified_density(eig: &BoxEigen, sigma: f64, lambda: f64, r: f64, r_prime: f64) -> Result<f64> {
    check_resolution(eig, sigma, lambda)?;
    let mut acc = NeumaierSum::new();
    for (k, &mu) in eig.values.iter().enumerate() {
        if mu <= 0.0 {
            continue;
        }
        let lk = mu.sqrt();
        if (lk - lambda).abs() > 10.0 * sigma {
            continue;
        }
        acc.add(gaussian(sigma, lambda - lk) * eig.eigenfunction(k, r)? * eig.eigenfunction(k, r_prime)?);
    }
    Ok(acc.value())
}

/// λ√(rr′)J_ν(λr)J_ν(λr′), the unperturbed mode density.
pub fn free_mode_density(nu: Order, lambda: f64, r: f64, r_prime: f64) -> Result<f64> {
    Ok(lambda * (r * r_prime).sqrt() * bessel_j(nu, lambda * r)? * bessel_j(nu, lambda * r_prime)?)
}

/// The model's mode density convolved with g_σ on [max(0, λ−8σ), λ+8σ].
pub fn mollified_mode_density(model: &RadialModel, nu: Order, sigma: f64, lambda: f64, r: f64, r_prime: f64) -> Result<f64> {
    let (x, w) = gauss_legendre(16);
    let a = (lambda - 8.0 * sigma).max(0.0);
    let b = lambda + 8.0 * sigma;
    let panels = 16;
    let h = (b - a) / panels as f64;
    let mut acc = NeumaierSum::new();
    for p in 0..panels {
        let lo = a + p as f64 * h;
        for (xi, wi) in x.iter().zip(&w) {
            let l = lo + 0.5 * h * (1.0 + xi);
            let d = if model.w_pert.is_zero() {
                free_mode_density(nu, l, r, r_prime)?
            } else {
                mode_density_perturbed(model, nu, l, r, r_prime)?
            };
            acc.add(0.5 * h * wi * gaussian(sigma, lambda - l) * d);
        }
    }
    Ok(acc.value())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub lambdas: Vec<f64>,
    pub sigmas: Vec<f64>,
    pub mode_density: Vec<f64>,
    pub box_density: Vec<f64>,
    /// |box − mode| / |mode|
    pub deviation: Vec<f64>,
    pub max_deviation: f64,
}

/// Mollified box and mode densities on a λ grid. `sigma = None` uses
/// [`default_sigma`] at each λ.
pub fn compare_with_modes(
    model: &RadialModel,
    nu: Order,
    problem: &BoxProblem,
    sigma: Option<f64>,
    grid: &[f64],
    r: f64,
    r_prime: f64,
) -> Result<Comparison> {
    let eig = box_eigen(problem, &[r, r_prime])?;
    let rows: Vec<(f64, f64, f64, f64)> = grid
        .par_iter()
        .map(|&l| {
            let s = sigma.unwrap_or_else(|| default_sigma(problem, l));
            let b = mollified_density(&eig, s, l, r, r_prime)?;
            let m = mollified_mode_density(model, nu, s, l, r, r_prime)?;
            Ok((l, s, m, b))
        })
        .collect::<Result<_>>()?;
    let deviation: Vec<f64> = rows.iter().map(|(_, _, m, b)| (b - m).abs() / m.abs()).collect();
    Ok(Comparison {
        lambdas: rows.iter().map(|r| r.0).collect(),
        sigmas: rows.iter().map(|r| r.1).collect(),
        mode_density: rows.iter().map(|r| r.2).collect(),
        box_density: rows.iter().map(|r| r.3).collect(),
        max_deviation: deviation.iter().copied().fold(0.0, f64::max),
        deviation,
    })
}
