//! Leaves of the propagating Legendrian over geodesics of the cross
//! section, and the contact-form residual along them.

use crate::error::{Error, Result};
use crate::ode::{integrate, OdeOptions};
use std::f64::consts::PI;

/// Unit-speed geodesic of the cross section, in ambient coordinates.
#[derive(Debug, Clone, PartialEq)]
pub enum Geodesic {
    /// y(s) = y₀cos s + η₀sin s on the unit sphere.
    GreatCircle { y0: Vec<f64>, eta0: Vec<f64> },
    /// y(s) = y₀ + η₀s on the flat torus (ℝ/2πℤ)^d.
    TorusLine { y0: Vec<f64>, eta0: Vec<f64> },
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

impl Geodesic {
    /// Normalizes y₀ and makes η₀ a unit tangent at y₀.
    pub fn great_circle(y0: &[f64], eta0: &[f64]) -> Result<Self> {
        if y0.len() != eta0.len() || y0.len() < 2 {
            return Err(Error::Domain("great circle needs two vectors of equal dimension ≥ 2".into()));
        }
        let ny = norm(y0);
        if ny == 0.0 {
            return Err(Error::Domain("base point is zero".into()));
        }
        let y: Vec<f64> = y0.iter().map(|v| v / ny).collect();
        let p = dot(&y, eta0);
        let t: Vec<f64> = eta0.iter().zip(&y).map(|(e, yy)| e - p * yy).collect();
        let nt = norm(&t);
        if nt < 1e-12 * norm(eta0).max(1.0) {
            return Err(Error::Domain("direction is parallel to the base point".into()));
        }
        Ok(Geodesic::GreatCircle { y0: y, eta0: t.iter().map(|v| v / nt).collect() })
    }

    pub fn torus_line(y0: &[f64], eta0: &[f64]) -> Result<Self> {
        if y0.len() != eta0.len() || y0.is_empty() {
            return Err(Error::Domain("torus line needs two vectors of equal dimension".into()));
        }
        let n = norm(eta0);
        if n == 0.0 {
            return Err(Error::Domain("direction is zero".into()));
        }
        Ok(Geodesic::TorusLine { y0: y0.to_vec(), eta0: eta0.iter().map(|v| v / n).collect() })
    }

    /// (y(s), η(s)); torus positions are left unwrapped.
    fn at(&self, s: f64) -> (Vec<f64>, Vec<f64>) {
        match self {
            Geodesic::GreatCircle { y0, eta0 } => {
                let (sn, cs) = s.sin_cos();
                let y = y0.iter().zip(eta0).map(|(a, b)| a * cs + b * sn).collect();
                let eta = y0.iter().zip(eta0).map(|(a, b)| -a * sn + b * cs).collect();
                (y, eta)
            }
            Geodesic::TorusLine { y0, eta0 } => (y0.iter().zip(eta0).map(|(a, b)| a + b * s).collect(), eta0.clone()),
        }
    }

    fn wrap(&self, y: Vec<f64>) -> Vec<f64> {
        match self {
            Geodesic::GreatCircle { .. } => y,
            Geodesic::TorusLine { .. } => y.into_iter().map(|v| v.rem_euclid(2.0 * PI)).collect(),
        }
    }
}

/// A point of the leaf over a geodesic at parameters (s, s′).
#[derive(Debug, Clone, PartialEq)]
pub struct LeafPoint {
    pub s: f64,
    pub s_prime: f64,
    pub y: Vec<f64>,
    pub y_prime: Vec<f64>,
    pub mu: Vec<f64>,
    pub mu_prime: Vec<f64>,
    pub nu: f64,
    pub nu_prime: f64,
    pub sigma: f64,
}

/// Unwrapped coordinates (y, y′, ν, ν′, μ, μ′, σ).
struct Raw {
    y: Vec<f64>,
    yp: Vec<f64>,
    mu: Vec<f64>,
    mup: Vec<f64>,
    nu: f64,
    nup: f64,
    sigma: f64,
}

fn raw(g: &Geodesic, s: f64, sp: f64) -> Raw {
    let (y, eta) = g.at(s);
    let (yp, etap) = g.at(sp);
    let (ss, ssp) = (s.sin(), sp.sin());
    Raw {
        y,
        yp,
        mu: eta.iter().map(|e| e * ss).collect(),
        mup: etap.iter().map(|e| -e * ssp).collect(),
        nu: -s.cos(),
        nup: sp.cos(),
        sigma: ssp / ss,
    }
}

fn check_interior(s: f64, sp: f64) -> Result<()> {
    for v in [s, sp] {
        if v == 0.0 || v == PI {
            return Err(Error::Boundary(format!("leaf parameter {v} is an endpoint of [0, π]")));
        }
        if !(v > 0.0 && v < PI) {
            return Err(Error::Domain(format!("leaf parameter {v} outside (0, π)")));
        }
    }
    Ok(())
}

pub fn leaf_sample(g: &Geodesic, s: f64, s_prime: f64) -> Result<LeafPoint> {
    check_interior(s, s_prime)?;
    let r = raw(g, s, s_prime);
    Ok(LeafPoint {
        s,
        s_prime,
        y: g.wrap(r.y),
        y_prime: g.wrap(r.yp),
        mu: r.mu,
        mu_prime: r.mup,
        nu: r.nu,
        nu_prime: r.nup,
        sigma: r.sigma,
    })
}

/// Contact form μ·dy − dν + σ(μ′·dy′ − dν′) on the four tangent
/// directions, by central differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactResiduals {
    pub d_s: f64,
    pub d_s_prime: f64,
    /// sin s ∂_s
    pub v_l: f64,
    /// sin s′ ∂_{s′}
    pub v_r: f64,
}

impl ContactResiduals {
    pub fn max(&self) -> f64 {
        self.d_s.abs().max(self.d_s_prime.abs()).max(self.v_l.abs()).max(self.v_r.abs())
    }
}

pub fn contact_residuals(g: &Geodesic, s: f64, s_prime: f64, step: f64) -> Result<ContactResiduals> {
    if !(step > 0.0) {
        return Err(Error::Domain(format!("step must be positive, got {step}")));
    }
    check_interior(s - step, s_prime)?;
    check_interior(s + step, s_prime)?;
    check_interior(s, s_prime - step)?;
    check_interior(s, s_prime + step)?;
    let at = raw(g, s, s_prime);
    let form = |a: &Raw, b: &Raw| -> f64 {
        let dy: f64 = at.mu.iter().zip(a.y.iter().zip(&b.y)).map(|(m, (p, q))| m * (p - q)).sum();
        let dyp: f64 = at.mup.iter().zip(a.yp.iter().zip(&b.yp)).map(|(m, (p, q))| m * (p - q)).sum();
        (dy - (a.nu - b.nu) + at.sigma * (dyp - (a.nup - b.nup))) / (2.0 * step)
    };
    let d_s = form(&raw(g, s + step, s_prime), &raw(g, s - step, s_prime));
    let d_sp = form(&raw(g, s, s_prime + step), &raw(g, s, s_prime - step));
    Ok(ContactResiduals { d_s, d_s_prime: d_sp, v_l: s.sin() * d_s, v_r: s_prime.sin() * d_sp })
}

/// Largest contact-form residual over the coordinate and flow directions.
pub fn contact_check(g: &Geodesic, s: f64, s_prime: f64, step: f64) -> Result<f64> {
    Ok(contact_residuals(g, s, s_prime, step)?.max())
}

/// Closed form of the cone geodesic at distance r₀ from the tip:
/// (r, arc length) = (r₀ csc s, −r₀ cot s).
pub fn cone_geodesic(r0: f64, s: f64) -> (f64, f64) {
    (r0 / s.sin(), -r0 / s.tan())
}

/// Integrates r″ = rθ′², θ″ = −2r′θ′/r in arc length from the point of
/// closest approach (θ = π/2) and returns the largest deviation of
/// (r, θ) from the closed form at the given arc lengths.
pub fn cone_geodesic_deviation(r0: f64, arc_lengths: &[f64]) -> Result<f64> {
    if !(r0 > 0.0) {
        return Err(Error::Domain(format!("r0 must be positive, got {r0}")));
    }
    let mut worst: f64 = 0.0;
    for dir in [1.0, -1.0] {
        let mut outs: Vec<f64> = arc_lengths.iter().filter(|&&t| t * dir > 0.0).copied().collect();
        outs.sort_by(|a, b| (a * dir).total_cmp(&(b * dir)));
        if outs.is_empty() {
            continue;
        }
        let opts = OdeOptions { rtol: 1e-13, ..OdeOptions::default() };
        let tr = integrate(
            |_, y: &[f64; 4]| [y[2], y[3], y[0] * y[3] * y[3], -2.0 * y[2] * y[3] / y[0]],
            0.0,
            [r0, PI / 2.0, 0.0, 1.0 / r0],
            &outs,
            opts,
        )?;
        for (tau, y) in outs.iter().zip(&tr.outputs) {
            let (r, arc) = cone_geodesic(r0, y[1]);
            worst = worst.max((r - y[0]).abs() / r).max((arc - tau).abs() / r0.max(tau.abs()));
        }
    }
    Ok(worst)
}
