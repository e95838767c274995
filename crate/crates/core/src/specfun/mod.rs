//! Special functions: Γ, Bessel J/Y, Hankel, modified I/K for real order
//! ν ≥ 0 and positive argument.
//!
//! Regimes: the ascending series for J and I when z²/4 ≤ (ν+1)/2 (every
//! term at most half the previous one), continued fractions with Temme or
//! Steed evaluation otherwise. Overflow is reported as [`Error::Range`];
//! underflow returns 0.

mod bessel;
mod gamma;

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::PI;

pub use bessel::JyValues;

/// Complex kernel value (Hankel functions, resolvents).
pub type ComplexValue = Complex64;

/// Bessel order: finite and nonnegative.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Order(f64);

impl Order {
    pub fn new(nu: f64) -> Result<Self> {
        if nu.is_finite() && nu >= 0.0 {
            Ok(Order(nu))
        } else {
            Err(Error::Domain(format!("Bessel order must be finite and >= 0, got {nu}")))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Order {
    type Error = Error;
    fn try_from(nu: f64) -> Result<Self> {
        Order::new(nu)
    }
}

fn check_arg(z: f64) -> Result<()> {
    if z.is_finite() && z > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("argument must be finite and positive, got {z}")))
    }
}

fn finite(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Range(format!("{what} overflows")))
    }
}

/// Γ(x) for x > 0, relative error around 1e-15.
pub fn gamma(x: f64) -> Result<f64> {
    if !(x.is_finite() && x > 0.0) {
        return Err(Error::Domain(format!("gamma needs finite x > 0, got {x}")));
    }
    finite(gamma::gamma_real(x), "gamma")
}

/// ln Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x.is_finite() && x > 0.0) {
        return Err(Error::Domain(format!("ln_gamma needs finite x > 0, got {x}")));
    }
    Ok(gamma::ln_gamma_pos(x))
}

/// ln[(z/2)^ν / Γ(ν+1)], the log of the leading small-argument term of J_ν.
pub fn ln_j_leading(nu: Order, z: f64) -> f64 {
    let nu = nu.get();
    if nu == 0.0 {
        0.0
    } else {
        nu * (0.5 * z).ln() - gamma::ln_gamma_pos(nu + 1.0)
    }
}

fn j_leading(nu: f64, z: f64) -> f64 {
    if nu < 100.0 {
        let v = (0.5 * z).powf(nu) / gamma::gamma_real(nu + 1.0);
        if v.is_normal() {
            return v;
        }
    }
    (nu * (0.5 * z).ln() - gamma::ln_gamma_pos(nu + 1.0)).exp()
}

fn use_series(nu: f64, z: f64) -> bool {
    0.25 * z * z <= 0.5 * (nu + 1.0)
}

/// J_ν(z).
pub fn bessel_j(nu: Order, z: f64) -> Result<f64> {
    check_arg(z)?;
    let n = nu.get();
    if use_series(n, z) {
        return Ok(j_leading(n, z) * bessel::series_tail(n, z, 1.0));
    }
    Ok(bessel::bessjy(n, z)?.j)
}

/// J_ν, Y_ν and their derivatives.
pub fn bessel_jy(nu: Order, z: f64) -> Result<JyValues> {
    check_arg(z)?;
    bessel::bessjy(nu.get(), z)
}

/// Y_ν(z).
pub fn bessel_y(nu: Order, z: f64) -> Result<f64> {
    Ok(bessel_jy(nu, z)?.y)
}

/// H⁽¹⁾_ν(z) = J_ν(z) + iY_ν(z).
pub fn hankel1(nu: Order, z: f64) -> Result<ComplexValue> {
    let v = bessel_jy(nu, z)?;
    let j = if use_series(nu.get(), z) {
        bessel_j(nu, z)?
    } else {
        v.j
    };
    Ok(Complex64::new(j, v.y))
}

const LN_BIG: f64 = 575.646_273_248_511_4; // ln 1e250

/// J_ν(z) as (mantissa, k) with J = mantissa·e^{k·LN_BIG}.
fn j_split(n: f64, z: f64) -> Result<(f64, i32)> {
    if use_series(n, z) {
        let l = n * (0.5 * z).ln() - gamma::ln_gamma_pos(n + 1.0);
        let k = (l / LN_BIG).round() as i32;
        let m = (l - k as f64 * LN_BIG).exp() * bessel::series_tail(n, z, 1.0);
        return Ok((m, k));
    }
    let (v, je, _) = bessel::bessjy_scaled(n, z)?;
    Ok((v.j, je))
}

fn join(m1: f64, m2: f64, k: i32) -> f64 {
    let m = m1 * m2;
    if m == 0.0 || m1 == 0.0 || m2 == 0.0 {
        0.0
    } else {
        (m1.abs().ln() + m2.abs().ln() + k as f64 * LN_BIG).exp().copysign(m1.signum() * m2.signum())
    }
}

/// J_ν(a)·H⁽¹⁾_ν(b). Stays finite at large orders where J_ν(a) underflows
/// and Y_ν(b) overflows but the product does not.
pub fn bessel_j_hankel1_product(nu: Order, a: f64, b: f64) -> Result<ComplexValue> {
    check_arg(a)?;
    check_arg(b)?;
    let n = nu.get();
    let (ma, ka) = j_split(n, a)?;
    let (mb, kb) = j_split(n, b)?;
    let (v, _, ye) = bessel::bessjy_scaled(n, b)?;
    let re = join(ma, mb, ka + kb);
    let im = join(ma, v.y, ka + ye);
    if !im.is_finite() {
        return Err(Error::Range(format!("J_{n}({a})·Y_{n}({b}) overflows")));
    }
    Ok(Complex64::new(re, im))
}

/// J_ν, Y_ν and derivatives with separated exponents: the true values are
/// (j, jp)·e^{ln_j} and (y, yp)·e^{ln_y}. Never overflows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogScaledJy {
    pub j: f64,
    pub jp: f64,
    pub ln_j: f64,
    pub y: f64,
    pub yp: f64,
    pub ln_y: f64,
}

/// [`bessel_jy`] in log-scaled form.
pub fn bessel_jy_log_scaled(nu: Order, z: f64) -> Result<LogScaledJy> {
    check_arg(z)?;
    let n = nu.get();
    let (v, je, ye) = bessel::bessjy_scaled(n, z)?;
    let (mut j, mut jp, mut ln_j) = (v.j, v.jp, je as f64 * LN_BIG);
    if use_series(n, z) {
        let (m, k) = j_split(n, z)?;
        // the continued fraction's J'/J ratio is accurate here
        jp = m * (v.jp / v.j);
        j = m;
        ln_j = k as f64 * LN_BIG;
    }
    Ok(LogScaledJy { j, jp, ln_j, y: v.y, yp: v.yp, ln_y: ye as f64 * LN_BIG })
}

/// H⁽²⁾_ν(z), the complex conjugate of [`hankel1`].
pub fn hankel2(nu: Order, z: f64) -> Result<ComplexValue> {
    Ok(hankel1(nu, z)?.conj())
}

/// I_ν(z).
pub fn bessel_i(nu: Order, z: f64) -> Result<f64> {
    check_arg(z)?;
    let n = nu.get();
    if use_series(n, z) {
        return Ok(j_leading(n, z) * bessel::series_tail(n, z, -1.0));
    }
    let v = bessel::bessik(n, z)?;
    let i = if v.scaled { v.i * z.exp() } else { v.i };
    finite(i, "I")
}

/// K_ν(z).
pub fn bessel_k(nu: Order, z: f64) -> Result<f64> {
    check_arg(z)?;
    let v = bessel::bessik(nu.get(), z)?;
    let k = if v.scaled { v.k * (-z).exp() } else { v.k };
    finite(k, "K")
}

/// I_ν(z)·K_ν(z′) for z ≤ z′, evaluated with the exponentials combined
/// so that the product stays finite when the factors would not.
pub fn bessel_ik_product(nu: Order, z: f64, z_prime: f64) -> Result<f64> {
    check_arg(z)?;
    check_arg(z_prime)?;
    let n = nu.get();
    let a = bessel::bessik(n, z)?;
    let b = bessel::bessik(n, z_prime)?;
    let mut e = 0.0;
    if a.scaled {
        e += z;
    }
    if b.scaled {
        e -= z_prime;
    }
    let i = if use_series(n, z) && !a.scaled {
        j_leading(n, z) * bessel::series_tail(n, z, -1.0)
    } else {
        a.i
    };
    finite(i * b.k * e.exp(), "I K product")
}

/// Leading small-argument terms: ((z/2)^ν/Γ(ν+1), Γ(ν)(z/2)^{−ν}/(iπ)).
/// The Hankel term is logarithmic when ν = 0 and is rejected.
pub fn small_arg_leading(nu: Order, z: f64) -> Result<(f64, ComplexValue)> {
    check_arg(z)?;
    let n = nu.get();
    if n == 0.0 {
        return Err(Error::LogLeadingOrder);
    }
    let j = j_leading(n, z);
    let h_mag = if n < 100.0 {
        gamma::gamma_real(n) * (0.5 * z).powf(-n) / PI
    } else {
        (gamma::ln_gamma_pos(n) - n * (0.5 * z).ln()).exp() / PI
    };
    let h_mag = finite(h_mag, "Hankel leading term")?;
    Ok((j, Complex64::new(0.0, -h_mag)))
}
