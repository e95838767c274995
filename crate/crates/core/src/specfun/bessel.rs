//! Real-order Bessel kernels.
//!
//! J, Y: ratio J'/J from the first continued fraction, downward recurrence
//! to an order μ ∈ [-1/2, 1/2], then Temme's series (x < 2) or Steed's
//! complex continued fraction (x ≥ 2) for Y_μ, Y_{μ+1}, and upward
//! recurrence for Y. I, K: same structure with Temme / Steed for K.
//! Recurrences rescale to stay in range.

use super::gamma::temme_gammas;
use crate::error::{Error, Result};
use std::f64::consts::PI;

const EPS: f64 = 1e-16;
const FPMIN: f64 = 1e-300;
const BIG: f64 = 1e250;
const MAXIT: usize = 2_000_000;
const XMIN: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JyValues {
    pub j: f64,
    pub y: f64,
    pub jp: f64,
    pub yp: f64,
}

/// I and K with exponential scaling factored out:
/// I = i_scaled·e^{x·scale}, K = k_scaled·e^{−x·scale}, scale ∈ {0, 1}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct IkScaled {
    pub i: f64,
    pub k: f64,
    pub ip: f64,
    pub kp: f64,
    pub scaled: bool,
}

fn cf1_jy(xnu: f64, x: f64) -> Result<(f64, f64)> {
    // returns (h = J'_ν/J_ν, sign of J_ν relative to the start)
    let xi = 1.0 / x;
    let xi2 = 2.0 * xi;
    let mut isign = 1.0;
    let mut h = (xnu * xi).max(FPMIN);
    let mut b = xi2 * xnu;
    let mut d = 0.0;
    let mut c = h;
    for _ in 0..MAXIT {
        b += xi2;
        d = b - d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = b - 1.0 / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = c * d;
        h *= del;
        if d < 0.0 {
            isign = -isign;
        }
        if (del - 1.0).abs() < EPS {
            return Ok((h, isign));
        }
    }
    Err(Error::Range(format!("J continued fraction did not converge at x = {x}")))
}

/// Hankel's large-argument expansion: (J, Y), or None if the asymptotic
/// series does not reach full precision.
fn hankel_asymptotic(nu: f64, x: f64) -> Option<(f64, f64)> {
    let mu = 4.0 * nu * nu;
    let (mut p, mut q) = (1.0, 0.0);
    let mut t = 1.0f64;
    let mut k = 1usize;
    let mut shrinking = false;
    loop {
        let odd = (2 * k - 1) as f64;
        let tn = t * (mu - odd * odd) / (k as f64 * 8.0 * x);
        if tn == 0.0 {
            break;
        }
        // largest term bounds the cancellation error; the series diverges
        // once terms grow again after shrinking
        if tn.abs() > 1e4 || (shrinking && tn.abs() > t.abs()) {
            return None;
        }
        shrinking |= tn.abs() < t.abs();
        t = tn;
        match k % 4 {
            1 => q += t,
            2 => p -= t,
            3 => q -= t,
            _ => p += t,
        }
        if t.abs() < 1e-17 {
            break;
        }
        k += 1;
        if k > 200 {
            return None;
        }
    }
    // chi = x - pi(nu/2 + 1/4), phase offset reduced exactly mod 2
    let off = PI * (0.5 * nu + 0.25).rem_euclid(2.0);
    let (sx, cx) = x.sin_cos();
    let (so, co) = off.sin_cos();
    let cchi = cx * co + sx * so;
    let schi = sx * co - cx * so;
    let amp = (2.0 / (PI * x)).sqrt();
    Some((amp * (p * cchi - q * schi), amp * (p * schi + q * cchi)))
}

pub(crate) fn bessjy(xnu: f64, x: f64) -> Result<JyValues> {
    let (v, je, ye) = bessjy_scaled(xnu, x)?;
    let (js, ys) = (BIG.powi(je), BIG.powi(ye));
    let (y, yp) = (v.y * ys, v.yp * ys);
    if !y.is_finite() || !yp.is_finite() {
        return Err(Error::Range(format!("Y_{xnu}({x}) overflows")));
    }
    Ok(JyValues { j: v.j * js, jp: v.jp * js, y, yp })
}

/// J, Y with the mantissas kept in range: the true J is `j·BIG^je` and the
/// true Y is `y·BIG^ye`.
pub(crate) fn bessjy_scaled(xnu: f64, x: f64) -> Result<(JyValues, i32, i32)> {
    if x >= 25.0 {
        if let (Some((j, y)), Some((j1, y1))) =
            (hankel_asymptotic(xnu, x), hankel_asymptotic(xnu + 1.0, x))
        {
            let jp = xnu / x * j - j1;
            let yp = xnu / x * y - y1;
            return Ok((JyValues { j, y, jp, yp }, 0, 0));
        }
    }
    if x >= XMIN && xnu >= 1.0 && xnu <= x {
        return Ok((forward_jy(xnu, x)?, 0, 0));
    }
    // always recur down to |mu| <= 1/2, where Temme and Steed are accurate
    let nl = (xnu + 0.5) as usize;
    let xmu = xnu - nl as f64;
    let xmu2 = xmu * xmu;
    let xi = 1.0 / x;
    let xi2 = 2.0 * xi;
    let w = xi2 / PI;
    let (h, isign) = cf1_jy(xnu, x)?;

    let mut rjl = isign;
    let mut rjpl = h * rjl;
    let rjl1 = rjl;
    let rjp1 = rjpl;
    let mut fact = xnu * xi;
    let mut je = 0i32;
    for _ in 0..nl {
        let rjtemp = fact * rjl + rjpl;
        fact -= xi;
        rjpl = fact * rjtemp - rjl;
        rjl = rjtemp;
        if rjl.abs() > BIG {
            rjl /= BIG;
            rjpl /= BIG;
            je -= 1;
        }
    }
    if rjl == 0.0 {
        rjl = EPS;
    }
    let f = rjpl / rjl;

    let (rjmu, rymu, mut ry1);
    if x < XMIN {
        let x2 = 0.5 * x;
        let pimu = PI * xmu;
        let fact = if pimu.abs() < EPS { 1.0 } else { pimu / pimu.sin() };
        let d = -x2.ln();
        let e = xmu * d;
        let fact2 = if e.abs() < EPS { 1.0 } else { e.sinh() / e };
        let (gam1, gam2, gampl, gammi) = temme_gammas(xmu);
        let mut ff = 2.0 / PI * fact * (gam1 * e.cosh() + gam2 * fact2 * d);
        let e = e.exp();
        let mut p = e / (gampl * PI);
        let mut q = 1.0 / (e * PI * gammi);
        let pimu2 = 0.5 * pimu;
        let fact3 = if pimu2.abs() < EPS { 1.0 } else { pimu2.sin() / pimu2 };
        let r = PI * pimu2 * fact3 * fact3;
        let mut c = 1.0;
        let d = -x2 * x2;
        let mut sum = ff + r * q;
        let mut sum1 = p;
        let mut converged = false;
        for i in 1..MAXIT {
            let fi = i as f64;
            ff = (fi * ff + p + q) / (fi * fi - xmu2);
            c *= d / fi;
            p /= fi - xmu;
            q /= fi + xmu;
            let del = c * (ff + r * q);
            sum += del;
            let del1 = c * p - fi * del;
            sum1 += del1;
            if del.abs() < (1.0 + sum.abs()) * EPS {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Range("Temme series did not converge".into()));
        }
        rymu = -sum;
        ry1 = -sum1 * xi2;
        let rymup = xmu * xi * rymu - ry1;
        rjmu = w / (rymup - f * rymu);
    } else {
        let mut a = 0.25 - xmu2;
        let mut p = -0.5 * xi;
        let mut q = 1.0;
        let br = 2.0 * x;
        let mut bi = 2.0;
        let mut fact = a * xi / (p * p + q * q);
        let mut cr = br + q * fact;
        let mut ci = bi + p * fact;
        let mut den = br * br + bi * bi;
        let mut dr = br / den;
        let mut di = -bi / den;
        let mut dlr = cr * dr - ci * di;
        let mut dli = cr * di + ci * dr;
        let mut temp = p * dlr - q * dli;
        q = p * dli + q * dlr;
        p = temp;
        let mut converged = false;
        for i in 1..MAXIT {
            a += 2.0 * i as f64;
            bi += 2.0;
            dr = a * dr + br;
            di = a * di + bi;
            if dr.abs() + di.abs() < FPMIN {
                dr = FPMIN;
            }
            fact = a / (cr * cr + ci * ci);
            cr = br + cr * fact;
            ci = bi - ci * fact;
            if cr.abs() + ci.abs() < FPMIN {
                cr = FPMIN;
            }
            den = dr * dr + di * di;
            dr /= den;
            di /= -den;
            dlr = cr * dr - ci * di;
            dli = cr * di + ci * dr;
            temp = p * dlr - q * dli;
            q = p * dli + q * dlr;
            p = temp;
            if (dlr - 1.0).abs() + dli.abs() < EPS {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Range("Steed continued fraction did not converge".into()));
        }
        let gam = (p - f) / q;
        let mag = (w / ((p - f) * gam + q)).sqrt();
        rjmu = if rjl < 0.0 { -mag } else { mag };
        rymu = rjmu * gam;
        let rymup = rymu * (p + q / gam);
        ry1 = xmu * xi * rymu - rymup;
    }

    let fact = rjmu / rjl;
    let j = rjl1 * fact;
    let jp = rjp1 * fact;
    let mut ymu = rymu;
    let mut ye = 0i32;
    for i in 1..=nl {
        let rytemp = (xmu + i as f64) * xi2 * ry1 - ymu;
        ymu = ry1;
        ry1 = rytemp;
        if ry1.abs() > BIG {
            ry1 /= BIG;
            ymu /= BIG;
            ye += 1;
        }
    }
    let y = ymu;
    let yp = xnu * xi * ymu - ry1;
    Ok((JyValues { j, y, jp, yp }, je, ye))
}

/// Oscillatory region ν ≤ x: both J and Y recur upward stably from an
/// order in [0, 1).
fn forward_jy(xnu: f64, x: f64) -> Result<JyValues> {
    let steps = xnu.floor() as usize;
    let mu = xnu - steps as f64;
    let b = bessjy(mu, x)?;
    let xi = 1.0 / x;
    let (mut j0, mut y0) = (b.j, b.y);
    let (mut j1, mut y1) = (mu * xi * b.j - b.jp, mu * xi * b.y - b.yp);
    for k in 1..steps {
        let c = 2.0 * (mu + k as f64) * xi;
        let (j2, y2) = (c * j1 - j0, c * y1 - y0);
        j0 = j1;
        y0 = y1;
        j1 = j2;
        y1 = y2;
    }
    // (j0, y0) at order xnu - 1, (j1, y1) at xnu
    let jp = j0 - xnu * xi * j1;
    let yp = y0 - xnu * xi * y1;
    Ok(JyValues { j: j1, y: y1, jp, yp })
}

pub(crate) fn bessik(xnu: f64, x: f64) -> Result<IkScaled> {
    let nl = (xnu + 0.5) as usize;
    let xmu = xnu - nl as f64;
    let xmu2 = xmu * xmu;
    let xi = 1.0 / x;
    let xi2 = 2.0 * xi;

    let mut h = (xnu * xi).max(FPMIN);
    let mut b = xi2 * xnu;
    let mut d = 0.0;
    let mut c = h;
    let mut converged = false;
    for _ in 0..MAXIT {
        b += xi2;
        d = 1.0 / (b + d);
        c = b + 1.0 / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < EPS {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Range(format!("I continued fraction did not converge at x = {x}")));
    }

    let mut ril = 1.0;
    let mut ripl = h * ril;
    let mut ril1 = ril;
    let mut rip1 = ripl;
    let mut fact = xnu * xi;
    for _ in 0..nl {
        let ritemp = fact * ril + ripl;
        fact -= xi;
        ripl = fact * ritemp + ril;
        ril = ritemp;
        if ril.abs() > BIG {
            ril /= BIG;
            ripl /= BIG;
            ril1 /= BIG;
            rip1 /= BIG;
        }
    }
    let f = ripl / ril;

    let (rkmu, mut rk1, scaled);
    if x < XMIN {
        let x2 = 0.5 * x;
        let pimu = PI * xmu;
        let fact = if pimu.abs() < EPS { 1.0 } else { pimu / pimu.sin() };
        let d = -x2.ln();
        let e = xmu * d;
        let fact2 = if e.abs() < EPS { 1.0 } else { e.sinh() / e };
        let (gam1, gam2, gampl, gammi) = temme_gammas(xmu);
        let mut ff = fact * (gam1 * e.cosh() + gam2 * fact2 * d);
        let mut sum = ff;
        let e = e.exp();
        let mut p = 0.5 * e / gampl;
        let mut q = 0.5 / (e * gammi);
        let mut c = 1.0;
        let d = x2 * x2;
        let mut sum1 = p;
        for i in 1..MAXIT {
            let fi = i as f64;
            ff = (fi * ff + p + q) / (fi * fi - xmu2);
            c *= d / fi;
            p /= fi - xmu;
            q /= fi + xmu;
            let del = c * ff;
            sum += del;
            let del1 = c * (p - fi * ff);
            sum1 += del1;
            if del.abs() < sum.abs() * EPS {
                break;
            }
        }
        rkmu = sum;
        rk1 = sum1 * xi2;
        scaled = false;
    } else {
        let mut b = 2.0 * (1.0 + x);
        let mut d = 1.0 / b;
        let mut h = d;
        let mut delh = d;
        let mut q1 = 0.0;
        let mut q2 = 1.0;
        let a1 = 0.25 - xmu2;
        let mut q = a1;
        let mut c = a1;
        let mut a = -a1;
        let mut s = 1.0 + q * delh;
        let mut converged = false;
        for i in 2..MAXIT {
            a -= 2.0 * (i - 1) as f64;
            c = -a * c / i as f64;
            let qnew = (q1 - b * q2) / a;
            q1 = q2;
            q2 = qnew;
            q += c * qnew;
            b += 2.0;
            d = 1.0 / (b + a * d);
            delh = (b * d - 1.0) * delh;
            h += delh;
            let dels = q * delh;
            s += dels;
            if (dels / s).abs() < EPS {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Range("Steed K continued fraction did not converge".into()));
        }
        h *= a1;
        // e^{x} K_μ(x)
        rkmu = (PI / (2.0 * x)).sqrt() / s;
        rk1 = rkmu * (xmu + x + 0.5 - h) * xi;
        scaled = true;
    }
    let rkmup = xmu * xi * rkmu - rk1;
    let rimu = xi / (f * rkmu - rkmup);
    let i = (rimu * ril1) / ril;
    let ip = (rimu * rip1) / ril;
    let mut kmu = rkmu;
    for n in 1..=nl {
        let rktemp = (xmu + n as f64) * xi2 * rk1 + kmu;
        kmu = rk1;
        rk1 = rktemp;
        if !rk1.is_finite() {
            break;
        }
    }
    let k = kmu;
    let kp = xnu * xi * kmu - rk1;
    Ok(IkScaled { i, k, ip, kp, scaled })
}

/// Ascending series Σ (−σ z²/4)^k / (k! (ν+1)_k), σ = +1 for J, −1 for I,
/// without the (z/2)^ν/Γ(ν+1) prefactor.
pub(crate) fn series_tail(nu: f64, z: f64, sign: f64) -> f64 {
    let q = -sign * 0.25 * z * z;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..500 {
        let kf = k as f64;
        term *= q / (kf * (nu + kf));
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}
