//! Modified Bessel function of the second kind, real order.
//!
//! K_μ and K_{μ+1} for |μ| <= 1/2 come from Temme's series when x < 2 and
//! from Steed's continued fraction otherwise; the requested order is then
//! reached by the (stable) upward recurrence. The recurrence is carried with
//! a running log-scale so that large orders at small arguments do not
//! overflow, which is also what makes [`ln_bessel_k`] cheap.

use crate::error::{Error, Result};
use crate::real::{c, Real};

/// Chebyshev coefficients for Γ1(μ) = (1/Γ(1-μ) - 1/Γ(1+μ)) / (2μ).
const GAM1: [f64; 7] = [
    -1.142_022_680_371_168e0,
    6.516_511_267_073_7e-3,
    3.087_090_173_086e-4,
    -3.470_626_964_9e-6,
    6.943_766_4e-9,
    3.677_95e-11,
    -1.356e-13,
];

/// Chebyshev coefficients for Γ2(μ) = (1/Γ(1-μ) + 1/Γ(1+μ)) / 2.
const GAM2: [f64; 8] = [
    1.843_740_587_300_905e0,
    -7.685_284_084_478_67e-2,
    1.271_927_136_654_6e-3,
    -4.971_736_704_2e-6,
    -3.312_611_98e-8,
    2.423_096e-10,
    -1.702e-13,
    -1.49e-15,
];

const TEMME_LIMIT: f64 = 2.0;
const MAX_ITER: usize = 100_000;

/// K_ν(x) together with an underflow flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselK<T> {
    pub value: T,
    /// Set when the true value is below the smallest positive normal number
    /// and `value` has been flushed to zero.
    pub underflow: bool,
}

/// K_ν(x) for real ν and x > 0. Symmetric in ν.
pub fn bessel_k<T: Real>(nu: T, x: T) -> Result<BesselK<T>> {
    let ln_k = ln_bessel_k(nu, x)?;
    let value = ln_k.exp();
    if value < T::min_positive_value() {
        Ok(BesselK {
            value: T::zero(),
            underflow: true,
        })
    } else {
        Ok(BesselK {
            value,
            underflow: false,
        })
    }
}

/// ln K_ν(x) for real ν and x > 0.
pub fn ln_bessel_k<T: Real>(nu: T, x: T) -> Result<T> {
    if !(x > T::zero()) || x.is_infinite() {
        return Err(Error::domain(
            "bessel_k",
            format!("requires finite x > 0, got {}", x),
        ));
    }
    if !nu.is_finite() {
        return Err(Error::domain("bessel_k", "order must be finite"));
    }
    let nu = nu.abs();
    let nl = (nu + c(0.5)).floor();
    let mu = nu - nl;
    let (mut k_mu, mut k_mu1, mut ln_scale) = if x < c(TEMME_LIMIT) {
        let (k0, k1) = temme(mu, x)?;
        (k0, k1, T::zero())
    } else {
        let (k0, k1) = steed_scaled(mu, x)?;
        (k0, k1, -x)
    };
    let two_over_x = c::<T>(2.0) / x;
    let big: T = c(1e150);
    let n = nl.to_usize().unwrap_or(0);
    for i in 1..=n {
        let next = (mu + T::from_usize_lossy(i)) * two_over_x * k_mu1 + k_mu;
        k_mu = k_mu1;
        k_mu1 = next;
        if k_mu1 > big {
            k_mu = k_mu / big;
            k_mu1 = k_mu1 / big;
            ln_scale = ln_scale + big.ln();
        }
    }
    Ok(k_mu.ln() + ln_scale)
}

fn chebev<T: Real>(coef: &[f64], x: T) -> T {
    let y2 = x + x;
    let mut d = T::zero();
    let mut dd = T::zero();
    for &cj in coef.iter().skip(1).rev() {
        let sv = d;
        d = y2 * d - dd + c(cj);
        dd = sv;
    }
    x * d - dd + c::<T>(0.5) * c(coef[0])
}

/// (Γ1, Γ2, 1/Γ(1+μ), 1/Γ(1-μ)) for |μ| <= 1/2.
fn temme_gammas<T: Real>(mu: T) -> (T, T, T, T) {
    let xx = c::<T>(8.0) * mu * mu - T::one();
    let g1 = chebev(&GAM1, xx);
    let g2 = chebev(&GAM2, xx);
    (g1, g2, g2 - mu * g1, g2 + mu * g1)
}

/// Unscaled (K_μ, K_{μ+1}) by Temme's series, x < 2.
fn temme<T: Real>(mu: T, x: T) -> Result<(T, T)> {
    let eps = T::epsilon();
    let x2 = c::<T>(0.5) * x;
    let pimu = T::PI() * mu;
    let fact = if pimu.abs() < eps {
        T::one()
    } else {
        pimu / pimu.sin()
    };
    let d = -x2.ln();
    let e = mu * d;
    let fact2 = if e.abs() < eps { T::one() } else { e.sinh() / e };
    let (gam1, gam2, gampl, gammi) = temme_gammas(mu);
    let mut ff = fact * (gam1 * e.cosh() + gam2 * fact2 * d);
    let mut sum = ff;
    let ee = e.exp();
    let mut p = c::<T>(0.5) * ee / gampl;
    let mut q = c::<T>(0.5) / (ee * gammi);
    let mut cc = T::one();
    let dsq = x2 * x2;
    let mut sum1 = p;
    let mu2 = mu * mu;
    for i in 1..MAX_ITER {
        let fi = T::from_usize_lossy(i);
        ff = (fi * ff + p + q) / (fi * fi - mu2);
        cc = cc * dsq / fi;
        p = p / (fi - mu);
        q = q / (fi + mu);
        let del = cc * ff;
        sum = sum + del;
        let del1 = cc * (p - fi * ff);
        sum1 = sum1 + del1;
        if del.abs() < sum.abs() * eps {
            return Ok((sum, sum1 * c::<T>(2.0) / x));
        }
    }
    Err(Error::Convergence {
        what: "bessel_k Temme series",
        last: sum.f64(),
        previous: f64::NAN,
    })
}

/// e^x-scaled (K_μ, K_{μ+1}) by Steed's continued fraction, x >= 2.
fn steed_scaled<T: Real>(mu: T, x: T) -> Result<(T, T)> {
    let eps = T::epsilon();
    let mu2 = mu * mu;
    let mut b = c::<T>(2.0) * (T::one() + x);
    let mut d = b.recip();
    let mut delh = d;
    let mut h = d;
    let mut q1 = T::zero();
    let mut q2 = T::one();
    let a1 = c::<T>(0.25) - mu2;
    let mut q = a1;
    let mut cc = a1;
    let mut a = -a1;
    let mut s = T::one() + q * delh;
    for i in 2..MAX_ITER {
        let fi = T::from_usize_lossy(i);
        a = a - c::<T>(2.0) * (fi - T::one());
        cc = -a * cc / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q = q + cc * qnew;
        b = b + c(2.0);
        d = (b + a * d).recip();
        delh = (b * d - T::one()) * delh;
        h = h + delh;
        let dels = q * delh;
        s = s + dels;
        if (dels / s).abs() < eps {
            let h = a1 * h;
            let k_mu = (T::PI() / (c::<T>(2.0) * x)).sqrt() / s;
            let k_mu1 = k_mu * (mu + x + c(0.5) - h) / x;
            return Ok((k_mu, k_mu1));
        }
    }
    Err(Error::Convergence {
        what: "bessel_k continued fraction",
        last: s.f64(),
        previous: f64::NAN,
    })
}
