//! Gamma-gamma turbulence: shape parameters from link physics, density,
//! moments and scintillation index.

use crate::error::{Error, Result};
use crate::real::{c, Real};
use crate::specfun::{ln_bessel_k, ln_gamma, ln_gamma_ratio};

/// Physical description of one optical path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtmosphericLink<T> {
    /// Refractive-index structure constant C_n², m^(-2/3).
    pub cn2: T,
    /// Wavelength, m.
    pub wavelength: T,
    /// Propagation distance L, m.
    pub distance: T,
    /// Receiver aperture diameter D, m.
    pub aperture: T,
}

impl<T: Real> AtmosphericLink<T> {
    pub fn new(cn2: T, wavelength: T, distance: T, aperture: T) -> Result<Self> {
        let link = Self {
            cn2,
            wavelength,
            distance,
            aperture,
        };
        link.validate()?;
        Ok(link)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("cn2", self.cn2),
            ("wavelength", self.wavelength),
            ("distance", self.distance),
            ("aperture", self.aperture),
        ] {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::Config(format!("link {name} must be positive and finite, got {v}")));
            }
        }
        if self.cn2 < c(1e-17) || self.cn2 > c(1e-13) {
            log::warn!(
                "C_n^2 = {:e} is outside the usual weak-to-strong range [1e-17, 1e-13]",
                self.cn2.f64()
            );
        }
        Ok(())
    }

    /// Optical wave number 2π/λ.
    pub fn wavenumber(&self) -> T {
        (T::PI() + T::PI()) / self.wavelength
    }

    /// Aperture parameter d = sqrt(k D² / 4L).
    pub fn aperture_param(&self) -> T {
        (self.wavenumber() * self.aperture * self.aperture / (c::<T>(4.0) * self.distance)).sqrt()
    }
}

/// Fading law of one sub-channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaGammaParams<T> {
    /// Small-scale shape.
    pub a: T,
    /// Large-scale shape.
    pub b: T,
    /// Mean irradiance Ω.
    pub omega: T,
}

impl<T: Real> GammaGammaParams<T> {
    pub fn new(a: T, b: T, omega: T) -> Result<Self> {
        let p = Self { a, b, omega };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > T::zero() && self.b > T::zero() && self.omega > T::zero())
            || !(self.a.is_finite() && self.b.is_finite() && self.omega.is_finite())
        {
            return Err(Error::Config(format!(
                "gamma-gamma parameters must be positive and finite: a={}, b={}, omega={}",
                self.a, self.b, self.omega
            )));
        }
        Ok(())
    }

    /// Shapes derived from `link`, with mean irradiance `omega`.
    pub fn from_link(link: &AtmosphericLink<T>, omega: T) -> Result<Self> {
        let (a, b) = gg_shape_params(link)?;
        Self::new(a, b, omega)
    }

    pub fn scintillation_index(&self) -> T {
        scintillation_index(self.a, self.b)
    }
}

/// Rytov variance 0.492 C_n² k^(7/6) L^(11/6).
pub fn rytov_variance<T: Real>(link: &AtmosphericLink<T>) -> Result<T> {
    link.validate()?;
    Ok(c::<T>(0.492)
        * link.cn2
        * link.wavenumber().powf(c(7.0 / 6.0))
        * link.distance.powf(c(11.0 / 6.0)))
}

/// Shapes (a, b) for a spherical wave with aperture averaging.
///
/// Both are 1/(e^u - 1) of a small exponent u when turbulence is weak, so
/// `exp_m1` keeps them finite and accurate as σ² → 0.
pub fn gg_shape_params<T: Real>(link: &AtmosphericLink<T>) -> Result<(T, T)> {
    let s2 = rytov_variance(link)?;
    let d = link.aperture_param();
    let d2 = d * d;
    let s12_5 = s2.powf(c(6.0 / 5.0));
    let one = T::one();

    let ua = c::<T>(0.49) * s2 / (one + c::<T>(0.18) * d2 + c::<T>(0.56) * s12_5).powf(c(7.0 / 6.0));
    let ub = c::<T>(0.51) * s2 * (one + c::<T>(0.69) * s12_5).powf(c(-5.0 / 6.0))
        / (one + c::<T>(0.9) * d2 + c::<T>(0.62) * d2 * s12_5).powf(c(5.0 / 6.0));

    let shape = |u: T, term: &str| -> Result<T> {
        let e = u.exp_m1();
        let v = e.recip();
        if !e.is_finite() || !(v > T::zero()) || !v.is_finite() {
            return Err(Error::Overflow(format!(
                "{term} exponent {} gives no finite positive shape",
                u
            )));
        }
        Ok(v)
    };
    Ok((shape(ua, "small-scale")?, shape(ub, "large-scale")?))
}

/// 1/a + 1/b + 1/(ab).
pub fn scintillation_index<T: Real>(a: T, b: T) -> T {
    a.recip() + b.recip() + (a * b).recip()
}

/// ln of the gamma-gamma density; -∞ for x <= 0.
pub fn gg_ln_pdf<T: Real>(x: T, p: &GammaGammaParams<T>) -> T {
    if !(x > T::zero()) {
        return T::neg_infinity();
    }
    let (a, b, w) = (p.a, p.b, p.omega);
    let ab = a * b;
    let half_sum = c::<T>(0.5) * (a + b);
    let arg = c::<T>(2.0) * (ab * x / w).sqrt();
    let (Ok(lga), Ok(lgb), Ok(lk)) = (ln_gamma(a), ln_gamma(b), ln_bessel_k(a - b, arg)) else {
        return T::nan();
    };
    T::LN_2() + half_sum * (ab / w).ln() - lga - lgb + (half_sum - T::one()) * x.ln() + lk
}

/// Gamma-gamma density; 0 for x <= 0.
pub fn gg_pdf<T: Real>(x: T, p: &GammaGammaParams<T>) -> T {
    if !(x > T::zero()) {
        return T::zero();
    }
    gg_ln_pdf(x, p).exp()
}

/// Gamma-gamma CDF when one shape is a positive integer n:
/// 1 - Σ_{k<n} 2 z^((k+s)/2) K_{s-k}(2√z) / (k! Γ(s)), z = abx/Ω, s the
/// other shape.
pub fn gg_cdf<T: Real>(x: T, p: &GammaGammaParams<T>) -> Result<T> {
    if !(x > T::zero()) {
        return Ok(T::zero());
    }
    let is_int = |v: T| v == v.round() && v <= c(1e6);
    let (n, s) = if is_int(p.a) {
        (p.a, p.b)
    } else if is_int(p.b) {
        (p.b, p.a)
    } else {
        return Err(Error::domain("gg_cdf", format!("needs an integer shape, got ({}, {})", p.a, p.b)));
    };
    let z = p.a * p.b * x / p.omega;
    let (ln_z, arg) = (z.ln(), c::<T>(2.0) * z.sqrt());
    let lg_s = ln_gamma(s)?;
    let mut tail = T::zero();
    let mut k = T::zero();
    while k < n {
        let ln_t = T::LN_2() + c::<T>(0.5) * (k + s) * ln_z + ln_bessel_k(s - k, arg)? - ln_gamma(k + T::one())? - lg_s;
        tail = tail + ln_t.exp();
        k = k + T::one();
    }
    Ok((T::one() - tail).max(T::zero()))
}

/// E(I^q) = Γ(a+q)Γ(b+q) / (Γ(a)Γ(b)) · (ab/Ω)^(-q).
pub fn gg_moment<T: Real>(q: T, p: &GammaGammaParams<T>) -> Result<T> {
    if !(p.a + q > T::zero() && p.b + q > T::zero()) {
        return Err(Error::domain(
            "gg_moment",
            format!("order {} needs q > -min(a, b) = {}", q, -p.a.min(p.b)),
        ));
    }
    // ratios rather than differences: the shapes grow without bound as
    // turbulence weakens
    let ln = (ln_gamma_ratio(p.a, q)? - q * p.a.ln()) + (ln_gamma_ratio(p.b, q)? - q * p.b.ln()) + q * p.omega.ln();
    Ok(ln.exp())
}
