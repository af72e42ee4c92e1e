//! Ergodic capacity E[log₂(1 + γ)] of the EGC output by quadrature, contour
//! evaluation of the closed forms, high-SNR asymptotics, and the AWGN bound.

use std::fmt;
use std::str::FromStr;

use crate::approx_iid::{snr_pdf_iid, AlphaMuFit};
use crate::approx_inid::{snr_pdf_inid, WeightTable};
use crate::error::{Error, Result};
use crate::quad::{integrate_positive_axis, QuadConfig};
use crate::real::{c, CompensatedSum, Real};
use crate::specfun::{digamma, ln_gamma, mellin_barnes_eval, ContourConfig, MellinBarnesSpec};

/// How a capacity value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Quadrature,
    ClosedForm,
    HighSnr,
    MonteCarlo,
    Awgn,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::ClosedForm,
        Method::Quadrature,
        Method::HighSnr,
        Method::MonteCarlo,
        Method::Awgn,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Quadrature => "quadrature",
            Method::ClosedForm => "closed_form",
            Method::HighSnr => "high_snr",
            Method::MonteCarlo => "monte_carlo",
            Method::Awgn => "awgn",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown method `{s}`")))
    }
}

/// A capacity value with its method and error estimate, before it is tied
/// to an SNR point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Capacity<T> {
    pub bits: T,
    /// Quadrature or contour error bound, or Monte-Carlo standard error.
    pub err_estimate: T,
    pub method: Method,
}

impl<T: Real> Capacity<T> {
    pub fn at(self, ctx: &SnrContext<T>) -> CapacityPoint<T> {
        CapacityPoint {
            rho_db: ctx.rho_db(),
            capacity_bits: self.bits,
            method: self.method,
            err_estimate: self.err_estimate,
        }
    }
}

/// Capacity at a transmit SNR, in bits/s/Hz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityPoint<T> {
    pub rho_db: T,
    pub capacity_bits: T,
    pub method: Method,
    pub err_estimate: T,
}

/// Aperture counts, conversion efficiency and transmit SNR, with the SNR
/// scale γ₀ = η²ρ/(MN)² they imply.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrContext<T> {
    pub m: u32,
    pub n: u32,
    pub eta: T,
    pub rho: T,
    pub gamma0: T,
}

pub fn db_to_linear<T: Real>(db: T) -> T {
    c::<T>(10.0).powf(db / c(10.0))
}

pub fn linear_to_db<T: Real>(x: T) -> T {
    c::<T>(10.0) * x.log10()
}

/// γ₀ = η²ρ/(MN)².
pub fn gamma0<T: Real>(m: u32, n: u32, eta: T, rho: T) -> Result<T> {
    if m == 0 || n == 0 {
        return Err(Error::Config("aperture counts must be at least 1".into()));
    }
    if !(eta > T::zero()) || !(rho > T::zero()) || !rho.is_finite() || !eta.is_finite() {
        return Err(Error::Config(format!("eta and rho must be positive, got {eta} and {rho}")));
    }
    let mn = T::from_usize_lossy((m * n) as usize);
    Ok(eta * eta * rho / (mn * mn))
}

impl<T: Real> SnrContext<T> {
    pub fn new(m: u32, n: u32, eta: T, rho: T) -> Result<Self> {
        Ok(Self {
            m,
            n,
            eta,
            rho,
            gamma0: gamma0(m, n, eta, rho)?,
        })
    }

    pub fn from_rho_db(m: u32, n: u32, eta: T, rho_db: T) -> Result<Self> {
        Self::new(m, n, eta, db_to_linear(rho_db))
    }

    /// Context whose average SNR γ̄ = γ₀(MN)² (unit per-branch means) is
    /// `gamma_bar_db`.
    pub fn from_gamma_bar_db(m: u32, n: u32, eta: T, gamma_bar_db: T) -> Result<Self> {
        Self::new(m, n, eta, db_to_linear(gamma_bar_db) / (eta * eta))
    }

    /// Context whose mean electrical SNR γ₀E(S²) is `mean_snr_db`, given E(S²).
    pub fn from_mean_snr_db(m: u32, n: u32, eta: T, mean_snr_db: T, e2: T) -> Result<Self> {
        let mn = T::from_usize_lossy((m * n) as usize);
        Self::new(m, n, eta, db_to_linear(mean_snr_db) / e2 * mn * mn / (eta * eta))
    }

    pub fn rho_db(&self) -> T {
        linear_to_db(self.rho)
    }

    pub fn links(&self) -> usize {
        (self.m * self.n) as usize
    }

    /// γ₀(MN)².
    pub fn gamma_bar(&self) -> T {
        let mn = T::from_usize_lossy(self.links());
        self.gamma0 * mn * mn
    }
}

/// log₂(1 + snr).
pub fn awgn_capacity<T: Real>(snr: T) -> T {
    snr.ln_1p() / T::LN_2()
}

/// ∫₀^∞ log₂(1+γ) f(γ) dγ for an SNR density f.
///
/// `center` is a typical SNR (the mean, say). The density is first checked to
/// integrate to one within 1e-3.
pub fn capacity_quadrature<T, F>(mut pdf: F, center: T, tolerance: T) -> Result<Capacity<T>>
where
    T: Real,
    F: FnMut(T) -> T,
{
    let norm_cfg = QuadConfig::new(c(1e-6), c(1e-6));
    let norm = integrate_positive_axis(&mut pdf, center, &norm_cfg)?;
    if !((norm.value - T::one()).abs() <= c(1e-3)) {
        return Err(Error::domain(
            "capacity_quadrature",
            format!("density integrates to {}", norm.value),
        ));
    }
    let ln2 = T::LN_2();
    let cfg = QuadConfig::new(tolerance * ln2, c::<T>(64.0) * T::epsilon());
    let r = integrate_positive_axis(|g| g.ln_1p() * pdf(g), center, &cfg)?;
    Ok(Capacity {
        bits: r.value / ln2,
        err_estimate: r.error / ln2,
        method: Method::Quadrature,
    })
}

/// Quadrature capacity under the α-μ approximation.
pub fn capacity_quadrature_iid<T: Real>(fit: &AlphaMuFit<T>, gamma0: T, tolerance: T) -> Result<Capacity<T>> {
    let center = gamma0 * fit.moment(c(2.0))?;
    capacity_quadrature(|g| snr_pdf_iid(g, fit, gamma0), center, tolerance)
}

/// Quadrature capacity under the mixture approximation. The tolerance is
/// raised to the rounding noise of the weighted sum when that is larger.
pub fn capacity_quadrature_inid<T: Real>(wt: &WeightTable<T>, gamma0: T, tolerance: T) -> Result<Capacity<T>> {
    let mean = wt.mean();
    let center = gamma0 * mean * mean;
    let floor = wt.roundoff_floor() * (T::one() + awgn_capacity(center));
    capacity_quadrature(|g| snr_pdf_inid(g, wt, gamma0), center, tolerance.max(floor))
}

/// Mellin-Barnes form of the i.i.d. closed form: returns the spec and the
/// argument r̂²γ₀/μ^(2/α).
pub fn iid_capacity_kernel<T: Real>(fit: &AlphaMuFit<T>, gamma0: T) -> Result<(MellinBarnesSpec<T>, T)> {
    let one = T::one();
    let two_over_alpha = c::<T>(2.0) / fit.alpha;
    let spec = MellinBarnesSpec::fox_h(
        1,
        3,
        &[(one, one), (one, one), (one - fit.mu, two_over_alpha)],
        &[(one, one), (T::zero(), one)],
    )?
    .with_ln_prefactor(-ln_gamma(fit.mu)? - T::LN_2().ln());
    let ln_x = c::<T>(2.0) * fit.r_hat.ln() + gamma0.ln() - two_over_alpha * fit.mu.ln();
    Ok((spec, ln_x.exp()))
}

/// Closed-form capacity of the α-μ approximation, evaluated on the contour.
pub fn capacity_iid_closed<T: Real>(fit: &AlphaMuFit<T>, gamma0: T, tolerance: T) -> Result<Capacity<T>> {
    if !(gamma0 > T::zero()) {
        return Err(Error::domain("capacity_iid_closed", format!("gamma0 must be positive, got {gamma0}")));
    }
    let (spec, x) = iid_capacity_kernel(fit, gamma0)?;
    let cfg = ContourConfig {
        omega: Some(c(-0.5)),
        tolerance,
        ..ContourConfig::default()
    };
    let v = mellin_barnes_eval(&spec, x, &cfg)?;
    Ok(Capacity {
        bits: v.value,
        err_estimate: v.error,
        method: Method::ClosedForm,
    })
}

/// Mellin-Barnes form of mixture term (i, j), i 1-based, including the
/// constant z^(2u)/(4π Γ(Lk) Γ(j) ln 2) but not the weight.
pub fn inid_term_kernel<T: Real>(
    wt: &WeightTable<T>,
    i: usize,
    j: usize,
    gamma0: T,
) -> Result<(MellinBarnesSpec<T>, T)> {
    let lk = T::from_usize_lossy(wt.total_small_scale() as usize);
    let jf = T::from_usize_lossy(j);
    let four: T = c(4.0);
    let u = (lk + jf) / four;
    let v = lk - jf;
    let theta = wt.components[i - 1].theta();
    // z = Lk m_i / (Ω_i √γ₀)
    let ln_z = lk.ln() - theta.ln() - c::<T>(0.5) * gamma0.ln();
    let spec = MellinBarnesSpec::meijer_g(
        6,
        1,
        &[-u, T::one() - u],
        &[v / four, (v + c(2.0)) / four, -v / four, -(v - c(2.0)) / four, -u, -u],
    )?;
    let ln_c = c::<T>(2.0) * u * ln_z
        - ln_gamma(lk)?
        - ln_gamma(jf)?
        - T::LN_2().ln()
        - (c::<T>(4.0) * T::PI()).ln();
    let ln_arg = c::<T>(2.0) * ln_z - c::<T>(16.0).ln();
    Ok((spec.with_ln_prefactor(ln_c), ln_arg.exp()))
}

/// Closed-form capacity of the mixture approximation: Σ w(i,j) C_ij with
/// each C_ij a Meijer-G contour integral.
///
/// Each term is evaluated to `tolerance / Σ|w|` so the weighted sum meets
/// `tolerance` despite cancellation between terms.
pub fn capacity_inid_closed<T: Real>(wt: &WeightTable<T>, gamma0: T, tolerance: T) -> Result<Capacity<T>> {
    if !(gamma0 > T::zero()) {
        return Err(Error::domain("capacity_inid_closed", format!("gamma0 must be positive, got {gamma0}")));
    }
    let term_tol = tolerance / wt.abs_sum.max(T::one());
    let mut acc = CompensatedSum::new();
    let mut err = T::zero();
    for (i, row) in wt.w.iter().enumerate() {
        for (j, &w) in row.iter().enumerate() {
            if w == T::zero() {
                continue;
            }
            let name = |e: Error| match e {
                Error::Overflow(m) => Error::Overflow(format!("term ({}, {}): {m}", i + 1, j + 1)),
                e => e,
            };
            let (spec, x) = inid_term_kernel(wt, i + 1, j + 1, gamma0).map_err(name)?;
            let cfg = ContourConfig {
                tolerance: term_tol,
                ..ContourConfig::default()
            };
            let v = mellin_barnes_eval(&spec, x, &cfg).map_err(name)?;
            if !v.value.is_finite() {
                return Err(Error::Overflow(format!("term ({}, {})", i + 1, j + 1)));
            }
            acc.add(w * v.value);
            err = err + w.abs() * v.error;
        }
    }
    Ok(Capacity {
        bits: acc.value(),
        err_estimate: err + wt.roundoff_floor(),
        method: Method::ClosedForm,
    })
}

/// High-SNR asymptote of the α-μ closed form.
pub fn capacity_iid_highsnr<T: Real>(fit: &AlphaMuFit<T>, gamma0: T) -> Result<Capacity<T>> {
    let a = fit.alpha;
    let inner = digamma(fit.mu)? - fit.mu.ln() + a * fit.r_hat.ln() + c::<T>(0.5) * a * gamma0.ln();
    Ok(Capacity {
        bits: c::<T>(2.0) / (a * T::LN_2()) * inner,
        err_estimate: T::zero(),
        method: Method::HighSnr,
    })
}

/// High-SNR asymptote of the mixture closed form.
///
/// The weights sum to one, so the parts shared by every term are taken out
/// of the alternating sum; its roundoff then cannot leak into the slope.
pub fn capacity_inid_highsnr<T: Real>(wt: &WeightTable<T>, gamma0: T) -> Result<Capacity<T>> {
    let lk = T::from_usize_lossy(wt.total_small_scale() as usize);
    let shared = digamma(lk)? - lk.ln() + c::<T>(0.5) * gamma0.ln();
    let mut acc = CompensatedSum::new();
    for (comp, row) in wt.components.iter().zip(&wt.w) {
        let ln_theta = comp.theta().ln();
        for (j, &w) in row.iter().enumerate() {
            acc.add(w * (digamma(T::from_usize_lossy(j + 1))? + ln_theta));
        }
    }
    Ok(Capacity {
        bits: c::<T>(2.0) / T::LN_2() * (shared + acc.value()),
        err_estimate: wt.roundoff_floor(),
        method: Method::HighSnr,
    })
}

/// Outcome of comparing a closed-form value against quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelfAudit<T> {
    pub discrepancy: T,
    pub allowed: T,
    pub passed: bool,
}

/// Flags a closed-form value that differs from quadrature by more than ten
/// times the combined declared error (at least ten times `tolerance`).
pub fn self_audit<T: Real>(closed: &Capacity<T>, quadrature: &Capacity<T>, tolerance: T) -> SelfAudit<T> {
    let discrepancy = (closed.bits - quadrature.bits).abs();
    let allowed = c::<T>(10.0) * tolerance.max(closed.err_estimate + quadrature.err_estimate);
    SelfAudit {
        discrepancy,
        allowed,
        passed: discrepancy <= allowed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approx_iid::{fit_alpha_mu, fit_iid_sum, sum_moments_iid};
    use crate::approx_inid::{compute_weights, InidChannelSet};
    use crate::channel::{AtmosphericLink, GammaGammaParams};

    fn fig1() -> GammaGammaParams<f64> {
        let link = AtmosphericLink::new(3e-14, 850e-9, 4000.0, 0.01).unwrap();
        GammaGammaParams::from_link(&link, 1.0).unwrap()
    }

    fn iid_quad(fit: &AlphaMuFit<f64>, g0: f64) -> Capacity<f64> {
        capacity_quadrature_iid(fit, g0, 1e-9).unwrap()
    }

    #[test]
    fn gamma0_examples() {
        assert_eq!(gamma0(1, 1, 1.0, 1.0).unwrap(), 1.0);
        assert_eq!(gamma0(2, 2, 1.0, 16.0).unwrap(), 1.0);
        let g: f64 = gamma0(2, 4, 1.0, db_to_linear(10.0)).unwrap();
        assert!((g - 10.0 / 64.0).abs() < 1e-15);
        assert!(gamma0(0, 1, 1.0, 1.0f64).is_err());
        assert!(gamma0(1, 1, 1.0, -1.0f64).is_err());
    }

    #[test]
    fn snr_axes() {
        let ctx = SnrContext::from_gamma_bar_db(2, 2, 0.5, 3.0f64).unwrap();
        assert!((linear_to_db(ctx.gamma_bar()) - 3.0).abs() < 1e-12);
        let ctx = SnrContext::from_mean_snr_db(2, 2, 1.0, 5.0f64, 20.0).unwrap();
        assert!((linear_to_db(ctx.gamma0 * 20.0) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn awgn_examples() {
        assert_eq!(awgn_capacity(0.0f64), 0.0);
        assert!((awgn_capacity(1.0f64) - 1.0).abs() < 1e-15);
        assert!((awgn_capacity(15.0f64) - 4.0).abs() < 1e-15);
    }

    #[test]
    fn method_tags_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
        }
        assert!("fast".parse::<Method>().is_err());
    }

    #[test]
    fn iid_closed_form_matches_quadrature() {
        let fit = fit_iid_sum(4, &fig1()).unwrap();
        let ctx = SnrContext::from_rho_db(2, 2, 1.0, 10.0).unwrap();
        let cf = capacity_iid_closed(&fit, ctx.gamma0, 1e-9).unwrap();
        let q = iid_quad(&fit, ctx.gamma0);
        assert!((cf.bits - q.bits).abs() < 1e-5, "{cf:?} {q:?}");
        assert!(self_audit(&cf, &q, 1e-9).passed);
    }

    #[test]
    fn iid_closed_form_nondecreasing_and_below_awgn() {
        let p = fig1();
        let fit = fit_iid_sum(4, &p).unwrap();
        let e2 = sum_moments_iid(4, &p).unwrap().e2;
        let mut prev = 0.0;
        for step in 0..=30 {
            let g0 = db_to_linear(-20.0 + 2.0 * step as f64);
            let v = capacity_iid_closed(&fit, g0, 1e-10).unwrap().bits;
            assert!(v >= prev - 1e-10, "step {step}");
            assert!(v <= awgn_capacity(g0 * e2) + 1e-6);
            prev = v;
        }
    }

    #[test]
    fn highsnr_slope_and_rayleigh_case() {
        let fit = fit_iid_sum(4, &fig1()).unwrap();
        let a = capacity_iid_highsnr(&fit, 10.0).unwrap().bits;
        let b = capacity_iid_highsnr(&fit, 100.0).unwrap().bits;
        assert!((b - a - 10f64.log2()).abs() < 1e-12);
        let sq = AlphaMuFit {
            alpha: 2.0,
            mu: 1.0,
            r_hat: 1.0,
            residual: 0.0,
            target: fit.target,
        };
        let g0 = 7.0f64;
        let want = (-0.577_215_664_901_532_9 + g0.ln()) / std::f64::consts::LN_2;
        assert!((capacity_iid_highsnr(&sq, g0).unwrap().bits - want).abs() < 1e-13);
    }

    #[test]
    fn highsnr_gap_shrinks() {
        let fit = fit_iid_sum(4, &fig1()).unwrap();
        let gap = |db: f64| {
            let g0 = SnrContext::from_rho_db(2, 2, 1.0, db).unwrap().gamma0;
            (capacity_iid_closed(&fit, g0, 1e-9).unwrap().bits - capacity_iid_highsnr(&fit, g0).unwrap().bits)
                .abs()
        };
        let (g20, g40) = (gap(20.0), gap(40.0));
        assert!(g40 <= 0.05 && g40 < g20, "{g20} {g40}");
    }

    #[test]
    fn near_deterministic_channel_reaches_awgn() {
        let p = GammaGammaParams::new(1e4, 1e4, 1.0).unwrap();
        let m = sum_moments_iid(4, &p).unwrap();
        let fit = fit_alpha_mu(m.e1, m.e2, m.e4).unwrap();
        let g0 = 0.5;
        let q = iid_quad(&fit, g0);
        assert!((q.bits - awgn_capacity(g0 * 16.0)).abs() < 1e-3, "{q:?}");
    }

    #[test]
    fn inid_single_link_closed_matches_quadrature() {
        let wt = compute_weights(&InidChannelSet::new(2, vec![2], vec![1.0]).unwrap()).unwrap();
        for &g0 in &[0.05f64, 1.0, 30.0] {
            let cf = capacity_inid_closed(&wt, g0, 1e-9).unwrap();
            let q = capacity_quadrature_inid(&wt, g0, 1e-9).unwrap();
            assert!((cf.bits - q.bits).abs() < 1e-5, "g0={g0}: {cf:?} {q:?}");
        }
    }

    #[test]
    fn inid_single_link_highsnr_limit() {
        let wt = compute_weights(&InidChannelSet::new(2, vec![2], vec![1.0]).unwrap()).unwrap();
        let g0 = 1e5f64;
        let q = capacity_quadrature_inid(&wt, g0, 1e-8).unwrap();
        let h = capacity_inid_highsnr(&wt, g0).unwrap();
        assert!((q.bits - h.bits).abs() < 0.05);
        let h2 = capacity_inid_highsnr(&wt, g0 * 10.0).unwrap();
        assert!((h2.bits - h.bits - 10f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn inid_closed_matches_quadrature_with_cancellation() {
        let wt = compute_weights(&InidChannelSet::new(2, vec![2, 2, 3], vec![0.8, 1.0, 1.4]).unwrap()).unwrap();
        for &g0 in &[0.01f64, 0.3, 5.0] {
            let cf = capacity_inid_closed(&wt, g0, 1e-9).unwrap();
            let q = capacity_quadrature_inid(&wt, g0, 1e-9).unwrap();
            assert!((cf.bits - q.bits).abs() < 1e-5, "g0={g0}: {cf:?} {q:?}");
        }
    }

    #[test]
    fn audit_flags_disagreement() {
        let a = Capacity {
            bits: 1.0,
            err_estimate: 1e-10,
            method: Method::ClosedForm,
        };
        let b = Capacity {
            bits: 1.001,
            err_estimate: 1e-10,
            method: Method::Quadrature,
        };
        assert!(!self_audit(&a, &b, 1e-8).passed);
        assert!(self_audit(&a, &a, 1e-8).passed);
    }

    #[test]
    fn single_precision_closed_form() {
        let p = fig1();
        let fit64 = fit_iid_sum(4, &p).unwrap();
        let fit32 = fit_iid_sum(4, &GammaGammaParams::new(p.a as f32, p.b as f32, 1.0).unwrap()).unwrap();
        let a = capacity_iid_closed(&fit64, 0.5, 1e-9).unwrap().bits;
        let b = capacity_iid_closed(&fit32, 0.5, 1e-5).unwrap().bits;
        assert!((a - b as f64).abs() < 1e-4, "{a} {b}");
    }
}
