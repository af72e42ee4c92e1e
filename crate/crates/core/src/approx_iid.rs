//! α-μ approximation of a sum of gamma-gamma irradiances by matching the
//! first, second and fourth moments.

use crate::channel::{gg_moment, GammaGammaParams};
use crate::error::{Error, Result};
use crate::real::{c, Real};
use crate::specfun::{gamma_p, ln_gamma, ln_gamma_ratio};

const RESTART_ALPHAS: [f64; 6] = [0.5, 1.0, 1.5, 2.0, 3.0, 4.0];
const MAX_NEWTON: usize = 200;
/// Accepted residual of the two moment-ratio equations (double precision).
pub const FIT_TOLERANCE: f64 = 1e-10;

fn fit_tolerance<T: Real>() -> T {
    c::<T>(FIT_TOLERANCE).max(T::epsilon() * c(1e3))
}

/// E(S), E(S²), E(S⁴) of a sum of irradiances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SumMoments<T> {
    pub e1: T,
    pub e2: T,
    pub e4: T,
}

/// Exact moments of S = Σ I_l for independent gamma-gamma links.
///
/// Moments of the partial sums are built link by link with the binomial
/// theorem, which expands to the multinomial identity and does not need the
/// links to be identical.
pub fn sum_moments<T: Real>(links: &[GammaGammaParams<T>]) -> Result<SumMoments<T>> {
    if links.is_empty() {
        return Err(Error::Config("sum of zero links".into()));
    }
    const BINOM: [[f64; 5]; 5] = [
        [1.0, 0.0, 0.0, 0.0, 0.0],
        [1.0, 1.0, 0.0, 0.0, 0.0],
        [1.0, 2.0, 1.0, 0.0, 0.0],
        [1.0, 3.0, 3.0, 1.0, 0.0],
        [1.0, 4.0, 6.0, 4.0, 1.0],
    ];
    let mut acc = [T::one(), T::zero(), T::zero(), T::zero(), T::zero()];
    for (i, p) in links.iter().enumerate() {
        p.validate()?;
        let mut m = [T::one(); 5];
        for (q, slot) in m.iter_mut().enumerate().skip(1) {
            *slot = gg_moment(T::from_usize_lossy(q), p)?;
        }
        if i == 0 {
            acc = m;
            continue;
        }
        let mut next = [T::zero(); 5];
        for n in 0..5 {
            for j in 0..=n {
                next[n] = next[n] + c::<T>(BINOM[n][j]) * acc[j] * m[n - j];
            }
        }
        acc = next;
    }
    Ok(SumMoments {
        e1: acc[1],
        e2: acc[2],
        e4: acc[4],
    })
}

/// Moments of the sum of `l` i.i.d. links.
pub fn sum_moments_iid<T: Real>(l: usize, p: &GammaGammaParams<T>) -> Result<SumMoments<T>> {
    sum_moments(&vec![*p; l])
}

/// Fitted α-μ law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaMuFit<T> {
    pub alpha: T,
    pub mu: T,
    /// α-root mean [E(R^α)]^(1/α).
    pub r_hat: T,
    /// Largest absolute residual of the two moment-ratio equations.
    pub residual: T,
    pub target: SumMoments<T>,
}

/// ln Γ(μ) + ln Γ(μ + 2t) - 2 ln Γ(μ + t), i.e. ln(E(R^{2q}) / E(R^q)²) with t = q/α.
fn ln_ratio<T: Real>(mu: T, t: T) -> Result<T> {
    Ok(ln_gamma_ratio(mu + t, t)? - ln_gamma_ratio(mu, t)?)
}

/// E(R^q) for an α-μ variable.
pub fn alpha_mu_moment<T: Real>(q: T, alpha: T, mu: T, r_hat: T) -> Result<T> {
    let t = q / alpha;
    Ok((q * r_hat.ln() + ln_gamma_ratio(mu, t)? - t * mu.ln()).exp())
}

impl<T: Real> AlphaMuFit<T> {
    pub fn moment(&self, q: T) -> Result<T> {
        alpha_mu_moment(q, self.alpha, self.mu, self.r_hat)
    }

    /// Density of R.
    pub fn pdf(&self, r: T) -> T {
        alpha_mu_pdf(r, self.alpha, self.mu, self.r_hat)
    }

    /// P(R <= r) = P(μ, μ (r/r̂)^α).
    pub fn cdf(&self, r: T) -> T {
        if !(r > T::zero()) {
            return T::zero();
        }
        gamma_p(self.mu, self.mu * (r / self.r_hat).powf(self.alpha)).unwrap_or(T::nan())
    }
}

/// α-μ density, evaluated in log domain; 0 for r <= 0.
pub fn alpha_mu_pdf<T: Real>(r: T, alpha: T, mu: T, r_hat: T) -> T {
    if !(r > T::zero()) {
        return T::zero();
    }
    let Ok(lg) = ln_gamma(mu) else {
        return T::nan();
    };
    let z = (r / r_hat).ln() * alpha;
    (alpha.ln() + mu * mu.ln() + mu * z - r.ln() - lg - mu * z.exp()).exp()
}

/// Residuals of the ratio equations, E²(S^q)/(E(S^{2q}) - E²(S^q)) against
/// the α-μ counterpart, for q = 1 and 2, relative to the target ratio once
/// it exceeds one.
fn ratio_residual<T: Real>(d1: T, d2: T, alpha: T, mu: T) -> Result<T> {
    let lhs1 = d1.exp_m1().recip();
    let lhs2 = d2.exp_m1().recip();
    let rhs1 = ln_ratio(mu, alpha.recip())?.exp_m1().recip();
    let rhs2 = ln_ratio(mu, c::<T>(2.0) / alpha)?.exp_m1().recip();
    let r1 = (lhs1 - rhs1).abs() / lhs1.abs().max(T::one());
    let r2 = (lhs2 - rhs2).abs() / lhs2.abs().max(T::one());
    Ok(r1.max(r2))
}

/// Solves the moment-matching system for (α, μ, r̂).
///
/// The two ratio equations are scale free, so they are solved alone for
/// (ln α, ln μ) by damped Newton; r̂ then follows in closed form.
pub fn fit_alpha_mu<T: Real>(e1: T, e2: T, e4: T) -> Result<AlphaMuFit<T>> {
    if !(e1 > T::zero()) || !e1.is_finite() || !e2.is_finite() || !e4.is_finite() {
        return Err(Error::domain("fit_alpha_mu", format!("invalid moments ({e1:e}, {e2:e}, {e4:e})")));
    }
    if !(e2 - e1 * e1 > c::<T>(1e-14) * e1 * e1) || !(e4 > e2 * e2) {
        return Err(Error::domain(
            "fit_alpha_mu",
            format!("moments ({e1:e}, {e2:e}, {e4:e}) admit no alpha-mu law (zero or negative variance)"),
        ));
    }
    let d1 = (e2 / (e1 * e1)).ln();
    let d2 = (e4 / (e2 * e2)).ln();
    let target = SumMoments { e1, e2, e4 };

    let residual_fn = |x: [T; 2]| -> Result<[T; 2]> {
        let alpha = x[0].exp();
        let mu = x[1].exp();
        Ok([
            ln_ratio(mu, alpha.recip())? - d1,
            ln_ratio(mu, c::<T>(2.0) / alpha)? - d2,
        ])
    };

    let gamma_start = [T::zero(), (e1 * e1 / (e2 - e1 * e1)).ln()];
    let mut starts = vec![gamma_start];
    for &a in &RESTART_ALPHAS {
        if let Some(mu) = mu_matching_first_ratio(c(a), d1) {
            starts.push([c::<T>(a).ln(), mu.ln()]);
        }
    }

    let mut best: Option<([T; 2], T)> = None;
    for x0 in starts {
        let Ok(x) = newton(&residual_fn, x0) else {
            continue;
        };
        let (alpha, mu) = (x[0].exp(), x[1].exp());
        let Ok(res) = ratio_residual(d1, d2, alpha, mu) else {
            continue;
        };
        if res <= fit_tolerance() {
            let r_hat = (mu.ln() / alpha + ln_gamma(mu)? + e1.ln() - ln_gamma(mu + alpha.recip())?).exp();
            return Ok(AlphaMuFit {
                alpha,
                mu,
                r_hat,
                residual: res,
                target,
            });
        }
        if best.is_none_or(|(_, r)| res < r) {
            best = Some((x, res));
        }
    }
    let (x, res) = best.unwrap_or(([T::nan(), T::nan()], T::infinity()));
    Err(Error::Fit {
        alpha: x[0].exp().f64(),
        mu: x[1].exp().f64(),
        residual: res.f64(),
    })
}

/// μ solving the first ratio equation at fixed α, by bisection in ln μ.
fn mu_matching_first_ratio<T: Real>(alpha: T, d1: T) -> Option<T> {
    // ln_ratio(μ, 1/α) decreases from large values towards 0 as μ grows.
    let f = |lm: T| ln_ratio(lm.exp(), alpha.recip()).map(|v| v - d1).ok();
    let (mut lo, mut hi) = (c::<T>(-20.0), c::<T>(20.0));
    let (flo, fhi) = (f(lo)?, f(hi)?);
    if flo < T::zero() || fhi > T::zero() {
        return None;
    }
    for _ in 0..200 {
        let mid = c::<T>(0.5) * (lo + hi);
        if f(mid)? > T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some((c::<T>(0.5) * (lo + hi)).exp())
}

fn norm2<T: Real>(v: [T; 2]) -> T {
    v[0].abs().max(v[1].abs())
}

fn newton<T, F>(f: &F, mut x: [T; 2]) -> Result<[T; 2]>
where
    T: Real,
    F: Fn([T; 2]) -> Result<[T; 2]>,
{
    let mut fx = f(x)?;
    let h: T = T::epsilon().cbrt();
    let stop: T = T::epsilon() * c(16.0);
    for _ in 0..MAX_NEWTON {
        if norm2(fx) <= stop {
            return Ok(x);
        }
        // central-difference Jacobian
        let mut jac = [[T::zero(); 2]; 2];
        for k in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[k] = xp[k] + h;
            xm[k] = xm[k] - h;
            let (fp, fm) = (f(xp)?, f(xm)?);
            for i in 0..2 {
                jac[i][k] = (fp[i] - fm[i]) / (h + h);
            }
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if det == T::zero() || !det.is_finite() {
            break;
        }
        let dx = [
            (jac[1][1] * fx[0] - jac[0][1] * fx[1]) / det,
            (jac[0][0] * fx[1] - jac[1][0] * fx[0]) / det,
        ];
        // backtracking on the residual norm, steps capped at one e-fold
        let cap = T::one() / norm2(dx).max(T::one());
        let mut lambda = cap;
        let mut accepted = false;
        for _ in 0..40 {
            let trial = [x[0] - lambda * dx[0], x[1] - lambda * dx[1]];
            if let Ok(ft) = f(trial) {
                if norm2(ft) < norm2(fx) {
                    x = trial;
                    fx = ft;
                    accepted = true;
                    break;
                }
            }
            lambda = lambda * c(0.5);
        }
        if !accepted {
            // no descent left: either converged to rounding level or stuck
            break;
        }
    }
    if norm2(fx).is_finite() {
        Ok(x)
    } else {
        Err(Error::Fit {
            alpha: x[0].exp().f64(),
            mu: x[1].exp().f64(),
            residual: f64::INFINITY,
        })
    }
}

/// Fit of the sum of `l` i.i.d. gamma-gamma links.
pub fn fit_iid_sum<T: Real>(l: usize, p: &GammaGammaParams<T>) -> Result<AlphaMuFit<T>> {
    let m = sum_moments_iid(l, p)?;
    fit_alpha_mu(m.e1, m.e2, m.e4)
}

/// Density of γ = γ₀ S² when S follows `fit`; 0 for γ <= 0.
pub fn snr_pdf_iid<T: Real>(gamma: T, fit: &AlphaMuFit<T>, gamma0: T) -> T {
    if !(gamma > T::zero()) {
        return T::zero();
    }
    let r = (gamma / gamma0).sqrt();
    fit.pdf(r) / (c::<T>(2.0) * (gamma * gamma0).sqrt())
}
