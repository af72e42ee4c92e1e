//! Mellin–Barnes contour integrals of gamma-function ratios, which covers
//! the Fox H and Meijer G functions.
//!
//! The integrand is assembled in log domain and exponentiated once per node.
//! Integration runs along Re s = ω with composite 16-point Gauss–Legendre
//! panels in Im s; the contour is truncated at ±T where the integrand has
//! decayed below the tolerance, and the estimate is refined by doubling T and
//! the node density until two successive values agree.

use num_complex::Complex;

use super::gamma::ln_gamma_complex;
use crate::error::{Error, Result};
use crate::quad::gl16;
use crate::real::{c, CompensatedSum, Real};

const MAX_REFINEMENTS: usize = 6;
const MAX_HALF_HEIGHT: f64 = 1e4;
/// Largest phase change (radians) allowed across one 16-point panel.
const PANEL_PHASE: f64 = 4.0;

/// The factor Γ(offset + scale·s).
///
/// A positive scale contributes poles to the left of the contour, a negative
/// one to the right.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaFactor<T> {
    pub offset: T,
    pub scale: T,
}

impl<T: Real> GammaFactor<T> {
    pub fn new(offset: T, scale: T) -> Self {
        Self { offset, scale }
    }

    /// Pole of this factor nearest to the contour (n = 0).
    fn first_pole(&self) -> T {
        -self.offset / self.scale
    }
}

/// Kernel Π Γ(num) / Π Γ(den) · x^(e·s) · exp(ln_prefactor).
#[derive(Debug, Clone, PartialEq)]
pub struct MellinBarnesSpec<T> {
    pub numerator: Vec<GammaFactor<T>>,
    pub denominator: Vec<GammaFactor<T>>,
    /// +1 for x^s, -1 for x^(-s).
    pub argument_exponent: i8,
    /// Constant multiplying the whole integral, as a logarithm. Folding it
    /// into the integrand lets the tolerance refer to the final scaled value.
    pub ln_prefactor: T,
}

impl<T: Real> MellinBarnesSpec<T> {
    /// H^{m,n}_{p,q}[x | (a_i, A_i) ; (b_j, B_j)].
    pub fn fox_h(m: usize, n: usize, a: &[(T, T)], b: &[(T, T)]) -> Result<Self> {
        if m > b.len() || n > a.len() {
            return Err(Error::Config(format!(
                "Fox H indices m={m}, n={n} exceed p={}, q={}",
                a.len(),
                b.len()
            )));
        }
        let mut numerator = Vec::with_capacity(m + n);
        let mut denominator = Vec::with_capacity(a.len() + b.len() - m - n);
        for &(bj, bs) in &b[..m] {
            numerator.push(GammaFactor::new(bj, bs));
        }
        for &(ai, as_) in &a[..n] {
            numerator.push(GammaFactor::new(T::one() - ai, -as_));
        }
        for &(bj, bs) in &b[m..] {
            denominator.push(GammaFactor::new(T::one() - bj, -bs));
        }
        for &(ai, as_) in &a[n..] {
            denominator.push(GammaFactor::new(ai, as_));
        }
        Ok(Self {
            numerator,
            denominator,
            argument_exponent: -1,
            ln_prefactor: T::zero(),
        })
    }

    /// G^{m,n}_{p,q}[x | a ; b].
    pub fn meijer_g(m: usize, n: usize, a: &[T], b: &[T]) -> Result<Self> {
        let a: Vec<_> = a.iter().map(|&v| (v, T::one())).collect();
        let b: Vec<_> = b.iter().map(|&v| (v, T::one())).collect();
        Self::fox_h(m, n, &a, &b)
    }

    pub fn with_ln_prefactor(mut self, ln_prefactor: T) -> Self {
        self.ln_prefactor = ln_prefactor;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.argument_exponent != 1 && self.argument_exponent != -1 {
            return Err(Error::Config(format!(
                "argument exponent must be +1 or -1, got {}",
                self.argument_exponent
            )));
        }
        for g in self.numerator.iter().chain(&self.denominator) {
            if !g.offset.is_finite() || !g.scale.is_finite() || g.scale == T::zero() {
                return Err(Error::Config(format!(
                    "gamma factor ({}, {}) needs finite offset and finite nonzero scale",
                    g.offset, g.scale
                )));
            }
        }
        if !self.ln_prefactor.is_finite() {
            return Err(Error::Config("non-finite prefactor".into()));
        }
        Ok(())
    }

    /// Rightmost pole of the left family and leftmost pole of the right one.
    pub fn pole_gap(&self) -> (Option<T>, Option<T>) {
        let mut left: Option<T> = None;
        let mut right: Option<T> = None;
        for g in &self.numerator {
            let p = g.first_pole();
            if g.scale > T::zero() {
                left = Some(left.map_or(p, |l| l.max(p)));
            } else {
                right = Some(right.map_or(p, |r| r.min(p)));
            }
        }
        (left, right)
    }

    /// Exponential decay rate of |kernel| in |Im s|.
    pub fn decay_rate(&self) -> T {
        let num = self.numerator.iter().fold(T::zero(), |s, g| s + g.scale.abs());
        let den = self.denominator.iter().fold(T::zero(), |s, g| s + g.scale.abs());
        T::FRAC_PI_2() * (num - den)
    }

    fn ln_kernel(&self, s: Complex<T>, ln_x: T) -> Result<Complex<T>> {
        let mut acc = Complex::new(self.ln_prefactor, T::zero());
        for g in &self.numerator {
            acc = acc + ln_gamma_complex(s * g.scale + g.offset)?;
        }
        for g in &self.denominator {
            acc = acc - ln_gamma_complex(s * g.scale + g.offset)?;
        }
        let e: T = if self.argument_exponent > 0 { T::one() } else { -T::one() };
        Ok(acc + s * (e * ln_x))
    }
}

/// Contour placement and refinement settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourConfig<T> {
    /// Abscissa of the contour; chosen as the middle of the pole gap if unset.
    pub omega: Option<T>,
    /// Initial truncation height; raised automatically if the integrand has
    /// not yet decayed there.
    pub half_height: T,
    /// Initial node count (multiple of 16 after rounding up).
    pub nodes: usize,
    /// Absolute tolerance on the returned value, raised to 64 ε ∫|kernel| when
    /// smaller than that.
    pub tolerance: T,
}

impl<T: Real> Default for ContourConfig<T> {
    fn default() -> Self {
        Self {
            omega: None,
            half_height: c(10.0),
            nodes: 128,
            tolerance: c(1e-10),
        }
    }
}

impl<T: Real> ContourConfig<T> {
    fn validate(&self) -> Result<()> {
        if !(self.half_height > T::zero()) || !self.half_height.is_finite() {
            return Err(Error::Config(format!("half_height must be positive, got {}", self.half_height)));
        }
        if self.nodes < 64 {
            return Err(Error::Config(format!("contour needs at least 64 nodes, got {}", self.nodes)));
        }
        if !(self.tolerance > T::zero()) {
            return Err(Error::Config(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MellinBarnesValue<T> {
    pub value: T,
    /// |difference| between the last two refinement levels.
    pub error: T,
    /// Imaginary part of the final estimate; zero up to rounding for a real kernel.
    pub imag_residue: T,
    pub omega: T,
    pub half_height: T,
    pub nodes: usize,
    pub refinements: usize,
}

/// Real part of (1/2πi) ∫ kernel(s) ds along Re s = ω.
pub fn mellin_barnes_eval<T: Real>(
    spec: &MellinBarnesSpec<T>,
    x: T,
    cfg: &ContourConfig<T>,
) -> Result<MellinBarnesValue<T>> {
    spec.validate()?;
    cfg.validate()?;
    if !(x > T::zero()) || !x.is_finite() {
        return Err(Error::domain("mellin_barnes_eval", format!("requires x > 0, got {}", x)));
    }
    let omega = choose_omega(spec, cfg.omega)?;
    let rate = spec.decay_rate();
    if !(rate > T::zero()) {
        return Err(Error::Config(format!(
            "kernel does not decay along the contour (rate {})",
            rate
        )));
    }
    let ln_x = x.ln();
    let f = |t: T| -> Result<Complex<T>> { Ok(spec.ln_kernel(Complex::new(omega, t), ln_x)?.exp()) };

    let mut half_height = truncation_height(spec, ln_x, omega, rate, cfg)?;
    let mut nodes = node_count(spec, ln_x, half_height, cfg.nodes);
    let mut prev = contour_sum(&f, half_height, nodes)?.0;
    let mut before = prev;
    for refinement in 1..=MAX_REFINEMENTS {
        half_height = half_height * c(2.0);
        nodes *= 4;
        let (cur, l1) = contour_sum(&f, half_height, nodes)?;
        let diff = (cur.re - prev.re).abs();
        if !cur.re.is_finite() {
            return Err(Error::Overflow(format!("contour integral at x = {}", x)));
        }
        // a tolerance below the rounding floor of the sum is unreachable
        let floor = c::<T>(64.0) * T::epsilon() * l1.max(cur.re.abs());
        if diff <= cfg.tolerance.max(floor) {
            if cur.im.abs() > cfg.tolerance.max(cur.re.abs() * c(1e-8)) {
                log::warn!(
                    "contour integral has imaginary residue {:e} (value {:e})",
                    cur.im.f64(),
                    cur.re.f64()
                );
            }
            return Ok(MellinBarnesValue {
                value: cur.re,
                error: diff,
                imag_residue: cur.im,
                omega,
                half_height,
                nodes,
                refinements: refinement,
            });
        }
        before = prev;
        prev = cur;
    }
    Err(Error::Convergence {
        what: "Mellin-Barnes contour integral",
        last: prev.re.f64(),
        previous: before.re.f64(),
    })
}

fn choose_omega<T: Real>(spec: &MellinBarnesSpec<T>, fixed: Option<T>) -> Result<T> {
    let (left, right) = spec.pole_gap();
    if let (Some(l), Some(r)) = (left, right) {
        if l >= r {
            return Err(Error::Config(format!(
                "pole families overlap: left family reaches {}, right family starts at {}",
                l, r
            )));
        }
    }
    if let Some(w) = fixed {
        let ok = left.is_none_or(|l| w > l) && right.is_none_or(|r| w < r);
        if !ok {
            return Err(Error::Config(format!("contour abscissa {} does not separate the poles", w)));
        }
        return Ok(w);
    }
    let half: T = c(0.5);
    Ok(match (left, right) {
        (Some(l), Some(r)) => half * (l + r),
        (Some(l), None) => l + half,
        (None, Some(r)) => r - half,
        (None, None) => T::zero(),
    })
}

/// Smallest T >= cfg.half_height at which the kernel magnitude, integrated
/// over the remaining tail, is far below the tolerance.
fn truncation_height<T: Real>(
    spec: &MellinBarnesSpec<T>,
    ln_x: T,
    omega: T,
    rate: T,
    cfg: &ContourConfig<T>,
) -> Result<T> {
    let target = (cfg.tolerance * c(1e-3) * rate).ln();
    let mut t = cfg.half_height;
    loop {
        let up = spec.ln_kernel(Complex::new(omega, t), ln_x)?.re;
        let down = spec.ln_kernel(Complex::new(omega, -t), ln_x)?.re;
        if up.max(down) < target {
            return Ok(t);
        }
        if t > c(MAX_HALF_HEIGHT) {
            return Err(Error::Convergence {
                what: "Mellin-Barnes truncation scan",
                last: t.f64(),
                previous: up.max(down).f64(),
            });
        }
        t = t * c(1.25);
    }
}

/// Enough 16-point panels on [-T, T] to resolve the oscillation of the kernel.
fn node_count<T: Real>(spec: &MellinBarnesSpec<T>, ln_x: T, half_height: T, min_nodes: usize) -> usize {
    // d/dt arg Γ(o + k(ω+it)) ≈ k ln|k t|, plus the x^(±it) term.
    let mut phase_rate = ln_x.abs();
    for g in spec.numerator.iter().chain(&spec.denominator) {
        let k = g.scale.abs();
        phase_rate = phase_rate + k * (T::one() + k * half_height + g.offset.abs()).ln();
    }
    let width: T = (c::<T>(PANEL_PHASE) / phase_rate.max(T::one())).min(T::one());
    let panels = ((c::<T>(2.0) * half_height / width).ceil()).to_usize().unwrap_or(usize::MAX);
    (16 * panels).max(min_nodes.div_ceil(16) * 16)
}

/// (1/2π) ∫_{-T}^{T} f(t) dt with nodes/16 equal panels.
/// Contour integral and the integral of its magnitude.
fn contour_sum<T: Real, F>(f: &F, half_height: T, nodes: usize) -> Result<(Complex<T>, T)>
where
    F: Fn(T) -> Result<Complex<T>>,
{
    let (gx, gw) = gl16();
    let panels = nodes / 16;
    let width = c::<T>(2.0) * half_height / T::from_usize_lossy(panels);
    let hw = c::<T>(0.5) * width;
    let mut re = CompensatedSum::new();
    let mut im = CompensatedSum::new();
    let mut l1 = T::zero();
    for p in 0..panels {
        let mid = -half_height + hw * (T::from_usize_lossy(2 * p + 1));
        for (&x, &w) in gx.iter().zip(gw) {
            let v = f(mid + hw * c(x))? * (hw * c(w));
            re.add(v.re);
            im.add(v.im);
            l1 = l1 + v.norm();
        }
    }
    let scale = (c::<T>(2.0) * T::PI()).recip();
    Ok((Complex::new(re.value() * scale, im.value() * scale), l1 * scale))
}
