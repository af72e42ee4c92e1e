//! Real-line quadrature: Gauss–Legendre nodes, global adaptive
//! Gauss–Kronrod (7/15) and a driver for integrals over (0, ∞).

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::real::{c, CompensatedSum, Real};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Nodes and weights of the n-point Gauss–Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = nf * (z * pn - pn1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// The 16-point Gauss–Legendre rule, computed once.
pub(crate) fn gl16() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(16))
}

/// Tolerances and work limit for the adaptive integrators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadConfig<T> {
    pub abs_tol: T,
    pub rel_tol: T,
    pub max_intervals: usize,
}

impl<T: Real> QuadConfig<T> {
    pub fn new(abs_tol: T, rel_tol: T) -> Self {
        Self {
            abs_tol,
            rel_tol,
            max_intervals: 4000,
        }
    }
}

impl<T: Real> Default for QuadConfig<T> {
    fn default() -> Self {
        Self::new(c(1e-10), c(1e-10))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult<T> {
    pub value: T,
    /// Estimated absolute error, including any truncated tail.
    pub error: T,
    pub evaluations: usize,
    pub intervals: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment<T> {
    a: T,
    b: T,
    value: T,
    error: T,
}

fn kronrod15<T: Real, F: FnMut(T) -> T>(f: &mut F, a: T, b: T) -> Result<Segment<T>> {
    let half = c::<T>(0.5) * (b - a);
    let mid = c::<T>(0.5) * (a + b);
    let fc = f(mid);
    let mut resk = fc * c(WGK[7]);
    let mut resg = fc * c(WG[3]);
    let mut fv = [T::zero(); 15];
    fv[7] = fc;
    for j in 0..7 {
        let dx = half * c(XGK[j]);
        let f1 = f(mid - dx);
        let f2 = f(mid + dx);
        fv[j] = f1;
        fv[14 - j] = f2;
        resk = resk + (f1 + f2) * c(WGK[j]);
        if j % 2 == 1 {
            resg = resg + (f1 + f2) * c(WG[j / 2]);
        }
    }
    if !resk.is_finite() {
        return Err(Error::Quadrature {
            msg: format!("non-finite integrand on [{}, {}]", a, b),
            partial: f64::NAN,
            error: f64::INFINITY,
        });
    }
    let mean = resk * c(0.5);
    let mut resasc = (fc - mean).abs() * c(WGK[7]);
    let mut resabs = fc.abs() * c(WGK[7]);
    for j in 0..7 {
        resasc = resasc + ((fv[j] - mean).abs() + (fv[14 - j] - mean).abs()) * c(WGK[j]);
        resabs = resabs + (fv[j].abs() + fv[14 - j].abs()) * c(WGK[j]);
    }
    let hl = half.abs();
    resasc = resasc * hl;
    resabs = resabs * hl;
    let mut err = ((resk - resg) * half).abs();
    if resasc != T::zero() && err != T::zero() {
        let r = (c::<T>(200.0) * err / resasc).powf(c(1.5));
        err = resasc * r.min(T::one());
    }
    let floor = c::<T>(50.0) * T::epsilon() * resabs;
    if floor > T::min_positive_value() {
        err = err.max(floor);
    }
    Ok(Segment {
        a,
        b,
        value: resk * half,
        error: err,
    })
}

fn totals<T: Real>(segs: &[Segment<T>]) -> (T, T) {
    let mut v = CompensatedSum::new();
    let mut e = CompensatedSum::new();
    for s in segs {
        v.add(s.value);
        e.add(s.error);
    }
    (v.value(), e.value())
}

/// Global adaptive G7K15 over the union of the intervals between
/// consecutive `points` (which must be increasing).
pub fn integrate_with_breaks<T, F>(mut f: F, points: &[T], cfg: &QuadConfig<T>) -> Result<QuadResult<T>>
where
    T: Real,
    F: FnMut(T) -> T,
{
    if points.len() < 2 {
        return Err(Error::Config("quadrature needs at least two points".into()));
    }
    let mut segs = Vec::with_capacity(64);
    for w in points.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::Config(format!(
                "quadrature breakpoints not increasing: {} then {}",
                w[0], w[1]
            )));
        }
        segs.push(kronrod15(&mut f, w[0], w[1])?);
    }
    let mut evals = 15 * segs.len();
    loop {
        let (value, error) = totals(&segs);
        let target = cfg.abs_tol.max(cfg.rel_tol * value.abs());
        if error <= target {
            return Ok(QuadResult {
                value,
                error,
                evaluations: evals,
                intervals: segs.len(),
            });
        }
        let worst = segs
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.partial_cmp(&y.1.error).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        let s = segs[worst];
        let mid = c::<T>(0.5) * (s.a + s.b);
        if segs.len() >= cfg.max_intervals || !(mid > s.a && mid < s.b) {
            return Err(Error::Quadrature {
                msg: format!(
                    "tolerance {:e} not reached after {} intervals",
                    target.f64(),
                    segs.len()
                ),
                partial: value.f64(),
                error: error.f64(),
            });
        }
        segs[worst] = kronrod15(&mut f, s.a, mid)?;
        segs.push(kronrod15(&mut f, mid, s.b)?);
        evals += 30;
    }
}

/// ∫_a^b f by global adaptive G7K15.
pub fn integrate<T, F>(f: F, a: T, b: T, cfg: &QuadConfig<T>) -> Result<QuadResult<T>>
where
    T: Real,
    F: FnMut(T) -> T,
{
    integrate_with_breaks(f, &[a, b], cfg)
}

/// One side of the extent scan in t = ln x.
struct Edge<T> {
    t: T,
    tail: T,
}

fn scan_edge<T, F>(g: &mut F, start: T, dir: T, limit: T, floor: T, peak: &mut T) -> Result<Edge<T>>
where
    T: Real,
    F: FnMut(T) -> T,
{
    let min_span: T = c(4.0);
    let mut step: T = c(0.5);
    let mut t = start;
    let mut prev = g(start).abs();
    loop {
        let next_t = t + dir * step;
        if (next_t - limit) * dir > T::zero() {
            let tail = prev;
            if tail > floor.max(*peak * c(1e-3)) {
                return Err(Error::Quadrature {
                    msg: format!("integrand still {:e} at t = {}: tail not integrable", tail.f64(), t),
                    partial: f64::NAN,
                    error: f64::INFINITY,
                });
            }
            return Ok(Edge { t, tail });
        }
        let v = g(next_t).abs();
        if !v.is_finite() {
            return Err(Error::Quadrature {
                msg: format!("non-finite integrand at t = {}", next_t),
                partial: f64::NAN,
                error: f64::INFINITY,
            });
        }
        *peak = peak.max(v);
        let thresh = floor.max(*peak * T::epsilon());
        let far = (next_t - start).abs() >= min_span;
        if far && v <= thresh && v <= prev {
            // Tail beyond the last point, assuming exponential decay in t.
            let tail = if v == T::zero() {
                T::zero()
            } else {
                let rate = (prev.ln() - v.ln()) / step;
                if rate > T::zero() {
                    v / rate
                } else {
                    v * step
                }
            };
            return Ok(Edge { t: next_t, tail });
        }
        prev = v;
        t = next_t;
        step = (step * c(1.25)).min(c(4.0));
    }
}

/// ∫_0^∞ f(x) dx with the substitution x = e^t on the whole axis.
///
/// `center` is a point of typical mass (a mean, say); it is used to seed the
/// extent scan and as a breakpoint, as is x = 1.
pub fn integrate_positive_axis<T, F>(mut f: F, center: T, cfg: &QuadConfig<T>) -> Result<QuadResult<T>>
where
    T: Real,
    F: FnMut(T) -> T,
{
    if !(center > T::zero()) || !center.is_finite() {
        return Err(Error::Config(format!("integration center must be positive, got {}", center)));
    }
    let mut g = |t: T| {
        let x = t.exp();
        if x == T::zero() || x.is_infinite() {
            T::zero()
        } else {
            f(x) * x
        }
    };
    let tc = center.ln();
    let hi_lim = T::max_value().ln() - T::one();
    let lo_lim = T::min_positive_value().ln() + T::one();
    let floor = cfg.abs_tol * c(1e-4);
    let mut peak = g(tc).abs();
    let hi = scan_edge(&mut g, tc, T::one(), hi_lim, floor, &mut peak)?;
    let lo = scan_edge(&mut g, tc, -T::one(), lo_lim, floor, &mut peak)?;
    let mut points = vec![lo.t, hi.t];
    for p in [T::zero(), tc] {
        if p > lo.t && p < hi.t && !points.contains(&p) {
            points.push(p);
        }
    }
    points.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut r = integrate_with_breaks(g, &points, cfg)?;
    r.error = r.error + lo.tail + hi.tail;
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let (x, w) = gauss_legendre(16);
        let s: f64 = w.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
        // ∫ x^30 = 2/31
        let m: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(30)).sum();
        assert!((m - 2.0 / 31.0).abs() < 1e-14);
        let (x5, _) = gauss_legendre(5);
        assert!((x5[4] - 0.906_179_845_938_664).abs() < 1e-14);
    }

    #[test]
    fn kronrod_gauss_subset_is_consistent() {
        // G7 weights must integrate constants exactly.
        let s = WG[3] + 2.0 * (WG[0] + WG[1] + WG[2]);
        assert!((s - 2.0).abs() < 1e-15);
        let sk = WGK[7] + 2.0 * WGK[..7].iter().sum::<f64>();
        assert!((sk - 2.0).abs() < 1e-15);
    }

    #[test]
    fn adaptive_handles_peaked_integrand() {
        let cfg = QuadConfig::new(1e-12, 1e-12);
        // ∫_0^1 1/sqrt(x) = 2 (endpoint singularity)
        let r = integrate(|x: f64| x.powf(-0.5), 0.0, 1.0, &cfg).unwrap();
        assert!((r.value - 2.0).abs() < 1e-9, "{r:?}");
        let r = integrate(|x: f64| (-(x - 0.3) * (x - 0.3) * 1e6).exp(), 0.0, 1.0, &cfg).unwrap();
        assert!((r.value - (std::f64::consts::PI / 1e6).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn positive_axis_gamma_integrals() {
        let cfg = QuadConfig::new(1e-12, 1e-12);
        // ∫ x^{k-1} e^{-x} = Γ(k)
        for &(k, center) in &[(0.3f64, 0.3), (1.0, 1.0), (7.5, 7.5), (40.0, 1.0)] {
            let ln_g = crate::specfun::ln_gamma(k).unwrap();
            let r = integrate_positive_axis(|x: f64| ((k - 1.0) * x.ln() - x - ln_g).exp(), center, &cfg)
                .unwrap();
            assert!((r.value - 1.0).abs() < 1e-10, "k={k}: {r:?}");
        }
        // Heavy but integrable tail: ∫ 1/(1+x)^2 = 1
        let r = integrate_positive_axis(|x: f64| (1.0 + x).powi(-2), 1.0, &cfg).unwrap();
        assert!((r.value - 1.0).abs() < 1e-9, "{r:?}");
    }

    #[test]
    fn positive_axis_rejects_nonintegrable_tail() {
        let cfg = QuadConfig::new(1e-10, 1e-10);
        assert!(integrate_positive_axis(|x: f64| 1.0 / (1.0 + x), 1.0, &cfg).is_err());
    }

    #[test]
    fn f32_instantiation() {
        let cfg = QuadConfig::new(1e-5f32, 1e-5);
        let r = integrate(|x: f32| x * x, 0.0, 3.0, &cfg).unwrap();
        assert!((r.value - 9.0).abs() < 1e-4);
    }
}
