//! Weighted gamma-gamma mixture for sums of non-identical links that share
//! the small-scale shape k.
//!
//! With I_l = x_l y_l, x_l ~ Gamma(k, 1/k) and y_l ~ Gamma(m_l, θ_l = Ω_l/m_l),
//! the sum is approximated by X·Y where X ~ Gamma(Lk, 1/(Lk)) and Y = Σ y_l.
//! Y has the exact finite mixture density Σ_i Σ_j w(i, j) Gamma(j, θ_i), so
//! each mixture term of S is gamma-gamma with shapes (Lk, j) and mean j θ_i.

use crate::channel::{gg_cdf, gg_pdf, GammaGammaParams};
use crate::error::{Error, Result};
use crate::quad::{integrate_positive_axis, QuadConfig};
use crate::real::{c, signed_log_sum, CompensatedSum, Real};

/// Links whose large-scale means θ = Ω/m differ by less than this relative
/// gap are pooled into one mixture component.
pub const MERGE_REL_GAP: f64 = 1e-2;
/// Accepted deviation of the mixture density's integral from one.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-4;

/// Links entering the mixture: a common integer k and per-link (m_l, Ω_l).
#[derive(Debug, Clone, PartialEq)]
pub struct InidChannelSet<T> {
    pub k: u32,
    pub m: Vec<u32>,
    pub omega: Vec<T>,
}

/// Real shapes that were rounded to build an [`InidChannelSet`].
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeRounding<T> {
    pub a: Vec<T>,
    pub b: Vec<T>,
    pub k: u32,
    pub m: Vec<u32>,
}

impl<T: Real> InidChannelSet<T> {
    pub fn new(k: u32, m: Vec<u32>, omega: Vec<T>) -> Result<Self> {
        let set = Self { k, m, omega };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m.is_empty() || self.m.len() != self.omega.len() {
            return Err(Error::Config(format!(
                "need equally many shapes and means, got {} and {}",
                self.m.len(),
                self.omega.len()
            )));
        }
        if self.k == 0 || self.m.contains(&0) {
            return Err(Error::Config("mixture shapes must be positive integers".into()));
        }
        if let Some(w) = self.omega.iter().find(|w| !(**w > T::zero()) || !w.is_finite()) {
            return Err(Error::Config(format!("link mean must be positive, got {w}")));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    /// Rounds real gamma-gamma shapes to the integers the mixture needs.
    /// k is the rounded mean of the small-scale shapes.
    pub fn from_gamma_gamma(links: &[GammaGammaParams<T>]) -> Result<(Self, ShapeRounding<T>)> {
        if links.is_empty() {
            return Err(Error::Config("no links".into()));
        }
        let round = |v: T| -> u32 { v.round().max(T::one()).to_u32().unwrap_or(u32::MAX) };
        let mean_a = links.iter().fold(T::zero(), |s, p| s + p.a) / T::from_usize_lossy(links.len());
        if links.iter().any(|p| (p.a - mean_a).abs() > c::<T>(1e-9) * mean_a) {
            log::warn!("small-scale shapes differ between links; using their mean for k");
        }
        let k = round(mean_a);
        let m: Vec<u32> = links.iter().map(|p| round(p.b)).collect();
        let set = Self::new(k, m.clone(), links.iter().map(|p| p.omega).collect())?;
        Ok((
            set,
            ShapeRounding {
                a: links.iter().map(|p| p.a).collect(),
                b: links.iter().map(|p| p.b).collect(),
                k,
                m,
            },
        ))
    }
}

/// One mixture component: a group of links with (nearly) equal θ.
#[derive(Debug, Clone, PartialEq)]
pub struct Component<T> {
    /// Indices of the pooled links, ascending.
    pub links: Vec<usize>,
    /// Σ m over the group.
    pub m: u32,
    /// Σ Ω over the group.
    pub omega: T,
}

impl<T: Real> Component<T> {
    pub fn theta(&self) -> T {
        self.omega / T::from_usize_lossy(self.m as usize)
    }
}

/// Result of integrating the mixture density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizationAudit<T> {
    /// ∫ f_S, or NaN if the quadrature failed.
    pub integral: T,
    pub reliable: bool,
}

/// Mixture weights w(i, j), i over components and j = 1..=m_i.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightTable<T> {
    pub channels: InidChannelSet<T>,
    pub components: Vec<Component<T>>,
    /// `w[i][j - 1]`.
    pub w: Vec<Vec<T>>,
    /// Σ |w|; equals 1 without cancellation and grows as θ values approach.
    pub abs_sum: T,
    pub audit: NormalizationAudit<T>,
}

/// Groups links by θ = Ω/m with single linkage on the sorted values.
fn components<T: Real>(ch: &InidChannelSet<T>) -> Vec<Component<T>> {
    let theta: Vec<T> = ch
        .m
        .iter()
        .zip(&ch.omega)
        .map(|(&m, &w)| w / T::from_usize_lossy(m as usize))
        .collect();
    let mut order: Vec<usize> = (0..ch.len()).collect();
    order.sort_by(|&a, &b| theta[a].partial_cmp(&theta[b]).unwrap().then(a.cmp(&b)));
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (pos, &idx) in order.iter().enumerate() {
        let joins = pos > 0 && {
            let prev = theta[order[pos - 1]];
            (theta[idx] - prev) <= c::<T>(MERGE_REL_GAP) * theta[idx]
        };
        if joins {
            groups.last_mut().unwrap().push(idx);
        } else {
            groups.push(vec![idx]);
        }
    }
    let mut comps: Vec<Component<T>> = groups
        .into_iter()
        .map(|mut g| {
            g.sort_unstable();
            let m = g.iter().map(|&i| ch.m[i]).sum();
            let omega = g.iter().fold(T::zero(), |s, &i| s + ch.omega[i]);
            Component { links: g, m, omega }
        })
        .collect();
    comps.sort_by_key(|cmp| cmp.links[0]);
    comps
}

/// Builds the weight table and audits the normalization of the resulting
/// mixture density.
pub fn compute_weights<T: Real>(ch: &InidChannelSet<T>) -> Result<WeightTable<T>> {
    ch.validate()?;
    let comps = components(ch);
    if comps.len() < ch.len() {
        let pooled: Vec<_> = comps.iter().filter(|g| g.links.len() > 1).map(|g| &g.links).collect();
        log::warn!("links with nearly equal large-scale means pooled: {pooled:?}");
    }
    let theta: Vec<T> = comps.iter().map(Component::theta).collect();
    let n = comps.len();
    let mut table = Vec::with_capacity(n);
    let mut abs_sum = CompensatedSum::new();
    let max_ln = T::max_value().ln();
    for i in 0..n {
        let mi = comps[i].m as usize;
        // (sign, ln|w|) for j = 1..=m_i, filled from j = m_i downwards
        let mut lw = vec![(T::one(), T::neg_infinity()); mi];
        let (mut sign, mut ln_abs) = (T::one(), T::zero());
        for q in (0..n).filter(|&q| q != i) {
            let r = T::one() - theta[q] / theta[i];
            let mq = T::from_usize_lossy(comps[q].m as usize);
            if r < T::zero() && comps[q].m % 2 == 1 {
                sign = -sign;
            }
            ln_abs = ln_abs - mq * r.abs().ln();
        }
        lw[mi - 1] = (sign, ln_abs);
        for t in 1..mi {
            let mut terms = Vec::with_capacity(n * t);
            for q in (0..n).filter(|&q| q != i) {
                let r = T::one() - theta[i] / theta[q];
                let ln_mq = T::from_usize_lossy(comps[q].m as usize).ln();
                for j in 1..=t {
                    let (ws, wl) = lw[mi - 1 - t + j];
                    let jf = T::from_usize_lossy(j);
                    let s = if r < T::zero() && j % 2 == 1 { -ws } else { ws };
                    terms.push((s, ln_mq - jf * r.abs().ln() + wl));
                }
            }
            let (s, l) = signed_log_sum(&terms);
            lw[mi - 1 - t] = (s, l - T::from_usize_lossy(t).ln());
        }
        let mut row = Vec::with_capacity(mi);
        for (j, &(s, l)) in lw.iter().enumerate() {
            if l > max_ln {
                return Err(Error::Overflow(format!(
                    "mixture weight w({}, {}) has magnitude e^{}",
                    i + 1,
                    j + 1,
                    l
                )));
            }
            let v = s * l.exp();
            abs_sum.add(v.abs());
            row.push(v);
        }
        table.push(row);
    }
    let mut wt = WeightTable {
        channels: ch.clone(),
        components: comps,
        w: table,
        abs_sum: abs_sum.value(),
        audit: NormalizationAudit {
            integral: T::nan(),
            reliable: false,
        },
    };
    wt.audit = audit_normalization(&wt);
    if !wt.audit.reliable {
        log::warn!(
            "mixture density integrates to {} (weights' absolute sum {})",
            wt.audit.integral,
            wt.abs_sum
        );
    }
    Ok(wt)
}

fn audit_normalization<T: Real>(wt: &WeightTable<T>) -> NormalizationAudit<T> {
    let tol = wt.roundoff_floor().max(c(1e-9));
    let cfg = QuadConfig::new(tol, tol);
    match integrate_positive_axis(|s| sum_pdf_inid(s, wt), wt.mean(), &cfg) {
        Ok(r) => NormalizationAudit {
            integral: r.value,
            reliable: (r.value - T::one()).abs() <= c(NORMALIZATION_TOLERANCE),
        },
        Err(_) => NormalizationAudit {
            integral: T::nan(),
            reliable: false,
        },
    }
}

impl<T: Real> WeightTable<T> {
    /// w(i, j) with 1-based component index i and shape j.
    pub fn weight(&self, i: usize, j: usize) -> T {
        self.w[i - 1][j - 1]
    }

    /// Absolute rounding noise expected in a weighted sum of unit-scale
    /// terms, 100 ε Σ|w|.
    pub fn roundoff_floor(&self) -> T {
        c::<T>(100.0) * T::epsilon() * self.abs_sum
    }

    /// L k, the shape of the pooled small-scale factor.
    pub fn total_small_scale(&self) -> u32 {
        self.channels.k * self.channels.len() as u32
    }

    /// Σ Ω_l, the mean of the sum.
    pub fn mean(&self) -> T {
        self.channels.omega.iter().fold(T::zero(), |s, &w| s + w)
    }

    /// Gamma-gamma law of mixture term (i, j), i 1-based.
    pub fn term(&self, i: usize, j: usize) -> GammaGammaParams<T> {
        let comp = &self.components[i - 1];
        let jf = T::from_usize_lossy(j);
        GammaGammaParams {
            a: T::from_usize_lossy(self.total_small_scale() as usize),
            b: jf,
            omega: jf * comp.theta(),
        }
    }

    /// (w, term law) over all (i, j).
    pub fn terms(&self) -> impl Iterator<Item = (T, GammaGammaParams<T>)> + '_ {
        self.w.iter().enumerate().flat_map(move |(i, row)| {
            row.iter()
                .enumerate()
                .map(move |(j, &w)| (w, self.term(i + 1, j + 1)))
        })
    }
}

/// Mixture density of S; 0 for s <= 0.
pub fn sum_pdf_inid<T: Real>(s: T, wt: &WeightTable<T>) -> T {
    if !(s > T::zero()) {
        return T::zero();
    }
    let mut acc = CompensatedSum::new();
    for (w, p) in wt.terms() {
        acc.add(w * gg_pdf(s, &p));
    }
    acc.value()
}

/// Mixture CDF of S; every term has the integer shape Lk.
pub fn sum_cdf_inid<T: Real>(s: T, wt: &WeightTable<T>) -> Result<T> {
    if !(s > T::zero()) {
        return Ok(T::zero());
    }
    let mut acc = CompensatedSum::new();
    for (w, p) in wt.terms() {
        acc.add(w * gg_cdf(s, &p)?);
    }
    Ok(acc.value())
}

/// Density of γ = γ₀ S² under the mixture; 0 for γ <= 0.
pub fn snr_pdf_inid<T: Real>(gamma: T, wt: &WeightTable<T>, gamma0: T) -> T {
    if !(gamma > T::zero()) {
        return T::zero();
    }
    sum_pdf_inid((gamma / gamma0).sqrt(), wt) / (c::<T>(2.0) * (gamma * gamma0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::integrate_positive_axis;

    fn table(k: u32, m: &[u32], omega: &[f64]) -> WeightTable<f64> {
        compute_weights(&InidChannelSet::new(k, m.to_vec(), omega.to_vec()).unwrap()).unwrap()
    }

    #[test]
    fn single_link_has_unit_weight() {
        let wt = table(3, &[2], &[1.4]);
        assert_eq!(wt.w, vec![vec![0.0, 1.0]]);
        assert_eq!(wt.abs_sum, 1.0);
    }

    #[test]
    fn two_link_table_by_hand() {
        // θ = (0.5, 1):
        // w(1,2) = (1 - 1/0.5)^-2 = 1, w(2,2) = (1 - 0.5)^-2 = 4,
        // w(1,1) = 2 (1 - 0.5)^-1 w(1,2) = 4, w(2,1) = 2 (1 - 2)^-1 w(2,2) = -8
        let wt = table(1, &[2, 2], &[1.0, 2.0]);
        let want = [[4.0, 1.0], [-8.0, 4.0]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((wt.w[i][j] - want[i][j]).abs() < 1e-13, "w({},{}) = {}", i + 1, j + 1, wt.w[i][j]);
            }
        }
        assert_eq!(wt.weight(2, 1), wt.w[1][0]);
    }

    #[test]
    fn weights_reproduce_laplace_transform_of_gamma_sum() {
        // Σ w(i,j) (1 + θ_i s)^-j = Π (1 + θ_l s)^-m_l
        let m = [2u32, 2, 3, 3];
        let omega = [1.0f64, 1.2, 1.44, 1.728];
        let wt = table(2, &m, &omega);
        for &s in &[0.0f64, 0.3, 1.0, 4.0, 25.0] {
            let exact: f64 = m.iter().zip(&omega).map(|(&m, &w)| (1.0 + w / m as f64 * s).powi(-(m as i32))).product();
            let mix: f64 = wt
                .components
                .iter()
                .zip(&wt.w)
                .map(|(cmp, row)| {
                    row.iter()
                        .enumerate()
                        .map(|(j, &w)| w * (1.0 + cmp.theta() * s).powi(-(j as i32 + 1)))
                        .sum::<f64>()
                })
                .sum();
            assert!((mix - exact).abs() < 1e-12 * wt.abs_sum, "s={s}: {mix} vs {exact}");
        }
    }

    #[test]
    fn mixture_integrates_to_one() {
        let wt = table(2, &[2, 2, 3, 3], &[1.0, 1.2, 1.44, 1.728]);
        assert!(wt.audit.reliable, "{:?}", wt.audit);
        assert!((wt.audit.integral - 1.0).abs() < 1e-4);
    }

    #[test]
    fn single_link_collapses_to_gamma_gamma() {
        let wt = table(4, &[2], &[1.3]);
        let p = GammaGammaParams::new(4.0, 2.0, 1.3).unwrap();
        for &s in &[0.05f64, 0.7, 1.3, 4.0] {
            assert!((sum_pdf_inid(s, &wt) - gg_pdf(s, &p)).abs() < 1e-14);
        }
    }

    #[test]
    fn mean_of_mixture_is_total_power() {
        let omega = [1.0f64, 1.2, 1.44, 1.728];
        let wt = table(2, &[2, 2, 3, 3], &omega);
        let tol = wt.roundoff_floor().max(1e-10);
        let cfg = QuadConfig::new(tol, tol);
        let m = integrate_positive_axis(|s| s * sum_pdf_inid(s, &wt), wt.mean(), &cfg).unwrap();
        let total: f64 = omega.iter().sum();
        assert!((m.value / total - 1.0).abs() < 1e-4, "{m:?}, Σ|w| = {}", wt.abs_sum);
    }

    #[test]
    fn snr_density_transform() {
        let wt = table(2, &[2, 3], &[0.9, 1.25]);
        let g0 = 2.5f64;
        for &s in &[0.3f64, 1.1, 2.9] {
            let gamma = g0 * s * s;
            let lhs = snr_pdf_inid(gamma, &wt, g0);
            let rhs = sum_pdf_inid(s, &wt) / (2.0 * (gamma * g0).sqrt());
            assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs());
        }
    }

    #[test]
    fn cdf_matches_integrated_density() {
        let wt = table(2, &[2, 2, 3], &[0.8, 1.0, 1.4]);
        let tol = wt.roundoff_floor().max(1e-10);
        let cfg = QuadConfig::new(tol, 1e-10);
        for &x in &[0.3f64, 1.5, 3.2, 7.0] {
            let q = crate::quad::integrate(|s| sum_pdf_inid(s, &wt), 0.0, x, &cfg).unwrap().value;
            let f = sum_cdf_inid(x, &wt).unwrap();
            assert!((f - q).abs() < 1e-7_f64.max(100.0 * tol), "x={x}: {f} vs {q}");
        }
        assert!((sum_cdf_inid(200.0, &wt).unwrap() - 1.0).abs() < 1e-9_f64.max(tol));
    }

    #[test]
    fn permuting_links_permutes_rows() {
        let a = table(2, &[2, 3, 1], &[0.9, 1.25, 0.6]);
        let b = table(2, &[1, 2, 3], &[0.6, 0.9, 1.25]);
        for (ra, rb) in [(0usize, 1usize), (1, 2), (2, 0)] {
            for (x, y) in a.w[ra].iter().zip(&b.w[rb]) {
                assert!((x - y).abs() <= 1e-12 * a.abs_sum);
            }
        }
        for &s in &[0.2f64, 1.0, 3.3] {
            assert!((sum_pdf_inid(s, &a) - sum_pdf_inid(s, &b)).abs() < 1e-12);
        }
    }

    #[test]
    fn deterministic_rebuild() {
        let ch = InidChannelSet::new(2, vec![2, 2, 3], vec![1.0, 1.1, 1.3]).unwrap();
        assert_eq!(compute_weights(&ch).unwrap(), compute_weights(&ch).unwrap());
    }

    #[test]
    fn equal_means_are_pooled_exactly() {
        // four identical links: Y ~ Gamma(8, θ), a single component
        let wt = table(2, &[2, 2, 2, 2], &[1.0, 1.0, 1.0, 1.0]);
        assert_eq!(wt.components.len(), 1);
        assert_eq!(wt.components[0].m, 8);
        assert_eq!(wt.w[0][7], 1.0);
        assert!(wt.w[0][..7].iter().all(|&w| w == 0.0));
        let p = GammaGammaParams::new(8.0, 8.0, 4.0).unwrap();
        assert!((sum_pdf_inid(3.7, &wt) - gg_pdf(3.7, &p)).abs() < 1e-14);
        assert!(wt.audit.reliable);
    }

    #[test]
    fn pooling_preserves_the_mean() {
        let wt = table(2, &[2, 2, 2], &[1.0, 1.005, 2.0]);
        assert_eq!(wt.components.len(), 2);
        assert_eq!(wt.components[0].links, vec![0, 1]);
        let cfg = QuadConfig::new(1e-10, 1e-10);
        let m = integrate_positive_axis(|s| s * sum_pdf_inid(s, &wt), wt.mean(), &cfg).unwrap();
        assert!((m.value / 4.005 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn rounding_from_real_shapes() {
        let links = [
            GammaGammaParams::new(2.19f64, 1.57, 0.9).unwrap(),
            GammaGammaParams::new(2.19, 1.57, 1.1).unwrap(),
        ];
        let (set, r) = InidChannelSet::from_gamma_gamma(&links).unwrap();
        assert_eq!(set.k, 2);
        assert_eq!(set.m, vec![2, 2]);
        assert_eq!(r.b, vec![1.57, 1.57]);
    }

    #[test]
    fn invalid_sets_are_rejected() {
        assert!(InidChannelSet::new(0, vec![1], vec![1.0f64]).is_err());
        assert!(InidChannelSet::new(1, vec![1, 2], vec![1.0f64]).is_err());
        assert!(InidChannelSet::new(1, vec![1], vec![-1.0f64]).is_err());
    }
}
