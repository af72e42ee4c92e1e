//! Monte-Carlo oracle: gamma-gamma irradiances as products of two Gamma
//! variates, summed over the links and pushed through log₂(1 + γ₀S²).
//!
//! Every (sample, link) pair owns a SplitMix64 stream keyed by the seed, so
//! an estimate depends only on (seed, samples). Samples are accumulated in
//! fixed blocks of [`BLOCK`] whose partial results are merged in block order,
//! which keeps the result independent of thread count and batch size.

use rand::RngCore;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;

use crate::capacity::{Capacity, CapacityPoint, Method, SnrContext};
use crate::channel::GammaGammaParams;
use crate::error::{Error, Result};

/// Samples per accumulation block.
pub const BLOCK: u64 = 1 << 16;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McConfig {
    pub samples: u64,
    pub seed: u64,
    /// Blocks handed to the thread pool at a time; bounds memory, never
    /// changes the result.
    pub batch: usize,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            samples: 10_000_000,
            seed: 20_160_601,
            batch: 64,
        }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples < 2 {
            return Err(Error::Config(format!("need at least 2 samples, got {}", self.samples)));
        }
        if self.batch == 0 {
            return Err(Error::Config("batch must be positive".into()));
        }
        if self.samples < 10_000 {
            log::warn!("{} Monte-Carlo samples is below acceptance grade", self.samples);
        }
        Ok(())
    }
}

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// SplitMix64 generator for one (seed, sample, link) stream.
#[derive(Debug, Clone)]
pub struct StreamRng {
    state: u64,
}

impl StreamRng {
    pub fn new(seed: u64, sample: u64, link: u64) -> Self {
        let key = mix64(seed ^ mix64(sample.wrapping_mul(GOLDEN) ^ mix64(link.wrapping_add(GOLDEN))));
        Self { state: key }
    }
}

impl RngCore for StreamRng {
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix64(self.state)
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        for chunk in dst.chunks_mut(8) {
            let v = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&v[..chunk.len()]);
        }
    }
}

/// Sampler for one gamma-gamma link.
#[derive(Debug, Clone, Copy)]
pub struct GammaGammaSampler {
    small: Gamma<f64>,
    large: Gamma<f64>,
}

impl GammaGammaSampler {
    pub fn new(p: &GammaGammaParams<f64>) -> Result<Self> {
        p.validate()?;
        let g = |shape: f64, scale: f64| {
            Gamma::new(shape, scale).map_err(|e| Error::Config(format!("gamma sampler ({shape}, {scale}): {e}")))
        };
        Ok(Self {
            small: g(p.a, 1.0 / p.a)?,
            large: g(p.b, p.omega / p.b)?,
        })
    }

    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> f64 {
        self.small.sample(rng) * self.large.sample(rng)
    }
}

/// One draw x·y with x ~ Gamma(a, 1/a) and y ~ Gamma(b, Ω/b).
pub fn sample_gamma_gamma<R: RngCore + ?Sized>(p: &GammaGammaParams<f64>, rng: &mut R) -> Result<f64> {
    Ok(GammaGammaSampler::new(p)?.sample(rng))
}

fn samplers(channels: &[GammaGammaParams<f64>]) -> Result<Vec<GammaGammaSampler>> {
    if channels.is_empty() {
        return Err(Error::Config("no channels".into()));
    }
    channels.iter().map(GammaGammaSampler::new).collect()
}

fn draw_sum(samplers: &[GammaGammaSampler], seed: u64, sample: u64) -> f64 {
    samplers
        .iter()
        .enumerate()
        .map(|(l, s)| s.sample(&mut StreamRng::new(seed, sample, l as u64)))
        .sum()
}

/// The sum S = Σ I_l for samples 0..cfg.samples, in sample order.
pub fn sample_sums(channels: &[GammaGammaParams<f64>], cfg: &McConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let s = samplers(channels)?;
    Ok((0..cfg.samples)
        .into_par_iter()
        .map(|i| draw_sum(&s, cfg.seed, i))
        .collect())
}

/// Running mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let d = x - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (x - self.mean);
    }

    fn merge(&mut self, o: &Moments) {
        if o.n == 0.0 {
            return;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        self.mean += d * o.n / n;
        self.m2 += o.m2 + d * d * self.n * o.n / n;
        self.n = n;
    }

    fn std_error(&self) -> f64 {
        (self.m2 / (self.n - 1.0) / self.n).sqrt()
    }
}

/// Capacity estimates at several γ₀ from common samples.
///
/// err_estimate is the sample standard error.
pub fn mc_capacity_sweep(
    channels: &[GammaGammaParams<f64>],
    gamma0: &[f64],
    cfg: &McConfig,
) -> Result<Vec<Capacity<f64>>> {
    cfg.validate()?;
    if let Some(g) = gamma0.iter().find(|g| !(**g > 0.0) || !g.is_finite()) {
        return Err(Error::Config(format!("gamma0 must be positive, got {g}")));
    }
    let s = samplers(channels)?;
    let k = gamma0.len();
    let blocks = cfg.samples.div_ceil(BLOCK);
    let mut total = vec![Moments::default(); k];
    let mut start = 0;
    while start < blocks {
        let end = (start + cfg.batch as u64).min(blocks);
        let partial: Vec<Vec<Moments>> = (start..end)
            .into_par_iter()
            .map(|b| {
                let mut acc = vec![Moments::default(); k];
                for i in b * BLOCK..((b + 1) * BLOCK).min(cfg.samples) {
                    let sum = draw_sum(&s, cfg.seed, i);
                    let s2 = sum * sum;
                    for (a, &g) in acc.iter_mut().zip(gamma0) {
                        a.push((g * s2).ln_1p());
                    }
                }
                acc
            })
            .collect();
        for block in &partial {
            for (t, p) in total.iter_mut().zip(block) {
                t.merge(p);
            }
        }
        start = end;
    }
    let ln2 = std::f64::consts::LN_2;
    Ok(total
        .iter()
        .map(|m| Capacity {
            bits: m.mean / ln2,
            err_estimate: m.std_error() / ln2,
            method: Method::MonteCarlo,
        })
        .collect())
}

/// Capacity estimate at one SNR point; `channels` must hold M·N links.
pub fn mc_capacity(
    channels: &[GammaGammaParams<f64>],
    ctx: &SnrContext<f64>,
    cfg: &McConfig,
) -> Result<CapacityPoint<f64>> {
    if channels.len() != ctx.links() {
        return Err(Error::Config(format!(
            "{} channels given for {}x{} apertures",
            channels.len(),
            ctx.m,
            ctx.n
        )));
    }
    Ok(mc_capacity_sweep(channels, &[ctx.gamma0], cfg)?[0].at(ctx))
}

/// Kolmogorov-Smirnov distance between the empirical CDF of `samples` and
/// `cdf`. Sorts `samples` in place.
pub fn ks_distance<F: Fn(f64) -> f64>(samples: &mut [f64], cdf: F) -> f64 {
    samples.sort_unstable_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Upper bound on the Kolmogorov-Smirnov distance between the empirical CDF
/// of sorted `samples` and `cdf`, evaluating `cdf` only at about `points`
/// order statistics. Between two evaluated order statistics both CDFs are
/// monotone, which bounds the gap there by the values at the ends.
pub fn ks_distance_bound<F: FnMut(f64) -> f64>(sorted: &[f64], mut cdf: F, points: usize) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return 0.0;
    }
    let nf = n as f64;
    let points = points.clamp(2, n);
    let mut idx: Vec<usize> = (0..points).map(|k| k * (n - 1) / (points - 1)).collect();
    idx.dedup();
    let vals: Vec<f64> = idx.iter().map(|&i| cdf(sorted[i])).collect();
    let mut d: f64 = vals[0].max(1.0 - vals[vals.len() - 1]);
    for (k, (&i, &f)) in idx.iter().zip(&vals).enumerate() {
        d = d.max((f - i as f64 / nf).abs()).max(((i + 1) as f64 / nf - f).abs());
        if let (Some(&j), Some(&g)) = (idx.get(k + 1), vals.get(k + 1)) {
            // on (x_i, x_j) the empirical CDF lies in [(i+1)/n, j/n]
            d = d.max(j as f64 / nf - f).max(g - (i + 1) as f64 / nf);
        }
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::scintillation_index;

    fn mean_se(x: &[f64]) -> (f64, f64) {
        let mut m = Moments::default();
        x.iter().for_each(|&v| m.push(v));
        (m.mean, m.std_error())
    }

    #[test]
    fn streams_are_distinct_and_reproducible() {
        let mut a = StreamRng::new(1, 2, 3);
        let mut b = StreamRng::new(1, 2, 3);
        let mut c = StreamRng::new(1, 3, 2);
        let xa: Vec<u64> = (0..4).map(|_| a.next_u64()).collect();
        assert_eq!(xa, (0..4).map(|_| b.next_u64()).collect::<Vec<_>>());
        assert_ne!(xa, (0..4).map(|_| c.next_u64()).collect::<Vec<_>>());
        let mut buf = [0u8; 11];
        a.fill_bytes(&mut buf);
        assert!(buf.iter().any(|&v| v != 0));
    }

    #[test]
    fn stream_output_is_uniform_enough() {
        // mean of 2^20 uniform u64 / 2^64 is 1/2 ± 0.00028 (1 sd)
        let n = 1 << 20;
        let m: f64 = (0..n)
            .map(|i| StreamRng::new(7, i, 0).next_u64() as f64 / 2f64.powi(64))
            .sum::<f64>()
            / n as f64;
        assert!((m - 0.5).abs() < 0.0015, "{m}");
    }

    #[test]
    fn sample_mean_and_scintillation() {
        let p = GammaGammaParams::new(2.19, 1.57, 1.3).unwrap();
        let s = GammaGammaSampler::new(&p).unwrap();
        let x: Vec<f64> = (0..1_000_000).map(|i| s.sample(&mut StreamRng::new(11, i, 0))).collect();
        let (m, se) = mean_se(&x);
        assert!((m - 1.3).abs() < 3.0 * se, "{m} ± {se}");
        let sq: Vec<f64> = x.iter().map(|v| v * v).collect();
        let (m2, se2) = mean_se(&sq);
        // delta method: SI = m2/m² - 1
        let si = m2 / (m * m) - 1.0;
        let se_si = (se2 / (m * m)).hypot(2.0 * m2 * se / m.powi(3));
        assert!((si - scintillation_index(2.19, 1.57)).abs() < 3.0 * se_si, "{si} ± {se_si}");
    }

    #[test]
    fn deterministic_channel_limit() {
        let p = GammaGammaParams::new(1e6, 1e6, 1.0).unwrap();
        let ctx = SnrContext::new(2, 2, 1.0, 10.0).unwrap();
        let cfg = McConfig {
            samples: 20_000,
            ..McConfig::default()
        };
        let c = mc_capacity(&[p; 4], &ctx, &cfg).unwrap();
        let want = (1.0 + ctx.gamma0 * 16.0f64).log2();
        assert!((c.capacity_bits - want).abs() < 1e-3);
        assert_eq!(c.method, Method::MonteCarlo);
    }

    #[test]
    fn invariant_to_batch_and_threads() {
        let p = GammaGammaParams::new(2.19, 1.57, 1.0).unwrap();
        let base = McConfig {
            samples: 300_001,
            seed: 5,
            batch: 1,
        };
        let g = [0.1, 1.0, 30.0];
        let a = mc_capacity_sweep(&[p; 3], &g, &base).unwrap();
        let b = mc_capacity_sweep(&[p; 3], &g, &McConfig { batch: 7, ..base }).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let c = pool.install(|| mc_capacity_sweep(&[p; 3], &g, &McConfig { batch: 2, ..base }).unwrap());
        for ((x, y), z) in a.iter().zip(&b).zip(&c) {
            assert_eq!(x.bits.to_bits(), y.bits.to_bits());
            assert_eq!(x.bits.to_bits(), z.bits.to_bits());
            assert_eq!(x.err_estimate.to_bits(), z.err_estimate.to_bits());
        }
    }

    #[test]
    fn sweep_matches_single_points() {
        let p = GammaGammaParams::new(3.0, 2.0, 1.0).unwrap();
        let cfg = McConfig {
            samples: 50_000,
            ..McConfig::default()
        };
        let sweep = mc_capacity_sweep(&[p; 2], &[0.5, 2.0], &cfg).unwrap();
        let one = mc_capacity_sweep(&[p; 2], &[2.0], &cfg).unwrap();
        assert_eq!(sweep[1], one[0]);
        assert!(sweep[0].bits < sweep[1].bits);
    }

    #[test]
    fn merged_moments_match_direct() {
        let x: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 * 0.01).collect();
        let mut whole = Moments::default();
        x.iter().for_each(|&v| whole.push(v));
        let mut a = Moments::default();
        let mut b = Moments::default();
        x[..313].iter().for_each(|&v| a.push(v));
        x[313..].iter().for_each(|&v| b.push(v));
        a.merge(&b);
        assert!((a.mean - whole.mean).abs() < 1e-14);
        assert!((a.m2 - whole.m2).abs() < 1e-10 * whole.m2);
    }

    #[test]
    fn ks_of_exact_sample() {
        // quantiles of U(0,1) at (i + 1/2)/n give distance 1/(2n)
        let mut x: Vec<f64> = (0..100).rev().map(|i| (i as f64 + 0.5) / 100.0).collect();
        let d = ks_distance(&mut x, |v| v.clamp(0.0, 1.0));
        assert!((d - 0.005).abs() < 1e-12);
    }

    #[test]
    fn grid_bound_brackets_exact_distance() {
        let p = GammaGammaParams::new(2.0, 3.0, 1.0).unwrap();
        let s = GammaGammaSampler::new(&p).unwrap();
        let mut x: Vec<f64> = (0..20_000).map(|i| s.sample(&mut StreamRng::new(3, i, 0))).collect();
        let cdf = |v: f64| crate::channel::gg_cdf(v, &p).unwrap();
        let exact = ks_distance(&mut x, cdf);
        let bound = ks_distance_bound(&x, cdf, 500);
        assert!(bound >= exact - 1e-15 && bound < exact + 0.01, "{exact} {bound}");
        assert!((ks_distance_bound(&x, cdf, 20_000) - exact).abs() < 1e-12);
        // 1% critical value for n = 20000
        assert!(exact < 1.63 / (20_000f64).sqrt());
    }

    #[test]
    fn rejects_bad_input() {
        let p = GammaGammaParams::new(3.0, 2.0, 1.0).unwrap();
        let ctx = SnrContext::new(2, 2, 1.0, 10.0).unwrap();
        assert!(mc_capacity(&[p; 3], &ctx, &McConfig::default()).is_err());
        let cfg = McConfig {
            samples: 1,
            ..McConfig::default()
        };
        assert!(mc_capacity_sweep(&[p], &[1.0], &cfg).is_err());
        assert!(mc_capacity_sweep(&[p], &[0.0], &McConfig::default()).is_err());
    }
}
