use fsocap_core::approx_iid::sum_moments;
use fsocap_core::approx_inid::{compute_weights, snr_pdf_inid, sum_cdf_inid, sum_pdf_inid, InidChannelSet};
use fsocap_core::channel::{AtmosphericLink, GammaGammaParams};
use fsocap_core::montecarlo::{ks_distance, GammaGammaSampler, StreamRng};
use fsocap_core::quad::{integrate_positive_axis, QuadConfig};
use proptest::prelude::*;

const FIG2_OMEGA: [f64; 4] = [0.9388992949506607, 1.254104446186981, 0.8695626743499749, 1.0054685056194532];

fn shapes() -> (f64, f64) {
    let link = AtmosphericLink::new(3e-14, 850e-9, 4000.0, 0.01).unwrap();
    let p = GammaGammaParams::from_link(&link, 1.0).unwrap();
    (p.a, p.b)
}

fn fig2() -> Vec<GammaGammaParams<f64>> {
    let (a, b) = shapes();
    FIG2_OMEGA.iter().map(|&w| GammaGammaParams::new(a, b, w).unwrap()).collect()
}

#[test]
fn first_moment_and_snr_mean_track_exact_values() {
    let links = fig2();
    let (set, _) = InidChannelSet::from_gamma_gamma(&links).unwrap();
    let wt = compute_weights(&set).unwrap();
    assert!(wt.audit.reliable);
    let exact = sum_moments(&links).unwrap();
    let tol = wt.roundoff_floor().max(1e-10);
    let cfg = QuadConfig::new(tol, 1e-10);
    let m1 = integrate_positive_axis(|s| s * sum_pdf_inid(s, &wt), exact.e1, &cfg).unwrap().value;
    assert!((m1 / exact.e1 - 1.0).abs() < 0.02, "{m1} vs {}", exact.e1);

    // The mixture is the law of (Σx/L)(Σy) with Σx ~ Gamma(Lk, 1/k), so its
    // second moment is (1 + 1/(Lk))((ΣΩ)² + Σ Ω²/m).
    let lk = wt.total_small_scale() as f64;
    let sum_w: f64 = set.omega.iter().sum();
    let diag: f64 = set.omega.iter().zip(&set.m).map(|(w, &m)| w * w / m as f64).sum();
    let model_e2 = (1.0 + 1.0 / lk) * (sum_w * sum_w + diag);
    let g0 = 0.05;
    let mean = integrate_positive_axis(|g| g * snr_pdf_inid(g, &wt, g0), g0 * exact.e2, &cfg).unwrap().value;
    assert!((mean / (g0 * model_e2) - 1.0).abs() < 1e-6, "{mean} vs {}", g0 * model_e2);
    // dropping the cross terms loses a few percent of the true E(S²)
    assert!(model_e2 < exact.e2 && model_e2 > 0.9 * exact.e2);
}

#[test]
fn mixture_stays_near_simulated_sum() {
    let links = fig2();
    let (set, _) = InidChannelSet::from_gamma_gamma(&links).unwrap();
    let wt = compute_weights(&set).unwrap();
    let samplers: Vec<_> = links.iter().map(|p| GammaGammaSampler::new(p).unwrap()).collect();
    let mut x: Vec<f64> = (0..100_000u64)
        .map(|i| samplers.iter().enumerate().map(|(l, s)| s.sample(&mut StreamRng::new(29, i, l as u64))).sum())
        .collect();
    let d = ks_distance(&mut x, |s| sum_cdf_inid(s, &wt).unwrap());
    // cross-term neglect plus integer shapes put the law about 0.043 away
    assert!(d < 0.05, "D = {d}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]
    #[test]
    fn mixture_is_invariant_to_link_order(
        m in proptest::collection::vec(1u32..4, 3),
        w in proptest::collection::vec(0.5f64..2.0, 3),
        rot in 1usize..3,
        s in 0.2f64..8.0,
    ) {
        let mut theta: Vec<f64> = w.iter().zip(&m).map(|(w, m)| w / *m as f64).collect();
        theta.sort_by(f64::total_cmp);
        prop_assume!(theta.windows(2).all(|p| p[1] / p[0] > 1.05));
        let a = compute_weights(&InidChannelSet::new(2, m.clone(), w.clone()).unwrap()).unwrap();
        let (mut m2, mut w2) = (m.clone(), w.clone());
        m2.rotate_left(rot);
        w2.rotate_left(rot);
        let b = compute_weights(&InidChannelSet::new(2, m2, w2).unwrap()).unwrap();
        let (fa, fb) = (sum_pdf_inid(s, &a), sum_pdf_inid(s, &b));
        let tol = 1e-12f64.max(a.roundoff_floor()).max(b.roundoff_floor());
        prop_assert!((fa - fb).abs() <= tol * fa.abs().max(1.0), "{} vs {}", fa, fb);
    }
}
