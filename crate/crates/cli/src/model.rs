//! Channel models behind one sweep point.

use fsocap_core::approx_iid::fit_iid_sum;
use fsocap_core::approx_inid::{compute_weights, InidChannelSet, ShapeRounding};
use fsocap_core::capacity::{
    awgn_capacity, capacity_iid_closed, capacity_iid_highsnr, capacity_inid_closed, capacity_inid_highsnr,
    capacity_quadrature_iid, capacity_quadrature_inid,
};
use fsocap_core::channel::{gg_shape_params, scintillation_index, AtmosphericLink, GammaGammaParams};
use fsocap_core::{sum_moments, AlphaMuFit, Capacity, Method, SnrContext, SumMoments, WeightTable};
use serde::Serialize;

use crate::config::{LinkSection, Mode, Scenario, SnrAxis, SweepAxis};
use crate::error::CliError;

/// Physical inputs of one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointInputs {
    pub link: LinkSection,
    pub omega: Vec<f64>,
    pub snr_axis: SnrAxis,
    pub snr_db: f64,
}

/// Ω_l ∝ β^(l-1), scaled so that ΣΩ = L.
pub fn geometric_omega(beta: f64, links: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..links).map(|l| beta.powi(l as i32)).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|w| w * links as f64 / total).collect()
}

impl PointInputs {
    pub fn at(sc: &Scenario, value: f64) -> Self {
        let f = &sc.file;
        let mut link = f.link.clone();
        let inid = f.inid.clone().unwrap_or_default();
        let mut beta = inid.beta;
        match f.sweep.axis {
            SweepAxis::Cn2 => link.cn2 = value,
            SweepAxis::Aperture => link.aperture = value,
            SweepAxis::Distance => link.distance = value,
            SweepAxis::Beta => beta = Some(value),
            _ => {}
        }
        let links = sc.links();
        let omega = match (f.system.mode, inid.omega, beta) {
            (Mode::Inid, Some(w), _) => w,
            (Mode::Inid, None, Some(b)) => geometric_omega(b, links),
            _ => vec![1.0; links],
        };
        let (snr_axis, snr_db) = match f.sweep.axis.snr_axis() {
            Some(axis) => (axis, value),
            None => {
                let s = f.snr.expect("validated: physical sweeps carry [snr]");
                (s.axis, s.value)
            }
        };
        Self {
            link,
            omega,
            snr_axis,
            snr_db,
        }
    }

    /// Same channel law, possibly a different SNR.
    pub fn same_channel(&self, other: &Self) -> bool {
        self.link == other.link && self.omega == other.omega
    }
}

/// The analytical approximation of the sum law.
#[derive(Debug, Clone)]
pub enum Approx {
    AlphaMu(AlphaMuFit<f64>),
    Mixture {
        table: WeightTable<f64>,
        rounding: ShapeRounding<f64>,
    },
}

/// Everything needed to evaluate capacities for one channel law.
#[derive(Debug, Clone)]
pub struct ChannelModel {
    pub a: f64,
    pub b: f64,
    pub channels: Vec<GammaGammaParams<f64>>,
    /// Exact moments of the sum of the true gamma-gamma links.
    pub moments: SumMoments<f64>,
    pub approx: Result<Approx, String>,
}

impl ChannelModel {
    pub fn build(mode: Mode, inputs: &PointInputs) -> Result<Self, CliError> {
        let l = &inputs.link;
        let link = AtmosphericLink::new(l.cn2, l.wavelength, l.distance, l.aperture)?;
        let (a, b) = gg_shape_params(&link)?;
        let channels = inputs
            .omega
            .iter()
            .map(|&w| GammaGammaParams::new(a, b, w))
            .collect::<Result<Vec<_>, _>>()?;
        let moments = sum_moments(&channels)?;
        let approx = match mode {
            Mode::Iid => fit_iid_sum(channels.len(), &channels[0]).map(Approx::AlphaMu),
            Mode::Inid => InidChannelSet::from_gamma_gamma(&channels)
                .and_then(|(set, rounding)| Ok(Approx::Mixture { table: compute_weights(&set)?, rounding })),
        }
        .map_err(|e| e.to_string());
        Ok(Self {
            a,
            b,
            channels,
            moments,
            approx,
        })
    }

    pub fn scintillation_index(&self) -> f64 {
        scintillation_index(self.a, self.b)
    }

    /// SNR context for a value on `axis`.
    pub fn context(&self, m: u32, n: u32, eta: f64, axis: SnrAxis, db: f64) -> Result<SnrContext<f64>, CliError> {
        Ok(match axis {
            SnrAxis::RhoDb => SnrContext::from_rho_db(m, n, eta, db)?,
            SnrAxis::GammaBarDb => SnrContext::from_gamma_bar_db(m, n, eta, db)?,
            SnrAxis::MeanSnrDb => SnrContext::from_mean_snr_db(m, n, eta, db, self.moments.e2)?,
        })
    }

    /// False when the mixture failed its normalization audit.
    pub fn reliable(&self) -> bool {
        match &self.approx {
            Ok(Approx::Mixture { table, .. }) => table.audit.reliable,
            _ => true,
        }
    }

    /// One analytical capacity; Monte-Carlo is handled by the sweep runner.
    pub fn capacity(&self, method: Method, gamma0: f64, tolerance: f64) -> Result<Capacity<f64>, String> {
        if method == Method::Awgn {
            return Ok(Capacity {
                bits: awgn_capacity(gamma0 * self.moments.e2),
                err_estimate: 0.0,
                method,
            });
        }
        let approx = self.approx.as_ref().map_err(|e| e.clone())?;
        let r = match (approx, method) {
            (Approx::AlphaMu(fit), Method::ClosedForm) => capacity_iid_closed(fit, gamma0, tolerance),
            (Approx::AlphaMu(fit), Method::Quadrature) => capacity_quadrature_iid(fit, gamma0, tolerance),
            (Approx::AlphaMu(fit), Method::HighSnr) => capacity_iid_highsnr(fit, gamma0),
            (Approx::Mixture { table, .. }, Method::ClosedForm) => capacity_inid_closed(table, gamma0, tolerance),
            (Approx::Mixture { table, .. }, Method::Quadrature) => capacity_quadrature_inid(table, gamma0, tolerance),
            (Approx::Mixture { table, .. }, Method::HighSnr) => capacity_inid_highsnr(table, gamma0),
            (_, m) => unreachable!("{m} is not an analytical method"),
        };
        r.map_err(|e| e.to_string())
    }

    /// Provenance record for the output metadata.
    pub fn describe(&self, sweep_value: Option<f64>, with_weights: bool) -> ModelInfo {
        let approx = match &self.approx {
            Err(e) => ApproxInfo::Failed { error: e.clone() },
            Ok(Approx::AlphaMu(f)) => ApproxInfo::AlphaMu {
                alpha: f.alpha,
                mu: f.mu,
                r_hat: f.r_hat,
                residual: f.residual,
            },
            Ok(Approx::Mixture { table, rounding }) => ApproxInfo::Mixture(MixtureInfo::new(table, rounding, with_weights)),
        };
        ModelInfo {
            sweep_value,
            a: self.a,
            b: self.b,
            scintillation_index: self.scintillation_index(),
            omega: self.channels.iter().map(|p| p.omega).collect(),
            sum_e1: self.moments.e1,
            sum_e2: self.moments.e2,
            sum_e4: self.moments.e4,
            approximation: approx,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelInfo {
    /// None when the model is shared by every sweep point.
    pub sweep_value: Option<f64>,
    pub a: f64,
    pub b: f64,
    pub scintillation_index: f64,
    pub omega: Vec<f64>,
    pub sum_e1: f64,
    pub sum_e2: f64,
    pub sum_e4: f64,
    pub approximation: ApproxInfo,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ApproxInfo {
    AlphaMu {
        alpha: f64,
        mu: f64,
        r_hat: f64,
        residual: f64,
    },
    Mixture(MixtureInfo),
    Failed {
        error: String,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct MixtureInfo {
    pub k: u32,
    pub m: Vec<u32>,
    pub rounding: String,
    /// Links pooled into each component, 0-based.
    pub components: Vec<Vec<usize>>,
    pub component_m: Vec<u32>,
    pub component_omega: Vec<f64>,
    pub abs_weight_sum: f64,
    pub weights_sha256: String,
    pub normalization: f64,
    pub reliable: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<Vec<f64>>>,
}

impl MixtureInfo {
    fn new(t: &WeightTable<f64>, r: &ShapeRounding<f64>, with_weights: bool) -> Self {
        let bytes: Vec<u8> = t.w.iter().flatten().flat_map(|w| w.to_le_bytes()).collect();
        let mean_a = r.a.iter().sum::<f64>() / r.a.len() as f64;
        let b: Vec<String> = r.b.iter().map(|b| format!("{b}")).collect();
        Self {
            k: r.k,
            m: r.m.clone(),
            rounding: format!("k: mean a {mean_a} -> {}; m: b [{}] -> {:?}", r.k, b.join(", "), r.m),
            components: t.components.iter().map(|c| c.links.clone()).collect(),
            component_m: t.components.iter().map(|c| c.m).collect(),
            component_omega: t.components.iter().map(|c| c.omega).collect(),
            abs_weight_sum: t.abs_sum,
            weights_sha256: crate::config::sha256_hex(&bytes),
            normalization: t.audit.integral,
            reliable: t.audit.reliable,
            weights: with_weights.then(|| t.w.clone()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_means_sum_to_link_count() {
        let w = geometric_omega(2.0, 4);
        assert!((w.iter().sum::<f64>() - 4.0).abs() < 1e-14);
        assert!((w[3] / w[2] - 2.0).abs() < 1e-14);
        assert_eq!(geometric_omega(1.0, 3), vec![1.0; 3]);
    }

    #[test]
    fn fig1_model() {
        let inputs = PointInputs {
            link: LinkSection {
                cn2: 3e-14,
                wavelength: 850e-9,
                distance: 4000.0,
                aperture: 0.01,
            },
            omega: vec![1.0; 4],
            snr_axis: SnrAxis::RhoDb,
            snr_db: 10.0,
        };
        let m = ChannelModel::build(Mode::Iid, &inputs).unwrap();
        assert!((m.a - 2.192370932201311).abs() < 1e-12);
        assert!((m.moments.e1 - 4.0).abs() < 1e-12);
        let ctx = m.context(2, 2, 1.0, SnrAxis::RhoDb, 10.0).unwrap();
        let c = m.capacity(Method::ClosedForm, ctx.gamma0, 1e-10).unwrap();
        let q = m.capacity(Method::Quadrature, ctx.gamma0, 1e-10).unwrap();
        assert!((c.bits - q.bits).abs() < 1e-8);
        let mix = ChannelModel::build(Mode::Inid, &inputs).unwrap();
        let info = mix.describe(None, true);
        match info.approximation {
            ApproxInfo::Mixture(mi) => {
                assert_eq!(mi.components, vec![vec![0, 1, 2, 3]]);
                assert_eq!(mi.weights, Some(vec![vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]]));
            }
            other => panic!("{other:?}"),
        }
    }
}
