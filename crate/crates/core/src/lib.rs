//! Ergodic capacity of M×N MIMO free-space optical links with equal-gain
//! combining over gamma-gamma turbulence.
//!
//! The analytical paths are generic over the scalar type ([`Real`], `f32` or
//! `f64`); the Monte-Carlo oracle runs in `f64`. Concrete aliases for both
//! precisions live in [`f64`] and [`f32`].

pub mod approx_iid;
pub mod approx_inid;
pub mod capacity;
pub mod channel;
pub mod error;
pub mod montecarlo;
pub mod quad;
pub mod real;
pub mod specfun;

pub use approx_iid::{fit_alpha_mu, fit_iid_sum, snr_pdf_iid, sum_moments, AlphaMuFit, SumMoments};
pub use approx_inid::{compute_weights, snr_pdf_inid, sum_cdf_inid, sum_pdf_inid, InidChannelSet, WeightTable};
pub use capacity::{
    awgn_capacity, capacity_iid_closed, capacity_iid_highsnr, capacity_inid_closed, capacity_inid_highsnr,
    capacity_quadrature, gamma0, Capacity, CapacityPoint, Method, SnrContext,
};
pub use channel::{gg_cdf, gg_pdf, scintillation_index, AtmosphericLink, GammaGammaParams};
pub use error::{Error, Result};
pub use montecarlo::{mc_capacity, mc_capacity_sweep, McConfig};
pub use real::Real;

macro_rules! aliases {
    ($t:ident) => {
        pub type AtmosphericLink = crate::channel::AtmosphericLink<$t>;
        pub type GammaGammaParams = crate::channel::GammaGammaParams<$t>;
        pub type SumMoments = crate::approx_iid::SumMoments<$t>;
        pub type AlphaMuFit = crate::approx_iid::AlphaMuFit<$t>;
        pub type InidChannelSet = crate::approx_inid::InidChannelSet<$t>;
        pub type WeightTable = crate::approx_inid::WeightTable<$t>;
        pub type SnrContext = crate::capacity::SnrContext<$t>;
        pub type Capacity = crate::capacity::Capacity<$t>;
        pub type CapacityPoint = crate::capacity::CapacityPoint<$t>;
        pub type ContourConfig = crate::specfun::ContourConfig<$t>;
        pub type QuadConfig = crate::quad::QuadConfig<$t>;
    };
}

/// Double-precision instantiations.
pub mod f64 {
    aliases!(f64);
}

/// Single-precision instantiations.
pub mod f32 {
    aliases!(f32);
}
