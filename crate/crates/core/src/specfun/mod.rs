//! Special functions used by the channel and capacity models.

mod bessel;
mod gamma;
mod mellin;

pub use bessel::{bessel_k, ln_bessel_k, BesselK};
pub use gamma::{digamma, gamma_p, ln_gamma, ln_gamma_ratio, ln_gamma_complex};
pub use mellin::{mellin_barnes_eval, ContourConfig, GammaFactor, MellinBarnesSpec, MellinBarnesValue};
