//! Background budget for underground CSL bulk-heating experiments.
//!
//! Gamma and cosmic-muon power deposited in a shielded cryogenic absorber,
//! the detectable collapse rate as a function of depth, λ–r_c exclusion
//! curves and a first-order bolometer response model.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chord;
pub mod cli;
pub mod constants;
pub mod data;
pub mod error;
pub mod fit;
pub mod gamma;
pub mod manifest;
pub mod muon;
pub mod physics;
pub mod plot;
pub mod sensitivity;
pub mod thermal;

pub use error::{Error, Result};
pub use physics::{csl_heating_per_mass, csl_power, CslParams, DetectorSpec, Material};
