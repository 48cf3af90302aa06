//! Cognitive-radio-inspired rate-splitting multiple access for semi-grant-free
//! uplink transmissions.
//!
//! One grant-based user (GBU) shares a resource block with the strongest of
//! `K` grant-free users (GFUs). The base station broadcasts an interference
//! threshold derived from the GBU's channel; the admitted GFU splits its
//! message into two streams so that the GBU sees exactly the outage
//! performance it would have under orthogonal access, while the GFU's rate is
//! maximized.
//!
//! The crate is organized as:
//!
//! - [`model`]: configuration, channel sampling, SINR and rate formulas.
//! - [`protocol`]: threshold, case classification, power/rate split and
//!   per-realization outage decisions.
//! - [`baselines`]: the NOMA-based semi-grant-free comparison scheme.
//! - [`analytic`]: closed-form outage probability, its high-SNR expansions and
//!   an independent quadrature oracle.
//! - [`montecarlo`]: deterministic parallel outage estimation and sweeps.
//! - [`zones`]: capacity-region geometry of target-rate pairs.

pub mod analytic;
pub mod baselines;
pub mod error;
pub mod model;
pub mod montecarlo;
pub mod protocol;
pub mod zones;

pub use error::{Error, Result};
pub use model::{ChannelRealization, SystemConfig};
pub use protocol::{CaseLabel, TransmissionOutcome};
