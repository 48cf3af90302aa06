//! Admission and allocation logic of the rate-splitting semi-grant-free
//! scheme.
//!
//! The base station computes an interference threshold from the GBU's channel
//! and broadcasts it. Depending on where the strongest GFU's received power
//! falls relative to that threshold, one of three cases applies:
//!
//! - Case I: the GFU's full power fits under the threshold. It sends a single
//!   stream decoded last (`alpha = beta = 0`).
//! - Case II: the threshold is positive but too small. The GFU splits its
//!   message so that the stream decoded last produces exactly the tolerable
//!   interference, and the remainder is decoded before the GBU.
//! - Case III: the GBU is already in outage (zero threshold). The GFU sends a
//!   single stream decoded first (`alpha = beta = 1`).
//!
//! In every case the admitted user is the one with the largest gain.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{log2_1p, ChannelRealization, SystemConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum CaseLabel {
    CaseI,
    CaseII,
    CaseIII,
}

impl CaseLabel {
    pub const ALL: [CaseLabel; 3] = [CaseLabel::CaseI, CaseLabel::CaseII, CaseLabel::CaseIII];

    pub fn index(self) -> usize {
        match self {
            CaseLabel::CaseI => 0,
            CaseLabel::CaseII => 1,
            CaseLabel::CaseIII => 2,
        }
    }
}

/// Broadcast interference threshold and its unclipped value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Threshold {
    /// `P0 |h0|^2 / eps0 - 1`; negative when the GBU is in outage.
    pub tau_hat: f64,
    /// `max(0, tau_hat)`.
    pub tau: f64,
}

pub fn interference_threshold(config: &SystemConfig, gain_gbu: f64) -> Threshold {
    let tau_hat = config.power_gbu() * gain_gbu / config.eps0() - 1.0;
    Threshold { tau_hat, tau: tau_hat.max(0.0) }
}

/// Outage of the GBU under orthogonal access: `log2(1 + P0 g0) < R0`.
///
/// Evaluated through the same threshold arithmetic as the protocol so the
/// two agree bit-for-bit; an exact `tau_hat = 0` counts as success.
pub fn gbu_oma_outage(config: &SystemConfig, gain_gbu: f64) -> bool {
    interference_threshold(config, gain_gbu).tau_hat < 0.0
}

fn case_for(config: &SystemConfig, threshold: Threshold, best_gain: f64) -> CaseLabel {
    if threshold.tau <= 0.0 {
        CaseLabel::CaseIII
    } else if config.power_gfu() * best_gain <= threshold.tau {
        CaseLabel::CaseI
    } else {
        CaseLabel::CaseII
    }
}

pub fn classify_case(config: &SystemConfig, realization: &ChannelRealization) -> CaseLabel {
    let threshold = interference_threshold(config, realization.gain_gbu());
    case_for(config, threshold, realization.best_gain())
}

/// Optimal power split `alpha` and target-rate split `beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Allocation {
    pub alpha: f64,
    pub beta: f64,
}

fn case_two_allocation(config: &SystemConfig, tau_hat: f64, best_gain: f64) -> Allocation {
    let alpha = (1.0 - tau_hat / (config.power_gfu() * best_gain)).clamp(0.0, 1.0);
    // The raw value goes negative once log2(1 + tau_hat) exceeds the target;
    // outage is decided on the total rate, so clamping changes no outcome.
    let beta = (1.0 - log2_1p(tau_hat) / config.target_rate_gfu()).clamp(0.0, 1.0);
    Allocation { alpha, beta }
}

pub fn allocate(config: &SystemConfig, realization: &ChannelRealization, case: CaseLabel) -> Result<Allocation> {
    let actual = classify_case(config, realization);
    if actual != case {
        return Err(Error::Inconsistent(format!(
            "allocation requested for {case:?} but the realization is {actual:?}"
        )));
    }
    Ok(match case {
        CaseLabel::CaseI => Allocation { alpha: 0.0, beta: 0.0 },
        CaseLabel::CaseII => {
            let threshold = interference_threshold(config, realization.gain_gbu());
            case_two_allocation(config, threshold.tau_hat, realization.best_gain())
        }
        CaseLabel::CaseIII => Allocation { alpha: 1.0, beta: 1.0 },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransmissionOutcome {
    pub case_label: CaseLabel,
    pub tau: f64,
    pub tau_hat: f64,
    pub alpha: f64,
    pub beta: f64,
    pub rate_gbu: f64,
    pub rate_gfu_total: f64,
    pub rate_gfu_s1: f64,
    pub rate_gfu_s2: f64,
    /// The admitted GFU withholds its transmission (Case II only).
    pub gfu_silent: bool,
    pub gbu_outage: bool,
    pub gfu_outage: bool,
}

/// Runs the protocol on one block and decides both users' outage.
pub fn evaluate_transmission(config: &SystemConfig, realization: &ChannelRealization) -> TransmissionOutcome {
    let g0 = realization.gain_gbu();
    let gk = realization.best_gain();
    let rx_gbu = config.power_gbu() * g0;
    let rx_gfu = config.power_gfu() * gk;
    let threshold = interference_threshold(config, g0);
    let target = config.target_rate_gfu();
    let case_label = case_for(config, threshold, gk);

    let base = TransmissionOutcome {
        case_label,
        tau: threshold.tau,
        tau_hat: threshold.tau_hat,
        alpha: 0.0,
        beta: 0.0,
        rate_gbu: 0.0,
        rate_gfu_total: 0.0,
        rate_gfu_s1: 0.0,
        rate_gfu_s2: 0.0,
        gfu_silent: false,
        gbu_outage: false,
        gfu_outage: false,
    };

    match case_label {
        CaseLabel::CaseI => {
            // x_0 -> x_K
            let rate = log2_1p(rx_gfu);
            TransmissionOutcome {
                rate_gbu: log2_1p(rx_gbu / (rx_gfu + 1.0)),
                rate_gfu_total: rate,
                rate_gfu_s2: rate,
                gfu_outage: rate < target,
                ..base
            }
        }
        CaseLabel::CaseII => {
            let tau_hat = threshold.tau_hat;
            let alloc = case_two_allocation(config, tau_hat, gk);
            let s2 = log2_1p(tau_hat);
            let s1 = log2_1p((rx_gfu - tau_hat) / (rx_gbu + tau_hat + 1.0));
            let total = s1 + s2;
            let silent = total < target;
            TransmissionOutcome {
                alpha: alloc.alpha,
                beta: alloc.beta,
                rate_gbu: log2_1p(rx_gbu / (tau_hat + 1.0)),
                rate_gfu_total: total,
                rate_gfu_s1: s1,
                rate_gfu_s2: s2,
                gfu_silent: silent,
                gfu_outage: silent,
                ..base
            }
        }
        CaseLabel::CaseIII => {
            // x_K -> x_0
            let rate = log2_1p(rx_gfu / (rx_gbu + 1.0));
            TransmissionOutcome {
                alpha: 1.0,
                beta: 1.0,
                rate_gbu: log2_1p(rx_gbu),
                rate_gfu_total: rate,
                rate_gfu_s1: rate,
                gfu_outage: rate < target,
                gbu_outage: threshold.tau_hat < 0.0,
                ..base
            }
        }
    }
}
