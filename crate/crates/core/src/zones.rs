//! Non-outage zones of target-rate pairs for fixed received powers.
//!
//! With received SNRs `P0|h0|^2` and `Ps|hK|^2` the two-user multiple-access
//! region is a pentagon. Each NOMA decoding order reaches one corner of the
//! dominant face; rate-splitting reaches the whole face.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::log2_1p;

/// Characteristic rates of the two-user region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegionCorners {
    /// GBU rate without interference.
    pub a0: f64,
    /// GFU rate without interference.
    pub ak: f64,
    /// GBU rate when decoded first.
    pub b0: f64,
    /// GFU rate when decoded first.
    pub bk: f64,
    /// Sum capacity.
    pub sum: f64,
}

pub fn region_corners(p0g0: f64, psgk: f64) -> RegionCorners {
    RegionCorners {
        a0: log2_1p(p0g0),
        ak: log2_1p(psgk),
        b0: log2_1p(p0g0 / (psgk + 1.0)),
        bk: log2_1p(psgk / (p0g0 + 1.0)),
        sum: log2_1p(p0g0 + psgk),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ZoneLabel {
    /// Only the order GBU first, then GFU, meets both targets.
    NomaX0First,
    /// Only the order GFU first, then GBU, meets both targets.
    NomaXkFirst,
    NomaEither,
    /// Only rate-splitting meets both targets.
    RsmaOnly,
    Outage,
}

impl ZoneLabel {
    pub const ALL: [ZoneLabel; 5] =
        [ZoneLabel::NomaX0First, ZoneLabel::NomaXkFirst, ZoneLabel::NomaEither, ZoneLabel::RsmaOnly, ZoneLabel::Outage];

    pub fn name(self) -> &'static str {
        match self {
            ZoneLabel::NomaX0First => "noma_x0_first",
            ZoneLabel::NomaXkFirst => "noma_xk_first",
            ZoneLabel::NomaEither => "noma_either",
            ZoneLabel::RsmaOnly => "rsma_only",
            ZoneLabel::Outage => "outage",
        }
    }

    pub fn is_feasible(self) -> bool {
        self != ZoneLabel::Outage
    }

    pub fn is_noma_feasible(self) -> bool {
        matches!(self, ZoneLabel::NomaX0First | ZoneLabel::NomaXkFirst | ZoneLabel::NomaEither)
    }
}

/// Rounding slack on the sum-rate face, relative to the sum capacity.
const FACE_SLACK: f64 = 4.0 * f64::EPSILON;

/// Labels a target pair against the region of the given received powers.
pub fn classify_with_corners(c: &RegionCorners, target_gbu: f64, target_gfu: f64) -> ZoneLabel {
    let x0_first = target_gbu <= c.b0 && target_gfu <= c.ak;
    let xk_first = target_gbu <= c.a0 && target_gfu <= c.bk;
    match (x0_first, xk_first) {
        (true, true) => return ZoneLabel::NomaEither,
        (true, false) => return ZoneLabel::NomaX0First,
        (false, true) => return ZoneLabel::NomaXkFirst,
        (false, false) => {}
    }
    let on_face = target_gbu + target_gfu <= c.sum * (1.0 + FACE_SLACK);
    if target_gbu <= c.a0 && target_gfu <= c.ak && on_face {
        ZoneLabel::RsmaOnly
    } else {
        ZoneLabel::Outage
    }
}

pub fn classify_rate_pair(p0g0: f64, psgk: f64, target_gbu: f64, target_gfu: f64) -> Result<ZoneLabel> {
    if !(p0g0 >= 0.0 && psgk >= 0.0 && p0g0.is_finite() && psgk.is_finite()) {
        return Err(Error::Domain(format!("received powers must be finite and >= 0, got {p0g0}, {psgk}")));
    }
    if !(target_gbu > 0.0 && target_gfu > 0.0) {
        return Err(Error::Domain(format!("targets must be positive, got {target_gbu}, {target_gfu}")));
    }
    Ok(classify_with_corners(&region_corners(p0g0, psgk), target_gbu, target_gfu))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZoneCell {
    pub target_gbu: f64,
    pub target_gfu: f64,
    pub label: ZoneLabel,
}

/// Classifies an `n x n` grid spanning `(0, 1.2 a0] x (0, 1.2 ak]`, row-major
/// in the GBU target.
pub fn zone_grid(p0g0: f64, psgk: f64, n: usize) -> Result<Vec<ZoneCell>> {
    if n == 0 {
        return Err(Error::InvalidArgument("grid size must be at least 1".into()));
    }
    if !(p0g0 > 0.0 && psgk > 0.0 && p0g0.is_finite() && psgk.is_finite()) {
        return Err(Error::Domain(format!("received powers must be finite and > 0, got {p0g0}, {psgk}")));
    }
    let c = region_corners(p0g0, psgk);
    let mut cells = Vec::with_capacity(n * n);
    for i in 0..n {
        let target_gbu = (i + 1) as f64 / n as f64 * 1.2 * c.a0;
        for j in 0..n {
            let target_gfu = (j + 1) as f64 / n as f64 * 1.2 * c.ak;
            cells.push(ZoneCell { target_gbu, target_gfu, label: classify_with_corners(&c, target_gbu, target_gfu) });
        }
    }
    Ok(cells)
}
