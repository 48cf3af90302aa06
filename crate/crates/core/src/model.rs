//! Domain types, channel sampling and the SIC rate formulas.
//!
//! Noise variance is normalized to one, so transmit powers are transmit SNRs
//! and every quantity here is dimensionless except rates (bits per channel
//! use).

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};

/// Converts a power ratio in dB to linear scale.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// SNR threshold `2^rate - 1` for a target rate in bits per channel use.
pub fn snr_threshold(rate: f64) -> f64 {
    (rate * std::f64::consts::LN_2).exp_m1()
}

/// System parameters for one GBU group.
///
/// Derived thresholds are recomputed from the primary fields on every
/// construction; there is no way to mutate them independently.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SystemConfig {
    num_gfus: usize,
    power_gbu: f64,
    power_gfu: f64,
    target_rate_gbu: f64,
    target_rate_gfu: f64,
    eps0: f64,
    eps_s: f64,
    eta0: f64,
    eta_s: f64,
}

impl SystemConfig {
    /// Builds a configuration from linear transmit SNRs.
    pub fn new(
        num_gfus: usize,
        power_gbu: f64,
        power_gfu: f64,
        target_rate_gbu: f64,
        target_rate_gfu: f64,
    ) -> Result<Self> {
        if num_gfus == 0 {
            return Err(Error::InvalidConfig("number of grant-free users must be at least 1".into()));
        }
        for (name, value) in [
            ("GBU transmit power", power_gbu),
            ("GFU transmit power", power_gfu),
            ("GBU target rate", target_rate_gbu),
            ("GFU target rate", target_rate_gfu),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be finite and strictly positive, got {value}"
                )));
            }
        }
        let eps0 = snr_threshold(target_rate_gbu);
        let eps_s = snr_threshold(target_rate_gfu);
        Ok(Self {
            num_gfus,
            power_gbu,
            power_gfu,
            target_rate_gbu,
            target_rate_gfu,
            eps0,
            eps_s,
            eta0: eps0 / power_gbu,
            eta_s: eps_s / power_gfu,
        })
    }

    /// Builds a configuration from transmit SNRs given in dB.
    pub fn from_db(
        num_gfus: usize,
        power_gbu_db: f64,
        power_gfu_db: f64,
        target_rate_gbu: f64,
        target_rate_gfu: f64,
    ) -> Result<Self> {
        Self::new(
            num_gfus,
            db_to_linear(power_gbu_db),
            db_to_linear(power_gfu_db),
            target_rate_gbu,
            target_rate_gfu,
        )
    }

    pub fn with_num_gfus(&self, num_gfus: usize) -> Result<Self> {
        Self::new(num_gfus, self.power_gbu, self.power_gfu, self.target_rate_gbu, self.target_rate_gfu)
    }

    pub fn with_powers(&self, power_gbu: f64, power_gfu: f64) -> Result<Self> {
        Self::new(self.num_gfus, power_gbu, power_gfu, self.target_rate_gbu, self.target_rate_gfu)
    }

    pub fn with_target_rates(&self, target_rate_gbu: f64, target_rate_gfu: f64) -> Result<Self> {
        Self::new(self.num_gfus, self.power_gbu, self.power_gfu, target_rate_gbu, target_rate_gfu)
    }

    /// Number of grant-free users `K`.
    pub fn num_gfus(&self) -> usize {
        self.num_gfus
    }

    /// GBU transmit SNR `P0` (linear).
    pub fn power_gbu(&self) -> f64 {
        self.power_gbu
    }

    /// GFU transmit SNR `Ps` (linear).
    pub fn power_gfu(&self) -> f64 {
        self.power_gfu
    }

    pub fn target_rate_gbu(&self) -> f64 {
        self.target_rate_gbu
    }

    pub fn target_rate_gfu(&self) -> f64 {
        self.target_rate_gfu
    }

    /// `2^R0 - 1`.
    pub fn eps0(&self) -> f64 {
        self.eps0
    }

    /// `2^Rs - 1`.
    pub fn eps_s(&self) -> f64 {
        self.eps_s
    }

    /// GBU gain threshold `eps0 / P0`.
    pub fn eta0(&self) -> f64 {
        self.eta0
    }

    /// GFU gain threshold `eps_s / Ps`.
    pub fn eta_s(&self) -> f64 {
        self.eta_s
    }
}

/// Channel power gains of one quasi-static block.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    gain_gbu: f64,
    gains_gfu: Vec<f64>,
}

impl ChannelRealization {
    /// Validates and wraps the gains. GFU gains must already be ascending.
    pub fn new(gain_gbu: f64, gains_gfu: Vec<f64>) -> Result<Self> {
        if gains_gfu.is_empty() {
            return Err(Error::InvalidConfig("a realization needs at least one GFU gain".into()));
        }
        if !(gain_gbu.is_finite() && gain_gbu >= 0.0) {
            return Err(Error::Domain(format!("GBU gain must be finite and >= 0, got {gain_gbu}")));
        }
        if let Some(bad) = gains_gfu.iter().find(|g| !(g.is_finite() && **g >= 0.0)) {
            return Err(Error::Domain(format!("GFU gain must be finite and >= 0, got {bad}")));
        }
        if gains_gfu.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Domain("GFU gains must be sorted ascending".into()));
        }
        Ok(Self { gain_gbu, gains_gfu })
    }

    /// `|h0|^2`.
    pub fn gain_gbu(&self) -> f64 {
        self.gain_gbu
    }

    /// Ordered GFU gains `|h1|^2 <= ... <= |hK|^2`.
    pub fn gains_gfu(&self) -> &[f64] {
        &self.gains_gfu
    }

    /// `|hK|^2`, the gain of the user that is always admitted.
    pub fn best_gain(&self) -> f64 {
        *self.gains_gfu.last().expect("realization has at least one GFU")
    }

    pub fn num_gfus(&self) -> usize {
        self.gains_gfu.len()
    }

    /// Redraws all gains in place, keeping the user count. Consumes exactly
    /// `K + 1` 64-bit words from `rng` (GBU first, then GFUs in raw order).
    pub fn resample<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        self.gain_gbu = sample_unit_exponential(rng);
        for g in self.gains_gfu.iter_mut() {
            *g = sample_unit_exponential(rng);
        }
        self.gains_gfu.sort_by(f64::total_cmp);
    }
}

/// Draws `|h|^2` for a unit-variance circularly symmetric complex Gaussian
/// `h` by inverting the exponential CDF. `u` lies in `(0, 1]` so the
/// logarithm is always finite.
pub fn sample_unit_exponential<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
    let u = ((rng.next_u64() >> 11) + 1) as f64 * SCALE;
    -u.ln()
}

/// Draws one block of i.i.d. Rayleigh-fading gains with the GFU gains sorted.
pub fn sample_channel_realization<R: Rng + ?Sized>(num_gfus: usize, rng: &mut R) -> Result<ChannelRealization> {
    sample_channel_realization_with_order(num_gfus, rng).map(|(realization, _)| realization)
}

/// Like [`sample_channel_realization`], also returning for each ordered
/// position the raw (pre-sort) user index. Ties keep raw order, so the last
/// tied user ends up in the admitted slot.
pub fn sample_channel_realization_with_order<R: Rng + ?Sized>(
    num_gfus: usize,
    rng: &mut R,
) -> Result<(ChannelRealization, Vec<usize>)> {
    if num_gfus == 0 {
        return Err(Error::InvalidConfig("number of grant-free users must be at least 1".into()));
    }
    let gain_gbu = sample_unit_exponential(rng);
    let raw: Vec<f64> = (0..num_gfus).map(|_| sample_unit_exponential(rng)).collect();
    let mut order: Vec<usize> = (0..num_gfus).collect();
    order.sort_by(|&a, &b| raw[a].total_cmp(&raw[b]));
    let gains_gfu = order.iter().map(|&i| raw[i]).collect();
    Ok((ChannelRealization { gain_gbu, gains_gfu }, order))
}

/// SINRs along the SIC chain `x_{K,1} -> x_0 -> x_{K,2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinrTriplet {
    pub gfu_stream1: f64,
    pub gbu: f64,
    pub gfu_stream2: f64,
}

/// Rates in bits per channel use matching a [`SinrTriplet`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamRates {
    pub gfu_stream1: f64,
    pub gbu: f64,
    pub gfu_stream2: f64,
}

impl StreamRates {
    pub fn gfu_total(&self) -> f64 {
        self.gfu_stream1 + self.gfu_stream2
    }
}

/// Received SINRs when the admitted GFU puts a fraction `alpha` of its power
/// on the stream decoded first.
pub fn sinr_triplet(config: &SystemConfig, gain_gbu: f64, gain_gfu: f64, alpha: f64) -> Result<SinrTriplet> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Domain(format!("power split must lie in [0, 1], got {alpha}")));
    }
    if !(gain_gbu >= 0.0 && gain_gfu >= 0.0) {
        return Err(Error::Domain("channel gains must be non-negative".into()));
    }
    let rx_gbu = config.power_gbu() * gain_gbu;
    let rx_gfu = config.power_gfu() * gain_gfu;
    let stream2 = (1.0 - alpha) * rx_gfu;
    Ok(SinrTriplet {
        gfu_stream1: alpha * rx_gfu / (rx_gbu + stream2 + 1.0),
        gbu: rx_gbu / (stream2 + 1.0),
        gfu_stream2: stream2,
    })
}

/// Shannon rates `log2(1 + SINR)` for each decoding stage.
pub fn achievable_rates(sinr: &SinrTriplet) -> Result<StreamRates> {
    let rate = |s: f64| {
        if s >= 0.0 {
            Ok(s.ln_1p() / std::f64::consts::LN_2)
        } else {
            Err(Error::Domain(format!("SINR must be non-negative, got {s}")))
        }
    };
    Ok(StreamRates {
        gfu_stream1: rate(sinr.gfu_stream1)?,
        gbu: rate(sinr.gbu)?,
        gfu_stream2: rate(sinr.gfu_stream2)?,
    })
}

/// `log2(1 + x)` without the cancellation of `(1 + x).log2()` for small `x`.
pub(crate) fn log2_1p(x: f64) -> f64 {
    x.ln_1p() / std::f64::consts::LN_2
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg(p0: f64, ps: f64) -> SystemConfig {
        SystemConfig::new(2, p0, ps, 1.0, 1.0).unwrap()
    }

    #[test]
    fn derived_constants() {
        let c = SystemConfig::new(3, 10.0, 20.0, 1.0, 2.0).unwrap();
        assert!((c.eps0() - 1.0).abs() < 1e-15);
        assert!((c.eps_s() - 3.0).abs() < 1e-15);
        assert!((c.eta0() - 0.1).abs() < 1e-15);
        assert!((c.eta_s() - 0.15).abs() < 1e-15);
    }

    #[test]
    fn rejects_invalid_configs() {
        assert!(matches!(SystemConfig::new(0, 1.0, 1.0, 1.0, 1.0), Err(Error::InvalidConfig(_))));
        assert!(SystemConfig::new(1, -1.0, 1.0, 1.0, 1.0).is_err());
        assert!(SystemConfig::new(1, 1.0, 0.0, 1.0, 1.0).is_err());
        assert!(SystemConfig::new(1, 1.0, 1.0, f64::NAN, 1.0).is_err());
        assert!(SystemConfig::new(1, 1.0, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn db_conversion() {
        assert!((db_to_linear(20.0) - 100.0).abs() < 1e-12);
        assert!((linear_to_db(1000.0) - 30.0).abs() < 1e-12);
    }

    #[test]
    fn realization_is_sorted_and_nonnegative() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let r = sample_channel_realization(3, &mut rng).unwrap();
            assert_eq!(r.gains_gfu().len(), 3);
            assert!(r.gains_gfu().windows(2).all(|w| w[0] <= w[1]));
            assert!(r.gain_gbu() >= 0.0 && r.gains_gfu()[0] >= 0.0);
        }
    }

    #[test]
    fn zero_users_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(sample_channel_realization(0, &mut rng), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn realization_validation() {
        assert!(ChannelRealization::new(1.0, vec![2.0, 1.0]).is_err());
        assert!(ChannelRealization::new(-1.0, vec![1.0]).is_err());
        assert!(ChannelRealization::new(1.0, vec![]).is_err());
        assert_eq!(ChannelRealization::new(1.0, vec![1.0, 2.0]).unwrap().best_gain(), 2.0);
    }

    #[test]
    fn unit_mean_gbu_gain() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 1_000_000;
        let mean = (0..n).map(|_| sample_unit_exponential(&mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.005, "mean {mean}");
    }

    #[test]
    fn max_of_five_has_harmonic_mean() {
        // E[max of K unit exponentials] = H_K, checked against brute force
        // summation of the harmonic series.
        let harmonic: f64 = (1..=5).map(|i| 1.0 / i as f64).sum();
        assert!((harmonic - 2.283_333_333).abs() < 1e-9);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let n = 1_000_000;
        let mut r = sample_channel_realization(5, &mut rng).unwrap();
        let mut acc = 0.0;
        for _ in 0..n {
            r.resample(&mut rng);
            acc += r.best_gain();
        }
        let mean = acc / n as f64;
        assert!((mean - harmonic).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn admission_is_fair_across_raw_indices() {
        let k = 4;
        let n = 1_000_000;
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let mut counts = vec![0u64; k];
        for _ in 0..n {
            let (_, order) = sample_channel_realization_with_order(k, &mut rng).unwrap();
            counts[order[k - 1]] += 1;
        }
        let p = 1.0 / k as f64;
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        for c in counts {
            let freq = c as f64 / n as f64;
            assert!((freq - p).abs() <= 3.0 * sigma, "freq {freq}");
        }
    }

    #[test]
    fn sinr_alpha_zero_and_one() {
        let c = cfg(10.0, 10.0);
        let s = sinr_triplet(&c, 1.0, 2.0, 0.0).unwrap();
        assert_eq!(s.gfu_stream1, 0.0);
        assert!((s.gbu - 10.0 / 21.0).abs() < 1e-15);
        assert!((s.gfu_stream2 - 20.0).abs() < 1e-15);

        let s = sinr_triplet(&c, 0.0, 2.0, 1.0).unwrap();
        assert!((s.gfu_stream1 - 20.0).abs() < 1e-15);
        assert_eq!(s.gbu, 0.0);
        assert_eq!(s.gfu_stream2, 0.0);
    }

    #[test]
    fn sinr_hand_evaluated() {
        let c = cfg(10.0, 10.0);
        let s = sinr_triplet(&c, 1.0, 2.0, 0.5).unwrap();
        assert!((s.gfu_stream1 - 10.0 / 21.0).abs() < 1e-15);
        assert!((s.gbu - 10.0 / 11.0).abs() < 1e-15);
        assert!((s.gfu_stream2 - 10.0).abs() < 1e-15);
        let r = achievable_rates(&s).unwrap();
        assert!((r.gfu_stream1 - (31.0f64 / 21.0).log2()).abs() < 1e-14);
        assert!((r.gbu - (21.0f64 / 11.0).log2()).abs() < 1e-14);
        assert!((r.gfu_stream2 - 11.0f64.log2()).abs() < 1e-14);
    }

    #[test]
    fn sinr_rejects_bad_alpha() {
        let c = cfg(10.0, 10.0);
        assert!(matches!(sinr_triplet(&c, 1.0, 1.0, 1.5), Err(Error::Domain(_))));
        assert!(sinr_triplet(&c, 1.0, 1.0, -0.1).is_err());
    }

    #[test]
    fn rates_of_simple_sinrs() {
        let zero = SinrTriplet { gfu_stream1: 0.0, gbu: 0.0, gfu_stream2: 0.0 };
        let r = achievable_rates(&zero).unwrap();
        assert_eq!((r.gfu_stream1, r.gbu, r.gfu_stream2), (0.0, 0.0, 0.0));
        let r = achievable_rates(&SinrTriplet { gfu_stream1: 1.0, gbu: 3.0, gfu_stream2: 7.0 }).unwrap();
        assert!((r.gfu_stream1 - 1.0).abs() < 1e-15);
        assert!((r.gbu - 2.0).abs() < 1e-15);
        assert!((r.gfu_stream2 - 3.0).abs() < 1e-15);
        assert!((r.gfu_total() - 4.0).abs() < 1e-15);
        let neg = SinrTriplet { gfu_stream1: -1.0, gbu: 0.0, gfu_stream2: 0.0 };
        assert!(achievable_rates(&neg).is_err());
    }

    proptest! {
        #[test]
        fn sic_chain_conserves_sum_rate(
            p0_db in -10.0f64..50.0,
            ps_db in -10.0f64..50.0,
            g0 in 0.0f64..20.0,
            gk in 0.0f64..20.0,
            alpha in 0.0f64..=1.0,
        ) {
            let c = SystemConfig::from_db(1, p0_db, ps_db, 1.0, 1.0).unwrap();
            let r = achievable_rates(&sinr_triplet(&c, g0, gk, alpha).unwrap()).unwrap();
            let sum = r.gfu_stream1 + r.gbu + r.gfu_stream2;
            let expected = log2_1p(c.power_gbu() * g0 + c.power_gfu() * gk);
            prop_assert!((sum - expected).abs() <= 1e-9 * expected.max(1e-300) + 1e-15);
        }

        #[test]
        fn rates_monotone_in_sinr(a in 0.0f64..1e6, b in 0.0f64..1e6) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(log2_1p(lo) <= log2_1p(hi));
        }
    }
}
