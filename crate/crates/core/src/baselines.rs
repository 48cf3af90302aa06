//! NOMA-based semi-grant-free baseline.
//!
//! Without rate-splitting, the admitted GFU is decoded either entirely before
//! or entirely after the GBU. Cases I and III coincide with the rate-splitting
//! scheme; in Case II the baseline must choose between the strongest user
//! decoded first and the strongest user whose full power fits under the
//! threshold, decoded last.
//!
//! Only the Monte Carlo route is provided for this scheme.

use crate::model::{log2_1p, ChannelRealization, SystemConfig};
use crate::protocol::interference_threshold;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NomaRate {
    pub rate: f64,
    /// 0-based position in the ascending gain order.
    pub admitted_index: usize,
}

pub fn cr_noma_rate(config: &SystemConfig, realization: &ChannelRealization) -> NomaRate {
    let gains = realization.gains_gfu();
    let last = gains.len() - 1;
    let rx_gbu = config.power_gbu() * realization.gain_gbu();
    let ps = config.power_gfu();
    let tau = interference_threshold(config, realization.gain_gbu()).tau;
    let decoded_first = log2_1p(ps * gains[last] / (rx_gbu + 1.0));

    if tau <= 0.0 {
        return NomaRate { rate: decoded_first, admitted_index: last };
    }
    // Users whose full power fits under the threshold (same "<=" as Case I).
    let below = gains.partition_point(|&g| ps * g <= tau);
    if below == gains.len() {
        return NomaRate { rate: log2_1p(ps * gains[last]), admitted_index: last };
    }
    if below == 0 {
        return NomaRate { rate: decoded_first, admitted_index: last };
    }
    let decoded_last = log2_1p(ps * gains[below - 1]);
    if decoded_last > decoded_first {
        NomaRate { rate: decoded_last, admitted_index: below - 1 }
    } else {
        NomaRate { rate: decoded_first, admitted_index: last }
    }
}

pub fn cr_noma_outage_sample(config: &SystemConfig, realization: &ChannelRealization) -> bool {
    cr_noma_rate(config, realization).rate < config.target_rate_gfu()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::sample_channel_realization;
    use crate::protocol::{classify_case, evaluate_transmission, CaseLabel};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn worked_case_two_example() {
        // eps0 = 1, P0 g0 = 4 (tau_hat = 3), Ps gains [2, 10]
        let c = SystemConfig::new(2, 1.0, 1.0, 1.0, 1.0).unwrap();
        let r = ChannelRealization::new(4.0, vec![2.0, 10.0]).unwrap();
        assert_eq!(classify_case(&c, &r), CaseLabel::CaseII);
        let noma = cr_noma_rate(&c, &r);
        let first = 3f64.log2();
        let second = 3f64.log2(); // log2(1 + 10/5)
        assert!((noma.rate - first.max(second)).abs() < 1e-15);
        let rsma = evaluate_transmission(&c, &r).rate_gfu_total;
        assert!((rsma - (2.0 + (15.0f64 / 8.0).log2())).abs() < 1e-14);
        assert!(rsma > noma.rate);
    }

    #[test]
    fn admits_weaker_user_when_it_wins() {
        // tau_hat = 9; user 1 (Ps g = 8) fits under the threshold, user 2 does not
        let c = SystemConfig::new(2, 1.0, 1.0, 1.0, 1.0).unwrap();
        let r = ChannelRealization::new(10.0, vec![8.0, 12.0]).unwrap();
        let noma = cr_noma_rate(&c, &r);
        assert_eq!(noma.admitted_index, 0);
        assert!((noma.rate - 9f64.log2()).abs() < 1e-15);
    }

    #[test]
    fn below_every_user_admits_strongest_decoded_first() {
        let c = SystemConfig::new(2, 1.0, 1.0, 1.0, 1.0).unwrap();
        let r = ChannelRealization::new(2.0, vec![5.0, 12.0]).unwrap();
        let noma = cr_noma_rate(&c, &r);
        assert_eq!(noma.admitted_index, 1);
        assert!((noma.rate - log2_1p(12.0 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn coincides_in_cases_one_and_three_and_is_dominated_in_case_two() {
        let c = SystemConfig::from_db(4, 25.0, 15.0, 2.0, 1.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut case_two = 0;
        for _ in 0..200_000 {
            let r = sample_channel_realization(4, &mut rng).unwrap();
            let rsma = evaluate_transmission(&c, &r);
            let noma = cr_noma_rate(&c, &r);
            match rsma.case_label {
                CaseLabel::CaseI | CaseLabel::CaseIII => {
                    assert_eq!(rsma.rate_gfu_total.to_bits(), noma.rate.to_bits());
                    assert_eq!(rsma.gfu_outage, cr_noma_outage_sample(&c, &r));
                }
                CaseLabel::CaseII => {
                    case_two += 1;
                    assert!(rsma.tau_hat > 0.0);
                    assert!(rsma.rate_gfu_total > noma.rate);
                    assert!(rsma.gfu_outage <= cr_noma_outage_sample(&c, &r));
                }
            }
        }
        assert!(case_two > 10_000);
    }

    #[test]
    fn outage_bit_follows_rate() {
        let c = SystemConfig::new(1, 1.0, 1.0, 1.0, 1.0).unwrap();
        let good = ChannelRealization::new(4.0, vec![2.0]).unwrap();
        assert!(!cr_noma_outage_sample(&c, &good));
        let bad = ChannelRealization::new(4.0, vec![0.5]).unwrap();
        assert!(cr_noma_outage_sample(&c, &bad));
    }
}
