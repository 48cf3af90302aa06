//! Independent evaluation of the outage breakdown by numerical integration
//! over the GBU channel gain.
//!
//! Conditioned on `|h0|^2 = x`, each case reduces to an event on the ordered
//! GFU gains whose probability follows from the order-statistic CDF
//! `F(t)^K` with `F(t) = 1 - exp(-t)`. These conditional probabilities are
//! integrated against the exponential density of `x`.

use super::exact::{binomial, OutageBreakdown, Precision};
use super::quadrature::{integrate, integrate_to_infinity, QuadratureOptions};
use crate::error::{Error, Result};
use crate::model::SystemConfig;

fn cdf(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        -(-t).exp_m1()
    }
}

/// Quadrature evaluation to absolute tolerance `1e-10` per term.
pub fn outage_exact_quadrature_oracle(config: &SystemConfig) -> Result<OutageBreakdown> {
    outage_quadrature_with(config, QuadratureOptions::default())
}

/// As [`outage_exact_quadrature_oracle`] with caller-chosen tolerances.
///
/// Accepts `K = 1` as well, where it reproduces the single-user expression.
pub fn outage_quadrature_with(config: &SystemConfig, opts: QuadratureOptions) -> Result<OutageBreakdown> {
    let k_total = config.num_gfus();
    if k_total == 0 {
        return Err(Error::InvalidConfig("at least one GFU is required".into()));
    }
    let p0 = config.power_gbu();
    let ps = config.power_gfu();
    let eps0 = config.eps0();
    let eps_s = config.eps_s();
    let eta0 = config.eta0();
    let eta_s = config.eta_s();
    let lo = eta0;
    let hi = eta0 * (1.0 + eps_s);
    let kk = k_total as i32;

    // Threshold on Ps*gK for the GFU to fit under the GBU's tolerance.
    let t_of = move |x: f64| (x / eta0 - 1.0) / ps;
    // Gap between the case II outage boundary and the case I threshold.
    let gap_of = move |x: f64| (1.0 + eps0) * (1.0 + eps_s - x / eta0) / ps;

    let case3 = integrate(|x| cdf(eta_s * (1.0 + p0 * x)).powi(kk) * (-x).exp(), 0.0, lo, opts)?.value;

    let case1_window = integrate(|x| cdf(t_of(x)).powi(kk) * (-x).exp(), lo, hi, opts)?.value;
    let case1_tail = integrate_to_infinity(|x| cdf(eta_s).powi(kk) * (-x).exp(), hi, opts)?.value;

    let mut case2 = Vec::with_capacity(k_total);
    for k in 0..k_total {
        let coeff = binomial(k_total, k);
        let weaker = k as i32;
        let stronger = (k_total - k) as i32;
        let term = integrate(
            |x| {
                let t = t_of(x);
                let band = (-t).exp() * cdf(gap_of(x));
                coeff * cdf(t).powi(weaker) * band.powi(stronger) * (-x).exp()
            },
            lo,
            hi,
            opts,
        )?;
        case2.push(term.value);
    }

    OutageBreakdown::from_raw(case1_window + case1_tail, case2, case3, Precision::Double, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::exact::outage_exact;

    #[test]
    fn matches_closed_form_on_reference_points() {
        for (k, p0, ps, r0, rs) in
            [(2, 100.0, 100.0, 1.0, 1.0), (5, 1000.0, 1000.0 / 15.0, 2.5, 1.5), (2, 31.6, 100.0, 3.0, 3.0), (3, 10.0, 3.16, 2.0, 3.0)]
        {
            let c = SystemConfig::new(k, p0, ps, r0, rs).unwrap();
            let exact = outage_exact(&c).unwrap();
            let oracle = outage_exact_quadrature_oracle(&c).unwrap();
            assert!((exact.p_case1 - oracle.p_case1).abs() < 1e-9);
            assert!((exact.p_case3 - oracle.p_case3).abs() < 1e-9);
            for (a, b) in exact.p_case2_terms.iter().zip(&oracle.p_case2_terms) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn reference_breakdown_values() {
        // frozen from an independent high-accuracy evaluation
        let c = SystemConfig::new(2, 100.0, 100.0, 1.0, 1.0).unwrap();
        let o = outage_quadrature_with(&c, QuadratureOptions { abs_tol: 0.0, rel_tol: 1e-12, max_intervals: 2000 })
            .unwrap();
        assert!((o.p_case1 / 9.737e-5 - 1.0).abs() < 1e-3);
        assert!((o.p_case2() / 1.939e-6 - 1.0).abs() < 1e-3);
        assert!((o.p_case3 / 2.282e-6 - 1.0).abs() < 1e-3);
    }

    #[test]
    fn vanishing_gfu_power_is_always_in_outage() {
        let c = SystemConfig::new(2, 10.0, 1e-6, 1.0, 1.0).unwrap();
        let o = outage_exact_quadrature_oracle(&c).unwrap();
        assert!(o.total > 1.0 - 1e-8);
    }

    #[test]
    fn vanishing_gfu_rate_has_vanishing_outage() {
        let c = SystemConfig::new(2, 10.0, 10.0, 1.0, 1e-9).unwrap();
        let o = outage_exact_quadrature_oracle(&c).unwrap();
        assert!(o.total < 1e-8);
    }
}
