//! High-SNR approximations and the single-GFU expression.

use super::exact::{binomial, check_supported, one_minus_exp_ratio, scaled_nu, Params};
use super::numeric::{DoubleDouble, Real};
use crate::error::{Error, Result};
use crate::model::SystemConfig;

fn sign(n: usize) -> f64 {
    if n % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// High-SNR approximation of the outage probability for `K >= 2`.
///
/// The per-`k` block of the case II contribution is summed over
/// `k = 1..=K-2`. The result is not clipped.
pub fn outage_highsnr(config: &SystemConfig) -> Result<f64> {
    check_supported(config, "outage_highsnr")?;
    let k_total = config.num_gfus();
    let kf = k_total as f64;
    let e0 = config.eps0();
    let es = config.eps_s();
    let ps = config.power_gfu();
    let g = 1.0 + es;
    let ps_k1 = ps.powi(k_total as i32 + 1);

    let mut total = 0.0;

    let inner: f64 = (0..=k_total)
        .map(|n| binomial(k_total, n) * sign(n) / (n as f64 + 1.0) * (g.powi(k_total as i32 + 1) - g.powi((k_total - n) as i32)))
        .sum();
    total += e0 * (1.0 + e0).powi(k_total as i32) / ps_k1 * inner;

    for k in 1..k_total - 1 {
        let mut block = 0.0;
        for m in 0..=k_total - k {
            let nested: f64 = (0..=k)
                .map(|n| {
                    let p = (m + n + 1) as i32;
                    binomial(k, n) * sign(n) * (g.powi(p) - 1.0) / p as f64
                })
                .sum();
            block += binomial(k_total - k, m) * sign(m) * g.powi((k_total - k - m) as i32) * nested;
        }
        total += binomial(k_total, k) * e0 * (1.0 + e0).powi((k_total - k) as i32) * sign(k) / ps_k1 * block;
    }

    let es_k = es.powi(k_total as i32);
    total += e0 * es_k * (1.0 + e0) * g / ps_k1;
    total -= es_k * (1.0 / e0 + 1.0) * (kf * g + 1.0) / (ps_k1 * (kf + 1.0));
    total += e0 * es_k * es / ((kf + 1.0) * ps_k1) + es_k / ps.powi(k_total as i32) - e0 * es_k * g / ps_k1;
    total += es_k * ((1.0 + e0).powi(k_total as i32 + 1) - 1.0) / (ps_k1 * (kf + 1.0));
    total -= es_k * ((e0 * (kf + 1.0) - 1.0) * (1.0 + e0).powi(k_total as i32 + 1) + 1.0)
        / (ps_k1 * ps * (kf + 2.0) * (kf + 1.0));
    Ok(total)
}

/// Leading-order term `eps_s^K / Ps^K`.
pub fn outage_diversity_asymptote(config: &SystemConfig) -> f64 {
    (config.eps_s() / config.power_gfu()).powi(config.num_gfus() as i32)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleUserOutage {
    pub exact: f64,
    pub approx: f64,
}

fn single_user_exact<R: Real>(config: &SystemConfig) -> R {
    let p = Params::<R>::new(config);
    let one = R::from_f64(1.0);
    let excess = (one + p.eps0) * (one + p.eps_s) - one;
    let (case2_window, _) = scaled_nu(&p, -(excess / p.ps), 0, -(p.p0 / p.ps));
    let tail = (-(p.eta_s + p.eta0 * (one + p.eps_s))).exp();
    let silent = (-p.eta_s).exp() * p.eta0 * one_minus_exp_ratio(p.eta0 * (one + p.p0 * p.eta_s));
    one - case2_window - tail - silent
}

/// Exact and approximate outage probability for a single GFU.
pub fn outage_single_user(config: &SystemConfig) -> Result<SingleUserOutage> {
    if config.num_gfus() != 1 {
        return Err(Error::Dispatch {
            operation: "outage_single_user",
            requirement: "exactly one GFU",
            use_instead: "outage_exact",
        });
    }
    let exact = single_user_exact::<DoubleDouble>(config).to_f64();
    if !exact.is_finite() {
        return Err(Error::NumericalRange("single-user outage is not finite".into()));
    }
    Ok(SingleUserOutage { exact: exact.clamp(0.0, 1.0), approx: config.eps_s() / config.power_gfu() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::exact::outage_exact;
    use crate::analytic::oracle::outage_quadrature_with;
    use crate::analytic::quadrature::QuadratureOptions;

    fn cfg(k: usize, p0: f64, ps: f64, r0: f64, rs: f64) -> SystemConfig {
        SystemConfig::new(k, p0, ps, r0, rs).unwrap()
    }

    #[test]
    fn asymptote_direct_values() {
        assert!((outage_diversity_asymptote(&cfg(2, 100.0, 100.0, 1.0, 1.0)) - 1e-4).abs() < 1e-18);
        assert!((outage_diversity_asymptote(&cfg(3, 1e3, 1e3, 1.0, 2.0)) - 2.7e-8).abs() < 1e-20);
    }

    #[test]
    fn asymptote_slope_is_minus_k() {
        for k in 2..6 {
            let a = outage_diversity_asymptote(&cfg(k, 10.0, 100.0, 1.0, 1.0));
            let b = outage_diversity_asymptote(&cfg(k, 10.0, 1000.0, 1.0, 1.0));
            assert!(((b / a).log10() + k as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn highsnr_leading_order() {
        for k in [2, 3] {
            let p = 1e6;
            let c = cfg(k, p, p, 2.0, 1.5);
            let ratio = outage_highsnr(&c).unwrap() / outage_diversity_asymptote(&c);
            assert!((ratio - 1.0).abs() < 1e-3, "K={k}: {ratio}");
        }
    }

    #[test]
    fn highsnr_relative_error_shrinks() {
        for k in [2, 3] {
            let errs: Vec<f64> = [40.0, 45.0, 50.0]
                .iter()
                .map(|db: &f64| {
                    let p = 10f64.powf(db / 10.0);
                    let c = cfg(k, p, p, 2.0, 1.5);
                    (outage_highsnr(&c).unwrap() / outage_exact(&c).unwrap().total - 1.0).abs()
                })
                .collect();
            assert!(errs[0] > errs[1] && errs[1] > errs[2], "K={k}: {errs:?}");
        }
    }

    #[test]
    fn single_user_reference_value() {
        let s = outage_single_user(&cfg(1, 10.0, 10.0, 1.0, 1.0)).unwrap();
        assert!((s.exact - 0.10309).abs() < 5e-5, "{}", s.exact);
        assert!((s.approx - 0.1).abs() < 1e-15);
    }

    #[test]
    fn single_user_matches_quadrature() {
        for (p0, ps, r0, rs) in [(10.0, 10.0, 1.0, 1.0), (100.0, 7.0, 2.5, 1.5), (3.0, 50.0, 3.0, 3.0)] {
            let c = cfg(1, p0, ps, r0, rs);
            let q = outage_quadrature_with(&c, QuadratureOptions { abs_tol: 1e-13, rel_tol: 0.0, max_intervals: 2000 })
                .unwrap();
            let s = outage_single_user(&c).unwrap();
            assert!((s.exact - q.total).abs() < 1e-11, "{} vs {}", s.exact, q.total);
        }
    }

    #[test]
    fn single_user_asymptotic_ratio() {
        let s = outage_single_user(&cfg(1, 1e4, 1e4, 1.0, 1.0)).unwrap();
        assert!((s.approx - 1e-4).abs() < 1e-18);
        assert!((s.exact / s.approx - 1.0).abs() < 1e-3);
    }

    #[test]
    fn single_user_dispatch() {
        assert!(matches!(outage_single_user(&cfg(2, 10.0, 10.0, 1.0, 1.0)), Err(Error::Dispatch { .. })));
        assert!(matches!(outage_highsnr(&cfg(1, 10.0, 10.0, 1.0, 1.0)), Err(Error::Dispatch { .. })));
    }
}
