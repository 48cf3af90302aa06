//! Closed-form outage analysis of the admitted GFU.

pub mod asymptotic;
pub mod exact;
pub mod numeric;
pub mod oracle;
pub mod quadrature;

pub use asymptotic::{outage_diversity_asymptote, outage_highsnr, outage_single_user, SingleUserOutage};
pub use exact::{nu_kernel, outage_exact, AnalyticTerms, OutageBreakdown, Precision, MAX_GFUS};
pub use oracle::{outage_exact_quadrature_oracle, outage_quadrature_with};

use crate::error::Result;
use crate::model::SystemConfig;

/// Exact outage probability for any supported number of GFUs.
pub fn outage(config: &SystemConfig) -> Result<f64> {
    if config.num_gfus() == 1 {
        Ok(outage_single_user(config)?.exact)
    } else {
        Ok(outage_exact(config)?.total)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticValues {
    pub exact: f64,
    pub highsnr: f64,
    pub asymptote: f64,
}

/// Exact value together with both high-SNR approximations.
pub fn analytic_values(config: &SystemConfig) -> Result<AnalyticValues> {
    if config.num_gfus() == 1 {
        let s = outage_single_user(config)?;
        return Ok(AnalyticValues { exact: s.exact, highsnr: s.approx, asymptote: s.approx });
    }
    Ok(AnalyticValues {
        exact: outage_exact(config)?.total,
        highsnr: outage_highsnr(config)?,
        asymptote: outage_diversity_asymptote(config),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn facade_dispatches_on_k() {
        let one = SystemConfig::new(1, 10.0, 10.0, 1.0, 1.0).unwrap();
        assert_eq!(outage(&one).unwrap(), outage_single_user(&one).unwrap().exact);
        let two = one.with_num_gfus(2).unwrap();
        assert_eq!(outage(&two).unwrap(), outage_exact(&two).unwrap().total);
        let v = analytic_values(&two).unwrap();
        assert!(v.exact > 0.0 && v.asymptote > 0.0);
    }
}
