//! Closed-form outage probability of the admitted GFU for `K >= 2`.
//!
//! The expression is a collection of alternating binomial sums. Each sum is
//! evaluated with compensated summation while tracking a first-order bound on
//! the accumulated rounding error. When that bound exceeds
//! [`CONDITIONING_TOLERANCE`] relative to the result, the evaluation is
//! repeated in double-double arithmetic.

use serde::Serialize;

use super::numeric::{DoubleDouble, NeumaierSum, Real};
use crate::error::{Error, Result};
use crate::model::SystemConfig;

/// Largest number of GFUs accepted by the closed-form evaluators.
pub const MAX_GFUS: usize = 20;

/// Relative error bound above which a result is considered ill-conditioned.
pub const CONDITIONING_TOLERANCE: f64 = 1e-10;

/// Allowed excursion outside `[0, 1]` before clipping.
pub const RANGE_SLACK: f64 = 1e-9;

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k as u64 {
        acc = acc * (n as u64 - i) / (i + 1);
    }
    acc as f64
}

fn sign(n: usize) -> f64 {
    if n % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Coefficients appearing in the closed-form expression.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticTerms {
    num_gfus: usize,
    power_gbu: f64,
    power_gfu: f64,
    eps0: f64,
    eps_s: f64,
    eta0: f64,
}

impl AnalyticTerms {
    pub fn new(config: &SystemConfig) -> Self {
        Self {
            num_gfus: config.num_gfus(),
            power_gbu: config.power_gbu(),
            power_gfu: config.power_gfu(),
            eps0: config.eps0(),
            eps_s: config.eps_s(),
            eta0: config.eta0(),
        }
    }

    fn k(&self) -> f64 {
        self.num_gfus as f64
    }

    fn product(&self) -> f64 {
        (1.0 + self.eps0) * (1.0 + self.eps_s)
    }

    pub fn mu1(&self, n: usize) -> f64 {
        ((self.k() - n as f64 * self.product()) / self.power_gfu).exp()
    }

    pub fn mu2(&self, n: usize) -> f64 {
        (self.k() - n as f64) / (self.power_gfu * self.eta0) - n as f64 * self.power_gbu / self.power_gfu
    }

    pub fn mu3(&self, k: usize, m: usize) -> f64 {
        ((self.k() - k as f64 - m as f64 * self.product()) / self.power_gfu).exp()
    }

    pub fn mu4(&self, k: usize, m: usize) -> f64 {
        (self.k() - k as f64 - m as f64) / (self.power_gfu * self.eta0) - m as f64 * self.power_gbu / self.power_gfu
    }

    pub fn mu5(&self) -> f64 {
        1.0 / (self.power_gfu * self.eta0)
    }

    pub fn mu6(&self) -> f64 {
        -self.power_gbu / self.power_gfu
    }

    pub fn phi0(&self) -> f64 {
        self.k() * (self.k() - 1.0)
    }

    pub fn phi_k(&self, k: usize) -> f64 {
        binomial(self.num_gfus, k)
    }

    pub fn tilde_mu5(&self, k: usize) -> f64 {
        let excess = self.eps0 + self.eps_s + self.eps0 * self.eps_s;
        (-((self.k() - k as f64) * excess) / self.power_gfu).exp()
    }

    pub fn tilde_mu6(&self, k: usize) -> f64 {
        -(self.k() - k as f64) * self.power_gbu / self.power_gfu
    }
}

/// Integral of `exp(-(n / (Ps eta0) + mu + 1) x)` over `[eta0, eta0 (1 + eps_s)]`.
pub fn nu_kernel(n: usize, mu: f64, config: &SystemConfig) -> f64 {
    let eta0 = config.eta0();
    let width = config.eps_s() * eta0;
    let a = n as f64 / (config.power_gfu() * eta0) + mu + 1.0;
    if a.abs() < 1e-10 * (1.0 + mu.abs()) {
        return width;
    }
    let z = a * width;
    if z >= 0.0 {
        (-a * eta0).exp() * -(-z).exp_m1() / a
    } else {
        (-a * (eta0 + width)).exp() * z.exp_m1() / a
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Precision {
    Double,
    DoubleDouble,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutageBreakdown {
    pub p_case1: f64,
    /// Indexed by `k = 0..K-1`.
    pub p_case2_terms: Vec<f64>,
    pub p_case3: f64,
    pub total: f64,
    pub precision: Precision,
    /// First-order bound on the relative rounding error of `total`.
    pub estimated_rel_error: f64,
}

impl OutageBreakdown {
    pub fn p_case2(&self) -> f64 {
        self.p_case2_terms.iter().sum()
    }

    /// Clips raw terms to `[0, 1]` after checking the excursion bound.
    pub(crate) fn from_raw(
        p_case1: f64,
        p_case2_terms: Vec<f64>,
        p_case3: f64,
        precision: Precision,
        estimated_rel_error: f64,
    ) -> Result<Self> {
        let clip = |name: &str, v: f64| -> Result<f64> {
            if !v.is_finite() {
                return Err(Error::NumericalRange(format!("{name} is not finite")));
            }
            if !(-RANGE_SLACK..=1.0 + RANGE_SLACK).contains(&v) {
                return Err(Error::NumericalRange(format!("{name} = {v:e} lies outside [0, 1]")));
            }
            Ok(v.clamp(0.0, 1.0))
        };
        let p_case1 = clip("case I term", p_case1)?;
        let p_case3 = clip("case III term", p_case3)?;
        let p_case2_terms = p_case2_terms
            .into_iter()
            .enumerate()
            .map(|(k, v)| clip(&format!("case II term k={k}"), v))
            .collect::<Result<Vec<_>>>()?;
        let total = clip(
            "total",
            p_case2_terms.iter().copied().chain([p_case1, p_case3]).collect::<NeumaierSum<f64>>().value(),
        )?;
        Ok(Self { p_case1, p_case2_terms, p_case3, total, precision, estimated_rel_error })
    }
}

pub(crate) struct Params<R> {
    pub k: usize,
    pub p0: R,
    pub ps: R,
    pub eps0: R,
    pub eps_s: R,
    pub eta0: R,
    pub eta_s: R,
    /// `eps_s * eta0`, the width of the case II window in `|h0|^2`.
    pub width: R,
    pub inv_ps_eta0: R,
}

impl<R: Real> Params<R> {
    pub fn new(config: &SystemConfig) -> Self {
        let one = R::from_f64(1.0);
        let p0 = R::from_f64(config.power_gbu());
        let ps = R::from_f64(config.power_gfu());
        let eps0 = R::from_f64(config.eps0());
        let eps_s = R::from_f64(config.eps_s());
        let eta0 = eps0 / p0;
        Self {
            k: config.num_gfus(),
            p0,
            ps,
            eps0,
            eps_s,
            eta0,
            eta_s: eps_s / ps,
            width: eps_s * eta0,
            inv_ps_eta0: one / (ps * eta0),
        }
    }
}

/// `(1 - exp(-z)) / z` for `z >= 0`.
pub(crate) fn one_minus_exp_ratio<R: Real>(z: R) -> R {
    if z.to_f64() < 1e-4 {
        // alternating series, truncation below 1e-33 relative
        let mut term = R::from_f64(1.0);
        let mut sum = term;
        for j in 2..=8 {
            term = -(term * z) / R::from_f64(j as f64);
            sum = sum + term;
        }
        sum
    } else {
        -(-z).exp_m1() / z
    }
}

/// Compensated sum with a running bound on rounding error.
pub(crate) struct Tracked<R: Real> {
    sum: NeumaierSum<R>,
    bound: f64,
}

impl<R: Real> Tracked<R> {
    pub fn new() -> Self {
        Self { sum: NeumaierSum::new(), bound: 0.0 }
    }

    /// Adds `term`, whose computation involved exponent magnitudes up to `scale`.
    pub fn add(&mut self, term: R, scale: f64) {
        self.bound += term.to_f64().abs() * (1.0 + scale);
        self.sum.add(term);
    }

    pub fn value(&self) -> R {
        self.sum.value()
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }
}

/// `exp(c) * nu(n, mu)`, with the exponentials merged to avoid overflow.
/// Returns the value and the magnitude of the exponents involved.
pub(crate) fn scaled_nu<R: Real>(p: &Params<R>, c: R, n: usize, mu: R) -> (R, f64) {
    let a = R::from_f64(n as f64) * p.inv_ps_eta0 + mu + R::from_f64(1.0);
    let z = a * p.width;
    let (base, z) = if z.to_f64() >= 0.0 { (c - a * p.eta0, z) } else { (c - a * (p.eta0 + p.width), -z) };
    let scale = c.to_f64().abs() + (a * p.eta0).to_f64().abs() + z.to_f64();
    (base.exp() * p.width * one_minus_exp_ratio(z), scale)
}

pub(crate) struct RawBreakdown<R: Real> {
    pub case1: Tracked<R>,
    pub case2: Vec<Tracked<R>>,
    pub case3: Tracked<R>,
}

fn evaluate<R: Real>(config: &SystemConfig) -> RawBreakdown<R> {
    let p = Params::<R>::new(config);
    let k_total = p.k;
    let one = R::from_f64(1.0);
    let real = |x: f64| R::from_f64(x);
    let product = (one + p.eps0) * (one + p.eps_s);
    let excess = product - one;

    let mut case2: Vec<Tracked<R>> = (0..k_total).map(|_| Tracked::new()).collect();

    // k = 0
    for n in 0..=k_total {
        let coeff = real(binomial(k_total, n) * sign(n));
        let c = (real(k_total as f64) - real(n as f64) * product) / p.ps;
        let mu2 = real((k_total - n) as f64) * p.inv_ps_eta0 - real(n as f64) * p.p0 / p.ps;
        let (v, scale) = scaled_nu(&p, c, 0, mu2);
        case2[0].add(coeff * v, scale);
    }

    // 1 <= k <= K - 2
    for k in 1..k_total.saturating_sub(1) {
        let phi = real(binomial(k_total, k));
        for m in 0..=k_total - k {
            let c_m = (real((k_total - k) as f64) - real(m as f64) * product) / p.ps;
            let mu4 = real((k_total - k - m) as f64) * p.inv_ps_eta0 - real(m as f64) * p.p0 / p.ps;
            for n in 0..=k {
                let coeff = real(binomial(k_total - k, m) * sign(m) * binomial(k, n) * sign(n));
                let c = c_m + real(n as f64) / p.ps;
                let (v, scale) = scaled_nu(&p, c, n, mu4);
                case2[k].add(phi * coeff * v, scale);
            }
        }
    }

    // k = K - 1
    if k_total >= 2 {
        let mu5 = p.inv_ps_eta0;
        let mu6 = -(p.p0 / p.ps);
        let last = k_total - 1;
        for n in 0..=last {
            let coeff = real(k_total as f64 * binomial(last, n) * sign(n));
            let shift = real(n as f64) / p.ps;
            let (first, s1) = scaled_nu(&p, shift + one / p.ps, n, mu5);
            let (second, s2) = scaled_nu(&p, shift - excess / p.ps, n, mu6);
            case2[last].add(coeff * first, s1);
            case2[last].add(-(coeff * second), s2);
        }
    }

    let mut case1 = Tracked::new();
    for n in 0..=k_total {
        let coeff = real(binomial(k_total, n) * sign(n));
        let (v, scale) = scaled_nu(&p, real(n as f64) / p.ps, n, R::from_f64(0.0));
        case1.add(coeff * v, scale);
    }
    let tail_exponent = p.eta0 * (one + p.eps_s);
    let tail = (-(-p.eta_s).exp_m1()).powi(k_total as u32) * (-tail_exponent).exp();
    case1.add(tail, tail_exponent.to_f64() + k_total as f64);

    let mut case3 = Tracked::new();
    for n in 0..=k_total {
        let coeff = real(binomial(k_total, n) * sign(n));
        let denom = one + real(n as f64) * p.eta_s * p.p0;
        let decay = (-(real(n as f64) * p.eta_s)).exp();
        let v = coeff * decay * p.eta0 * one_minus_exp_ratio(denom * p.eta0);
        case3.add(v, (real(n as f64) * p.eta_s).to_f64() + (denom * p.eta0).to_f64());
    }

    RawBreakdown { case1, case2, case3 }
}

const ROUNDING_MULTIPLIER: f64 = 16.0;

fn finish<R: Real>(raw: RawBreakdown<R>, precision: Precision) -> Result<OutageBreakdown> {
    let mut total = NeumaierSum::<R>::new();
    let mut bound = raw.case1.bound() + raw.case3.bound();
    total.add(raw.case1.value());
    total.add(raw.case3.value());
    for t in &raw.case2 {
        total.add(t.value());
        bound += t.bound();
    }
    let abs_error = ROUNDING_MULTIPLIER * R::UNIT_ROUNDOFF * bound;
    let total = total.value().to_f64().abs();
    let rel_error = if abs_error == 0.0 {
        0.0
    } else if total > 0.0 {
        abs_error / total
    } else {
        f64::INFINITY
    };
    OutageBreakdown::from_raw(
        raw.case1.value().to_f64(),
        raw.case2.iter().map(|t| t.value().to_f64()).collect(),
        raw.case3.value().to_f64(),
        precision,
        rel_error,
    )
}

pub(crate) fn check_supported(config: &SystemConfig, operation: &'static str) -> Result<()> {
    if config.num_gfus() < 2 {
        return Err(Error::Dispatch {
            operation,
            requirement: "at least two GFUs",
            use_instead: "outage_single_user",
        });
    }
    if config.num_gfus() > MAX_GFUS {
        return Err(Error::Domain(format!(
            "{operation} supports at most {MAX_GFUS} GFUs, got {}",
            config.num_gfus()
        )));
    }
    Ok(())
}

/// Exact outage probability of the admitted GFU, split by case.
pub fn outage_exact(config: &SystemConfig) -> Result<OutageBreakdown> {
    check_supported(config, "outage_exact")?;
    let fast = evaluate::<f64>(config);
    let fast_ok = finish(fast, Precision::Double);
    if let Ok(b) = &fast_ok {
        if b.estimated_rel_error <= CONDITIONING_TOLERANCE {
            return fast_ok;
        }
    }
    let precise = finish(evaluate::<DoubleDouble>(config), Precision::DoubleDouble)?;
    if precise.estimated_rel_error > CONDITIONING_TOLERANCE {
        log::warn!(
            "outage_exact is ill-conditioned for K={} P0={} Ps={}: estimated relative error {:e}",
            config.num_gfus(),
            config.power_gbu(),
            config.power_gfu(),
            precise.estimated_rel_error
        );
    }
    Ok(precise)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(k: usize, p0: f64, ps: f64, r0: f64, rs: f64) -> SystemConfig {
        SystemConfig::new(k, p0, ps, r0, rs).unwrap()
    }

    fn factorial(n: u64) -> u64 {
        (1..=n).product()
    }

    #[test]
    fn phi_coefficients_match_factorials() {
        for k_total in 2..=20usize {
            let t = AnalyticTerms::new(&cfg(k_total, 10.0, 10.0, 1.0, 1.0));
            assert_eq!(t.phi0(), (factorial(k_total as u64) / factorial(k_total as u64 - 2)) as f64);
            for k in 1..=k_total - 2 {
                let direct = factorial(k_total as u64) / factorial(k as u64) / factorial((k_total - k) as u64);
                assert_eq!(t.phi_k(k), direct as f64);
            }
        }
    }

    #[test]
    fn terms_match_definitions() {
        let c = cfg(4, 50.0, 20.0, 2.0, 1.5);
        let t = AnalyticTerms::new(&c);
        let (e0, es, ps, p0) = (3.0, 2f64.powf(1.5) - 1.0, 20.0, 50.0);
        let eta0 = e0 / p0;
        assert!((t.mu1(2) - ((4.0 - 2.0 * (1.0 + e0) * (1.0 + es)) / ps).exp()).abs() < 1e-12);
        assert!((t.mu2(1) - (3.0 / (ps * eta0) - p0 / ps)).abs() < 1e-12);
        assert!((t.mu3(1, 2) - ((3.0 - 2.0 * (1.0 + e0) * (1.0 + es)) / ps).exp()).abs() < 1e-12);
        assert!((t.mu4(1, 1) - (2.0 / (ps * eta0) - p0 / ps)).abs() < 1e-12);
        assert!((t.mu5() - 1.0 / (ps * eta0)).abs() < 1e-12);
        assert_eq!(t.mu6(), -2.5);
        assert!((t.tilde_mu5(1) - (-3.0 * (e0 + es + e0 * es) / ps).exp()).abs() < 1e-15);
        assert_eq!(t.tilde_mu6(1), -7.5);
    }

    #[test]
    fn nu_degenerate_branch() {
        let c = cfg(2, 10.0, 10.0, 1.0, 1.0);
        assert_eq!(nu_kernel(0, -1.0, &c), c.eps_s() * c.eta0());
        let mu = -1.0 - 3.0 / (c.power_gfu() * c.eta0());
        assert_eq!(nu_kernel(3, mu, &c), c.eps_s() * c.eta0());
    }

    #[test]
    fn nu_regular_value() {
        let c = cfg(2, 10.0, 10.0, 1.0, 1.0);
        let expected = (-0.1f64).exp() - (-0.2f64).exp();
        assert!((nu_kernel(0, 0.0, &c) - expected).abs() < 1e-15);
    }

    #[test]
    fn nu_near_degenerate_is_continuous() {
        let c = cfg(2, 10.0, 10.0, 1.0, 1.0);
        let w = c.eps_s() * c.eta0();
        for offset in [1e-13, -1e-13, 1e-9, -1e-9, 1e-6] {
            let v = nu_kernel(0, -1.0 + offset, &c);
            assert!(((v - w) / w).abs() < 1e-6, "offset {offset}: {v}");
        }
    }

    #[test]
    fn nu_negative_exponent_branch() {
        let c = cfg(2, 10.0, 1.0, 3.0, 3.0);
        let v = nu_kernel(0, -10.0, &c);
        let naive = ((9.0f64 * 0.7).exp() - (9.0f64 * 5.6).exp()) / -9.0;
        assert!((v / naive - 1.0).abs() < 1e-12, "{v} vs {naive}");
    }

    #[test]
    fn dispatch_for_single_user() {
        let err = outage_exact(&cfg(1, 10.0, 10.0, 1.0, 1.0)).unwrap_err();
        assert!(matches!(err, Error::Dispatch { use_instead: "outage_single_user", .. }));
        assert!(matches!(outage_exact(&cfg(21, 10.0, 10.0, 1.0, 1.0)), Err(Error::Domain(_))));
    }

    #[test]
    fn breakdown_is_consistent() {
        let b = outage_exact(&cfg(3, 31.6, 100.0, 3.0, 3.0)).unwrap();
        assert_eq!(b.p_case2_terms.len(), 3);
        let sum = b.p_case1 + b.p_case2() + b.p_case3;
        assert!((sum - b.total).abs() < 1e-12);
    }

    #[test]
    fn moderate_snr_stays_in_double() {
        let b = outage_exact(&cfg(2, 100.0, 100.0, 1.0, 1.0)).unwrap();
        assert_eq!(b.precision, Precision::Double);
        assert!(b.estimated_rel_error <= CONDITIONING_TOLERANCE);
    }

    #[test]
    fn high_snr_escalates_and_stays_positive() {
        let p = 10f64.powf(5.5);
        let b = outage_exact(&cfg(3, p, p, 2.0, 1.5)).unwrap();
        assert_eq!(b.precision, Precision::DoubleDouble);
        assert!(b.total > 0.0);
        let lead = (2f64.powf(1.5) - 1.0).powi(3) / p.powi(3);
        assert!(b.total / lead > 0.9 && b.total / lead < 1.1, "{} vs {lead}", b.total);
    }

    #[test]
    fn double_double_agrees_with_double_when_well_conditioned() {
        let c = cfg(4, 20.0, 5.0, 2.0, 1.0);
        let d = finish(evaluate::<f64>(&c), Precision::Double).unwrap();
        let dd = finish(evaluate::<DoubleDouble>(&c), Precision::DoubleDouble).unwrap();
        assert!((d.total - dd.total).abs() < 1e-13);
        for (a, b) in d.p_case2_terms.iter().zip(&dd.p_case2_terms) {
            assert!((a - b).abs() < 1e-13);
        }
    }
}
