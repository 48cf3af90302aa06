//! Acceptance criteria, each producing one pass/fail report line.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rsma_sgf::analytic::{
    outage_exact, outage_exact_quadrature_oracle, outage_highsnr, outage_single_user, OutageBreakdown,
};
use rsma_sgf::baselines::cr_noma_rate;
use rsma_sgf::model::{db_to_linear, sample_channel_realization};
use rsma_sgf::montecarlo::{estimate_outage, OutageEstimate, Scheme};
use rsma_sgf::protocol::{evaluate_transmission, gbu_oma_outage};
use rsma_sgf::zones::{region_corners, zone_grid, ZoneLabel};
use rsma_sgf::{CaseLabel, SystemConfig};

use crate::experiment::{fifteenth_offset_db, preset, Overrides, PRESETS};
use crate::output::Format;
use crate::{run_to_bytes, with_workers};

pub const CRITERIA: [u8; 10] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10];

/// Sample sizes used by the criteria.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    /// Trials per sweep point for the multi-user comparisons.
    pub mc_trials: u64,
    /// Trials per point for the single-user comparison.
    pub single_user_trials: u64,
    /// Realizations for the GBU equivalence check.
    pub oma_realizations: u64,
    /// Case II realizations for the dominance check.
    pub dominance_realizations: u64,
    /// Trials per point when re-running presets for the determinism check.
    pub determinism_trials: u64,
}

impl Budget {
    pub const fn full() -> Self {
        Self {
            mc_trials: 1_000_000,
            single_user_trials: 10_000_000,
            oma_realizations: 1_000_000,
            dominance_realizations: 100_000,
            determinism_trials: 20_000,
        }
    }

    pub const fn quick() -> Self {
        Self {
            mc_trials: 100_000,
            single_user_trials: 1_000_000,
            oma_realizations: 100_000,
            dominance_realizations: 10_000,
            determinism_trials: 2_000,
        }
    }

    const fn smoke() -> Self {
        Self {
            mc_trials: 2_000,
            single_user_trials: 5_000,
            oma_realizations: 5_000,
            dominance_realizations: 1_000,
            determinism_trials: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionReport {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CriterionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "criterion {:>2} {verdict} {}: {}", self.id, self.title, self.detail)
    }
}

pub fn title(id: u8) -> &'static str {
    match id {
        1 => "exact outage vs Monte Carlo",
        2 => "exact outage vs quadrature oracle",
        3 => "single-GFU expression and approximation",
        4 => "diversity order",
        5 => "high-SNR approximation",
        6 => "GBU outage equals orthogonal access",
        7 => "rate-splitting dominates NOMA",
        8 => "per-case decomposition vs Monte Carlo",
        9 => "zone geometry",
        10 => "determinism",
        _ => "unknown",
    }
}

fn report(id: u8, passed: bool, detail: String) -> CriterionReport {
    CriterionReport { id, title: title(id), passed, detail }
}

fn fail(id: u8, err: impl fmt::Display) -> CriterionReport {
    report(id, false, format!("error: {err}"))
}

/// Compares a probability with a Monte Carlo estimate of it.
#[derive(Debug, Default)]
struct ZTally {
    checked: usize,
    skipped: usize,
    violations: usize,
    max_z: f64,
}

impl ZTally {
    fn check(&mut self, exact: f64, mc: f64, trials: u64, sigmas: f64) {
        if mc * (trials as f64) < 10.0 {
            self.skipped += 1;
            return;
        }
        let se = (mc * (1.0 - mc) / trials as f64).sqrt();
        let z = (exact - mc).abs() / se;
        self.checked += 1;
        self.max_z = self.max_z.max(z);
        if z > sigmas {
            self.violations += 1;
        }
    }

    fn passed(&self) -> bool {
        self.checked > 0 && self.violations == 0
    }

    fn summary(&self) -> String {
        format!(
            "{} resolved points, {} violations, max |z| {:.2}, {} unresolved skipped",
            self.checked, self.violations, self.max_z, self.skipped
        )
    }
}

fn fig3_config(k: usize, p0_db: f64, r0: f64, rs: f64) -> rsma_sgf::Result<SystemConfig> {
    SystemConfig::from_db(k, p0_db, p0_db + fifteenth_offset_db(), r0, rs)
}

/// Multi-user points shared by criteria 1, 7 and 8.
fn fig3_points() -> rsma_sgf::Result<Vec<SystemConfig>> {
    let mut out = Vec::new();
    for k in [2, 5] {
        for i in 0..6 {
            out.push(fig3_config(k, 20.0 + 5.0 * i as f64, 2.5, 1.5)?);
        }
    }
    Ok(out)
}

fn fig4_points() -> rsma_sgf::Result<Vec<SystemConfig>> {
    let mut out = Vec::new();
    for k in [2, 5] {
        for i in 0..10 {
            out.push(SystemConfig::from_db(k, 15.0, 5.0 * i as f64, 3.0, 3.0)?);
        }
    }
    Ok(out)
}

fn criterion_1(b: &Budget, seed: u64) -> rsma_sgf::Result<CriterionReport> {
    let mut tally = ZTally::default();
    for c in fig3_points()?.into_iter().chain(fig4_points()?) {
        let exact = outage_exact(&c)?.total;
        let mc = estimate_outage(&c, Scheme::CrRsmaSgf, b.mc_trials, seed)?;
        tally.check(exact, mc.gfu_outage_prob, mc.trials, 3.0);
    }
    Ok(report(1, tally.passed(), tally.summary()))
}

fn breakdown_diff(a: &OutageBreakdown, b: &OutageBreakdown) -> f64 {
    let mut d = (a.p_case1 - b.p_case1).abs().max((a.p_case3 - b.p_case3).abs());
    for (x, y) in a.p_case2_terms.iter().zip(&b.p_case2_terms) {
        d = d.max((x - y).abs());
    }
    d
}

fn criterion_2(seed: u64) -> rsma_sgf::Result<CriterionReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_diff: f64 = 0.0;
    let mut violations = 0;
    let mut strong_targets = 0;
    let configs = 50;
    for _ in 0..configs {
        let k = rng.random_range(2..=6);
        // (0.5, 4]
        let r0 = 4.0 - 3.5 * rng.random::<f64>();
        let rs = 4.0 - 3.5 * rng.random::<f64>();
        let c = SystemConfig::from_db(k, rng.random_range(0.0..=40.0), rng.random_range(0.0..=40.0), r0, rs)?;
        if c.eps0() * c.eps_s() > 1.0 {
            strong_targets += 1;
        }
        let d = breakdown_diff(&outage_exact(&c)?, &outage_exact_quadrature_oracle(&c)?);
        max_diff = max_diff.max(d);
        if d > 1e-7 {
            violations += 1;
        }
    }
    Ok(report(
        2,
        violations == 0 && strong_targets > 0,
        format!(
            "{configs} configs ({strong_targets} with eps0*eps_s > 1), {violations} violations, max term difference {max_diff:.2e}"
        ),
    ))
}

fn criterion_3(b: &Budget, seed: u64) -> rsma_sgf::Result<CriterionReport> {
    let mut tally = ZTally::default();
    for i in 0..8 {
        let c = fig3_config(1, 20.0 + 5.0 * i as f64, 2.5, 1.5)?;
        let exact = outage_single_user(&c)?.exact;
        let mc = estimate_outage(&c, Scheme::CrRsmaSgf, b.single_user_trials, seed)?;
        tally.check(exact, mc.gfu_outage_prob, mc.trials, 3.0);
    }
    let mut worst: f64 = 0.0;
    for i in 0..5 {
        let ps_db = 35.0 + 5.0 * i as f64;
        let c = SystemConfig::from_db(1, ps_db - fifteenth_offset_db(), ps_db, 2.5, 1.5)?;
        let s = outage_single_user(&c)?;
        worst = worst.max((s.approx / s.exact - 1.0).abs());
    }
    let passed = tally.passed() && worst <= 0.25;
    Ok(report(3, passed, format!("{}; approximation worst relative gap {worst:.4} at Ps >= 35 dB", tally.summary())))
}

fn least_squares_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

fn exact_total(c: &SystemConfig) -> rsma_sgf::Result<f64> {
    if c.num_gfus() == 1 {
        Ok(outage_single_user(c)?.exact)
    } else {
        Ok(outage_exact(c)?.total)
    }
}

fn criterion_4() -> rsma_sgf::Result<CriterionReport> {
    let mut passed = true;
    let mut parts = Vec::new();
    for k in [1usize, 2, 3] {
        let db: Vec<f64> = vec![40.0, 45.0, 50.0, 55.0];
        let logs = db
            .iter()
            .map(|&d| exact_total(&SystemConfig::from_db(k, d, d, 2.0, 1.5)?).map(f64::log10))
            .collect::<rsma_sgf::Result<Vec<_>>>()?;
        let x: Vec<f64> = db.iter().map(|d| d / 10.0).collect();
        let slope = least_squares_slope(&x, &logs);
        let ok = logs.iter().all(|v| v.is_finite()) && (slope / -(k as f64) - 1.0).abs() <= 0.15;
        passed &= ok;
        parts.push(format!("K={k} slope {slope:.4}"));
    }
    Ok(report(4, passed, parts.join(", ")))
}

fn criterion_5() -> rsma_sgf::Result<CriterionReport> {
    let mut passed = true;
    let mut parts = Vec::new();
    for k in [2usize, 3] {
        let mut errs = Vec::new();
        for i in 0..7 {
            let d = 25.0 + 5.0 * i as f64;
            let c = SystemConfig::from_db(k, d, d, 2.0, 1.5)?;
            errs.push((outage_highsnr(&c)? / outage_exact(&c)?.total - 1.0).abs());
        }
        let tail = &errs[errs.len() - 3..];
        let ok = tail[0] >= tail[1] && tail[1] >= tail[2] && tail[2] <= 0.25;
        passed &= ok;
        parts.push(format!("K={k} relative error at 45/50/55 dB {:.2e}/{:.2e}/{:.2e}", tail[0], tail[1], tail[2]));
    }
    Ok(report(5, passed, parts.join(", ")))
}

fn criterion_6(b: &Budget, seed: u64) -> rsma_sgf::Result<CriterionReport> {
    let configs = [
        fig3_config(5, 20.0, 2.5, 1.5)?,
        SystemConfig::from_db(2, 15.0, 15.0, 3.0, 3.0)?,
        SystemConfig::new(3, 10.0, 10.0, 1.0, 1.0)?,
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mismatches = 0u64;
    let mut draws = 0u64;
    while draws < b.oma_realizations {
        let c = &configs[(draws % configs.len() as u64) as usize];
        let r = sample_channel_realization(c.num_gfus(), &mut rng)?;
        if evaluate_transmission(c, &r).gbu_outage != gbu_oma_outage(c, r.gain_gbu()) {
            mismatches += 1;
        }
        draws += 1;
    }
    let mut tally = ZTally::default();
    for c in &configs {
        let mc = estimate_outage(c, Scheme::CrRsmaSgf, b.oma_realizations, seed)?;
        let expected = -(-c.eps0() / c.power_gbu()).exp_m1();
        tally.check(expected, mc.gbu_outage_prob, mc.trials, 3.0);
    }
    Ok(report(
        6,
        mismatches == 0 && tally.passed(),
        format!("{mismatches} mismatches in {draws} realizations; probability check: {}", tally.summary()),
    ))
}

fn criterion_7(b: &Budget, seed: u64) -> rsma_sgf::Result<CriterionReport> {
    let c = SystemConfig::from_db(4, 25.0, 15.0, 2.0, 1.5)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut case2, mut others) = (0u64, 0u64);
    let (mut case2_violations, mut other_violations) = (0u64, 0u64);
    while case2 < b.dominance_realizations {
        let r = sample_channel_realization(c.num_gfus(), &mut rng)?;
        let rsma = evaluate_transmission(&c, &r);
        let noma = cr_noma_rate(&c, &r);
        if rsma.case_label == CaseLabel::CaseII && rsma.tau_hat > 0.0 {
            case2 += 1;
            if rsma.rate_gfu_total <= noma.rate {
                case2_violations += 1;
            }
        } else if rsma.case_label != CaseLabel::CaseII {
            others += 1;
            if rsma.rate_gfu_total.to_bits() != noma.rate.to_bits() {
                other_violations += 1;
            }
        }
    }
    let mut sweep_violations = 0;
    let mut points = 0;
    for c in fig3_points()?.into_iter().chain(fig4_points()?) {
        let rsma = estimate_outage(&c, Scheme::CrRsmaSgf, b.mc_trials, seed)?;
        let noma = estimate_outage(&c, Scheme::CrNomaSgf, b.mc_trials, seed)?;
        points += 1;
        if rsma.gfu_outage_prob > noma.gfu_outage_prob + noma.std_err_gfu {
            sweep_violations += 1;
        }
    }
    let passed = case2_violations == 0 && other_violations == 0 && sweep_violations == 0;
    Ok(report(
        7,
        passed,
        format!(
            "case II: {case2_violations}/{case2} violations; cases I/III: {other_violations}/{others} rate mismatches; \
             sweep: {sweep_violations}/{points} points where rate-splitting exceeds NOMA + 1 sigma"
        ),
    ))
}

fn criterion_8(b: &Budget, seed: u64) -> rsma_sgf::Result<CriterionReport> {
    let mut tally = ZTally::default();
    for c in fig3_points()? {
        let exact = outage_exact(&c)?;
        let mc: OutageEstimate = estimate_outage(&c, Scheme::CrRsmaSgf, b.mc_trials, seed)?;
        tally.check(exact.p_case1, mc.case_outage_prob(CaseLabel::CaseI), mc.trials, 3.0);
        tally.check(exact.p_case2(), mc.case_outage_prob(CaseLabel::CaseII), mc.trials, 3.0);
        tally.check(exact.p_case3, mc.case_outage_prob(CaseLabel::CaseIII), mc.trials, 3.0);
    }
    Ok(report(8, tally.passed(), tally.summary()))
}

fn criterion_9() -> rsma_sgf::Result<CriterionReport> {
    let n = 200;
    let (p, q) = (db_to_linear(8.0), db_to_linear(15.0));
    let corners = region_corners(p, q);
    let cells = zone_grid(p, q, n)?;
    let rsma_feasible = |r0: f64, rs: f64| {
        r0 <= corners.a0 && rs <= corners.ak && r0 + rs <= corners.sum * (1.0 + 1e-12)
    };
    let violations = cells
        .iter()
        .filter(|c| c.label.is_noma_feasible() && !rsma_feasible(c.target_gbu, c.target_gfu))
        .count();
    let only: Vec<_> = cells.iter().filter(|c| c.label == ZoneLabel::RsmaOnly).collect();
    if only.is_empty() {
        return Ok(report(9, false, format!("{violations} containment violations; no rate-splitting-only cells")));
    }
    let step0 = 1.2 * corners.a0 / n as f64;
    let step_s = 1.2 * corners.ak / n as f64;
    let min0 = only.iter().map(|c| c.target_gbu).fold(f64::INFINITY, f64::min);
    let max0 = only.iter().map(|c| c.target_gbu).fold(f64::NEG_INFINITY, f64::max);
    let min_s = only.iter().map(|c| c.target_gfu).fold(f64::INFINITY, f64::min);
    let max_s = only.iter().map(|c| c.target_gfu).fold(f64::NEG_INFINITY, f64::max);
    let gaps = [
        (min0 - corners.b0) / step0,
        (corners.a0 - max0) / step0,
        (min_s - corners.bk) / step_s,
        (corners.ak - max_s) / step_s,
    ];
    let corners_ok = gaps.iter().all(|g| (0.0..=1.0).contains(g));
    Ok(report(
        9,
        violations == 0 && corners_ok,
        format!(
            "{violations} containment violations; {} rate-splitting-only cells; bounding box offsets from corners \
             (in grid steps) {:.3}/{:.3}/{:.3}/{:.3}",
            only.len(),
            gaps[0],
            gaps[1],
            gaps[2],
            gaps[3]
        ),
    ))
}

fn preset_bytes(name: &str, b: &Budget, seed: u64, workers: usize) -> Result<Vec<u8>, crate::CliError> {
    let mut e = preset(name)?;
    let is_zone = matches!(e.body, crate::experiment::Body::Zone(_));
    if !is_zone {
        e.apply(&Overrides { trials: Some(b.determinism_trials), seed: Some(seed), ..Default::default() })?;
    }
    with_workers(Some(workers), || run_to_bytes(&e, Format::Csv, None))?
}

fn criterion_10(b: &Budget, seed: u64) -> Result<CriterionReport, crate::CliError> {
    let mut differing = Vec::new();
    for name in PRESETS {
        let first = preset_bytes(name, b, seed, 1)?;
        let second = preset_bytes(name, b, seed, 1)?;
        let parallel = preset_bytes(name, b, seed, 8)?;
        if first != second || first != parallel {
            differing.push(name);
        }
    }
    let smoke = Budget::smoke();
    let report_with = |workers| with_workers(Some(workers), || render_report(&validate_subset(&smoke, seed, 9)));
    let v1 = report_with(1)?;
    let v1_again = report_with(1)?;
    let v8 = report_with(8)?;
    let validate_ok = v1 == v1_again && v1 == v8;
    let passed = differing.is_empty() && validate_ok;
    Ok(report(
        10,
        passed,
        format!(
            "{} presets identical across repeated runs and 1/8 workers{}; validation report identical: {validate_ok}",
            PRESETS.len() - differing.len(),
            if differing.is_empty() { String::new() } else { format!(" (differing: {})", differing.join(",")) }
        ),
    ))
}

/// Evaluates a single criterion.
pub fn run_criterion(id: u8, budget: &Budget, seed: u64) -> CriterionReport {
    let result = match id {
        1 => criterion_1(budget, seed),
        2 => criterion_2(seed),
        3 => criterion_3(budget, seed),
        4 => criterion_4(),
        5 => criterion_5(),
        6 => criterion_6(budget, seed),
        7 => criterion_7(budget, seed),
        8 => criterion_8(budget, seed),
        9 => criterion_9(),
        10 => return criterion_10(budget, seed).unwrap_or_else(|e| fail(10, e)),
        _ => return fail(id, "no such criterion"),
    };
    result.unwrap_or_else(|e| fail(id, e))
}

fn validate_subset(budget: &Budget, seed: u64, last: u8) -> Vec<CriterionReport> {
    CRITERIA.iter().filter(|&&id| id <= last).map(|&id| run_criterion(id, budget, seed)).collect()
}

/// Evaluates every criterion in order.
pub fn validate(budget: &Budget, seed: u64) -> Vec<CriterionReport> {
    validate_subset(budget, seed, 10)
}

pub fn render_report(reports: &[CriterionReport]) -> String {
    let mut out = String::new();
    for r in reports {
        out.push_str(&r.to_string());
        out.push('\n');
    }
    let passed = reports.iter().filter(|r| r.passed).count();
    out.push_str(&format!("{passed}/{} criteria passed\n", reports.len()));
    out
}
