//! Deterministic parallel Monte Carlo outage estimation.
//!
//! Trial `i` draws its channel gains from the ChaCha8 keystream of `seed`
//! starting at word `2 (K + 1) i`, so each trial's randomness depends only on
//! `(seed, i)`. Trials are processed in fixed-size chunks on the current
//! rayon pool and reduced with integer tallies, which makes the estimate
//! independent of the number of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::analytic::{analytic_values, AnalyticValues};
use crate::baselines::cr_noma_outage_sample;
use crate::error::{Error, Result};
use crate::model::{db_to_linear, ChannelRealization, SystemConfig};
use crate::protocol::{classify_case, evaluate_transmission, gbu_oma_outage, CaseLabel};

const CHUNK_TRIALS: u64 = 8192;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Scheme {
    #[serde(rename = "cr-rsma-sgf")]
    CrRsmaSgf,
    #[serde(rename = "cr-noma-sgf")]
    CrNomaSgf,
}

impl Scheme {
    pub const ALL: [Scheme; 2] = [Scheme::CrRsmaSgf, Scheme::CrNomaSgf];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::CrRsmaSgf => "cr-rsma-sgf",
            Scheme::CrNomaSgf => "cr-noma-sgf",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.name() == name)
    }
}

/// Occurrence and GFU outage counts per protocol case.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CaseTallies {
    pub occurrences: [u64; 3],
    pub outages: [u64; 3],
}

impl CaseTallies {
    fn merge(mut self, other: Self) -> Self {
        for i in 0..3 {
            self.occurrences[i] += other.occurrences[i];
            self.outages[i] += other.outages[i];
        }
        self
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Tally {
    cases: CaseTallies,
    gfu_outages: u64,
    gbu_outages: u64,
}

impl Tally {
    fn merge(self, other: Self) -> Self {
        Self {
            cases: self.cases.merge(other.cases),
            gfu_outages: self.gfu_outages + other.gfu_outages,
            gbu_outages: self.gbu_outages + other.gbu_outages,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OutageEstimate {
    pub scheme: Scheme,
    pub trials: u64,
    pub seed: u64,
    pub gfu_outages: u64,
    pub gbu_outages: u64,
    pub gfu_outage_prob: f64,
    pub gbu_outage_prob: f64,
    pub std_err_gfu: f64,
    pub std_err_gbu: f64,
    pub case_tallies: CaseTallies,
}

fn std_err(p: f64, trials: u64) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

impl OutageEstimate {
    fn from_tally(scheme: Scheme, trials: u64, seed: u64, tally: Tally) -> Self {
        let gfu = tally.gfu_outages as f64 / trials as f64;
        let gbu = tally.gbu_outages as f64 / trials as f64;
        Self {
            scheme,
            trials,
            seed,
            gfu_outages: tally.gfu_outages,
            gbu_outages: tally.gbu_outages,
            gfu_outage_prob: gfu,
            gbu_outage_prob: gbu,
            std_err_gfu: std_err(gfu, trials),
            std_err_gbu: std_err(gbu, trials),
            case_tallies: tally.cases,
        }
    }

    /// Probability of a GFU outage occurring in `case`.
    pub fn case_outage_prob(&self, case: CaseLabel) -> f64 {
        self.case_tallies.outages[case.index()] as f64 / self.trials as f64
    }

    pub fn case_std_err(&self, case: CaseLabel) -> f64 {
        std_err(self.case_outage_prob(case), self.trials)
    }

    /// Fraction of trials that fell in `case`.
    pub fn case_fraction(&self, case: CaseLabel) -> f64 {
        self.case_tallies.occurrences[case.index()] as f64 / self.trials as f64
    }

    /// Whether `p` is large enough to be estimated from this many trials.
    pub fn is_resolved(&self, p: f64) -> bool {
        p * self.trials as f64 >= 10.0
    }

    /// Whether the GFU outage estimate is statistically resolved.
    pub fn gfu_resolved(&self) -> bool {
        self.is_resolved(self.gfu_outage_prob)
    }
}

fn run_chunk(config: &SystemConfig, scheme: Scheme, seed: u64, start: u64, end: u64) -> Tally {
    let k = config.num_gfus();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_word_pos(u128::from(start) * 2 * (k as u128 + 1));
    let mut realization = ChannelRealization::new(0.0, vec![0.0; k]).expect("zeros are valid gains");
    let mut tally = Tally::default();
    for _ in start..end {
        realization.resample(&mut rng);
        let (case, gfu_outage, gbu_outage) = match scheme {
            Scheme::CrRsmaSgf => {
                let o = evaluate_transmission(config, &realization);
                (o.case_label, o.gfu_outage, o.gbu_outage)
            }
            Scheme::CrNomaSgf => (
                classify_case(config, &realization),
                cr_noma_outage_sample(config, &realization),
                gbu_oma_outage(config, realization.gain_gbu()),
            ),
        };
        let i = case.index();
        tally.cases.occurrences[i] += 1;
        if gfu_outage {
            tally.cases.outages[i] += 1;
            tally.gfu_outages += 1;
        }
        if gbu_outage {
            tally.gbu_outages += 1;
        }
    }
    tally
}

/// Estimates both users' outage probabilities from `trials` random blocks.
///
/// Work is spread over the current rayon pool; the result is bit-identical
/// for any pool size.
pub fn estimate_outage(config: &SystemConfig, scheme: Scheme, trials: u64, seed: u64) -> Result<OutageEstimate> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let chunks = trials.div_ceil(CHUNK_TRIALS);
    let tally = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK_TRIALS;
            run_chunk(config, scheme, seed, start, (start + CHUNK_TRIALS).min(trials))
        })
        .reduce(Tally::default, Tally::merge);
    Ok(OutageEstimate::from_tally(scheme, trials, seed, tally))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    GbuPowerDb,
    GfuPowerDb,
    TargetRate,
    NumGfus,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::GbuPowerDb => "gbu_power_db",
            SweepAxis::GfuPowerDb => "gfu_power_db",
            SweepAxis::TargetRate => "target_rate",
            SweepAxis::NumGfus => "num_gfus",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        [Self::GbuPowerDb, Self::GfuPowerDb, Self::TargetRate, Self::NumGfus].into_iter().find(|a| a.name() == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base: SystemConfig,
    pub axis: SweepAxis,
    pub grid: Vec<f64>,
    pub trials: u64,
    pub seed: u64,
    pub schemes: Vec<Scheme>,
    /// When set, power sweeps keep `Ps[dB] = P0[dB] + offset`.
    pub gfu_power_offset_db: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub axis_value: f64,
    pub scheme: Scheme,
    pub config: Option<SystemConfig>,
    pub estimate: Option<OutageEstimate>,
    /// Present for the rate-splitting scheme only.
    pub analytic: Option<AnalyticValues>,
    pub error: Option<String>,
}

/// Configuration at one grid point.
pub fn config_at(spec: &SweepSpec, value: f64) -> Result<SystemConfig> {
    let base = &spec.base;
    match spec.axis {
        SweepAxis::GbuPowerDb => {
            let ps = match spec.gfu_power_offset_db {
                Some(offset) => db_to_linear(value + offset),
                None => base.power_gfu(),
            };
            base.with_powers(db_to_linear(value), ps)
        }
        SweepAxis::GfuPowerDb => {
            let p0 = match spec.gfu_power_offset_db {
                Some(offset) => db_to_linear(value - offset),
                None => base.power_gbu(),
            };
            base.with_powers(p0, db_to_linear(value))
        }
        SweepAxis::TargetRate => base.with_target_rates(value, value),
        SweepAxis::NumGfus => {
            if value.fract() != 0.0 || value < 0.0 {
                return Err(Error::InvalidArgument(format!("number of GFUs must be a nonnegative integer, got {value}")));
            }
            base.with_num_gfus(value as usize)
        }
    }
}

/// Runs every scheme at every grid point, in grid order.
///
/// Invalid grid points produce rows carrying an error message instead of
/// aborting the sweep. The same seed is used at every point, so schemes and
/// neighbouring points are compared on common random numbers.
pub fn sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    if spec.grid.is_empty() {
        return Err(Error::InvalidArgument("sweep grid is empty".into()));
    }
    if spec.schemes.is_empty() {
        return Err(Error::InvalidArgument("no schemes selected".into()));
    }
    if spec.trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let mut rows = Vec::with_capacity(spec.grid.len() * spec.schemes.len());
    for &value in &spec.grid {
        let config = config_at(spec, value);
        for &scheme in &spec.schemes {
            let mut row = SweepRow { axis_value: value, scheme, config: None, estimate: None, analytic: None, error: None };
            match &config {
                Err(e) => row.error = Some(e.to_string()),
                Ok(c) => {
                    row.config = Some(*c);
                    match estimate_outage(c, scheme, spec.trials, spec.seed) {
                        Ok(est) => row.estimate = Some(est),
                        Err(e) => row.error = Some(e.to_string()),
                    }
                    if scheme == Scheme::CrRsmaSgf {
                        match analytic_values(c) {
                            Ok(v) => row.analytic = Some(v),
                            Err(e) => {
                                log::warn!("analytic evaluation failed at {value}: {e}");
                                row.error.get_or_insert(e.to_string());
                            }
                        }
                    }
                }
            }
            rows.push(row);
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pool(threads: usize) -> rayon::ThreadPool {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap()
    }

    #[test]
    fn zero_trials_rejected() {
        let c = SystemConfig::new(2, 10.0, 10.0, 1.0, 1.0).unwrap();
        assert!(matches!(estimate_outage(&c, Scheme::CrRsmaSgf, 0, 1), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn identical_across_thread_counts() {
        let c = SystemConfig::from_db(3, 20.0, 15.0, 2.0, 1.5).unwrap();
        for scheme in Scheme::ALL {
            let one = pool(1).install(|| estimate_outage(&c, scheme, 100_003, 42).unwrap());
            let eight = pool(8).install(|| estimate_outage(&c, scheme, 100_003, 42).unwrap());
            assert_eq!(one, eight);
        }
    }

    #[test]
    fn prefix_of_a_longer_run_is_reproduced() {
        // trial i depends only on (seed, i): the tallies of the first n trials
        // do not change when more trials follow
        let c = SystemConfig::new(2, 10.0, 10.0, 1.0, 1.0).unwrap();
        let short = estimate_outage(&c, Scheme::CrRsmaSgf, CHUNK_TRIALS, 9).unwrap();
        let direct = run_chunk(&c, Scheme::CrRsmaSgf, 9, 0, CHUNK_TRIALS);
        assert_eq!(short.gfu_outages, direct.gfu_outages);
        let tail = run_chunk(&c, Scheme::CrRsmaSgf, 9, 100, CHUNK_TRIALS);
        let head = run_chunk(&c, Scheme::CrRsmaSgf, 9, 0, 100);
        assert_eq!(head.merge(tail), direct);
    }

    #[test]
    fn tallies_are_consistent() {
        let c = SystemConfig::from_db(4, 15.0, 10.0, 2.0, 2.0).unwrap();
        let e = estimate_outage(&c, Scheme::CrRsmaSgf, 50_000, 3).unwrap();
        assert_eq!(e.case_tallies.occurrences.iter().sum::<u64>(), e.trials);
        for i in 0..3 {
            assert!(e.case_tallies.outages[i] <= e.case_tallies.occurrences[i]);
        }
        assert_eq!(e.case_tallies.outages.iter().sum::<u64>(), e.gfu_outages);
        assert_eq!(e.gfu_outage_prob, e.gfu_outages as f64 / 50_000.0);
    }

    #[test]
    fn gbu_outage_matches_exponential_cdf() {
        let c = SystemConfig::new(2, 10.0, 10.0, 1.0, 1.0).unwrap();
        let e = estimate_outage(&c, Scheme::CrRsmaSgf, 1_000_000, 5).unwrap();
        let expected = -(-0.1f64).exp_m1();
        assert!((e.gbu_outage_prob - expected).abs() <= 3.0 * e.std_err_gbu);
    }

    #[test]
    fn tiny_gfu_rate_never_in_outage() {
        let c = SystemConfig::new(3, 10.0, 10.0, 1.0, 1e-9).unwrap();
        let e = estimate_outage(&c, Scheme::CrRsmaSgf, 100_000, 5).unwrap();
        assert!(e.gfu_outage_prob < 1e-4);
    }

    #[test]
    fn doubling_trials_shrinks_std_err() {
        let c = SystemConfig::new(2, 10.0, 10.0, 1.0, 1.0).unwrap();
        let mut ratios = Vec::new();
        for seed in 0..5 {
            let a = estimate_outage(&c, Scheme::CrRsmaSgf, 200_000, seed).unwrap();
            let b = estimate_outage(&c, Scheme::CrRsmaSgf, 800_000, seed + 100).unwrap();
            ratios.push(b.std_err_gfu / a.std_err_gfu);
        }
        let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
        assert!((mean - 0.5).abs() < 0.05, "{mean}");
    }

    #[test]
    fn sweep_records_row_errors_and_keeps_order() {
        let spec = SweepSpec {
            base: SystemConfig::new(2, 10.0, 10.0, 1.0, 1.0).unwrap(),
            axis: SweepAxis::NumGfus,
            grid: vec![1.0, 0.0, 2.0],
            trials: 1000,
            seed: 1,
            schemes: vec![Scheme::CrRsmaSgf, Scheme::CrNomaSgf],
            gfu_power_offset_db: None,
        };
        let rows = sweep(&spec).unwrap();
        assert_eq!(rows.len(), 6);
        assert!(rows[2].error.is_some() && rows[3].error.is_some());
        assert!(rows[0].analytic.is_some() && rows[1].analytic.is_none());
        assert_eq!(rows[4].axis_value, 2.0);
        assert_eq!(rows[5].scheme, Scheme::CrNomaSgf);
    }

    #[test]
    fn coupled_power_sweep() {
        let spec = SweepSpec {
            base: SystemConfig::new(2, 10.0, 10.0, 2.5, 1.5).unwrap(),
            axis: SweepAxis::GbuPowerDb,
            grid: vec![30.0],
            trials: 10,
            seed: 1,
            schemes: vec![Scheme::CrRsmaSgf],
            gfu_power_offset_db: Some(-10.0 * 15f64.log10()),
        };
        let c = config_at(&spec, 30.0).unwrap();
        assert!((c.power_gbu() / c.power_gfu() - 15.0).abs() < 1e-9);
    }
}
