//! Experiment runner for the `rsma-sgf` library: presets, config files,
//! result rendering and the acceptance validation suite.

pub mod experiment;
pub mod output;
pub mod validation;

use rsma_sgf::model::db_to_linear;
use rsma_sgf::montecarlo::sweep;
use rsma_sgf::zones::zone_grid;
use thiserror::Error;

use experiment::{Body, Experiment};
use output::{render, Format, RunResult};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Library(#[from] rsma_sgf::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

/// Runs `f` on a dedicated pool of `workers` threads, or on the global pool.
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    match workers {
        None => Ok(f()),
        Some(0) => Err(CliError::Usage("worker count must be at least 1".into())),
        Some(n) => Ok(rayon::ThreadPoolBuilder::new().num_threads(n).build()?.install(f)),
    }
}

pub fn execute(experiment: &Experiment) -> Result<RunResult, CliError> {
    match &experiment.body {
        Body::Sweep(parts) => {
            let mut rows = Vec::new();
            for spec in parts {
                rows.extend(sweep(spec)?);
            }
            Ok(RunResult::Sweep(rows))
        }
        Body::Zone(z) => Ok(RunResult::Zone(zone_grid(db_to_linear(z.p0g0_db), db_to_linear(z.psgk_db), z.grid)?)),
    }
}

/// Executes and renders an experiment in one step.
pub fn run_to_bytes(experiment: &Experiment, format: Format, timestamp: Option<u64>) -> Result<Vec<u8>, CliError> {
    let result = execute(experiment)?;
    render(experiment, &result, format, timestamp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use experiment::{preset, Overrides};

    #[test]
    fn zone_preset_row_count() {
        let mut e = preset("zone").unwrap();
        e.apply(&Overrides { grid: Some(20), ..Default::default() }).unwrap();
        let text = String::from_utf8(run_to_bytes(&e, Format::Csv, None).unwrap()).unwrap();
        let data_rows = text.lines().filter(|l| !l.starts_with('#')).count() - 1;
        assert_eq!(data_rows, 400);
    }

    #[test]
    fn sweep_output_is_worker_independent() {
        let mut e = preset("fig6").unwrap();
        e.apply(&Overrides { trials: Some(3000), seed: Some(5), ..Default::default() }).unwrap();
        let one = with_workers(Some(1), || run_to_bytes(&e, Format::Csv, None)).unwrap().unwrap();
        let eight = with_workers(Some(8), || run_to_bytes(&e, Format::Csv, None)).unwrap().unwrap();
        assert_eq!(one, eight);
        let header = String::from_utf8(one).unwrap().lines().find(|l| !l.starts_with('#')).unwrap().to_string();
        assert!(header.starts_with(
            "axis_value,scheme,mc_gfu_outage,mc_std_err,mc_gbu_outage,analytic_exact,analytic_highsnr,\
             analytic_asymptote,trials,seed,case1_frac,case2_frac,case3_frac,"
        ));
    }

    #[test]
    fn zero_workers_rejected() {
        assert!(matches!(with_workers(Some(0), || ()), Err(CliError::Usage(_))));
    }
}
