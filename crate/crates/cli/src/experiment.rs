//! Experiment descriptions: built-in presets and TOML config files.

use std::fmt;
use std::path::Path;

use rsma_sgf::montecarlo::{Scheme, SweepAxis, SweepSpec};
use rsma_sgf::SystemConfig;
use serde::Deserialize;

use crate::CliError;

pub const DEFAULT_TRIALS: u64 = 1_000_000;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_ZONE_GRID: usize = 200;

/// Where a parameter value comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    /// Stated in a figure caption.
    Caption,
    /// Stated in the running text.
    Text,
    /// Not given; fixed here.
    Choice,
    /// Read from a user config file.
    Config,
    /// Overridden on the command line.
    Flag,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::Caption => "caption",
            Source::Text => "text",
            Source::Choice => "choice",
            Source::Config => "config",
            Source::Flag => "flag",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetaEntry {
    pub key: String,
    pub value: String,
    pub source: Source,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZoneSpec {
    pub p0g0_db: f64,
    pub psgk_db: f64,
    pub grid: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Body {
    /// Sweeps run one after another; rows are concatenated.
    Sweep(Vec<SweepSpec>),
    Zone(ZoneSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub name: String,
    pub metadata: Vec<MetaEntry>,
    pub body: Body,
}

pub const PRESETS: [&str; 7] = ["fig3", "fig4", "fig5", "fig6", "fig7", "zone", "fig2"];

fn meta(key: &str, value: impl fmt::Display, source: Source) -> MetaEntry {
    MetaEntry { key: key.to_string(), value: value.to_string(), source }
}

fn range(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step).round() as usize;
    (0..=n).map(|i| start + i as f64 * step).collect()
}

fn fmt_grid(grid: &[f64]) -> String {
    grid.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(";")
}

/// `Ps = P0 / 15` expressed as a dB offset.
pub fn fifteenth_offset_db() -> f64 {
    -10.0 * 15f64.log10()
}

struct SweepBuilder {
    parts: Vec<SweepSpec>,
}

impl SweepBuilder {
    fn new() -> Self {
        Self { parts: Vec::new() }
    }

    fn part(
        mut self,
        config: Result<SystemConfig, rsma_sgf::Error>,
        axis: SweepAxis,
        grid: &[f64],
        offset: Option<f64>,
    ) -> Self {
        let base = config.expect("preset parameters are valid");
        self.parts.push(SweepSpec {
            base,
            axis,
            grid: grid.to_vec(),
            trials: DEFAULT_TRIALS,
            seed: DEFAULT_SEED,
            schemes: Scheme::ALL.to_vec(),
            gfu_power_offset_db: offset,
        });
        self
    }
}

fn sweep_experiment(name: &str, mut metadata: Vec<MetaEntry>, parts: Vec<SweepSpec>) -> Experiment {
    metadata.push(meta("trials", DEFAULT_TRIALS, Source::Choice));
    metadata.push(meta("seed", DEFAULT_SEED, Source::Choice));
    metadata.push(meta("schemes", "cr-rsma-sgf;cr-noma-sgf", Source::Text));
    Experiment { name: name.to_string(), metadata, body: Body::Sweep(parts) }
}

fn zone_experiment(name: &str, p0g0_db: f64, psgk_db: f64) -> Experiment {
    Experiment {
        name: name.to_string(),
        metadata: vec![
            meta("p0g0_db", p0g0_db, Source::Caption),
            meta("psgk_db", psgk_db, Source::Caption),
            meta("grid", DEFAULT_ZONE_GRID, Source::Choice),
            meta("target_range", "(0,1.2*a0]x(0,1.2*ak]", Source::Choice),
        ],
        body: Body::Zone(ZoneSpec { p0g0_db, psgk_db, grid: DEFAULT_ZONE_GRID }),
    }
}

/// Built-in experiment by name.
pub fn preset(name: &str) -> Result<Experiment, CliError> {
    let offset = fifteenth_offset_db();
    let experiment = match name {
        "fig3" => {
            let grid = range(20.0, 50.0, 5.0);
            let mut b = SweepBuilder::new();
            for k in [1, 5] {
                b = b.part(SystemConfig::from_db(k, grid[0], grid[0] + offset, 2.5, 1.5), SweepAxis::GbuPowerDb, &grid, Some(offset));
            }
            sweep_experiment(
                name,
                vec![
                    meta("target_rate_gbu", 2.5, Source::Caption),
                    meta("target_rate_gfu", 1.5, Source::Caption),
                    meta("gfu_power", "P0/15", Source::Caption),
                    meta("num_gfus", "1;5", Source::Text),
                    meta("axis", "gbu_power_db", Source::Text),
                    meta("grid", fmt_grid(&grid), Source::Choice),
                ],
                b.parts,
            )
        }
        "fig4" => {
            let grid = range(0.0, 45.0, 5.0);
            let mut b = SweepBuilder::new();
            for k in [1, 5] {
                b = b.part(SystemConfig::from_db(k, 15.0, grid[0], 3.0, 3.0), SweepAxis::GfuPowerDb, &grid, None);
            }
            sweep_experiment(
                name,
                vec![
                    meta("target_rate_gbu", 3.0, Source::Caption),
                    meta("target_rate_gfu", 3.0, Source::Caption),
                    meta("gbu_power_db", 15.0, Source::Text),
                    meta("num_gfus", "1;5", Source::Text),
                    meta("axis", "gfu_power_db", Source::Text),
                    meta("grid_range", "0..45", Source::Text),
                    meta("grid", fmt_grid(&grid), Source::Choice),
                ],
                b.parts,
            )
        }
        "fig5" => {
            let grid = range(20.0, 50.0, 5.0);
            let mut b = SweepBuilder::new();
            for k in [1, 2, 4] {
                b = b.part(SystemConfig::from_db(k, grid[0], grid[0] + offset, 2.0, 1.5), SweepAxis::GbuPowerDb, &grid, Some(offset));
            }
            sweep_experiment(
                name,
                vec![
                    meta("target_rate_gbu", 2.0, Source::Text),
                    meta("target_rate_gfu", 1.5, Source::Text),
                    meta("gfu_power", "P0/15", Source::Text),
                    meta("num_gfus", "1;2;4", Source::Choice),
                    meta("axis", "gbu_power_db", Source::Text),
                    meta("grid", fmt_grid(&grid), Source::Choice),
                ],
                b.parts,
            )
        }
        "fig6" => {
            let grid = range(0.5, 4.0, 0.5);
            let mut b = SweepBuilder::new();
            for k in [1, 5] {
                b = b.part(SystemConfig::from_db(k, 10.0, 15.0, grid[0], grid[0]), SweepAxis::TargetRate, &grid, None);
            }
            sweep_experiment(
                name,
                vec![
                    meta("gbu_power_db", 10.0, Source::Text),
                    meta("gfu_power_db", 15.0, Source::Text),
                    meta("target_rates", "R0=Rs", Source::Text),
                    meta("num_gfus", "1;5", Source::Choice),
                    meta("axis", "target_rate", Source::Text),
                    meta("grid", fmt_grid(&grid), Source::Choice),
                ],
                b.parts,
            )
        }
        "fig7" => {
            let grid = range(1.0, 10.0, 1.0);
            let b = SweepBuilder::new()
                .part(SystemConfig::from_db(1, 20.0, 10.0, 1.5, 2.0), SweepAxis::NumGfus, &grid, None)
                .part(SystemConfig::from_db(1, 10.0, 20.0, 1.5, 2.0), SweepAxis::NumGfus, &grid, None);
            sweep_experiment(
                name,
                vec![
                    meta("target_rate_gbu", 1.5, Source::Text),
                    meta("target_rate_gfu", 2.0, Source::Text),
                    meta("setting_a", "P0=20dB;Ps=10dB", Source::Text),
                    meta("setting_b", "P0=10dB;Ps=20dB", Source::Choice),
                    meta("axis", "num_gfus", Source::Text),
                    meta("grid", fmt_grid(&grid), Source::Choice),
                ],
                b.parts,
            )
        }
        "zone" => zone_experiment(name, 8.0, 15.0),
        "fig2" => zone_experiment(name, 5.0, 4.0),
        other => {
            return Err(CliError::Usage(format!("unknown preset '{other}' (known: {})", PRESETS.join(", "))));
        }
    };
    Ok(experiment)
}

fn set_meta(metadata: &mut Vec<MetaEntry>, key: &str, value: String, source: Source) {
    match metadata.iter_mut().find(|m| m.key == key) {
        Some(m) => {
            m.value = value;
            m.source = source;
        }
        None => metadata.push(MetaEntry { key: key.to_string(), value, source }),
    }
}

/// Command-line overrides applied on top of a preset or config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub p0g0_db: Option<f64>,
    pub psgk_db: Option<f64>,
    pub grid: Option<usize>,
}

impl Experiment {
    pub fn apply(&mut self, o: &Overrides) -> Result<(), CliError> {
        match &mut self.body {
            Body::Sweep(parts) => {
                if o.p0g0_db.is_some() || o.psgk_db.is_some() || o.grid.is_some() {
                    return Err(CliError::Usage("--p0g0-db, --psgk-db and --grid apply to zone runs only".into()));
                }
                if let Some(t) = o.trials {
                    if t == 0 {
                        return Err(CliError::Usage("--trials must be at least 1".into()));
                    }
                    parts.iter_mut().for_each(|p| p.trials = t);
                    set_meta(&mut self.metadata, "trials", t.to_string(), Source::Flag);
                }
                if let Some(s) = o.seed {
                    parts.iter_mut().for_each(|p| p.seed = s);
                    set_meta(&mut self.metadata, "seed", s.to_string(), Source::Flag);
                }
            }
            Body::Zone(z) => {
                if o.trials.is_some() || o.seed.is_some() {
                    return Err(CliError::Usage("--trials and --seed do not apply to zone runs".into()));
                }
                if let Some(v) = o.p0g0_db {
                    z.p0g0_db = v;
                    set_meta(&mut self.metadata, "p0g0_db", v.to_string(), Source::Flag);
                }
                if let Some(v) = o.psgk_db {
                    z.psgk_db = v;
                    set_meta(&mut self.metadata, "psgk_db", v.to_string(), Source::Flag);
                }
                if let Some(n) = o.grid {
                    if n == 0 {
                        return Err(CliError::Usage("--grid must be at least 1".into()));
                    }
                    z.grid = n;
                    set_meta(&mut self.metadata, "grid", n.to_string(), Source::Flag);
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileSystem {
    num_gfus: usize,
    gbu_power_db: f64,
    gfu_power_db: f64,
    target_rate_gbu: f64,
    target_rate_gfu: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileSweep {
    axis: String,
    grid: Vec<f64>,
    #[serde(default)]
    gfu_power_offset_db: Option<f64>,
    /// Repeats the sweep for each user count.
    #[serde(default)]
    num_gfus: Option<Vec<usize>>,
    #[serde(default)]
    schemes: Option<Vec<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileZone {
    p0g0_db: f64,
    psgk_db: f64,
    #[serde(default)]
    grid: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileRun {
    name: Option<String>,
    trials: Option<u64>,
    seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(default)]
    run: FileRun,
    system: Option<FileSystem>,
    sweep: Option<FileSweep>,
    zone: Option<FileZone>,
}

/// Parses an experiment from TOML text. Powers are in dB, rates in bits per
/// channel use.
pub fn parse_config(text: &str) -> Result<Experiment, CliError> {
    let file: ConfigFile = toml::from_str(text).map_err(|e| CliError::Usage(format!("invalid config: {e}")))?;
    let name = file.run.name.clone().unwrap_or_else(|| "custom".to_string());
    match (file.system, file.sweep, file.zone) {
        (None, None, Some(z)) => {
            if file.run.trials.is_some() || file.run.seed.is_some() {
                return Err(CliError::Usage("zone configs take no trials or seed".into()));
            }
            let grid = z.grid.unwrap_or(DEFAULT_ZONE_GRID);
            if grid == 0 {
                return Err(CliError::Usage("zone grid must be at least 1".into()));
            }
            Ok(Experiment {
                name,
                metadata: vec![
                    meta("p0g0_db", z.p0g0_db, Source::Config),
                    meta("psgk_db", z.psgk_db, Source::Config),
                    meta("grid", grid, if z.grid.is_some() { Source::Config } else { Source::Choice }),
                    meta("target_range", "(0,1.2*a0]x(0,1.2*ak]", Source::Choice),
                ],
                body: Body::Zone(ZoneSpec { p0g0_db: z.p0g0_db, psgk_db: z.psgk_db, grid }),
            })
        }
        (Some(sys), Some(sw), None) => {
            let axis = SweepAxis::from_name(&sw.axis)
                .ok_or_else(|| CliError::Usage(format!("unknown sweep axis '{}'", sw.axis)))?;
            if sw.grid.is_empty() {
                return Err(CliError::Usage("sweep grid is empty".into()));
            }
            let schemes = match &sw.schemes {
                None => Scheme::ALL.to_vec(),
                Some(names) => names
                    .iter()
                    .map(|n| Scheme::from_name(n).ok_or_else(|| CliError::Usage(format!("unknown scheme '{n}'"))))
                    .collect::<Result<Vec<_>, _>>()?,
            };
            if schemes.is_empty() {
                return Err(CliError::Usage("no schemes selected".into()));
            }
            let trials = file.run.trials.unwrap_or(DEFAULT_TRIALS);
            if trials == 0 {
                return Err(CliError::Usage("trials must be at least 1".into()));
            }
            let seed = file.run.seed.unwrap_or(DEFAULT_SEED);
            let counts = sw.num_gfus.clone().unwrap_or_else(|| vec![sys.num_gfus]);
            let mut parts = Vec::with_capacity(counts.len());
            for k in &counts {
                let base = SystemConfig::from_db(*k, sys.gbu_power_db, sys.gfu_power_db, sys.target_rate_gbu, sys.target_rate_gfu)?;
                parts.push(SweepSpec {
                    base,
                    axis,
                    grid: sw.grid.clone(),
                    trials,
                    seed,
                    schemes: schemes.clone(),
                    gfu_power_offset_db: sw.gfu_power_offset_db,
                });
            }
            let source_of = |present: bool| if present { Source::Config } else { Source::Choice };
            let mut metadata = vec![
                meta("gbu_power_db", sys.gbu_power_db, Source::Config),
                meta("gfu_power_db", sys.gfu_power_db, Source::Config),
                meta("target_rate_gbu", sys.target_rate_gbu, Source::Config),
                meta("target_rate_gfu", sys.target_rate_gfu, Source::Config),
                meta("num_gfus", counts.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(";"), Source::Config),
                meta("axis", axis.name(), Source::Config),
                meta("grid", fmt_grid(&sw.grid), Source::Config),
            ];
            if let Some(o) = sw.gfu_power_offset_db {
                metadata.push(meta("gfu_power_offset_db", o, Source::Config));
            }
            metadata.push(meta("trials", trials, source_of(file.run.trials.is_some())));
            metadata.push(meta("seed", seed, source_of(file.run.seed.is_some())));
            metadata.push(meta(
                "schemes",
                schemes.iter().map(|s| s.name()).collect::<Vec<_>>().join(";"),
                source_of(sw.schemes.is_some()),
            ));
            Ok(Experiment { name, metadata, body: Body::Sweep(parts) })
        }
        _ => Err(CliError::Usage(
            "a config needs either [system] and [sweep] sections or a single [zone] section".into(),
        )),
    }
}

pub fn load_config(path: &Path) -> Result<Experiment, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    parse_config(&text)
}
