//! Run settings merged from flags, an optional key=value file, and defaults.
//!
//! File format: one `key = value` per line; blank lines and lines starting
//! with `#` are ignored. Lists (`discount_rate`, `eta`) are comma-separated.
//! Keys: `out`, `target`, `baseline`, `scenario`, `estimates`, `records`,
//! `discount_rate`, `eta`, `draws`, `seed`, `cost_multiplier`,
//! `coverage_adjust`, `geometric`, `chart`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use clap::Args;
use paris_cba::scenario_io::SSP585_LIKE;
use paris_cba::Target;

pub const OUT_ENV: &str = "PARIS_CBA_OUT";
pub const DEFAULT_OUT: &str = "out";
pub const DEFAULT_SEED: u64 = 2020;
pub const DEFAULT_RATES: [f64; 4] = [0.0, 0.01, 0.03, 0.05];
pub const DEFAULT_ETAS: [f64; 4] = [0.0, 1.0, 2.0, 4.0];

const KEYS: [&str; 14] = [
    "out",
    "target",
    "baseline",
    "scenario",
    "estimates",
    "records",
    "discount_rate",
    "eta",
    "draws",
    "seed",
    "cost_multiplier",
    "coverage_adjust",
    "geometric",
    "chart",
];

/// `1.5`, `2.0`, or `none` for both.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TargetChoice(pub Option<Target>);

impl FromStr for TargetChoice {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s.trim().eq_ignore_ascii_case("none") {
            return Ok(Self(None));
        }
        s.parse()
            .map(|t| Self(Some(t)))
            .map_err(|e: paris_cba::Error| e.to_string())
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct Options {
    /// Output directory [default: $PARIS_CBA_OUT, else ./out]
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Settings file of `key = value` lines; flags take precedence
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Temperature target: 1.5, 2.0 or none (both) [default: none]
    #[arg(long, global = true)]
    pub target: Option<TargetChoice>,
    /// Baseline scenario, bundled name or CSV path [default: ssp585_like]
    #[arg(long, global = true)]
    pub baseline: Option<String>,
    /// Scenario for kaya and simulate, bundled name or CSV path
    #[arg(long, global = true)]
    pub scenario: Option<String>,
    /// Impact estimates CSV [default: bundled synthetic set]
    #[arg(long, global = true)]
    pub estimates: Option<PathBuf>,
    /// Carbon tax records CSV [default: bundled set]
    #[arg(long, global = true)]
    pub records: Option<PathBuf>,
    /// Discount rates per year as fractions, comma-separated [default: 0,0.01,0.03,0.05]
    #[arg(long, global = true, value_delimiter = ',')]
    pub discount_rate: Option<Vec<f64>>,
    /// Relative risk aversion values, comma-separated [default: 0,1,2,4]
    #[arg(long, global = true, value_delimiter = ',')]
    pub eta: Option<Vec<f64>>,
    /// Monte Carlo draws; 0 runs without uncertainty [default: 0 for cba, 2000 otherwise]
    #[arg(long, global = true)]
    pub draws: Option<usize>,
    /// Monte Carlo seed [default: 2020]
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Scale factor on policy costs [default: 1]
    #[arg(long, global = true)]
    pub cost_multiplier: Option<f64>,
    /// Share of damages missing from the estimates, in [0, 1) [default: 0]
    #[arg(long, global = true)]
    pub coverage_adjust: Option<f64>,
    /// Report Kaya rates as annually compounded rather than continuous
    #[arg(long, global = true)]
    pub geometric: bool,
    /// Also write an SVG chart beside each CSV
    #[arg(long, global = true)]
    pub chart: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub out: PathBuf,
    pub target: Option<Target>,
    pub baseline: String,
    pub scenario: Option<String>,
    pub estimates: Option<PathBuf>,
    pub records: Option<PathBuf>,
    pub discount_rates: Vec<f64>,
    pub etas: Vec<f64>,
    /// `None` leaves the choice to the subcommand.
    pub draws: Option<usize>,
    pub seed: u64,
    pub cost_multiplier: f64,
    pub coverage_adjust: f64,
    pub geometric: bool,
    pub chart: bool,
}

impl RunConfig {
    /// Flags over file over defaults; the output directory falls back to
    /// `env_out` before the built-in default.
    pub fn resolve(flags: &Options, env_out: Option<PathBuf>) -> Result<Self> {
        let file = match &flags.config {
            Some(path) => read_file(path)?,
            None => BTreeMap::new(),
        };
        let get = |key: &str| file.get(key).map(String::as_str);
        let parsed = |key: &str| -> Result<Option<f64>> {
            get(key)
                .map(|v| {
                    v.parse()
                        .with_context(|| format!("config `{key}`: `{v}` is not a number"))
                })
                .transpose()
        };
        let list = |key: &str| -> Result<Option<Vec<f64>>> {
            get(key)
                .map(|v| {
                    v.split(',')
                        .map(|x| {
                            x.trim()
                                .parse()
                                .with_context(|| format!("config `{key}`: `{x}` is not a number"))
                        })
                        .collect()
                })
                .transpose()
        };
        let boolean = |key: &str| -> Result<bool> {
            match get(key) {
                None | Some("false") => Ok(false),
                Some("true") => Ok(true),
                Some(v) => bail!("config `{key}`: expected true or false, got `{v}`"),
            }
        };

        let target = match flags.target {
            Some(t) => t.0,
            None => match get("target") {
                Some(v) => {
                    v.parse::<TargetChoice>()
                        .map_err(|e| anyhow!("config `target`: {e}"))?
                        .0
                }
                None => None,
            },
        };
        let draws = match flags.draws {
            Some(d) => Some(d),
            None => get("draws")
                .map(|v| {
                    v.parse()
                        .with_context(|| format!("config `draws`: `{v}` is not a count"))
                })
                .transpose()?,
        };
        let seed = match flags.seed {
            Some(s) => s,
            None => get("seed")
                .map(|v| v.parse().with_context(|| format!("config `seed`: `{v}` is not a seed")))
                .transpose()?
                .unwrap_or(DEFAULT_SEED),
        };

        let cfg = Self {
            out: flags
                .out
                .clone()
                .or_else(|| get("out").map(PathBuf::from))
                .or(env_out)
                .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
            target,
            baseline: flags
                .baseline
                .clone()
                .or_else(|| get("baseline").map(String::from))
                .unwrap_or_else(|| SSP585_LIKE.to_string()),
            scenario: flags.scenario.clone().or_else(|| get("scenario").map(String::from)),
            estimates: flags.estimates.clone().or_else(|| get("estimates").map(PathBuf::from)),
            records: flags.records.clone().or_else(|| get("records").map(PathBuf::from)),
            discount_rates: match &flags.discount_rate {
                Some(v) => v.clone(),
                None => list("discount_rate")?.unwrap_or_else(|| DEFAULT_RATES.to_vec()),
            },
            etas: match &flags.eta {
                Some(v) => v.clone(),
                None => list("eta")?.unwrap_or_else(|| DEFAULT_ETAS.to_vec()),
            },
            draws,
            seed,
            cost_multiplier: flags
                .cost_multiplier
                .map_or_else(|| parsed("cost_multiplier"), |v| Ok(Some(v)))?
                .unwrap_or(1.0),
            coverage_adjust: flags
                .coverage_adjust
                .map_or_else(|| parsed("coverage_adjust"), |v| Ok(Some(v)))?
                .unwrap_or(0.0),
            geometric: flags.geometric || boolean("geometric")?,
            chart: flags.chart || boolean("chart")?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if self.discount_rates.is_empty() || self.discount_rates.iter().any(|r| !(r.is_finite() && *r > -1.0)) {
            bail!(
                "discount rates must be finite and above -1, got {:?}",
                self.discount_rates
            );
        }
        if self.etas.is_empty() || self.etas.iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
            bail!("eta values must be finite and non-negative, got {:?}", self.etas);
        }
        if !(self.cost_multiplier.is_finite() && self.cost_multiplier >= 0.0) {
            bail!(
                "cost multiplier must be finite and non-negative, got {}",
                self.cost_multiplier
            );
        }
        if !(0.0..1.0).contains(&self.coverage_adjust) {
            bail!("coverage adjustment must lie in [0, 1), got {}", self.coverage_adjust);
        }
        Ok(())
    }

    pub fn targets(&self) -> Vec<Target> {
        match self.target {
            Some(t) => vec![t],
            None => Target::ALL.to_vec(),
        }
    }

    pub fn draws_or(&self, default: usize) -> usize {
        self.draws.unwrap_or(default)
    }
}

fn read_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    parse_file(&text).with_context(|| format!("in config {}", path.display()))
}

pub fn parse_file(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("line {}: expected `key = value`", i + 1))?;
        let key = key.trim();
        if !KEYS.contains(&key) {
            bail!("line {}: unknown key `{key}`", i + 1);
        }
        if out.insert(key.to_string(), value.trim().to_string()).is_some() {
            bail!("line {}: `{key}` set twice", i + 1);
        }
    }
    Ok(out)
}
