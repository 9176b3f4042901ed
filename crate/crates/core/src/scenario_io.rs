//! Scenario files: loading, validation, normalized writing, and the bundled
//! fixtures.
//!
//! A scenario CSV has a header row and one row per calendar year:
//!
//! ```text
//! year,emissions_gtco2,gdp_trillion_usd,population_million,exo_forcing_wm2
//! ```
//!
//! `exo_forcing_wm2` is optional and defaults to zero. An optional
//! `energy_ej` column (primary energy) enables the Kaya decomposition.

use std::fmt::Write as _;
use std::fs;
use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};
use crate::series::AnnualSeries;

pub const COL_YEAR: &str = "year";
pub const COL_EMISSIONS: &str = "emissions_gtco2";
pub const COL_GDP: &str = "gdp_trillion_usd";
pub const COL_POPULATION: &str = "population_million";
pub const COL_EXO_FORCING: &str = "exo_forcing_wm2";
pub const COL_ENERGY: &str = "energy_ej";

/// Emissions above this magnitude (GtCO₂/yr) are flagged as implausible.
pub const PLAUSIBLE_EMISSIONS: f64 = 200.0;

/// Annual emission, economy and forcing paths for one scenario.
///
/// Emissions may be negative (net removals). All series share `years`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmissionScenario {
    pub name: String,
    pub years: Vec<i32>,
    /// GtCO₂/yr
    pub emissions: Vec<f64>,
    /// trillion USD/yr
    pub gdp: Vec<f64>,
    /// million persons
    pub population: Vec<f64>,
    /// Non-CO₂ forcing, W/m²
    pub exo_forcing: Vec<f64>,
    /// Primary energy, EJ/yr
    pub energy: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    /// A broken invariant; the scenario cannot be used.
    Violation,
    /// Physically implausible but structurally valid.
    Warning,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub year: Option<i32>,
    pub message: String,
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = match self.severity {
            Severity::Violation => "error",
            Severity::Warning => "warning",
        };
        match self.year {
            Some(y) => write!(f, "{tag} ({y}): {}", self.message),
            None => write!(f, "{tag}: {}", self.message),
        }
    }
}

impl EmissionScenario {
    pub fn first_year(&self) -> i32 {
        self.years[0]
    }

    pub fn last_year(&self) -> i32 {
        *self.years.last().expect("scenario has at least one year")
    }

    pub fn len(&self) -> usize {
        self.years.len()
    }

    pub fn is_empty(&self) -> bool {
        self.years.is_empty()
    }

    pub fn index_of(&self, year: i32) -> Option<usize> {
        let i = usize::try_from(year.checked_sub(*self.years.first()?)?).ok()?;
        (i < self.years.len()).then_some(i)
    }

    pub fn emissions_series(&self) -> AnnualSeries {
        AnnualSeries::new(self.first_year(), self.emissions.clone())
    }

    pub fn gdp_series(&self) -> AnnualSeries {
        AnnualSeries::new(self.first_year(), self.gdp.clone())
    }

    /// Same scenario with a new emission path.
    pub fn with_emissions(&self, name: impl Into<String>, emissions: Vec<f64>) -> Self {
        debug_assert_eq!(emissions.len(), self.years.len());
        Self {
            name: name.into(),
            emissions,
            ..self.clone()
        }
    }
}

/// Checks invariants and plausibility. Empty iff the scenario is usable
/// without caveats.
pub fn validate_scenario(s: &EmissionScenario) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let violation = |year, message: String| Diagnostic {
        severity: Severity::Violation,
        year,
        message,
    };

    if s.years.is_empty() {
        out.push(violation(None, "scenario has no years".into()));
        return out;
    }
    let n = s.years.len();
    let lengths = [
        (COL_EMISSIONS, s.emissions.len()),
        (COL_GDP, s.gdp.len()),
        (COL_POPULATION, s.population.len()),
        (COL_EXO_FORCING, s.exo_forcing.len()),
    ];
    for (col, len) in lengths
        .into_iter()
        .chain(s.energy.as_ref().map(|e| (COL_ENERGY, e.len())))
    {
        if len != n {
            out.push(violation(None, format!("`{col}` has {len} values for {n} years")));
        }
    }
    if !out.is_empty() {
        return out;
    }

    for w in s.years.windows(2) {
        if w[1] != w[0] + 1 {
            out.push(violation(
                Some(w[1]),
                format!("non-contiguous years: {} followed by {}", w[0], w[1]),
            ));
        }
    }

    for (i, &year) in s.years.iter().enumerate() {
        let mut check_positive = |col: &str, v: f64| {
            if !(v.is_finite() && v > 0.0) {
                out.push(violation(Some(year), format!("`{col}` must be > 0, got {v}")));
            }
        };
        check_positive(COL_GDP, s.gdp[i]);
        check_positive(COL_POPULATION, s.population[i]);
        if let Some(e) = &s.energy {
            check_positive(COL_ENERGY, e[i]);
        }
        for (col, v) in [(COL_EMISSIONS, s.emissions[i]), (COL_EXO_FORCING, s.exo_forcing[i])] {
            if !v.is_finite() {
                out.push(violation(Some(year), format!("`{col}` is not finite")));
            }
        }
        let e = s.emissions[i];
        if e.is_finite() && e.abs() >= PLAUSIBLE_EMISSIONS {
            out.push(Diagnostic {
                severity: Severity::Warning,
                year: Some(year),
                message: format!("emissions {e} GtCO2/yr outside plausible range (|e| < {PLAUSIBLE_EMISSIONS})"),
            });
        }
    }
    out
}

fn ensure_valid(s: EmissionScenario) -> Result<EmissionScenario> {
    let diags = validate_scenario(&s);
    if let Some(d) = diags.iter().find(|d| d.severity == Severity::Violation) {
        return Err(Error::InvalidScenario(d.to_string()));
    }
    Ok(s)
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<EmissionScenario> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scenario".into());
    parse_scenario(name, text.as_bytes())
}

/// Parses scenario CSV from any reader. Errors name the offending row and
/// column.
pub fn parse_scenario(name: impl Into<String>, reader: impl Read) -> Result<EmissionScenario> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| parse_err(1, "header", e.to_string()))?
        .clone();
    let find = |col: &str| headers.iter().position(|h| h == col);
    let required = |col: &str| find(col).ok_or_else(|| Error::MissingColumn(col.to_string()));

    let i_year = required(COL_YEAR)?;
    let i_em = required(COL_EMISSIONS)?;
    let i_gdp = required(COL_GDP)?;
    let i_pop = required(COL_POPULATION)?;
    let i_exo = find(COL_EXO_FORCING);
    let i_energy = find(COL_ENERGY);

    let mut s = EmissionScenario {
        name: name.into(),
        years: Vec::new(),
        emissions: Vec::new(),
        gdp: Vec::new(),
        population: Vec::new(),
        exo_forcing: Vec::new(),
        energy: i_energy.map(|_| Vec::new()),
    };

    for record in rdr.records() {
        let record = record.map_err(|e| {
            let row = e.position().map_or(0, |p| p.line() as usize);
            parse_err(row, "record", e.to_string())
        })?;
        let row = record.position().map_or(0, |p| p.line() as usize);
        let field = |idx: usize, col: &str| -> Result<&str> {
            match record.get(idx) {
                Some(v) if !v.is_empty() => Ok(v),
                _ => Err(parse_err(row, col, "empty value".into())),
            }
        };
        let number = |idx: usize, col: &str| -> Result<f64> {
            let raw = field(idx, col)?;
            raw.parse::<f64>()
                .map_err(|_| parse_err(row, col, format!("`{raw}` is not a number")))
        };

        let year_raw = field(i_year, COL_YEAR)?;
        let year: i32 = year_raw
            .parse()
            .map_err(|_| parse_err(row, COL_YEAR, format!("`{year_raw}` is not a year")))?;
        if let Some(&previous) = s.years.last() {
            if year != previous + 1 {
                return Err(Error::NonContiguousYears { previous, next: year });
            }
        }
        s.years.push(year);
        s.emissions.push(number(i_em, COL_EMISSIONS)?);
        s.gdp.push(number(i_gdp, COL_GDP)?);
        s.population.push(number(i_pop, COL_POPULATION)?);
        s.exo_forcing.push(match i_exo {
            Some(i) => number(i, COL_EXO_FORCING)?,
            None => 0.0,
        });
        if let (Some(i), Some(energy)) = (i_energy, s.energy.as_mut()) {
            energy.push(number(i, COL_ENERGY)?);
        }
    }
    ensure_valid(s)
}

fn parse_err(row: usize, column: &str, message: String) -> Error {
    Error::Parse {
        row,
        column: column.to_string(),
        message,
    }
}

/// Normalized CSV text: fixed column order, shortest round-trip float
/// formatting, `energy_ej` only when present.
pub fn scenario_to_csv(s: &EmissionScenario) -> String {
    let mut out = String::new();
    out.push_str(&[COL_YEAR, COL_EMISSIONS, COL_GDP, COL_POPULATION, COL_EXO_FORCING].join(","));
    if s.energy.is_some() {
        out.push(',');
        out.push_str(COL_ENERGY);
    }
    out.push('\n');
    for i in 0..s.years.len() {
        let _ = write!(
            out,
            "{},{},{},{},{}",
            s.years[i], s.emissions[i], s.gdp[i], s.population[i], s.exo_forcing[i]
        );
        if let Some(e) = &s.energy {
            let _ = write!(out, ",{}", e[i]);
        }
        out.push('\n');
    }
    out
}

pub fn write_scenario(s: &EmissionScenario, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, scenario_to_csv(s)).map_err(|e| Error::io(path, e))
}

pub const SSP585_LIKE: &str = "ssp585_like";
pub const SSP370_LIKE: &str = "ssp370_like";
pub const PARIS20: &str = "paris20";
pub const PARIS15: &str = "paris15";
pub const HISTORICAL_KAYA: &str = "historical_kaya";

const BUNDLED: &[(&str, &str)] = &[
    (SSP585_LIKE, include_str!("../data/ssp585_like.csv")),
    (SSP370_LIKE, include_str!("../data/ssp370_like.csv")),
    (PARIS20, include_str!("../data/paris20.csv")),
    (PARIS15, include_str!("../data/paris15.csv")),
    (HISTORICAL_KAYA, include_str!("../data/historical_kaya.csv")),
];

pub fn bundled_names() -> impl Iterator<Item = &'static str> {
    BUNDLED.iter().map(|(n, _)| *n)
}

/// Raw CSV text of a bundled scenario.
pub fn bundled_csv(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

pub fn bundled(name: &str) -> Result<EmissionScenario> {
    let text = bundled_csv(name).ok_or_else(|| Error::UnknownBundle(name.to_string()))?;
    parse_scenario(name, text.as_bytes())
}

/// A bundled name, or otherwise a path on disk.
pub fn resolve_scenario(name_or_path: &str) -> Result<EmissionScenario> {
    match bundled_csv(name_or_path) {
        Some(_) => bundled(name_or_path),
        None => load_scenario(name_or_path),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "year,emissions_gtco2,gdp_trillion_usd,population_million,exo_forcing_wm2\n";

    fn tiny() -> EmissionScenario {
        parse_scenario(
            "t",
            format!("{HEADER}2020,40,85,7800,0.3\n2021,41,87,7810,0.3\n").as_bytes(),
        )
        .unwrap()
    }

    #[test]
    fn bundled_scenarios_are_valid() {
        for name in bundled_names() {
            let s = bundled(name).unwrap();
            assert!(validate_scenario(&s).is_empty(), "{name}");
        }
        let s = bundled(SSP585_LIKE).unwrap();
        assert_eq!((s.first_year(), s.last_year()), (2020, 2100));
    }

    #[test]
    fn bundled_files_are_in_normalized_form() {
        for name in bundled_names() {
            let s = bundled(name).unwrap();
            assert_eq!(scenario_to_csv(&s), bundled_csv(name).unwrap(), "{name}");
        }
    }

    #[test]
    fn gap_in_years_is_rejected() {
        let text = format!("{HEADER}2020,40,85,7800,0\n2022,41,87,7810,0\n");
        let err = parse_scenario("gap", text.as_bytes()).unwrap_err();
        assert!(matches!(
            err,
            Error::NonContiguousYears {
                previous: 2020,
                next: 2022
            }
        ));
        assert!(err.to_string().contains("non-contiguous years"));
    }

    #[test]
    fn empty_emissions_value_names_the_column() {
        let text = format!("{HEADER}2020,,85,7800,0\n");
        let err = parse_scenario("empty", text.as_bytes()).unwrap_err();
        match &err {
            Error::Parse { row, column, .. } => {
                assert_eq!(*row, 2);
                assert_eq!(column, COL_EMISSIONS);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(err.to_string().contains(COL_EMISSIONS));
    }

    #[test]
    fn missing_column_is_named() {
        let text = "year,gdp_trillion_usd,population_million\n2020,85,7800\n";
        let err = parse_scenario("m", text.as_bytes()).unwrap_err();
        assert!(matches!(err, Error::MissingColumn(ref c) if c == COL_EMISSIONS));
    }

    #[test]
    fn malformed_number_names_row_and_column() {
        let text = format!("{HEADER}2020,40,85,7800,0\n2021,40,abc,7800,0\n");
        let err = parse_scenario("bad", text.as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { row: 3, ref column, .. } if column == COL_GDP));
    }

    #[test]
    fn exo_forcing_defaults_to_zero() {
        let text = "year,emissions_gtco2,gdp_trillion_usd,population_million\n2020,1,1,1\n2021,1,1,1\n";
        let s = parse_scenario("noexo", text.as_bytes()).unwrap();
        assert_eq!(s.exo_forcing, vec![0.0, 0.0]);
        assert!(s.energy.is_none());
    }

    #[test]
    fn zero_gdp_yields_one_diagnostic() {
        let mut s = tiny();
        s.gdp[1] = 0.0;
        let d = validate_scenario(&s);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].severity, Severity::Violation);
        assert_eq!(d[0].year, Some(2021));
    }

    #[test]
    fn implausible_emissions_warn() {
        let mut s = tiny();
        s.emissions[0] = 500.0;
        let d = validate_scenario(&s);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].severity, Severity::Warning);
    }

    #[test]
    fn negative_emissions_are_valid() {
        let mut s = tiny();
        s.emissions[1] = -15.0;
        assert!(validate_scenario(&s).is_empty());
    }

    #[test]
    fn load_preserves_row_order_and_values() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        fs::write(&p, format!("{HEADER}1999,3.25,1,2,0\n2000,-1.5,1,2,0.1\n")).unwrap();
        let s = load_scenario(&p).unwrap();
        assert_eq!(s.name, "x");
        assert_eq!(s.years, vec![1999, 2000]);
        assert_eq!(s.emissions, vec![3.25, -1.5]);
    }

    #[test]
    fn unknown_bundle() {
        assert!(matches!(bundled("nope"), Err(Error::UnknownBundle(_))));
    }
}
