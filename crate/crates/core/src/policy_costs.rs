//! Mitigation cost paths for the two temperature targets, carbon-tax
//! efficacy, and the cost of subsidizing negative emissions.

use std::fmt;
use std::fmt::Write as _;
use std::io::Read;
use std::ops::RangeInclusive;
use std::path::Path;
use std::str::FromStr;

use crate::csv_rows::read_rows;
use crate::error::{Error, Result};
use crate::series::AnnualSeries;

pub const COST_START_YEAR: i32 = 2020;
pub const COST_END_YEAR: i32 = 2100;
const ANCHOR_YEAR: i32 = 2030;

/// Ex-ante efficacy range, % reduction per USD/tCO₂.
pub const EFFICACY_RANGE: (f64, f64) = (0.04, 1.15);

const BUNDLED_TAX_RECORDS: &str = include_str!("../data/tax_records.csv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Target {
    OnePointFive,
    Two,
}

impl Target {
    pub const ALL: [Target; 2] = [Target::Two, Target::OnePointFive];

    /// Temperature ceiling, °C.
    pub fn ceiling(self) -> f64 {
        match self {
            Target::OnePointFive => 1.5,
            Target::Two => 2.0,
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Target::OnePointFive => "1.5",
            Target::Two => "2.0",
        })
    }
}

impl FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "1.5" | "15" | "p15" => Ok(Target::OnePointFive),
            "2" | "2.0" | "20" | "p20" => Ok(Target::Two),
            other => Err(Error::InvalidParameter(format!(
                "unknown target `{other}`; expected 1.5 or 2.0"
            ))),
        }
    }
}

/// Two-anchor power-law cost curve `c(t) = cost_2100·((t − 2020)/80)^k`,
/// with `k` chosen so the curve passes through `cost_2030`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostModel {
    pub target: Target,
    pub cost_2030: f64,
    pub cost_2100: f64,
    pub shape_exponent: f64,
    /// Spread across models at 2100, % GDP.
    pub sd_across_models: f64,
    /// Scales the whole path, e.g. for second-best implementation.
    pub multiplier: f64,
}

impl CostModel {
    pub fn new(target: Target, cost_2030: f64, cost_2100: f64, sd_across_models: f64) -> Result<Self> {
        if !(cost_2030 > 0.0 && cost_2100 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "cost anchors must be > 0, got {cost_2030} and {cost_2100}"
            )));
        }
        if cost_2030 > cost_2100 {
            return Err(Error::InvalidParameter(format!(
                "2030 cost {cost_2030} exceeds 2100 cost {cost_2100}"
            )));
        }
        if !(sd_across_models >= 0.0) {
            return Err(Error::InvalidParameter("sd_across_models must be ≥ 0".into()));
        }
        let x = f64::from(ANCHOR_YEAR - COST_START_YEAR) / f64::from(COST_END_YEAR - COST_START_YEAR);
        Ok(Self {
            target,
            cost_2030,
            cost_2100,
            shape_exponent: (cost_2030 / cost_2100).ln() / x.ln(),
            sd_across_models,
            multiplier: 1.0,
        })
    }

    pub fn default_for(target: Target) -> Self {
        match target {
            Target::Two => Self::new(target, 1.0, 3.9, 1.0),
            Target::OnePointFive => Self::new(target, 2.5, 5.6, 2.0),
        }
        .expect("default anchors are consistent")
    }

    pub fn with_multiplier(self, multiplier: f64) -> Result<Self> {
        if !(multiplier >= 0.0 && multiplier.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "cost multiplier must be ≥ 0, got {multiplier}"
            )));
        }
        Ok(Self { multiplier, ..self })
    }

    /// Cross-model spread relative to the 2100 cost.
    pub fn relative_sd(&self) -> f64 {
        self.sd_across_models / self.cost_2100
    }

    /// Cost without the multiplier, % GDP.
    pub fn unit_cost(&self, year: i32) -> Result<f64> {
        if !(COST_START_YEAR..=COST_END_YEAR).contains(&year) {
            return Err(Error::Domain(format!(
                "cost paths cover {COST_START_YEAR}–{COST_END_YEAR}, got {year}"
            )));
        }
        if year == COST_START_YEAR {
            return Ok(0.0);
        }
        let x = f64::from(year - COST_START_YEAR) / f64::from(COST_END_YEAR - COST_START_YEAR);
        Ok(self.cost_2100 * x.powf(self.shape_exponent))
    }

    pub fn cost(&self, year: i32) -> Result<f64> {
        Ok(self.unit_cost(year)? * self.multiplier)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostPath {
    pub central: AnnualSeries,
    pub lo: AnnualSeries,
    pub hi: AnnualSeries,
}

impl CostPath {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("year,cost_pct_gdp,lo,hi\n");
        for (i, year) in self.central.years().enumerate() {
            let _ = writeln!(
                out,
                "{year},{:.6},{:.6},{:.6}",
                self.central.values[i], self.lo.values[i], self.hi.values[i]
            );
        }
        out
    }
}

/// Cost per year with a ±one-spread band that scales with the path.
pub fn cost_path(m: &CostModel, years: RangeInclusive<i32>) -> Result<CostPath> {
    let start = *years.start();
    let central: Vec<f64> = years.map(|y| m.cost(y)).collect::<Result<_>>()?;
    let r = m.relative_sd();
    Ok(CostPath {
        lo: AnnualSeries::new(start, central.iter().map(|c| c * (1.0 - r)).collect()),
        hi: AnnualSeries::new(start, central.iter().map(|c| c * (1.0 + r)).collect()),
        central: AnnualSeries::new(start, central),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaxKind {
    ExAnte,
    ExPost,
}

impl TaxKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TaxKind::ExAnte => "ex_ante",
            TaxKind::ExPost => "ex_post",
        }
    }
}

impl FromStr for TaxKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ex_ante" => Ok(TaxKind::ExAnte),
            "ex_post" => Ok(TaxKind::ExPost),
            other => Err(Error::InvalidParameter(format!("unknown record kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaxRecord {
    pub source: String,
    pub kind: TaxKind,
    pub price_usd_per_tco2: f64,
    pub reduction_pct_2030: f64,
}

impl TaxRecord {
    pub fn efficacy(&self) -> Result<f64> {
        tax_efficacy(self.reduction_pct_2030, self.price_usd_per_tco2)
    }
}

/// % emission reduction per USD/tCO₂ of carbon price.
pub fn tax_efficacy(reduction_pct_2030: f64, price_usd: f64) -> Result<f64> {
    if !(price_usd > 0.0) {
        return Err(Error::Domain(format!("carbon price must be > 0, got {price_usd}")));
    }
    Ok(reduction_pct_2030 / price_usd)
}

pub fn parse_tax_records(reader: impl Read) -> Result<Vec<TaxRecord>> {
    let cols = ["source", "kind", "price_usd_per_tco2", "reduction_pct_2030"];
    let ([i_src, i_kind, i_price, i_red], rows) = read_rows(reader, cols)?;
    rows.iter()
        .map(|row| {
            let kind_raw = row.text(i_kind, cols[1])?;
            let kind = kind_raw.parse().map_err(|_| Error::Parse {
                row: row.line,
                column: cols[1].into(),
                message: format!("`{kind_raw}` is not ex_ante or ex_post"),
            })?;
            let price = row.number(i_price, cols[2])?;
            if !(price > 0.0) {
                return Err(Error::Parse {
                    row: row.line,
                    column: cols[2].into(),
                    message: format!("price must be > 0, got {price}"),
                });
            }
            Ok(TaxRecord {
                source: row.text(i_src, cols[0])?.to_string(),
                kind,
                price_usd_per_tco2: price,
                reduction_pct_2030: row.number(i_red, cols[3])?,
            })
        })
        .collect()
}

pub fn load_tax_records(path: impl AsRef<Path>) -> Result<Vec<TaxRecord>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_tax_records(file)
}

/// Synthetic reconstruction of the model and study results: eight ex-ante
/// model runs and four ex-post studies.
pub fn bundled_tax_records() -> Vec<TaxRecord> {
    parse_tax_records(BUNDLED_TAX_RECORDS.as_bytes()).expect("bundled records parse")
}

#[derive(Debug, Clone, PartialEq)]
pub struct EfficacyReport {
    /// Records outside [`EFFICACY_RANGE`], with their efficacy.
    pub flagged: Vec<(String, f64)>,
    pub min: Option<f64>,
    pub max: Option<f64>,
    /// `max / min`; infinite when the smallest efficacy is zero.
    pub spread_ratio: Option<f64>,
}

pub fn efficacy_range_check(records: &[TaxRecord]) -> EfficacyReport {
    const SLACK: f64 = 1e-12;
    let values: Vec<(String, f64)> = records
        .iter()
        .filter_map(|r| r.efficacy().ok().map(|e| (r.source.clone(), e)))
        .collect();
    let min = values.iter().map(|v| v.1).reduce(f64::min);
    let max = values.iter().map(|v| v.1).reduce(f64::max);
    let flagged = values
        .into_iter()
        .filter(|(_, e)| *e < EFFICACY_RANGE.0 - SLACK || *e > EFFICACY_RANGE.1 + SLACK)
        .collect();
    let spread_ratio = min
        .zip(max)
        .map(|(lo, hi)| if lo > 0.0 { hi / lo } else { f64::INFINITY });
    EfficacyReport {
        flagged,
        min,
        max,
        spread_ratio,
    }
}

pub fn efficacy_csv(records: &[TaxRecord]) -> Result<String> {
    let mut out = String::from("source,kind,price_usd_per_tco2,reduction_pct_2030,efficacy,outside_ex_ante_range\n");
    let report = efficacy_range_check(records);
    for r in records {
        let e = r.efficacy()?;
        let flagged = report.flagged.iter().any(|(s, _)| *s == r.source);
        let _ = writeln!(
            out,
            "{},{},{},{},{:.6},{}",
            r.source,
            r.kind.as_str(),
            r.price_usd_per_tco2,
            r.reduction_pct_2030,
            e,
            flagged
        );
    }
    Ok(out)
}

/// Subsidy for gross negative emissions as % of GDP. Emissions in GtCO₂/yr,
/// price in USD/tCO₂, GDP in trillion USD.
pub fn subsidy_share(gross_negative_emissions: f64, price_usd: f64, gdp: f64) -> Result<f64> {
    if !(gross_negative_emissions >= 0.0) {
        return Err(Error::Domain(format!(
            "gross negative emissions must be ≥ 0, got {gross_negative_emissions}"
        )));
    }
    if !(gdp > 0.0) {
        return Err(Error::Domain(format!("GDP must be > 0, got {gdp}")));
    }
    Ok(100.0 * gross_negative_emissions * 1e9 * price_usd / (gdp * 1e12))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn default_cost_anchors() {
        let two = CostModel::default_for(Target::Two);
        let one5 = CostModel::default_for(Target::OnePointFive);
        assert_abs_diff_eq!(two.cost(2100).unwrap(), 3.9, epsilon = 1e-12);
        assert_abs_diff_eq!(one5.cost(2100).unwrap(), 5.6, epsilon = 1e-12);
        assert_abs_diff_eq!(two.cost(2030).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(one5.cost(2030).unwrap(), 2.5, epsilon = 1e-12);
        assert_eq!(two.cost(2020).unwrap(), 0.0);
        assert_eq!(one5.cost(2020).unwrap(), 0.0);
    }

    #[test]
    fn exponent_matches_log_ratio() {
        let m = CostModel::default_for(Target::Two);
        assert_abs_diff_eq!(m.shape_exponent, (3.9f64).ln() / 8f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn inconsistent_anchors_rejected() {
        assert!(CostModel::new(Target::Two, 5.0, 3.9, 1.0).is_err());
        assert!(CostModel::new(Target::Two, 0.0, 3.9, 1.0).is_err());
        assert!(CostModel::new(Target::Two, 1.0, 3.9, -1.0).is_err());
    }

    #[test]
    fn years_outside_range_rejected() {
        let m = CostModel::default_for(Target::Two);
        assert!(cost_path(&m, 2019..=2030).is_err());
        assert!(cost_path(&m, 2090..=2101).is_err());
    }

    #[test]
    fn flat_anchors_give_a_step() {
        let m = CostModel::new(Target::Two, 2.0, 2.0, 0.0).unwrap();
        assert_eq!(m.cost(2020).unwrap(), 0.0);
        assert_eq!(m.cost(2021).unwrap(), 2.0);
        assert_eq!(m.cost(2100).unwrap(), 2.0);
    }

    #[test]
    fn multiplier_scales_path_and_band() {
        let m = CostModel::default_for(Target::Two).with_multiplier(2.0).unwrap();
        let p = cost_path(&m, 2020..=2100).unwrap();
        assert_abs_diff_eq!(p.central.get(2100).unwrap(), 7.8, epsilon = 1e-12);
        assert_abs_diff_eq!(p.hi.get(2100).unwrap() - p.lo.get(2100).unwrap(), 4.0, epsilon = 1e-12);
        assert!(CostModel::default_for(Target::Two).with_multiplier(-1.0).is_err());
    }

    #[test]
    fn deeper_target_costs_more_every_year() {
        let two = cost_path(&CostModel::default_for(Target::Two), 2020..=2100).unwrap();
        let one5 = cost_path(&CostModel::default_for(Target::OnePointFive), 2020..=2100).unwrap();
        for (a, b) in one5.central.values.iter().zip(&two.central.values) {
            assert!(a >= b);
        }
        for w in two.central.values.windows(2) {
            assert!(w[1] >= w[0]);
        }
    }

    #[test]
    fn efficacy_examples() {
        assert_eq!(tax_efficacy(46.0, 40.0).unwrap(), 1.15);
        assert_eq!(tax_efficacy(0.0, 50.0).unwrap(), 0.0);
        assert_eq!(tax_efficacy(4.0, 100.0).unwrap(), 0.04);
        assert!(tax_efficacy(10.0, 0.0).is_err());
        assert!(tax_efficacy(10.0, -5.0).is_err());
    }

    #[test]
    fn bundled_ex_ante_records_span_the_range() {
        let records = bundled_tax_records();
        let ex_ante: Vec<_> = records.iter().filter(|r| r.kind == TaxKind::ExAnte).cloned().collect();
        assert_eq!(ex_ante.len(), 8);
        let report = efficacy_range_check(&ex_ante);
        assert!(report.flagged.is_empty());
        assert_abs_diff_eq!(report.spread_ratio.unwrap(), 1.15 / 0.04, epsilon = 1e-9);
    }

    #[test]
    fn bundled_ex_post_records() {
        let records = bundled_tax_records();
        let effs: Vec<f64> = records
            .iter()
            .filter(|r| r.kind == TaxKind::ExPost)
            .map(|r| r.efficacy().unwrap())
            .collect();
        assert_eq!(effs.len(), 4);
        assert_eq!(effs.iter().filter(|&&e| e > EFFICACY_RANGE.1).count(), 1);
        assert_eq!(effs.iter().filter(|&&e| e == 0.0).count(), 1);
        assert_eq!(effs.iter().filter(|&&e| e < 0.1).count(), 2);
    }

    #[test]
    fn range_check_flags_and_empty() {
        let r = TaxRecord {
            source: "x".into(),
            kind: TaxKind::ExPost,
            price_usd_per_tco2: 10.0,
            reduction_pct_2030: 20.0,
        };
        let report = efficacy_range_check(&[r]);
        assert_eq!(report.flagged, vec![("x".to_string(), 2.0)]);
        let empty = efficacy_range_check(&[]);
        assert!(empty.flagged.is_empty());
        assert_eq!(empty.spread_ratio, None);
    }

    #[test]
    fn tax_parser_rejects_bad_rows() {
        let bad_kind = "source,kind,price_usd_per_tco2,reduction_pct_2030\na,guess,10,1\n";
        assert!(matches!(
            parse_tax_records(bad_kind.as_bytes()),
            Err(Error::Parse { row: 2, .. })
        ));
        let bad_price = "source,kind,price_usd_per_tco2,reduction_pct_2030\na,ex_ante,0,1\n";
        assert!(parse_tax_records(bad_price.as_bytes()).is_err());
    }

    #[test]
    fn subsidy_examples() {
        assert_eq!(subsidy_share(0.0, 300.0, 100.0).unwrap(), 0.0);
        assert_abs_diff_eq!(subsidy_share(20.0, 500.0, 250.0).unwrap(), 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(subsidy_share(20.0, 500.0, 125.0).unwrap(), 8.0, epsilon = 1e-12);
        assert!(subsidy_share(-1.0, 500.0, 125.0).is_err());
    }

    #[test]
    fn target_parsing() {
        assert_eq!("1.5".parse::<Target>().unwrap(), Target::OnePointFive);
        assert_eq!("2".parse::<Target>().unwrap(), Target::Two);
        assert!("3".parse::<Target>().is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn doubling_price_halves_efficacy(red in 0.0f64..100.0, price in 0.1f64..1000.0) {
                let a = tax_efficacy(red, price).unwrap();
                let b = tax_efficacy(red, 2.0 * price).unwrap();
                prop_assert!((a - 2.0 * b).abs() <= 1e-12 * a.abs().max(1.0));
            }

            #[test]
            fn subsidy_is_linear(e in 0.0f64..50.0, p in 0.0f64..2000.0, g in 10.0f64..1000.0, k in 0.1f64..10.0) {
                let base = subsidy_share(e, p, g).unwrap();
                let tol = 1e-9 * base.max(1.0) * k.max(1.0);
                prop_assert!((subsidy_share(k * e, p, g).unwrap() - k * base).abs() <= tol);
                prop_assert!((subsidy_share(e, k * p, g).unwrap() - k * base).abs() <= tol);
                prop_assert!((subsidy_share(e, p, k * g).unwrap() - base / k).abs() <= tol);
            }

            #[test]
            fn cost_paths_start_at_zero_and_rise(c30 in 0.1f64..5.0, extra in 0.0f64..8.0, sd in 0.0f64..3.0) {
                let m = CostModel::new(Target::Two, c30, c30 + extra, sd).unwrap();
                let p = cost_path(&m, 2020..=2100).unwrap();
                prop_assert_eq!(p.central.values[0], 0.0);
                for w in p.central.values.windows(2) {
                    prop_assert!(w[1] >= w[0]);
                }
                for i in 0..p.central.len() {
                    prop_assert!(p.lo.values[i] <= p.central.values[i] && p.central.values[i] <= p.hi.values[i]);
                }
            }
        }
    }
}
