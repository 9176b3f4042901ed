//! Kaya identity: emissions = population × (GDP/population) × (energy/GDP)
//! × (CO₂/energy).
//!
//! Growth rates are average annual rates in percent per year under
//! continuous compounding, `100·ln(v_end/v_start)/(end − start)`, which makes
//! the identity exactly additive in the component rates.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::scenario_io::{EmissionScenario, COL_ENERGY};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Period {
    pub start: i32,
    pub end: i32,
}

impl Period {
    pub fn new(start: i32, end: i32) -> Result<Self> {
        if start >= end {
            return Err(Error::InvalidParameter(format!(
                "period start {start} must precede end {end}"
            )));
        }
        Ok(Self { start, end })
    }

    pub fn span(&self) -> f64 {
        f64::from(self.end - self.start)
    }
}

impl std::fmt::Display for Period {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}-{}", self.start, self.end)
    }
}

impl std::str::FromStr for Period {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("period `{s}` is not START-END"));
        let (a, b) = s.split_once('-').ok_or_else(bad)?;
        Period::new(
            a.trim().parse().map_err(|_| bad())?,
            b.trim().parse().map_err(|_| bad())?,
        )
    }
}

/// The three reporting periods of the historical decomposition table.
pub const TABLE_PERIODS: [Period; 3] = [
    Period { start: 1965, end: 1999 },
    Period { start: 1999, end: 2011 },
    Period { start: 2011, end: 2021 },
];

/// Component growth rates in %/yr, continuous compounding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KayaRates {
    pub population_growth: f64,
    pub income_per_capita_growth: f64,
    pub energy_intensity_growth: f64,
    pub carbon_intensity_growth: f64,
    pub emissions_growth: f64,
    pub period: Period,
}

impl KayaRates {
    /// Rates whose emissions growth is the exact sum of the components.
    pub fn from_components(
        population: f64,
        income_per_capita: f64,
        energy_intensity: f64,
        carbon_intensity: f64,
        period: Period,
    ) -> Self {
        Self {
            population_growth: population,
            income_per_capita_growth: income_per_capita,
            energy_intensity_growth: energy_intensity,
            carbon_intensity_growth: carbon_intensity,
            emissions_growth: population + income_per_capita + energy_intensity + carbon_intensity,
            period,
        }
    }

    pub fn component_sum(&self) -> f64 {
        self.population_growth
            + self.income_per_capita_growth
            + self.energy_intensity_growth
            + self.carbon_intensity_growth
    }

    /// The same rates expressed as geometric (annually compounded) rates.
    /// These are not additive; use only for display.
    pub fn to_geometric(&self) -> Self {
        Self {
            population_growth: continuous_to_geometric(self.population_growth),
            income_per_capita_growth: continuous_to_geometric(self.income_per_capita_growth),
            energy_intensity_growth: continuous_to_geometric(self.energy_intensity_growth),
            carbon_intensity_growth: continuous_to_geometric(self.carbon_intensity_growth),
            emissions_growth: continuous_to_geometric(self.emissions_growth),
            period: self.period,
        }
    }
}

pub fn continuous_to_geometric(pct: f64) -> f64 {
    100.0 * ((pct / 100.0).exp() - 1.0)
}

pub fn geometric_to_continuous(pct: f64) -> f64 {
    100.0 * (pct / 100.0).ln_1p()
}

/// Average annual growth of `values` (indexed from `first_year`) over
/// `period`, in %/yr.
pub fn growth_rate(first_year: i32, values: &[f64], period: Period) -> Result<f64> {
    let at = |year: i32| -> Result<f64> {
        let idx = usize::try_from(year - first_year)
            .ok()
            .filter(|&i| i < values.len())
            .ok_or_else(|| Error::Domain(format!("series does not cover year {year} of period {period}")))?;
        let v = values[idx];
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Domain(format!(
                "growth rate needs positive values; got {v} in {year}"
            )));
        }
        Ok(v)
    };
    let (v0, v1) = (at(period.start)?, at(period.end)?);
    Ok(100.0 * (v1 / v0).ln() / period.span())
}

pub fn decompose(s: &EmissionScenario, period: Period) -> Result<KayaRates> {
    let energy = s
        .energy
        .as_ref()
        .ok_or_else(|| Error::MissingColumn(COL_ENERGY.to_string()))?;
    let first = s.first_year();
    let ratio = |num: &[f64], den: &[f64]| -> Vec<f64> { num.iter().zip(den).map(|(a, b)| a / b).collect() };

    let population = growth_rate(first, &s.population, period)?;
    let income = growth_rate(first, &ratio(&s.gdp, &s.population), period)?;
    let energy_intensity = growth_rate(first, &ratio(energy, &s.gdp), period)?;
    let carbon_intensity = growth_rate(first, &ratio(&s.emissions, energy), period)?;
    let emissions = growth_rate(first, &s.emissions, period)?;

    Ok(KayaRates {
        population_growth: population,
        income_per_capita_growth: income,
        energy_intensity_growth: energy_intensity,
        carbon_intensity_growth: carbon_intensity,
        emissions_growth: emissions,
        period,
    })
}

/// `period,population,income_per_capita,energy_intensity,carbon_intensity,emissions`
pub fn rates_csv(rates: &[KayaRates]) -> String {
    let mut out = String::from("period,population,income_per_capita,energy_intensity,carbon_intensity,emissions\n");
    for r in rates {
        let _ = writeln!(
            out,
            "{},{:.6},{:.6},{:.6},{:.6},{:.6}",
            r.period,
            r.population_growth,
            r.income_per_capita_growth,
            r.energy_intensity_growth,
            r.carbon_intensity_growth,
            r.emissions_growth
        );
    }
    out
}

/// Level of each Kaya factor per year:
/// `year,emissions_gtco2,population_million,income_usd_per_capita,energy_intensity_mj_per_usd,carbon_intensity_kg_per_mj`
pub fn components_csv(s: &EmissionScenario) -> Result<String> {
    let energy = s
        .energy
        .as_ref()
        .ok_or_else(|| Error::MissingColumn(COL_ENERGY.to_string()))?;
    let mut out = String::from(
        "year,emissions_gtco2,population_million,income_usd_per_capita,energy_intensity_mj_per_usd,carbon_intensity_kg_per_mj\n",
    );
    for (i, &e) in energy.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{:.6},{:.6},{:.6},{:.6},{:.6}",
            s.years[i],
            s.emissions[i],
            s.population[i],
            1e6 * s.gdp[i] / s.population[i],
            e / s.gdp[i],
            s.emissions[i] / e
        );
    }
    Ok(out)
}

/// Decline (negative %/yr) required of energy intensity plus carbon intensity
/// combined, for emissions to grow at `target_emissions_growth` while the
/// economy grows at `gdp_growth`.
pub fn required_intensity_decline(target_emissions_growth: f64, gdp_growth: f64) -> f64 {
    target_emissions_growth - gdp_growth
}

/// Extends `base` through `horizon` at the constant rates.
///
/// Population grows at the population rate, GDP at population + income,
/// energy (when present) at GDP + energy intensity, and emissions at
/// `rates.emissions_growth`. Non-CO₂ forcing is held at its last value.
pub fn project(base: &EmissionScenario, rates: &KayaRates, horizon: i32) -> Result<EmissionScenario> {
    let last = base.last_year();
    if horizon <= last {
        return Err(Error::InvalidParameter(format!(
            "horizon {horizon} must be after the last scenario year {last}"
        )));
    }
    let idx = base.len() - 1;
    let gdp_rate = rates.population_growth + rates.income_per_capita_growth;
    let energy_rate = gdp_rate + rates.energy_intensity_growth;

    let mut out = base.clone();
    for year in last + 1..=horizon {
        let dt = f64::from(year - last);
        let grow = |v: f64, pct: f64| v * (pct / 100.0 * dt).exp();
        out.years.push(year);
        out.population.push(grow(base.population[idx], rates.population_growth));
        out.gdp.push(grow(base.gdp[idx], gdp_rate));
        out.emissions.push(grow(base.emissions[idx], rates.emissions_growth));
        out.exo_forcing.push(base.exo_forcing[idx]);
        if let (Some(e), Some(src)) = (out.energy.as_mut(), base.energy.as_ref()) {
            e.push(grow(src[idx], energy_rate));
        }
    }
    Ok(out)
}
