use crate::error::{Error, Result};
use crate::scenario_io::EmissionScenario;

use super::{ClimateModel, ClimateState};

#[derive(Debug, Clone, Copy)]
pub struct InversionOptions {
    /// Last year left at baseline; cuts ramp in from the following year.
    pub start_year: i32,
    /// Lowest annual emissions the cuts may reach, GtCO₂/yr.
    pub floor: f64,
    /// Largest ramp rate tried, as a fraction of start-year emissions per year.
    pub max_rate: f64,
    /// Accepted peaks lie in `[ceiling − tolerance, ceiling]`.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for InversionOptions {
    fn default() -> Self {
        Self {
            start_year: 2025,
            floor: -20.0,
            max_rate: 0.30,
            tolerance: 0.05,
            max_iterations: 200,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Inversion {
    pub scenario: EmissionScenario,
    /// Ramp rate used; zero when the baseline already stays below the ceiling.
    pub rate: f64,
    pub peak: f64,
}

/// Emissions after applying a linear ramp of cuts at `rate` to `base`.
pub fn ramp_emissions(base: &EmissionScenario, rate: f64, opts: &InversionOptions) -> Vec<f64> {
    let anchor = base
        .index_of(opts.start_year)
        .map(|i| base.emissions[i])
        .unwrap_or(base.emissions[0]);
    base.years
        .iter()
        .zip(&base.emissions)
        .map(|(&year, &e)| {
            if year <= opts.start_year {
                e
            } else {
                let cut = e - rate * f64::from(year - opts.start_year) * anchor;
                cut.max(opts.floor.min(e))
            }
        })
        .collect()
}

/// Finds a modified emission path whose peak warming stays at or just below
/// `ceiling`. The family of candidates is [`ramp_emissions`]; its ramp rate is
/// bisected, since a faster ramp never warms more.
pub fn invert_emissions(
    base: &EmissionScenario,
    ceiling: f64,
    model: &ClimateModel,
    init: &ClimateState,
    opts: &InversionOptions,
) -> Result<Inversion> {
    let peak_at = |rate: f64| -> Result<(Vec<f64>, f64)> {
        let e = ramp_emissions(base, rate, opts);
        let path = model.temperature_path(&base.with_emissions(base.name.clone(), e.clone()), init)?;
        Ok((e, path.peak()))
    };
    let done = |rate: f64, e: Vec<f64>, peak: f64| Inversion {
        scenario: base.with_emissions(format!("{}_below_{ceiling}", base.name), e),
        rate,
        peak,
    };

    let (e0, peak0) = peak_at(0.0)?;
    if peak0 <= ceiling {
        return Ok(done(0.0, e0, peak0));
    }
    let (e_max, peak_max) = peak_at(opts.max_rate)?;
    if peak_max > ceiling {
        return Err(Error::Infeasible {
            ceiling,
            min_peak: peak_max,
        });
    }

    let (mut lo, mut hi) = (0.0, opts.max_rate);
    let mut best = (opts.max_rate, e_max, peak_max);
    for _ in 0..opts.max_iterations {
        if best.2 >= ceiling - opts.tolerance {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let (e, peak) = peak_at(mid)?;
        if peak > ceiling {
            lo = mid;
        } else {
            hi = mid;
            best = (mid, e, peak);
        }
    }
    Ok(done(best.0, best.1, best.2))
}
