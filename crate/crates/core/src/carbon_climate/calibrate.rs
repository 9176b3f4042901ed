use crate::error::{Error, Result};
use crate::scenario_io::EmissionScenario;

use super::{ClimateModel, ClimateState};

/// A target temperature for one scenario in one year.
#[derive(Debug, Clone, Copy)]
pub struct Anchor<'a> {
    pub scenario: &'a EmissionScenario,
    pub year: i32,
    pub target: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct CalibrationOptions {
    pub ecs_bounds: (f64, f64),
    pub lag_bounds: (f64, f64),
    /// Largest acceptable |model − target| for any anchor, °C.
    pub tolerance: f64,
    /// Stop once the summed squared error falls below this.
    pub objective_target: f64,
    pub max_sweeps: usize,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self {
            ecs_bounds: (0.5, 10.0),
            lag_bounds: (1.0, 200.0),
            tolerance: 0.1,
            objective_target: 1e-10,
            max_sweeps: 5000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Calibration {
    pub model: ClimateModel,
    /// Model minus target, per anchor.
    pub residuals: Vec<f64>,
    pub sweeps: usize,
}

/// Fits `ecs` and `lag_years` of `start` to the anchors by coordinate search:
/// alternate exact golden-section minimization of the squared anchor error
/// along each parameter, holding the other and the carbon-cycle structure
/// fixed. Each anchor scenario is run from `init`.
pub fn calibrate(
    anchors: &[Anchor<'_>],
    start: &ClimateModel,
    init: &ClimateState,
    opts: &CalibrationOptions,
) -> Result<Calibration> {
    if anchors.is_empty() {
        return Err(Error::InvalidParameter("calibration needs at least one anchor".into()));
    }
    for a in anchors {
        a.scenario.index_of(a.year).ok_or_else(|| {
            Error::InvalidParameter(format!("anchor year {} outside scenario `{}`", a.year, a.scenario.name))
        })?;
        if a.scenario.first_year() != init.year {
            return Err(Error::Misaligned(format!(
                "scenario `{}` starts in {} but the initial state is for {}",
                a.scenario.name,
                a.scenario.first_year(),
                init.year
            )));
        }
    }

    let residuals = |ecs: f64, lag: f64| -> Vec<f64> {
        let mut m = *start;
        m.climate.ecs = ecs;
        m.climate.lag_years = lag;
        anchors
            .iter()
            .map(|a| {
                let path = m.run_emissions(&a.scenario.emissions, &a.scenario.exo_forcing, init);
                path.temperature_at(a.year).expect("anchor year checked") - a.target
            })
            .collect()
    };
    let objective = |ecs: f64, lag: f64| residuals(ecs, lag).iter().map(|r| r * r).sum::<f64>();

    let mut ecs = start.climate.ecs.clamp(opts.ecs_bounds.0, opts.ecs_bounds.1);
    let mut lag = start.climate.lag_years.clamp(opts.lag_bounds.0, opts.lag_bounds.1);
    let mut best = objective(ecs, lag);
    let mut sweeps = 0;

    while best > opts.objective_target && sweeps < opts.max_sweeps {
        sweeps += 1;
        let before = best;

        let e = golden_section(|x| objective(x, lag), opts.ecs_bounds);
        let fe = objective(e, lag);
        if fe < best {
            ecs = e;
            best = fe;
        }
        let l = golden_section(|x| objective(ecs, x), opts.lag_bounds);
        let fl = objective(ecs, l);
        if fl < best {
            lag = l;
            best = fl;
        }

        if before - best <= f64::EPSILON * before {
            break;
        }
    }

    let mut model = *start;
    model.climate.ecs = ecs;
    model.climate.lag_years = lag;
    let residuals = residuals(ecs, lag);
    let max_residual = residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    if max_residual > opts.tolerance {
        return Err(Error::NonConvergence {
            iterations: sweeps,
            best: Box::new((model.carbon, model.climate)),
            residuals,
            max_residual,
        });
    }
    Ok(Calibration {
        model,
        residuals,
        sweeps,
    })
}

/// Minimizer of a unimodal `f` on `[lo, hi]`.
fn golden_section(f: impl Fn(f64) -> f64, (mut lo, mut hi): (f64, f64)) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > 1e-10 * (1.0 + lo.abs() + hi.abs()) {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}
