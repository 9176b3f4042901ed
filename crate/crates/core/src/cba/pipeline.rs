use std::sync::OnceLock;

use crate::carbon_climate::{calibrate, Anchor, Calibration, CalibrationOptions, ClimateModel, ClimateState};
use crate::error::{Error, Result};
use crate::impacts::{coverage_adjust, default_damage, DamageFunction, ImpactFunction, UncertaintyBand};
use crate::policy_costs::{cost_path, CostModel, Target};
use crate::scenario_io::{bundled, EmissionScenario, PARIS15, PARIS20, SSP370_LIKE, SSP585_LIKE};
use crate::series::AnnualSeries;

use super::{net_benefit, npv, Banded, CbaResult};

/// Bundled scenario, year and warming (°C) the climate model is fitted to.
pub fn calibration_anchors() -> [(&'static str, i32, f64); 2] {
    [(SSP585_LIKE, 2100, 4.8), (SSP370_LIKE, 2100, 3.9)]
}

/// Default climate model fitted to [`calibration_anchors`], computed once
/// per process.
pub fn calibrated_model() -> Result<Calibration> {
    static CACHE: OnceLock<Calibration> = OnceLock::new();
    if let Some(c) = CACHE.get() {
        return Ok(c.clone());
    }
    let start = ClimateModel::default();
    let init = start.default_initial_state();
    let scenarios: Vec<(EmissionScenario, i32, f64)> = calibration_anchors()
        .into_iter()
        .map(|(name, year, target)| Ok((bundled(name)?, year, target)))
        .collect::<Result<_>>()?;
    let anchors: Vec<Anchor<'_>> = scenarios
        .iter()
        .map(|(s, year, target)| Anchor {
            scenario: s,
            year: *year,
            target: *target,
        })
        .collect();
    let cal = calibrate(&anchors, &start, &init, &CalibrationOptions::default())?;
    Ok(CACHE.get_or_init(|| cal).clone())
}

/// Everything needed to evaluate one policy against one baseline.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub model: ClimateModel,
    pub init: ClimateState,
    pub baseline: EmissionScenario,
    pub policy: EmissionScenario,
    pub damage: ImpactFunction,
    pub band: UncertaintyBand,
    pub cost: CostModel,
    /// Share of damages missing from the estimates; 0 leaves them as is.
    pub coverage_fraction: f64,
}

impl Pipeline {
    pub fn policy_scenario_name(target: Target) -> &'static str {
        match target {
            Target::OnePointFive => PARIS15,
            Target::Two => PARIS20,
        }
    }

    /// Calibrated climate, default damage and cost model, and the bundled
    /// policy path for `target` against `baseline`.
    pub fn standard(target: Target, baseline: EmissionScenario) -> Result<Self> {
        let model = calibrated_model()?.model;
        Self::new(
            model,
            model.default_initial_state(),
            baseline,
            bundled(Self::policy_scenario_name(target))?,
            default_damage(),
            CostModel::default_for(target),
        )
    }

    pub fn new(
        model: ClimateModel,
        init: ClimateState,
        baseline: EmissionScenario,
        policy: EmissionScenario,
        damage: ImpactFunction,
        cost: CostModel,
    ) -> Result<Self> {
        if baseline.years != policy.years {
            return Err(Error::Misaligned(format!(
                "baseline `{}` and policy `{}` cover different years",
                baseline.name, policy.name
            )));
        }
        if baseline.is_empty() {
            return Err(Error::InvalidScenario("empty baseline".into()));
        }
        Ok(Self {
            model,
            init,
            baseline,
            policy,
            damage,
            band: UncertaintyBand::default(),
            cost,
            coverage_fraction: 0.0,
        })
    }

    pub fn start(&self) -> i32 {
        self.baseline.first_year()
    }

    pub fn gdp(&self) -> AnnualSeries {
        self.baseline.gdp_series()
    }

    /// Cost per year before the multiplier is applied.
    pub(crate) fn unit_costs(&self) -> Result<Vec<f64>> {
        self.baseline.years.iter().map(|&y| self.cost.unit_cost(y)).collect()
    }

    /// Baseline and policy damage per year at the given climate sensitivity,
    /// before any uncertainty factor.
    pub(crate) fn damages(&self, ecs: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        let model = self.model.with_ecs(ecs);
        let tb = model.temperature_path(&self.baseline, &self.init)?;
        let tp = model.temperature_path(&self.policy, &self.init)?;
        let d = |t: &[f64]| t.iter().map(|&x| self.damage.damage(x)).collect::<Vec<_>>();
        Ok((d(&tb.temperature), d(&tp.temperature)))
    }

    /// Avoided damage with a damage scale factor and the coverage adjustment.
    pub(crate) fn benefit_value(&self, baseline_damage: f64, policy_damage: f64, factor: f64) -> Result<f64> {
        coverage_adjust(factor * (baseline_damage - policy_damage), self.coverage_fraction)
    }

    pub(crate) fn scaled_damage(&self, damage: f64, factor: f64) -> Result<f64> {
        coverage_adjust(factor * damage, self.coverage_fraction)
    }

    /// Central benefit and cost paths with their one-spread bands.
    pub fn deterministic(&self, discount_rate: f64, eta: f64) -> Result<CbaResult> {
        let (db, dp) = self.damages(self.model.climate.ecs)?;
        let benefit: Vec<f64> = db
            .iter()
            .zip(&dp)
            .map(|(&b, &p)| self.benefit_value(b, p, 1.0))
            .collect::<Result<_>>()?;
        let (b_lo, b_hi): (Vec<f64>, Vec<f64>) = benefit.iter().map(|&b| self.band.bounds(b)).unzip();
        let costs = cost_path(&self.cost, self.start()..=self.baseline.last_year())?;
        let cost = Banded::new(costs.central.values, costs.lo.values, costs.hi.values)?;
        let benefit = Banded::new(benefit, b_lo, b_hi)?;
        let net = net_benefit(&cost, &benefit)?;
        let npv = npv(
            &AnnualSeries::new(self.start(), net.central.clone()),
            &self.gdp(),
            discount_rate,
        )?;
        Ok(CbaResult {
            start: self.start(),
            cost,
            benefit,
            net,
            npv_trillion_usd: npv,
            discount_rate,
            eta,
        })
    }
}
