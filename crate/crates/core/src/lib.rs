//! Cost-benefit analysis of temperature targets: emission scenarios, a
//! simple carbon-cycle and climate model, damage functions fitted to impact
//! estimates, mitigation cost paths, and net benefits under discounting,
//! risk aversion and Monte Carlo uncertainty.

pub mod carbon_climate;
pub mod cba;
mod csv_rows;
pub mod error;
pub mod impacts;
pub mod kaya;
pub mod policy_costs;
pub mod scenario_io;
pub mod series;

pub use carbon_climate::{CarbonCycleParams, ClimateModel, ClimateParams, ClimateState, TemperaturePath};
pub use cba::{CbaResult, MonteCarloConfig, MonteCarloResult, Pipeline};
pub use error::{Error, Result};
pub use impacts::{DamageFunction, ImpactEstimate, ImpactForm, ImpactFunction, UncertaintyBand};
pub use kaya::{KayaRates, Period};
pub use policy_costs::{CostModel, Target, TaxRecord};
pub use scenario_io::EmissionScenario;
pub use series::AnnualSeries;
