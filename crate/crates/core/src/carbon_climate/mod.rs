//! Emissions → concentration → forcing → temperature.
//!
//! The carbon cycle is an impulse-response model: each year's emissions are
//! split over parallel boxes by fixed shares, and each box decays with its
//! own e-folding time (one box is permanent). Temperature follows a
//! first-order lag toward the equilibrium implied by the current forcing.
//! Both are stepped explicitly once per year.

mod calibrate;
mod invert;

pub use calibrate::{calibrate, Anchor, Calibration, CalibrationOptions};
pub use invert::{invert_emissions, Inversion, InversionOptions};

use crate::error::{Error, Result};
use crate::scenario_io::EmissionScenario;
use crate::series::AnnualSeries;

pub const N_BOXES: usize = 5;

/// Year of the seeded initial state used by the bundled scenarios.
pub const INIT_YEAR: i32 = 2020;
/// Concentration of the seeded initial state, ppm.
pub const INIT_CONCENTRATION: f64 = 412.0;
/// Warming of the seeded initial state, °C above pre-industrial.
pub const INIT_TEMPERATURE: f64 = 1.2;
/// Growth of the emission history assumed when distributing the seeded
/// airborne stock over the boxes, per year.
pub const INIT_HISTORY_GROWTH: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CarbonCycleParams {
    pub box_shares: [f64; N_BOXES],
    /// e-folding times in years; `f64::INFINITY` marks the permanent box.
    pub box_lifetimes: [f64; N_BOXES],
    pub preindustrial_ppm: f64,
    pub gtco2_per_ppm: f64,
}

impl Default for CarbonCycleParams {
    fn default() -> Self {
        Self {
            box_shares: [0.13, 0.20, 0.32, 0.25, 0.10],
            box_lifetimes: [f64::INFINITY, 363.0, 74.0, 17.0, 2.0],
            preindustrial_ppm: 275.0,
            gtco2_per_ppm: 7.81,
        }
    }
}

impl CarbonCycleParams {
    pub fn validate(&self) -> Result<()> {
        let sum: f64 = self.box_shares.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("box shares sum to {sum}, expected 1")));
        }
        if self.box_shares.iter().any(|a| !(*a >= 0.0)) {
            return Err(Error::InvalidParameter("box shares must be ≥ 0".into()));
        }
        if self.box_lifetimes.iter().any(|t| !(*t > 0.0)) {
            return Err(Error::InvalidParameter("box lifetimes must be > 0".into()));
        }
        if !(self.preindustrial_ppm > 0.0 && self.gtco2_per_ppm > 0.0) {
            return Err(Error::InvalidParameter(
                "preindustrial_ppm and gtco2_per_ppm must be > 0".into(),
            ));
        }
        Ok(())
    }

    /// Per-year retention factor of each box, `exp(−1/τ)`.
    pub fn retention(&self) -> [f64; N_BOXES] {
        self.box_lifetimes.map(|tau| (-1.0 / tau).exp())
    }

    /// Fraction of a unit pulse still airborne `years` after emission.
    pub fn airborne_fraction(&self, years: f64) -> f64 {
        self.box_shares
            .iter()
            .zip(&self.box_lifetimes)
            .map(|(a, tau)| a * (-years / tau).exp())
            .sum()
    }

    pub fn concentration(&self, inventories: &[f64; N_BOXES]) -> f64 {
        self.preindustrial_ppm + inventories.iter().sum::<f64>() / self.gtco2_per_ppm
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClimateParams {
    /// Equilibrium warming per CO₂ doubling, °C.
    pub ecs: f64,
    /// e-folding time of the temperature response, years.
    pub lag_years: f64,
    /// Forcing per CO₂ doubling, W/m².
    pub f2x: f64,
}

impl Default for ClimateParams {
    fn default() -> Self {
        Self {
            ecs: 3.0,
            lag_years: 40.0,
            f2x: 3.71,
        }
    }
}

impl ClimateParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.ecs > 0.0 && self.f2x > 0.0) {
            return Err(Error::InvalidParameter("ecs and f2x must be > 0".into()));
        }
        // The explicit annual step overshoots equilibrium for lags under a year.
        if !(self.lag_years >= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "lag_years must be ≥ 1, got {}",
                self.lag_years
            )));
        }
        Ok(())
    }

    pub fn equilibrium_temperature(&self, forcing: f64) -> f64 {
        self.ecs * forcing / self.f2x
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClimateState {
    pub year: i32,
    /// Airborne CO₂ above pre-industrial held in each box, GtCO₂.
    pub box_inventories: [f64; N_BOXES],
    pub concentration: f64,
    pub temperature: f64,
}

impl ClimateState {
    pub fn preindustrial(year: i32, cp: &CarbonCycleParams) -> Self {
        Self {
            year,
            box_inventories: [0.0; N_BOXES],
            concentration: cp.preindustrial_ppm,
            temperature: 0.0,
        }
    }

    /// A state with the given concentration and warming. The airborne stock is
    /// spread over the boxes as it would be after a long history of emissions
    /// growing at `history_growth` per year.
    pub fn seeded(
        year: i32,
        concentration: f64,
        temperature: f64,
        cp: &CarbonCycleParams,
        history_growth: f64,
    ) -> Self {
        let weights: [f64; N_BOXES] =
            std::array::from_fn(|i| cp.box_shares[i] / (1.0 - (-(history_growth + 1.0 / cp.box_lifetimes[i])).exp()));
        let total: f64 = weights.iter().sum();
        let stock = (concentration - cp.preindustrial_ppm) * cp.gtco2_per_ppm;
        let box_inventories = weights.map(|w| w / total * stock);
        Self {
            year,
            box_inventories,
            concentration: cp.concentration(&box_inventories),
            temperature,
        }
    }

    /// The 2020 state shared by the bundled scenarios: 412 ppm and 1.2 °C.
    pub fn default_initial(cp: &CarbonCycleParams) -> Self {
        Self::seeded(INIT_YEAR, INIT_CONCENTRATION, INIT_TEMPERATURE, cp, INIT_HISTORY_GROWTH)
    }
}

/// Advances the carbon boxes by one year and adds this year's emissions.
pub fn step_concentration(state: &ClimateState, emissions: f64, p: &CarbonCycleParams) -> ClimateState {
    step_concentration_with(state, emissions, p, &p.retention())
}

fn step_concentration_with(
    state: &ClimateState,
    emissions: f64,
    p: &CarbonCycleParams,
    retention: &[f64; N_BOXES],
) -> ClimateState {
    let box_inventories: [f64; N_BOXES] =
        std::array::from_fn(|i| state.box_inventories[i] * retention[i] + p.box_shares[i] * emissions);
    ClimateState {
        year: state.year + 1,
        box_inventories,
        concentration: p.concentration(&box_inventories),
        temperature: state.temperature,
    }
}

/// Logarithmic CO₂ forcing plus exogenous forcing, W/m².
pub fn forcing(concentration: f64, preindustrial_ppm: f64, p: &ClimateParams, exo: f64) -> f64 {
    p.f2x * (concentration / preindustrial_ppm).ln() / std::f64::consts::LN_2 + exo
}

/// Relaxes temperature toward equilibrium by `1/lag_years` of the gap.
pub fn step_temperature(state: &ClimateState, forcing: f64, p: &ClimateParams) -> ClimateState {
    ClimateState {
        temperature: state.temperature + (p.equilibrium_temperature(forcing) - state.temperature) / p.lag_years,
        ..*state
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemperaturePath {
    pub start: i32,
    pub concentration: Vec<f64>,
    pub forcing: Vec<f64>,
    pub temperature: Vec<f64>,
}

impl TemperaturePath {
    pub fn temperature_series(&self) -> AnnualSeries {
        AnnualSeries::new(self.start, self.temperature.clone())
    }

    pub fn years(&self) -> impl Iterator<Item = i32> + '_ {
        (0..self.temperature.len()).map(move |i| self.start + i as i32)
    }

    pub fn temperature_at(&self, year: i32) -> Option<f64> {
        let i = usize::try_from(year - self.start).ok()?;
        self.temperature.get(i).copied()
    }

    pub fn peak(&self) -> f64 {
        self.temperature.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("year,concentration_ppm,forcing_wm2,temperature_c\n");
        for (i, year) in self.years().enumerate() {
            out.push_str(&format!(
                "{year},{:.6},{:.6},{:.6}\n",
                self.concentration[i], self.forcing[i], self.temperature[i]
            ));
        }
        out
    }
}

/// Carbon-cycle and climate parameters together.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ClimateModel {
    pub carbon: CarbonCycleParams,
    pub climate: ClimateParams,
}

impl ClimateModel {
    pub fn new(carbon: CarbonCycleParams, climate: ClimateParams) -> Result<Self> {
        carbon.validate()?;
        climate.validate()?;
        Ok(Self { carbon, climate })
    }

    pub fn with_ecs(&self, ecs: f64) -> Self {
        Self {
            climate: ClimateParams { ecs, ..self.climate },
            ..*self
        }
    }

    pub fn default_initial_state(&self) -> ClimateState {
        ClimateState::default_initial(&self.carbon)
    }

    /// Runs the scenario from `init`. `init` describes the end of the first
    /// scenario year, so the first year's emissions are already included in
    /// it; each later year applies its emissions, then recomputes forcing and
    /// temperature.
    pub fn temperature_path(&self, s: &EmissionScenario, init: &ClimateState) -> Result<TemperaturePath> {
        if s.is_empty() || init.year != s.first_year() {
            return Err(Error::Misaligned(format!(
                "initial state year {} does not match scenario start {}",
                init.year,
                s.years.first().copied().unwrap_or_default()
            )));
        }
        Ok(self.run_emissions(&s.emissions, &s.exo_forcing, init))
    }

    pub(crate) fn run_emissions(&self, emissions: &[f64], exo: &[f64], init: &ClimateState) -> TemperaturePath {
        let retention = self.carbon.retention();
        let pre = self.carbon.preindustrial_ppm;
        let n = emissions.len();
        let mut path = TemperaturePath {
            start: init.year,
            concentration: Vec::with_capacity(n),
            forcing: Vec::with_capacity(n),
            temperature: Vec::with_capacity(n),
        };
        let mut state = *init;
        for i in 0..n {
            let f = if i == 0 {
                forcing(state.concentration, pre, &self.climate, exo[0])
            } else {
                state = step_concentration_with(&state, emissions[i], &self.carbon, &retention);
                let f = forcing(state.concentration, pre, &self.climate, exo[i]);
                state = step_temperature(&state, f, &self.climate);
                f
            };
            path.concentration.push(state.concentration);
            path.forcing.push(f);
            path.temperature.push(state.temperature);
        }
        path
    }
}

pub fn temperature_path(
    s: &EmissionScenario,
    cp: &CarbonCycleParams,
    kp: &ClimateParams,
    init: &ClimateState,
) -> Result<TemperaturePath> {
    ClimateModel::new(*cp, *kp)?.temperature_path(s, init)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario_io::{bundled, SSP585_LIKE};
    use approx::assert_abs_diff_eq;

    fn flat_scenario(start: i32, n: usize, emissions: f64) -> EmissionScenario {
        EmissionScenario {
            name: "flat".into(),
            years: (start..start + n as i32).collect(),
            emissions: vec![emissions; n],
            gdp: vec![1.0; n],
            population: vec![1.0; n],
            exo_forcing: vec![0.0; n],
            energy: None,
        }
    }

    #[test]
    fn default_shares_sum_to_one() {
        let cp = CarbonCycleParams::default();
        cp.validate().unwrap();
        assert_abs_diff_eq!(cp.box_shares.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn bad_shares_rejected() {
        let cp = CarbonCycleParams {
            box_shares: [0.2, 0.2, 0.2, 0.2, 0.1],
            ..Default::default()
        };
        assert!(cp.validate().is_err());
    }

    #[test]
    fn no_emissions_from_preindustrial_stays_put() {
        let cp = CarbonCycleParams::default();
        let mut s = ClimateState::preindustrial(1850, &cp);
        for _ in 0..50 {
            s = step_concentration(&s, 0.0, &cp);
        }
        assert_eq!(s.concentration, cp.preindustrial_ppm);
        assert_eq!(s.year, 1900);
    }

    #[test]
    fn pulse_decays_like_impulse_response() {
        let cp = CarbonCycleParams::default();
        let mut s = step_concentration(&ClimateState::preindustrial(0, &cp), 100.0, &cp);
        for _ in 0..100 {
            s = step_concentration(&s, 0.0, &cp);
        }
        let airborne = (s.concentration - cp.preindustrial_ppm) * cp.gtco2_per_ppm / 100.0;
        // Closed form written out term by term.
        let oracle = 0.13
            + 0.20 * (-100.0f64 / 363.0).exp()
            + 0.32 * (-100.0f64 / 74.0).exp()
            + 0.25 * (-100.0f64 / 17.0).exp()
            + 0.10 * (-100.0f64 / 2.0).exp();
        assert_abs_diff_eq!(airborne, oracle, epsilon = 1e-10);
    }

    #[test]
    fn permanent_box_only_never_decays() {
        let cp = CarbonCycleParams {
            box_shares: [1.0, 0.0, 0.0, 0.0, 0.0],
            ..Default::default()
        };
        let mut s = step_concentration(&ClimateState::preindustrial(0, &cp), 50.0, &cp);
        let c = s.concentration;
        for _ in 0..500 {
            s = step_concentration(&s, 0.0, &cp);
            assert_eq!(s.concentration, c);
        }
    }

    #[test]
    fn forcing_examples() {
        let kp = ClimateParams::default();
        assert_eq!(forcing(275.0, 275.0, &kp, 0.0), 0.0);
        assert_abs_diff_eq!(forcing(550.0, 275.0, &kp, 0.0), kp.f2x, epsilon = 1e-12);
        assert_abs_diff_eq!(forcing(1100.0, 275.0, &kp, 0.0), 2.0 * kp.f2x, epsilon = 1e-12);
        assert_abs_diff_eq!(forcing(275.0, 275.0, &kp, 0.5), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn constant_doubling_converges_to_ecs() {
        let kp = ClimateParams::default();
        let mut s = ClimateState::preindustrial(0, &CarbonCycleParams::default());
        for _ in 0..2000 {
            s = step_temperature(&s, kp.f2x, &kp);
        }
        assert_abs_diff_eq!(s.temperature, kp.ecs, epsilon = 1e-6);
        let again = step_temperature(&s, kp.f2x, &kp);
        assert_abs_diff_eq!(again.temperature, s.temperature, epsilon = 1e-12);
    }

    #[test]
    fn equilibrium_is_a_fixed_point() {
        let kp = ClimateParams::default();
        let f = 2.3;
        let s = ClimateState {
            temperature: kp.equilibrium_temperature(f),
            ..ClimateState::preindustrial(0, &CarbonCycleParams::default())
        };
        assert_eq!(step_temperature(&s, f, &kp).temperature, s.temperature);
    }

    #[test]
    fn step_response_after_one_lag() {
        let kp = ClimateParams::default();
        let mut s = ClimateState::preindustrial(0, &CarbonCycleParams::default());
        for _ in 0..kp.lag_years as usize {
            s = step_temperature(&s, kp.f2x, &kp);
        }
        // Continuous solution of dT/dt = (ecs − T)/lag.
        let analytic = kp.ecs * (1.0 - (-1.0f64).exp());
        assert!((s.temperature - analytic).abs() / analytic < 0.02);
    }

    #[test]
    fn seeded_state_hits_requested_concentration() {
        let cp = CarbonCycleParams::default();
        let s = ClimateState::default_initial(&cp);
        assert_abs_diff_eq!(s.concentration, 412.0, epsilon = 1e-9);
        assert_eq!(s.temperature, 1.2);
        assert!(s.box_inventories.iter().all(|&b| b > 0.0));
    }

    #[test]
    fn zero_emissions_from_preindustrial_stay_at_zero_warming() {
        let model = ClimateModel::default();
        let s = flat_scenario(1850, 100, 0.0);
        let init = ClimateState::preindustrial(1850, &model.carbon);
        let path = model.temperature_path(&s, &init).unwrap();
        assert!(path.temperature.iter().all(|&t| t == 0.0));
    }

    #[test]
    fn initial_year_must_match() {
        let model = ClimateModel::default();
        let s = flat_scenario(2021, 10, 1.0);
        let init = model.default_initial_state();
        assert!(model.temperature_path(&s, &init).is_err());
    }

    #[test]
    fn path_is_deterministic() {
        let model = ClimateModel::default();
        let s = bundled(SSP585_LIKE).unwrap();
        let init = model.default_initial_state();
        let a = model.temperature_path(&s, &init).unwrap();
        let b = model.temperature_path(&s, &init).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.temperature[0], INIT_TEMPERATURE);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn impulse_response_never_increases(t in 0.0f64..1000.0, dt in 0.0f64..100.0) {
                let cp = CarbonCycleParams::default();
                prop_assert!(cp.airborne_fraction(t + dt) <= cp.airborne_fraction(t) + 1e-15);
            }

            #[test]
            fn non_negative_history_keeps_concentration_above_preindustrial(
                emissions in proptest::collection::vec(0.0f64..150.0, 1..120)
            ) {
                let cp = CarbonCycleParams::default();
                let mut s = ClimateState::preindustrial(0, &cp);
                for e in emissions {
                    s = step_concentration(&s, e, &cp);
                    prop_assert!(s.concentration >= cp.preindustrial_ppm);
                }
            }

            #[test]
            fn transient_pulse_decays_to_zero(pulse in 1.0f64..1000.0) {
                let cp = CarbonCycleParams {
                    box_shares: [0.0, 0.2, 0.32 + 0.13, 0.25, 0.10],
                    ..Default::default()
                };
                let mut s = step_concentration(&ClimateState::preindustrial(0, &cp), pulse, &cp);
                let mut prev = s.concentration;
                for _ in 0..20_000 {
                    s = step_concentration(&s, 0.0, &cp);
                    prop_assert!(s.concentration <= prev);
                    prev = s.concentration;
                }
                prop_assert!(s.concentration - cp.preindustrial_ppm < 1e-9 * pulse);
            }

            #[test]
            fn temperature_moves_monotonically_toward_equilibrium(
                t0 in -2.0f64..8.0, f in -2.0f64..10.0, lag in 1.0f64..100.0, ecs in 0.5f64..8.0
            ) {
                let kp = ClimateParams { ecs, lag_years: lag, f2x: 3.71 };
                let eq = kp.equilibrium_temperature(f);
                let mut s = ClimateState { temperature: t0, ..ClimateState::preindustrial(0, &CarbonCycleParams::default()) };
                for _ in 0..200 {
                    let next = step_temperature(&s, f, &kp);
                    prop_assert!((next.temperature - eq).abs() <= (s.temperature - eq).abs() + 1e-12);
                    prop_assert!((next.temperature - eq) * (s.temperature - eq) >= 0.0);
                    s = next;
                }
            }

            #[test]
            fn higher_emissions_never_cool(
                base in proptest::collection::vec(-20.0f64..120.0, 81),
                extra in proptest::collection::vec(0.0f64..30.0, 81),
            ) {
                let model = ClimateModel { climate: ClimateParams { ecs: 3.0, lag_years: 15.0, f2x: 3.71 }, ..Default::default() };
                let init = model.default_initial_state();
                let exo = vec![0.2; 81];
                let high: Vec<f64> = base.iter().zip(&extra).map(|(b, x)| b + x).collect();
                let lo = model.run_emissions(&base, &exo, &init);
                let hi = model.run_emissions(&high, &exo, &init);
                for (a, b) in hi.temperature.iter().zip(&lo.temperature) {
                    prop_assert!(a >= b);
                }
            }
        }
    }
}
