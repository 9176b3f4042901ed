use std::fmt::Write as _;

use rand::distr::Open01;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::impacts::{std_normal_quantile, UncertaintyBand};

use super::{discount_factor, Banded, CbaResult, Pipeline};

/// Reported percentiles of each per-year distribution.
pub const PERCENTILES: [f64; 5] = [5.0, 17.0, 50.0, 83.0, 95.0];

/// Number of uncertain inputs per draw: climate sensitivity, damage scale,
/// cost multiplier.
const DIMENSIONS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampling {
    /// Each input drawn independently per draw.
    Independent,
    /// Each input stratified into `draws` equal-probability strata with one
    /// draw per stratum; strata are paired across inputs at random.
    LatinHypercube,
    /// Halton sequence in bases 2, 3 and 5, shifted modulo 1 by a random
    /// offset per input.
    ShiftedHalton,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloConfig {
    pub draws: usize,
    pub seed: u64,
    /// Climate sensitivity is lognormal around the model value with this
    /// log-scale spread.
    pub ecs_log_sd: f64,
    /// Two-piece spread of the factor that scales all damages.
    pub damage_band: UncertaintyBand,
    /// Normal spread of the cost multiplier, relative to its mean.
    pub cost_relative_sd: f64,
    pub sampling: Sampling,
}

impl MonteCarloConfig {
    pub const DEFAULT_ECS_LOG_SD: f64 = 0.25;

    /// Spreads taken from the pipeline's damage band and cost model.
    pub fn for_pipeline(p: &Pipeline, draws: usize, seed: u64) -> Self {
        Self {
            draws,
            seed,
            ecs_log_sd: Self::DEFAULT_ECS_LOG_SD,
            damage_band: p.band,
            cost_relative_sd: p.cost.relative_sd(),
            sampling: Sampling::ShiftedHalton,
        }
    }

    /// No spread anywhere: every draw equals the deterministic run.
    pub fn degenerate(draws: usize, seed: u64) -> Self {
        Self {
            draws,
            seed,
            ecs_log_sd: 0.0,
            damage_band: UncertaintyBand {
                sd_below: 0.0,
                sd_above: 0.0,
            },
            cost_relative_sd: 0.0,
            sampling: Sampling::ShiftedHalton,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.draws == 0 || self.draws > u32::MAX as usize {
            return Err(Error::InvalidParameter(format!(
                "draws must lie in 1..={}, got {}",
                u32::MAX,
                self.draws
            )));
        }
        if !(self.ecs_log_sd >= 0.0 && self.cost_relative_sd >= 0.0) {
            return Err(Error::InvalidParameter("distribution spreads must be ≥ 0".into()));
        }
        UncertaintyBand::new(self.damage_band.sd_below, self.damage_band.sd_above)?;
        Ok(())
    }
}

/// Per-year percentiles, one vector per entry of [`PERCENTILES`].
#[derive(Debug, Clone, PartialEq)]
pub struct Percentiles {
    pub p5: Vec<f64>,
    pub p17: Vec<f64>,
    pub p50: Vec<f64>,
    pub p83: Vec<f64>,
    pub p95: Vec<f64>,
}

impl Percentiles {
    fn from_columns(years: usize, value: impl Fn(usize) -> Vec<f64> + Sync) -> Self {
        let per_year: Vec<[f64; 5]> = (0..years)
            .into_par_iter()
            .map(|t| {
                let mut col = value(t);
                col.sort_by(f64::total_cmp);
                PERCENTILES.map(|q| percentile(&col, q))
            })
            .collect();
        let pick = |k: usize| per_year.iter().map(|p| p[k]).collect();
        Self {
            p5: pick(0),
            p17: pick(1),
            p50: pick(2),
            p83: pick(3),
            p95: pick(4),
        }
    }

    pub fn as_array(&self) -> [&[f64]; 5] {
        [&self.p5, &self.p17, &self.p50, &self.p83, &self.p95]
    }
}

/// Linear-interpolation percentile (the common "type 7" rule) of sorted data.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * q / 100.0;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = h - lo as f64;
    if frac == 0.0 {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloResult {
    pub start: i32,
    pub years: usize,
    pub ecs: Vec<f64>,
    pub damage_factor: Vec<f64>,
    pub cost_multiplier: Vec<f64>,
    /// Cost per year before the multiplier.
    pub unit_cost: Vec<f64>,
    /// Draw-major, `years` values per draw.
    benefit_paths: Vec<f64>,
    baseline_damage_paths: Vec<f64>,
    pub cost: Percentiles,
    pub benefit: Percentiles,
    pub net: Percentiles,
}

impl MonteCarloResult {
    pub fn draws(&self) -> usize {
        self.ecs.len()
    }

    pub fn benefit_path(&self, draw: usize) -> &[f64] {
        &self.benefit_paths[draw * self.years..(draw + 1) * self.years]
    }

    pub fn baseline_damage_path(&self, draw: usize) -> &[f64] {
        &self.baseline_damage_paths[draw * self.years..(draw + 1) * self.years]
    }

    pub fn cost(&self, draw: usize, t: usize) -> f64 {
        self.unit_cost[t] * self.cost_multiplier[draw]
    }

    pub fn net(&self, draw: usize, t: usize) -> f64 {
        self.benefit_path(draw)[t] - self.cost(draw, t)
    }

    /// Present value of consumption per draw without and with the policy,
    /// trillion USD: GDP less damages, and for the policy also less costs.
    pub fn consumption_npvs(&self, gdp: &[f64], rate: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        if gdp.len() != self.years {
            return Err(Error::Misaligned(format!(
                "GDP has {} years, draws have {}",
                gdp.len(),
                self.years
            )));
        }
        let disc: Vec<f64> = (0..self.years)
            .map(|t| discount_factor(self.start + t as i32, rate))
            .collect();
        Ok((0..self.draws())
            .map(|i| {
                let db = self.baseline_damage_path(i);
                let b = self.benefit_path(i);
                let mut base = 0.0;
                let mut policy = 0.0;
                for t in 0..self.years {
                    base += gdp[t] * (1.0 - db[t] / 100.0) * disc[t];
                    policy += gdp[t] * (1.0 - (db[t] - b[t] + self.cost(i, t)) / 100.0) * disc[t];
                }
                (base, policy)
            })
            .unzip())
    }

    /// Central net benefit beside its percentiles:
    /// `year,net,net_p5,net_p17,net_p50,net_p83,net_p95`
    pub fn net_percentiles_csv(&self, central: &CbaResult) -> Result<String> {
        if central.net.len() != self.years || central.start != self.start {
            return Err(Error::Misaligned("central run and draws cover different years".into()));
        }
        let mut out = String::from("year,net,net_p5,net_p17,net_p50,net_p83,net_p95\n");
        for (t, year) in central.years().enumerate() {
            let _ = write!(out, "{year},{:.6}", central.net.central[t]);
            for p in self.net.as_array() {
                let _ = write!(out, ",{:.6}", p[t]);
            }
            out.push('\n');
        }
        Ok(out)
    }

    /// Deterministic central paths with the 17–83 percentile range as band,
    /// widened where needed so each band contains its central value.
    pub fn to_cba_result(&self, central: &CbaResult) -> Result<CbaResult> {
        if central.cost.len() != self.years || central.start != self.start {
            return Err(Error::Misaligned("central run and draws cover different years".into()));
        }
        let band = |c: &Banded, p: &Percentiles| -> Result<Banded> {
            let lo = c.central.iter().zip(&p.p17).map(|(c, q)| q.min(*c)).collect();
            let hi = c.central.iter().zip(&p.p83).map(|(c, q)| q.max(*c)).collect();
            Banded::new(c.central.clone(), lo, hi)
        };
        Ok(CbaResult {
            cost: band(&central.cost, &self.cost)?,
            benefit: band(&central.benefit, &self.benefit)?,
            net: band(&central.net, &self.net)?,
            ..central.clone()
        })
    }
}

struct Draw {
    ecs: f64,
    factor: f64,
    multiplier: f64,
    benefit: Vec<f64>,
    baseline_damage: Vec<f64>,
}

const HALTON_BASES: [u64; DIMENSIONS] = [2, 3, 5];

/// Radical inverse of `i` in `base`.
fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut scale = inv;
    let mut v = 0.0;
    while i > 0 {
        v += (i % base) as f64 * scale;
        i /= base;
        scale *= inv;
    }
    v
}

/// Per-run randomization, drawn from streams that no draw index uses.
enum Design {
    Independent,
    Strata([Vec<u32>; DIMENSIONS]),
    Shift([f64; DIMENSIONS]),
}

impl Design {
    fn new(config: &MonteCarloConfig) -> Self {
        let rng = |k: usize| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(u64::MAX - k as u64);
            rng
        };
        match config.sampling {
            Sampling::Independent => Self::Independent,
            Sampling::LatinHypercube => Self::Strata(std::array::from_fn(|k| {
                let mut order: Vec<u32> = (0..config.draws as u32).collect();
                order.shuffle(&mut rng(k));
                order
            })),
            Sampling::ShiftedHalton => Self::Shift(std::array::from_fn(|k| rng(k).random::<f64>())),
        }
    }

    /// Point in the open unit cube for draw `i`.
    fn point(&self, i: usize, n: usize, seed: u64) -> [f64; DIMENSIONS] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        std::array::from_fn(|k| match self {
            Self::Independent => rng.sample(Open01),
            Self::Strata(order) => (f64::from(order[k][i]) + rng.sample::<f64, _>(Open01)) / n as f64,
            Self::Shift(shift) => {
                let v = (radical_inverse(i as u64 + 1, HALTON_BASES[k]) + shift[k]).fract();
                v.clamp(f64::EPSILON, 1.0 - f64::EPSILON)
            }
        })
    }
}

/// Runs `config.draws` draws of climate sensitivity, damage scale and cost
/// multiplier through the pipeline. Draw `i` uses its own random stream
/// derived from the seed, and any stratum assignment is fixed before the
/// draws run, so results do not depend on how draws are scheduled across
/// threads.
pub fn monte_carlo(p: &Pipeline, config: &MonteCarloConfig) -> Result<MonteCarloResult> {
    config.validate()?;
    let unit_cost = p.unit_costs()?;
    let years = unit_cost.len();
    let design = Design::new(config);
    let draws: Vec<Draw> = (0..config.draws)
        .into_par_iter()
        .map(|i| {
            let v = design.point(i, config.draws, config.seed);

            let ecs = p.model.climate.ecs * (config.ecs_log_sd * std_normal_quantile(v[0])).exp();
            let factor = config.damage_band.factor_quantile(v[1]);
            let multiplier = (p.cost.multiplier * (1.0 + config.cost_relative_sd * std_normal_quantile(v[2]))).max(0.0);

            let (db, dp) = p.damages(ecs)?;
            let benefit = db
                .iter()
                .zip(&dp)
                .map(|(&b, &d)| p.benefit_value(b, d, factor))
                .collect::<Result<_>>()?;
            let baseline_damage = db.iter().map(|&b| p.scaled_damage(b, factor)).collect::<Result<_>>()?;
            Ok(Draw {
                ecs,
                factor,
                multiplier,
                benefit,
                baseline_damage,
            })
        })
        .collect::<Result<_>>()?;

    let mut benefit_paths = Vec::with_capacity(draws.len() * years);
    let mut baseline_damage_paths = Vec::with_capacity(draws.len() * years);
    for d in &draws {
        benefit_paths.extend_from_slice(&d.benefit);
        baseline_damage_paths.extend_from_slice(&d.baseline_damage);
    }
    let ecs: Vec<f64> = draws.iter().map(|d| d.ecs).collect();
    let damage_factor: Vec<f64> = draws.iter().map(|d| d.factor).collect();
    let cost_multiplier: Vec<f64> = draws.iter().map(|d| d.multiplier).collect();
    drop(draws);

    let n = ecs.len();
    let cost = Percentiles::from_columns(years, |t| cost_multiplier.iter().map(|m| unit_cost[t] * m).collect());
    let benefit = Percentiles::from_columns(years, |t| (0..n).map(|i| benefit_paths[i * years + t]).collect());
    let net = Percentiles::from_columns(years, |t| {
        (0..n)
            .map(|i| benefit_paths[i * years + t] - unit_cost[t] * cost_multiplier[i])
            .collect()
    });

    Ok(MonteCarloResult {
        start: p.start(),
        years,
        ecs,
        damage_factor,
        cost_multiplier,
        unit_cost,
        benefit_paths,
        baseline_damage_paths,
        cost,
        benefit,
        net,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::carbon_climate::{ClimateModel, ClimateParams};
    use crate::impacts::default_damage;
    use crate::policy_costs::{CostModel, Target};
    use crate::scenario_io::{bundled, PARIS20, SSP585_LIKE};

    fn pipeline() -> Pipeline {
        let model = ClimateModel {
            climate: ClimateParams {
                ecs: 3.0,
                lag_years: 15.0,
                f2x: 3.71,
            },
            ..Default::default()
        };
        Pipeline::new(
            model,
            model.default_initial_state(),
            bundled(SSP585_LIKE).unwrap(),
            bundled(PARIS20).unwrap(),
            default_damage(),
            CostModel::default_for(Target::Two),
        )
        .unwrap()
    }

    #[test]
    fn percentile_type_seven() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(percentile(&x, 0.0), 1.0);
        assert_eq!(percentile(&x, 100.0), 4.0);
        assert_eq!(percentile(&x, 50.0), 2.5);
        assert!((percentile(&x, 17.0) - 1.51).abs() < 1e-12);
        assert_eq!(percentile(&[7.0], 83.0), 7.0);
    }

    #[test]
    fn degenerate_config_reproduces_deterministic_run() {
        let p = pipeline();
        let det = p.deterministic(0.03, 0.0).unwrap();
        let mc = monte_carlo(&p, &MonteCarloConfig::degenerate(50, 9)).unwrap();
        for q in mc.cost.as_array() {
            assert_eq!(q, det.cost.central.as_slice());
        }
        for q in mc.benefit.as_array() {
            assert_eq!(q, det.benefit.central.as_slice());
        }
        for q in mc.net.as_array() {
            assert_eq!(q, det.net.central.as_slice());
        }
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let p = pipeline();
        let cfg = MonteCarloConfig::for_pipeline(&p, 200, 42);
        let a = monte_carlo(&p, &cfg).unwrap();
        let b = monte_carlo(&p, &cfg).unwrap();
        assert_eq!(a, b);
        let c = monte_carlo(&p, &MonteCarloConfig { seed: 43, ..cfg }).unwrap();
        assert_ne!(a.ecs, c.ecs);
    }

    #[test]
    fn independent_sampling_is_also_reproducible() {
        let p = pipeline();
        let cfg = MonteCarloConfig {
            sampling: Sampling::Independent,
            ..MonteCarloConfig::for_pipeline(&p, 200, 42)
        };
        assert_eq!(monte_carlo(&p, &cfg).unwrap(), monte_carlo(&p, &cfg).unwrap());
        let degenerate = MonteCarloConfig {
            sampling: Sampling::Independent,
            ..MonteCarloConfig::degenerate(20, 1)
        };
        let det = p.deterministic(0.0, 0.0).unwrap();
        let mc = monte_carlo(&p, &degenerate).unwrap();
        assert_eq!(mc.net.p5, det.net.central);
    }

    #[test]
    fn net_percentiles_csv_lists_ordered_percentiles() {
        let p = pipeline();
        let mc = monte_carlo(&p, &MonteCarloConfig::for_pipeline(&p, 300, 2)).unwrap();
        let det = p.deterministic(0.0, 0.0).unwrap();
        let text = mc.net_percentiles_csv(&det).unwrap();
        assert_eq!(text.lines().count(), det.net.len() + 1);
        for line in text.lines().skip(1) {
            let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
            assert!(v[2..].windows(2).all(|w| w[0] <= w[1]), "{line}");
        }
    }

    #[test]
    fn radical_inverse_matches_hand_values() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(6, 2), 0.375);
        assert!((radical_inverse(5, 3) - 7.0 / 9.0).abs() < 1e-15);
        assert!((radical_inverse(7, 5) - 11.0 / 25.0).abs() < 1e-15);
    }

    #[test]
    fn every_sampling_scheme_reproduces_the_deterministic_run_without_spread() {
        let p = pipeline();
        let det = p.deterministic(0.0, 0.0).unwrap();
        for sampling in [Sampling::Independent, Sampling::LatinHypercube, Sampling::ShiftedHalton] {
            let cfg = MonteCarloConfig {
                sampling,
                ..MonteCarloConfig::degenerate(16, 9)
            };
            let mc = monte_carlo(&p, &cfg).unwrap();
            assert_eq!(mc.net.p5, det.net.central);
            assert_eq!(mc.net.p95, det.net.central);
        }
    }

    #[test]
    fn latin_hypercube_puts_one_draw_in_each_stratum() {
        let p = pipeline();
        let cfg = MonteCarloConfig {
            sampling: Sampling::LatinHypercube,
            ..MonteCarloConfig::for_pipeline(&p, 400, 5)
        };
        let mc = monte_carlo(&p, &cfg).unwrap();
        let mut strata: Vec<usize> = mc
            .ecs
            .iter()
            .map(|e| {
                use statrs::distribution::{ContinuousCDF, Normal};
                let z = (e / p.model.climate.ecs).ln() / cfg.ecs_log_sd;
                (Normal::standard().cdf(z) * 400.0).floor() as usize
            })
            .collect();
        strata.sort_unstable();
        assert_eq!(strata, (0..400).collect::<Vec<_>>());
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let p = pipeline();
        let cfg = MonteCarloConfig::for_pipeline(&p, 300, 7);
        let run = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| monte_carlo(&p, &cfg).unwrap())
        };
        let one = run(1);
        let many = run(4);
        assert_eq!(one, many);
    }

    #[test]
    fn bands_are_nested() {
        let p = pipeline();
        let mc = monte_carlo(&p, &MonteCarloConfig::for_pipeline(&p, 500, 1)).unwrap();
        for pc in [&mc.cost, &mc.benefit, &mc.net] {
            let a = pc.as_array();
            for pair in a.windows(2) {
                assert!(pair[0].iter().zip(pair[1]).all(|(lo, hi)| lo <= hi));
            }
        }
    }

    #[test]
    fn invalid_configs_rejected() {
        let p = pipeline();
        let mut cfg = MonteCarloConfig::for_pipeline(&p, 0, 1);
        assert!(monte_carlo(&p, &cfg).is_err());
        cfg.draws = 10;
        cfg.ecs_log_sd = -0.1;
        assert!(monte_carlo(&p, &cfg).is_err());
    }

    #[test]
    fn cba_result_bands_contain_centrals() {
        let p = pipeline();
        let det = p.deterministic(0.03, 0.0).unwrap();
        let mc = monte_carlo(&p, &MonteCarloConfig::for_pipeline(&p, 300, 3)).unwrap();
        let r = mc.to_cba_result(&det).unwrap();
        for b in [&r.cost, &r.benefit, &r.net] {
            for t in 0..b.len() {
                assert!(b.lo[t] <= b.central[t] && b.central[t] <= b.hi[t]);
            }
        }
    }
}
