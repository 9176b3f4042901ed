//! Net benefits, discounting, risk aversion and Monte Carlo uncertainty.

mod monte_carlo;
mod pipeline;
mod summary;

pub use monte_carlo::{
    monte_carlo, percentile, MonteCarloConfig, MonteCarloResult, Percentiles, Sampling, PERCENTILES,
};
pub use pipeline::{calibrated_model, calibration_anchors, Pipeline};
pub use summary::{frontier, frontier_csv, summarize, summary_csv, FrontierPoint, SummaryRow};

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::series::AnnualSeries;

/// Year to which all present values are discounted.
pub const BASE_YEAR: i32 = 2020;

/// A per-year central path with a lower and upper bound.
#[derive(Debug, Clone, PartialEq)]
pub struct Banded {
    pub central: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Banded {
    pub fn new(central: Vec<f64>, lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != central.len() || hi.len() != central.len() {
            return Err(Error::Misaligned("band lengths differ from the central path".into()));
        }
        Ok(Self { central, lo, hi })
    }

    pub fn len(&self) -> usize {
        self.central.len()
    }

    pub fn is_empty(&self) -> bool {
        self.central.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CbaResult {
    pub start: i32,
    pub cost: Banded,
    pub benefit: Banded,
    pub net: Banded,
    /// Present value of central net benefits, trillion USD.
    pub npv_trillion_usd: f64,
    pub discount_rate: f64,
    pub eta: f64,
}

impl CbaResult {
    pub fn years(&self) -> impl Iterator<Item = i32> + '_ {
        (0..self.cost.len()).map(move |i| self.start + i as i32)
    }

    pub fn index_of(&self, year: i32) -> Option<usize> {
        usize::try_from(year - self.start).ok().filter(|&i| i < self.cost.len())
    }

    /// `year,cost,cost_lo,cost_hi,benefit,benefit_lo,benefit_hi,net,net_lo,net_hi`
    pub fn to_csv(&self) -> String {
        let mut out = String::from("year,cost,cost_lo,cost_hi,benefit,benefit_lo,benefit_hi,net,net_lo,net_hi\n");
        for (i, year) in self.years().enumerate() {
            let _ = write!(out, "{year}");
            for b in [&self.cost, &self.benefit, &self.net] {
                let _ = write!(out, ",{:.6},{:.6},{:.6}", b.central[i], b.lo[i], b.hi[i]);
            }
            out.push('\n');
        }
        out
    }
}

/// Central net benefit `benefit − cost`, with a band that adds the downside
/// of each side in quadrature (and likewise the upside).
pub fn net_benefit(cost: &Banded, benefit: &Banded) -> Result<Banded> {
    if cost.len() != benefit.len() {
        return Err(Error::Misaligned(format!(
            "cost has {} years, benefit {}",
            cost.len(),
            benefit.len()
        )));
    }
    let n = cost.len();
    let mut central = Vec::with_capacity(n);
    let mut lo = Vec::with_capacity(n);
    let mut hi = Vec::with_capacity(n);
    for i in 0..n {
        let net = benefit.central[i] - cost.central[i];
        let down = (benefit.central[i] - benefit.lo[i]).hypot(cost.hi[i] - cost.central[i]);
        let up = (benefit.hi[i] - benefit.central[i]).hypot(cost.central[i] - cost.lo[i]);
        central.push(net);
        lo.push(net - down);
        hi.push(net + up);
    }
    Banded::new(central, lo, hi)
}

/// Discount factor for `year` at `rate`.
pub fn discount_factor(year: i32, rate: f64) -> f64 {
    (1.0 + rate).powi(year - BASE_YEAR).recip()
}

/// Present value in trillion USD of a % GDP path, discounted to 2020.
pub fn npv(path: &AnnualSeries, gdp: &AnnualSeries, rate: f64) -> Result<f64> {
    path.ensure_aligned(gdp)?;
    if !(rate > -1.0) {
        return Err(Error::Domain(format!("discount rate must exceed −1, got {rate}")));
    }
    Ok(path
        .years()
        .zip(path.values.iter().zip(&gdp.values))
        .map(|(year, (p, g))| p * g / 100.0 * discount_factor(year, rate))
        .sum())
}

/// Consumption discount rate `ρ + η·g`.
pub fn ramsey_rate(pure_time_pref: f64, eta: f64, growth: f64) -> f64 {
    pure_time_pref + eta * growth
}

/// Certainty equivalent of `samples` under CRRA utility with relative risk
/// aversion `eta`: the mean for `eta = 0`, the geometric mean for `eta = 1`,
/// otherwise the power mean of order `1 − eta`.
pub fn certainty_equivalent(samples: &[f64], eta: f64) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::InvalidParameter("need at least two samples".into()));
    }
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(Error::InvalidParameter(format!("eta must be ≥ 0, got {eta}")));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    if eta == 0.0 {
        return Ok(mean);
    }
    if let Some(bad) = samples.iter().find(|&&x| !(x > 0.0)) {
        if eta >= 1.0 || *bad < 0.0 {
            return Err(Error::Domain(format!(
                "CRRA utility with eta {eta} is undefined at consumption {bad}"
            )));
        }
    }
    if samples.iter().all(|&x| x == samples[0]) {
        return Ok(samples[0]);
    }
    let ratio = |x: f64| x / mean;
    let ce = if eta == 1.0 {
        (samples.iter().map(|&x| ratio(x).ln()).sum::<f64>() / n).exp()
    } else {
        let p = 1.0 - eta;
        (samples.iter().map(|&x| ratio(x).powf(p)).sum::<f64>() / n).powf(p.recip())
    };
    Ok(mean * ce)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn flat(n: usize, v: f64) -> AnnualSeries {
        AnnualSeries::new(BASE_YEAR, vec![v; n])
    }

    #[test]
    fn npv_examples() {
        assert_eq!(npv(&flat(81, 0.0), &flat(81, 100.0), 0.03).unwrap(), 0.0);
        assert_abs_diff_eq!(
            npv(&flat(3, -1.0), &flat(3, 100.0), 0.0).unwrap(),
            -3.0,
            epsilon = 1e-12
        );
        let r: f64 = 0.03;
        let v = 1.0 / (1.0 + r);
        let closed = (1.0 - v.powi(81)) / (1.0 - v);
        assert_abs_diff_eq!(
            npv(&flat(81, 1.0), &flat(81, 100.0), r).unwrap(),
            closed,
            epsilon = 1e-9
        );
    }

    #[test]
    fn npv_rejects_misaligned() {
        let a = flat(3, 1.0);
        let b = AnnualSeries::new(2021, vec![1.0; 3]);
        assert!(npv(&a, &b, 0.0).is_err());
    }

    #[test]
    fn ramsey_examples() {
        assert_abs_diff_eq!(ramsey_rate(0.01, 1.0, 0.02), 0.03, epsilon = 1e-15);
        assert_eq!(ramsey_rate(0.0, 0.0, 0.02), 0.0);
        assert_abs_diff_eq!(ramsey_rate(0.001, 2.0, 0.025), 0.051, epsilon = 1e-15);
    }

    #[test]
    fn ce_examples() {
        assert_eq!(certainty_equivalent(&[1.0, 3.0], 0.0).unwrap(), 2.0);
        assert_abs_diff_eq!(certainty_equivalent(&[1.0, 4.0], 1.0).unwrap(), 2.0, epsilon = 1e-12);
        for eta in [0.0, 0.5, 1.0, 2.0, 7.0] {
            assert_eq!(certainty_equivalent(&[2.5, 2.5, 2.5], eta).unwrap(), 2.5);
        }
        // Harmonic mean at eta = 2.
        assert_abs_diff_eq!(certainty_equivalent(&[1.0, 3.0], 2.0).unwrap(), 1.5, epsilon = 1e-12);
    }

    #[test]
    fn ce_domain() {
        assert!(certainty_equivalent(&[1.0, 0.0], 1.0).is_err());
        assert!(certainty_equivalent(&[1.0, -1.0], 2.0).is_err());
        assert!(certainty_equivalent(&[1.0, -1.0], 0.5).is_err());
        assert!(certainty_equivalent(&[1.0, 0.0], 0.5).is_ok());
        assert_eq!(certainty_equivalent(&[1.0, -1.0], 0.0).unwrap(), 0.0);
        assert!(certainty_equivalent(&[1.0], 0.0).is_err());
    }

    #[test]
    fn equal_cost_and_benefit_net_to_zero() {
        let b = Banded::new(vec![1.0, 2.0], vec![0.5, 1.5], vec![1.5, 2.5]).unwrap();
        let net = net_benefit(&b, &b).unwrap();
        assert_eq!(net.central, vec![0.0, 0.0]);
        for i in 0..2 {
            assert!(net.lo[i] <= 0.0 && net.hi[i] >= 0.0);
        }
    }

    #[test]
    fn net_band_is_quadrature() {
        let cost = Banded::new(vec![3.9], vec![2.9], vec![4.9]).unwrap();
        let benefit = Banded::new(vec![2.8], vec![1.6], vec![4.6]).unwrap();
        let net = net_benefit(&cost, &benefit).unwrap();
        assert_abs_diff_eq!(net.central[0], -1.1, epsilon = 1e-12);
        assert_abs_diff_eq!(net.lo[0], -1.1 - (1.2f64.powi(2) + 1.0).sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(net.hi[0], -1.1 + (1.8f64.powi(2) + 1.0).sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn net_rejects_misaligned() {
        let a = Banded::new(vec![1.0], vec![1.0], vec![1.0]).unwrap();
        let b = Banded::new(vec![1.0, 2.0], vec![1.0, 2.0], vec![1.0, 2.0]).unwrap();
        assert!(net_benefit(&a, &b).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn negative_paths_have_negative_npv(
                path in proptest::collection::vec(-10.0f64..-1e-6, 1..100),
                rate in 0.0f64..0.2,
            ) {
                let n = path.len();
                let gdp = AnnualSeries::new(BASE_YEAR, (0..n).map(|i| 80.0 * 1.02f64.powi(i as i32)).collect());
                prop_assert!(npv(&AnnualSeries::new(BASE_YEAR, path), &gdp, rate).unwrap() < 0.0);
            }

            #[test]
            fn ce_at_most_mean(samples in proptest::collection::vec(0.01f64..100.0, 2..50), eta in 0.01f64..10.0) {
                let mean = samples.iter().sum::<f64>() / samples.len() as f64;
                prop_assert!(certainty_equivalent(&samples, eta).unwrap() <= mean * (1.0 + 1e-12));
            }

            #[test]
            fn ce_non_increasing_in_eta(samples in proptest::collection::vec(0.01f64..100.0, 2..50), e1 in 0.0f64..8.0, de in 0.0f64..4.0) {
                let a = certainty_equivalent(&samples, e1).unwrap();
                let b = certainty_equivalent(&samples, e1 + de).unwrap();
                prop_assert!(b <= a * (1.0 + 1e-12));
            }
        }
    }
}
