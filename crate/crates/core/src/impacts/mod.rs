//! Damage functions: fitting published impact estimates, the weighted model
//! average, rescaling to a common warming level, and policy benefits as
//! avoided damage.
//!
//! Estimates keep their published sign (negative = loss). Damage functions
//! return losses as positive % of GDP.

mod fit;

pub use fit::{fit_all_forms, fit_impact_function, fits_csv, model_average, ImpactForm, ImpactFunction, ModelAverage};

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::csv_rows::read_rows;
use crate::error::{Error, Result};
use crate::series::AnnualSeries;

pub const COL_PAPER_ID: &str = "paper_id";
pub const COL_WARMING: &str = "warming_c";
pub const COL_IMPACT: &str = "impact_pct_gdp";

/// Warming level to which estimates are rescaled for the histogram, °C.
pub const DEFAULT_HISTOGRAM_WARMING: f64 = 2.5;

/// Benefit anchors: (baseline warming, policy warming, avoided damage % GDP)
/// in 2100 against the high-emission baseline.
pub const HOT_BASELINE_DELTAS: [(f64, f64, f64); 2] = [(4.8, 2.0, 2.8), (4.8, 1.5, 3.1)];
/// The same against the medium-high baseline; not used for the default fit.
pub const WARM_BASELINE_DELTAS: [(f64, f64, f64); 2] = [(3.9, 2.0, 1.8), (3.9, 1.5, 2.2)];

const SYNTHETIC_ESTIMATES: &str = include_str!("../../data/synthetic_estimates.csv");

pub trait DamageFunction {
    /// Welfare loss at warming `t` (°C), % of GDP.
    fn damage(&self, t: f64) -> f64;
}

impl<D: DamageFunction + ?Sized> DamageFunction for &D {
    fn damage(&self, t: f64) -> f64 {
        (**self).damage(t)
    }
}

/// [`DamageFunction::damage`] with the domain checked.
pub fn damage(t: f64, f: &impl DamageFunction) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("warming must be ≥ 0, got {t}")));
    }
    Ok(f.damage(t))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImpactEstimate {
    pub paper_id: String,
    /// °C above pre-industrial.
    pub warming: f64,
    /// % GDP, published sign.
    pub impact: f64,
    pub weight: f64,
}

impl ImpactEstimate {
    /// Loss as positive % GDP.
    pub fn damage(&self) -> f64 {
        -self.impact
    }
}

/// Sets weights so each paper counts equally and each of its estimates gets
/// an equal share of that paper's weight.
pub fn assign_paper_weights(estimates: &mut [ImpactEstimate]) {
    let mut per_paper: HashMap<&str, usize> = HashMap::new();
    for e in estimates.iter() {
        *per_paper.entry(e.paper_id.as_str()).or_default() += 1;
    }
    let n_papers = per_paper.len() as f64;
    let counts: Vec<usize> = estimates.iter().map(|e| per_paper[e.paper_id.as_str()]).collect();
    for (e, count) in estimates.iter_mut().zip(counts) {
        e.weight = 1.0 / (n_papers * count as f64);
    }
}

/// Parses `paper_id,warming_c,impact_pct_gdp` rows and assigns paper weights.
pub fn parse_estimates(reader: impl Read) -> Result<Vec<ImpactEstimate>> {
    let ([i_id, i_t, i_d], rows) = read_rows(reader, [COL_PAPER_ID, COL_WARMING, COL_IMPACT])?;
    let mut out = Vec::with_capacity(rows.len());
    for row in rows {
        let warming = row.number(i_t, COL_WARMING)?;
        if !(warming > 0.0) {
            return Err(Error::Parse {
                row: row.line,
                column: COL_WARMING.into(),
                message: format!("warming must be > 0, got {warming}"),
            });
        }
        out.push(ImpactEstimate {
            paper_id: row.text(i_id, COL_PAPER_ID)?.to_string(),
            warming,
            impact: row.number(i_d, COL_IMPACT)?,
            weight: 0.0,
        });
    }
    if out.is_empty() {
        return Err(Error::InvalidParameter("estimates file has no rows".into()));
    }
    assign_paper_weights(&mut out);
    Ok(out)
}

pub fn load_estimates(path: impl AsRef<Path>) -> Result<Vec<ImpactEstimate>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_estimates(file)
}

/// The bundled synthetic estimate collection (illustrative, not published data).
pub fn bundled_estimates() -> Result<Vec<ImpactEstimate>> {
    parse_estimates(SYNTHETIC_ESTIMATES.as_bytes())
}

/// Least-squares quadratic `aT + bT²` whose differences
/// `D(T_base) − D(T_policy)` best match the given avoided damages.
pub fn fit_benefit_deltas(deltas: &[(f64, f64, f64)]) -> Result<ImpactFunction> {
    let n = deltas.len();
    let x = DMatrix::from_fn(n, 2, |i, j| {
        let (hi, lo, _) = deltas[i];
        if j == 0 {
            hi - lo
        } else {
            hi * hi - lo * lo
        }
    });
    let y = DVector::from_iterator(n, deltas.iter().map(|d| d.2));
    let svd = x.svd(true, true);
    if n < 2 || svd.singular_values.min() <= 1e-12 * svd.singular_values.max() {
        return Err(Error::SingularDesign(
            "benefit deltas do not identify a quadratic".into(),
        ));
    }
    let beta = svd.solve(&y, 0.0).map_err(|e| Error::SingularDesign(e.to_string()))?;
    let mut f = ImpactFunction::quadratic(beta[0], beta[1]);
    f.wsse = (&y - svd_product(deltas, &beta)).norm_squared();
    Ok(f)
}

fn svd_product(deltas: &[(f64, f64, f64)], beta: &DVector<f64>) -> DVector<f64> {
    DVector::from_iterator(
        deltas.len(),
        deltas
            .iter()
            .map(|&(hi, lo, _)| beta[0] * (hi - lo) + beta[1] * (hi * hi - lo * lo)),
    )
}

/// Default damage function: the quadratic that reproduces both avoided
/// damages against the high-emission baseline exactly.
pub fn default_damage() -> ImpactFunction {
    fit_benefit_deltas(&HOT_BASELINE_DELTAS).expect("anchor deltas identify the quadratic")
}

/// Rescales an estimate to `target` warming along `f`.
pub fn scale_estimate(e: &ImpactEstimate, target: f64, f: &impl DamageFunction) -> Result<f64> {
    let at_estimate = f.damage(e.warming);
    if at_estimate == 0.0 || !at_estimate.is_finite() {
        return Err(Error::Domain(format!(
            "damage function is {at_estimate} at {} °C; cannot rescale",
            e.warming
        )));
    }
    if e.warming == target {
        return Ok(e.impact);
    }
    Ok(e.impact * f.damage(target) / at_estimate)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramBin {
    pub lower: f64,
    pub upper: f64,
    pub weighted_frequency: f64,
}

/// `count + 1` edges from `lower` to `upper`.
pub fn uniform_edges(lower: f64, upper: f64, count: usize) -> Vec<f64> {
    (0..=count)
        .map(|i| lower + (upper - lower) * i as f64 / count as f64)
        .collect()
}

/// Edges of width `width` covering `values`, aligned to multiples of `width`.
pub fn covering_edges(values: &[f64], width: f64) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let first = (lo / width).floor() as i64;
    let mut last = (hi / width).ceil() as i64;
    if last == first {
        last += 1;
    }
    (first..=last).map(|k| k as f64 * width).collect()
}

/// Weighted histogram of estimates rescaled to `target`. Bins are `[lower,
/// upper)`; values beyond the outer edges go to the outer bins, so the
/// frequencies sum to the total weight.
pub fn histogram(
    estimates: &[ImpactEstimate],
    target: f64,
    f: &impl DamageFunction,
    edges: &[f64],
) -> Result<Vec<HistogramBin>> {
    if edges.len() < 2 || edges.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidParameter("histogram edges must be increasing".into()));
    }
    let mut bins: Vec<HistogramBin> = edges
        .windows(2)
        .map(|w| HistogramBin {
            lower: w[0],
            upper: w[1],
            weighted_frequency: 0.0,
        })
        .collect();
    for e in estimates {
        let v = scale_estimate(e, target, f)?;
        let k = edges.partition_point(|&x| x <= v).saturating_sub(1).min(bins.len() - 1);
        bins[k].weighted_frequency += e.weight;
    }
    Ok(bins)
}

pub fn histogram_csv(bins: &[HistogramBin]) -> String {
    let mut out = String::from("bin_lower,bin_upper,weighted_frequency\n");
    for b in bins {
        let _ = writeln!(out, "{},{},{:.6}", b.lower, b.upper, b.weighted_frequency);
    }
    out
}

/// Avoided damage per year, `D(baseline) − D(policy)`.
pub fn benefit(baseline: &AnnualSeries, policy: &AnnualSeries, f: &impl DamageFunction) -> Result<AnnualSeries> {
    baseline.zip_with(policy, |b, p| f.damage(b) - f.damage(p))
}

/// Scales damage up for incomplete coverage: `d / (1 − fraction)`.
pub fn coverage_adjust(d: f64, underestimate_fraction: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&underestimate_fraction) {
        return Err(Error::Domain(format!(
            "underestimate fraction must lie in [0, 1), got {underestimate_fraction}"
        )));
    }
    Ok(d / (1.0 - underestimate_fraction))
}

/// Two-piece spread around a central estimate, relative to its magnitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UncertaintyBand {
    pub sd_below: f64,
    pub sd_above: f64,
}

impl Default for UncertaintyBand {
    /// Upper spread 1.5 times the lower, with a mean half-width of 1.5 % GDP
    /// around a 2.8 % GDP central value.
    fn default() -> Self {
        Self {
            sd_below: 0.43,
            sd_above: 0.645,
        }
    }
}

impl UncertaintyBand {
    pub fn new(sd_below: f64, sd_above: f64) -> Result<Self> {
        if !(sd_below >= 0.0 && sd_above >= 0.0) {
            return Err(Error::InvalidParameter("band spreads must be ≥ 0".into()));
        }
        Ok(Self { sd_below, sd_above })
    }

    pub fn is_right_skewed(&self) -> bool {
        self.sd_above > self.sd_below
    }

    /// One-spread interval around `central`.
    pub fn bounds(&self, central: f64) -> (f64, f64) {
        let m = central.abs();
        (central - self.sd_below * m, central + self.sd_above * m)
    }

    /// Quantile `v` in (0, 1) of the multiplicative factor with mode 1 whose
    /// lower half is normal with spread `sd_below` and upper half normal with
    /// spread `sd_above`.
    pub fn factor_quantile(&self, v: f64) -> f64 {
        let total = self.sd_below + self.sd_above;
        if total == 0.0 {
            return 1.0;
        }
        let p = self.sd_below / total;
        if v < p {
            1.0 - self.sd_below * std_normal_quantile(1.0 - 0.5 * v / p)
        } else {
            1.0 + self.sd_above * std_normal_quantile(0.5 + 0.5 * (v - p) / (1.0 - p))
        }
    }

    /// Mean of the factor distribution.
    pub fn factor_mean(&self) -> f64 {
        1.0 + (2.0 / std::f64::consts::PI).sqrt() * (self.sd_above - self.sd_below)
    }
}

pub(crate) fn std_normal_quantile(p: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, Normal};
    Normal::standard().inverse_cdf(p)
}
