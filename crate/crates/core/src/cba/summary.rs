use std::fmt::Write as _;

use crate::error::Result;
use crate::policy_costs::Target;
use crate::series::AnnualSeries;

use super::{certainty_equivalent, npv, MonteCarloResult, Pipeline};

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub target: Target,
    pub discount_rate: f64,
    pub eta: f64,
    /// Present value of central net benefits.
    pub npv_trillion_usd: f64,
    /// Certainty-equivalent present consumption with the policy minus
    /// without it.
    pub ce_trillion_usd: f64,
}

/// Gain in certainty-equivalent present consumption from the policy.
pub fn ce_gain(mc: &MonteCarloResult, gdp: &[f64], rate: f64, eta: f64) -> Result<f64> {
    let (base, policy) = mc.consumption_npvs(gdp, rate)?;
    Ok(certainty_equivalent(&policy, eta)? - certainty_equivalent(&base, eta)?)
}

/// One row per (discount rate, eta) pair.
pub fn summarize(
    target: Target,
    p: &Pipeline,
    central_net: &[f64],
    mc: &MonteCarloResult,
    rates: &[f64],
    etas: &[f64],
) -> Result<Vec<SummaryRow>> {
    let gdp = p.gdp();
    let net = AnnualSeries::new(p.start(), central_net.to_vec());
    let mut rows = Vec::with_capacity(rates.len() * etas.len());
    for &rate in rates {
        let npv = npv(&net, &gdp, rate)?;
        for &eta in etas {
            rows.push(SummaryRow {
                target,
                discount_rate: rate,
                eta,
                npv_trillion_usd: npv,
                ce_trillion_usd: ce_gain(mc, &gdp.values, rate, eta)?,
            });
        }
    }
    Ok(rows)
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from("target,discount_rate,eta,npv_trillion_usd,ce_trillion_usd\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{:.6},{:.6}",
            r.target, r.discount_rate, r.eta, r.npv_trillion_usd, r.ce_trillion_usd
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrontierPoint {
    pub target: Target,
    pub eta: f64,
    /// Highest discount rate in `[0, max_rate]` at which the policy raises
    /// certainty-equivalent consumption; `None` if it fails even at zero.
    pub max_discount_rate: Option<f64>,
}

/// For each `eta`, bisects for the discount rate at which the certainty
/// equivalent gain changes sign.
pub fn frontier(
    target: Target,
    p: &Pipeline,
    mc: &MonteCarloResult,
    etas: &[f64],
    max_rate: f64,
) -> Result<Vec<FrontierPoint>> {
    let gdp = p.gdp().values;
    etas.iter()
        .map(|&eta| {
            let gain = |r: f64| ce_gain(mc, &gdp, r, eta);
            let max_discount_rate = if gain(0.0)? < 0.0 {
                None
            } else if gain(max_rate)? >= 0.0 {
                Some(max_rate)
            } else {
                let (mut lo, mut hi) = (0.0, max_rate);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if gain(mid)? >= 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                Some(lo)
            };
            Ok(FrontierPoint {
                target,
                eta,
                max_discount_rate,
            })
        })
        .collect()
}

pub fn frontier_csv(points: &[FrontierPoint]) -> String {
    let mut out = String::from("target,eta,max_discount_rate\n");
    for p in points {
        let rate = p.max_discount_rate.map(|r| format!("{r:.6}")).unwrap_or_default();
        let _ = writeln!(out, "{},{},{}", p.target, p.eta, rate);
    }
    out
}
