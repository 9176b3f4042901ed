use std::fs;

use anyhow::{bail, Context, Result};
use clap::Args;
use paris_cba::carbon_climate::{invert_emissions, InversionOptions};
use paris_cba::cba::{calibrated_model, frontier, frontier_csv, monte_carlo, summarize, summary_csv, MonteCarloConfig};
use paris_cba::impacts::{
    bundled_estimates, covering_edges, fit_all_forms, fits_csv, histogram, histogram_csv, load_estimates,
    model_average, DEFAULT_HISTOGRAM_WARMING,
};
use paris_cba::kaya::{components_csv, decompose, rates_csv, required_intensity_decline, TABLE_PERIODS};
use paris_cba::policy_costs::{bundled_tax_records, efficacy_csv, efficacy_range_check, load_tax_records};
use paris_cba::scenario_io::{resolve_scenario, scenario_to_csv, validate_scenario, HISTORICAL_KAYA};
use paris_cba::{CostModel, EmissionScenario, Period, Pipeline, Target};

use crate::chart::{bar_chart, Band, Line, LineChart};
use crate::config::RunConfig;

pub const MC_DEFAULT_DRAWS: usize = 2000;

#[derive(Debug, Clone, Args)]
pub struct KayaArgs {
    /// Period START-END; repeatable [default: the table periods the scenario covers, else its full span]
    #[arg(long = "period")]
    pub periods: Vec<Period>,
    /// Emissions growth to reach, %/yr
    #[arg(long, default_value_t = -15.0, allow_negative_numbers = true)]
    pub emissions_growth: f64,
    /// Economic growth assumed alongside, %/yr
    #[arg(long, default_value_t = 2.5, allow_negative_numbers = true)]
    pub gdp_growth: f64,
}

#[derive(Debug, Clone, Args)]
pub struct ImpactsArgs {
    /// Warming all estimates are rescaled to, °C
    #[arg(long, default_value_t = DEFAULT_HISTOGRAM_WARMING)]
    pub warming: f64,
    /// Histogram bin width, % GDP
    #[arg(long, default_value_t = 1.0)]
    pub bin_width: f64,
}

#[derive(Debug, Clone, Args)]
pub struct NpvArgs {
    /// Highest discount rate searched for the frontier, per year
    #[arg(long, default_value_t = 0.10)]
    pub max_rate: f64,
}

struct Output<'a> {
    cfg: &'a RunConfig,
}

impl Output<'_> {
    fn write(&self, name: &str, text: &str) -> Result<()> {
        let dir = &self.cfg.out;
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let path = dir.join(name);
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        println!("wrote {}", path.display());
        Ok(())
    }

    fn chart(&self, name: &str, svg: impl FnOnce() -> String) -> Result<()> {
        if self.cfg.chart {
            self.write(name, &svg())?;
        }
        Ok(())
    }
}

fn load_scenario(name: &str) -> Result<EmissionScenario> {
    let s = resolve_scenario(name).with_context(|| format!("loading scenario `{name}`"))?;
    for d in validate_scenario(&s) {
        eprintln!("{}: {d}", s.name);
    }
    Ok(s)
}

fn years(start: i32, n: usize) -> Vec<f64> {
    (0..n).map(|i| f64::from(start) + i as f64).collect()
}

fn pipeline(cfg: &RunConfig, target: Target) -> Result<Pipeline> {
    let baseline = load_scenario(&cfg.baseline)?;
    let mut p = Pipeline::standard(target, baseline)?;
    p.cost = CostModel::default_for(target).with_multiplier(cfg.cost_multiplier)?;
    p.coverage_fraction = cfg.coverage_adjust;
    Ok(p)
}

/// Monte Carlo settings; zero draws means one draw without any spread.
fn mc_config(cfg: &RunConfig, p: &Pipeline, default_draws: usize) -> MonteCarloConfig {
    match cfg.draws_or(default_draws) {
        0 => MonteCarloConfig::degenerate(1, cfg.seed),
        n => MonteCarloConfig::for_pipeline(p, n, cfg.seed),
    }
}

pub fn kaya(cfg: &RunConfig, args: &KayaArgs) -> Result<()> {
    let s = load_scenario(cfg.scenario.as_deref().unwrap_or(HISTORICAL_KAYA))?;
    let periods = if !args.periods.is_empty() {
        args.periods.clone()
    } else {
        let covered: Vec<Period> = TABLE_PERIODS
            .into_iter()
            .filter(|p| p.start >= s.first_year() && p.end <= s.last_year())
            .collect();
        if covered.is_empty() {
            vec![Period::new(s.first_year(), s.last_year())?]
        } else {
            covered
        }
    };
    let mut rates = periods
        .iter()
        .map(|&p| decompose(&s, p))
        .collect::<paris_cba::Result<Vec<_>>>()?;
    if cfg.geometric {
        rates = rates.iter().map(|r| r.to_geometric()).collect();
    }

    let convention = if cfg.geometric {
        "annually compounded"
    } else {
        "continuous"
    };
    println!("Kaya decomposition of `{}`, %/yr ({convention})", s.name);
    println!(
        "{:<11}{:>11}{:>11}{:>11}{:>11}{:>11}",
        "period", "population", "income/cap", "energy/GDP", "CO2/energy", "emissions"
    );
    for r in &rates {
        println!(
            "{:<11}{:>11.2}{:>11.2}{:>11.2}{:>11.2}{:>11.2}",
            r.period.to_string(),
            r.population_growth,
            r.income_per_capita_growth,
            r.energy_intensity_growth,
            r.carbon_intensity_growth,
            r.emissions_growth
        );
    }
    println!(
        "energy and carbon intensity together must change by {:.2} %/yr for emissions growth of {} %/yr at {} %/yr economic growth",
        required_intensity_decline(args.emissions_growth, args.gdp_growth),
        args.emissions_growth,
        args.gdp_growth
    );

    let out = Output { cfg };
    out.write("kaya.csv", &rates_csv(&rates))?;
    out.chart("kaya.svg", || {
        let categories: Vec<String> = rates.iter().map(|r| r.period.to_string()).collect();
        let pick = |f: fn(&paris_cba::KayaRates) -> f64| rates.iter().map(f).collect::<Vec<_>>();
        bar_chart(
            &format!("Kaya decomposition, {}", s.name),
            "%/yr",
            &categories,
            &[
                ("population", pick(|r| r.population_growth)),
                ("income per capita", pick(|r| r.income_per_capita_growth)),
                ("energy intensity", pick(|r| r.energy_intensity_growth)),
                ("carbon intensity", pick(|r| r.carbon_intensity_growth)),
                ("emissions", pick(|r| r.emissions_growth)),
            ],
        )
    })
}

pub fn simulate(cfg: &RunConfig) -> Result<()> {
    let s = load_scenario(cfg.scenario.as_deref().unwrap_or(&cfg.baseline))?;
    let model = calibrated_model()?.model;
    let init = model.default_initial_state();
    let path = model.temperature_path(&s, &init)?;
    println!(
        "`{}`: {:.2} °C in {}, peak {:.2} °C (climate sensitivity {:.2} °C, lag {:.1} yr)",
        s.name,
        path.temperature.last().copied().unwrap_or(f64::NAN),
        s.last_year(),
        path.peak(),
        model.climate.ecs,
        model.climate.lag_years
    );

    let out = Output { cfg };
    out.write("scenario.csv", &scenario_to_csv(&s))?;
    if s.energy.is_some() {
        out.write("kaya_series.csv", &components_csv(&s)?)?;
    }
    out.write("climate.csv", &path.to_csv())?;

    let mut inverted = Vec::new();
    if let Some(target) = cfg.target {
        let inv = invert_emissions(&s, target.ceiling(), &model, &init, &InversionOptions::default())
            .with_context(|| format!("holding `{}` below {} °C", s.name, target.ceiling()))?;
        println!(
            "cuts of {:.2} % of start-year emissions per year keep `{}` at a peak of {:.2} °C",
            100.0 * inv.rate,
            s.name,
            inv.peak
        );
        let inv_path = model.temperature_path(&inv.scenario, &init)?;
        out.write(&format!("inverted_{target}.csv"), &scenario_to_csv(&inv.scenario))?;
        out.write(&format!("climate_{target}.csv"), &inv_path.to_csv())?;
        inverted.push((format!("held below {target} °C"), inv_path.temperature));
    }

    out.chart("climate.svg", || {
        let mut lines = vec![Line {
            label: &s.name,
            values: &path.temperature,
        }];
        lines.extend(inverted.iter().map(|(label, t)| Line { label, values: t }));
        LineChart {
            title: "Warming above pre-industrial",
            y_label: "°C",
            x: years(path.start, path.temperature.len()),
            bands: vec![],
            lines,
        }
        .to_svg()
    })
}

pub fn efficacy(cfg: &RunConfig) -> Result<()> {
    let records = match &cfg.records {
        Some(path) => load_tax_records(path).with_context(|| format!("loading {}", path.display()))?,
        None => bundled_tax_records(),
    };
    let report = efficacy_range_check(&records);
    if let (Some(lo), Some(hi)) = (report.min, report.max) {
        println!(
            "efficacy ranges from {lo:.3} to {hi:.3} % per USD/tCO2 across {} records",
            records.len()
        );
    }
    for (source, e) in &report.flagged {
        println!("outside the ex-ante range: {source} at {e:.3}");
    }

    let out = Output { cfg };
    out.write("efficacy.csv", &efficacy_csv(&records)?)?;
    out.chart("efficacy.svg", || {
        let categories: Vec<String> = records.iter().map(|r| r.source.clone()).collect();
        let values = records.iter().map(|r| r.efficacy().unwrap_or(f64::NAN)).collect();
        bar_chart(
            "Carbon tax efficacy",
            "% per USD/tCO2",
            &categories,
            &[("efficacy", values)],
        )
    })
}

pub fn impacts(cfg: &RunConfig, args: &ImpactsArgs) -> Result<()> {
    if !(args.bin_width > 0.0) {
        bail!("bin width must be positive, got {}", args.bin_width);
    }
    let estimates = match &cfg.estimates {
        Some(path) => load_estimates(path).with_context(|| format!("loading {}", path.display()))?,
        None => bundled_estimates()?,
    };
    let fits = fit_all_forms(&estimates)?;
    let average = model_average(&fits);
    let scaled = estimates
        .iter()
        .map(|e| paris_cba::impacts::scale_estimate(e, args.warming, &average))
        .collect::<paris_cba::Result<Vec<_>>>()?;
    let bins = histogram(
        &estimates,
        args.warming,
        &average,
        &covering_edges(&scaled, args.bin_width),
    )?;
    println!(
        "{} estimates fitted by {} forms; rescaled to {} °C they span {:.2} to {:.2} % GDP",
        estimates.len(),
        fits.len(),
        args.warming,
        scaled.iter().copied().fold(f64::INFINITY, f64::min),
        scaled.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    );

    let out = Output { cfg };
    out.write("fits.csv", &fits_csv(&fits))?;
    out.write("histogram.csv", &histogram_csv(&bins))?;
    out.chart("histogram.svg", || {
        let categories: Vec<String> = bins.iter().map(|b| format!("{}", (b.lower + b.upper) / 2.0)).collect();
        let values = bins.iter().map(|b| b.weighted_frequency).collect();
        bar_chart(
            &format!("Impact estimates rescaled to {} °C", args.warming),
            "weighted frequency",
            &categories,
            &[("estimates", values)],
        )
    })
}

pub fn cba(cfg: &RunConfig) -> Result<()> {
    let out = Output { cfg };
    for target in cfg.targets() {
        let p = pipeline(cfg, target)?;
        let central = p.deterministic(cfg.discount_rates[0], cfg.etas[0])?;
        let result = match cfg.draws_or(0) {
            0 => central,
            _ => monte_carlo(&p, &mc_config(cfg, &p, 0))?.to_cba_result(&central)?,
        };
        let last = result.cost.len() - 1;
        println!(
            "{target} °C vs `{}`: in {} cost {:.2}, benefit {:.2}, net {:.2} % GDP",
            p.baseline.name,
            p.baseline.last_year(),
            result.cost.central[last],
            result.benefit.central[last],
            result.net.central[last]
        );
        let net = paris_cba::AnnualSeries::new(p.start(), result.net.central.clone());
        for &rate in &cfg.discount_rates {
            println!(
                "  net present value at {:.1} %/yr: {:.1} trillion USD",
                100.0 * rate,
                paris_cba::cba::npv(&net, &p.gdp(), rate)?
            );
        }
        out.write(&format!("cba_{target}.csv"), &result.to_csv())?;
        out.chart(&format!("cba_{target}.svg"), || {
            LineChart {
                title: &format!("Costs and benefits of the {target} °C target"),
                y_label: "% GDP",
                x: years(result.start, result.cost.len()),
                bands: vec![
                    Band {
                        label: "cost range",
                        lo: &result.cost.lo,
                        hi: &result.cost.hi,
                    },
                    Band {
                        label: "benefit range",
                        lo: &result.benefit.lo,
                        hi: &result.benefit.hi,
                    },
                ],
                lines: vec![
                    Line {
                        label: "cost",
                        values: &result.cost.central,
                    },
                    Line {
                        label: "benefit",
                        values: &result.benefit.central,
                    },
                ],
            }
            .to_svg()
        })?;
    }
    Ok(())
}

pub fn netben(cfg: &RunConfig) -> Result<()> {
    let out = Output { cfg };
    for target in cfg.targets() {
        let p = pipeline(cfg, target)?;
        let central = p.deterministic(cfg.discount_rates[0], cfg.etas[0])?;
        let mc = monte_carlo(&p, &mc_config(cfg, &p, MC_DEFAULT_DRAWS))?;
        let negative = central.net.central.iter().filter(|&&n| n < 0.0).count();
        let open_from = central.years().zip(&mc.net.p95).find(|(_, &v)| v > 0.0).map(|(y, _)| y);
        println!(
            "{target} °C vs `{}`: central net benefit negative in {negative} of {} years; {} draws; 95th percentile positive from {}",
            p.baseline.name,
            central.net.len(),
            mc.draws(),
            open_from.map_or_else(|| "never".to_string(), |y| y.to_string())
        );
        out.write(&format!("netben_{target}.csv"), &mc.net_percentiles_csv(&central)?)?;
        out.chart(&format!("netben_{target}.svg"), || {
            LineChart {
                title: &format!("Net benefits of the {target} °C target"),
                y_label: "% GDP",
                x: years(central.start, central.net.len()),
                bands: vec![
                    Band {
                        label: "5-95",
                        lo: &mc.net.p5,
                        hi: &mc.net.p95,
                    },
                    Band {
                        label: "17-83",
                        lo: &mc.net.p17,
                        hi: &mc.net.p83,
                    },
                ],
                lines: vec![Line {
                    label: "central",
                    values: &central.net.central,
                }],
            }
            .to_svg()
        })?;
    }
    Ok(())
}

pub fn npv(cfg: &RunConfig, args: &NpvArgs) -> Result<()> {
    if !(args.max_rate > 0.0 && args.max_rate.is_finite()) {
        bail!("frontier search needs a positive maximum rate, got {}", args.max_rate);
    }
    let mut rows = Vec::new();
    let mut points = Vec::new();
    for target in cfg.targets() {
        let p = pipeline(cfg, target)?;
        let central = p.deterministic(cfg.discount_rates[0], cfg.etas[0])?;
        let mc = monte_carlo(&p, &mc_config(cfg, &p, MC_DEFAULT_DRAWS))?;
        rows.extend(summarize(
            target,
            &p,
            &central.net.central,
            &mc,
            &cfg.discount_rates,
            &cfg.etas,
        )?);
        points.extend(frontier(target, &p, &mc, &cfg.etas, args.max_rate)?);
    }
    println!(
        "{:<7}{:>10}{:>7}{:>16}{:>16}",
        "target", "rate", "eta", "NPV (T$)", "CE gain (T$)"
    );
    for r in &rows {
        println!(
            "{:<7}{:>10.3}{:>7}{:>16.1}{:>16.1}",
            r.target.to_string(),
            r.discount_rate,
            r.eta,
            r.npv_trillion_usd,
            r.ce_trillion_usd
        );
    }
    for pt in &points {
        match pt.max_discount_rate {
            Some(r) => println!(
                "{} °C passes at eta {} for discount rates up to {r:.4}",
                pt.target, pt.eta
            ),
            None => println!(
                "{} °C fails at eta {} for every discount rate in [0, {}]",
                pt.target, pt.eta, args.max_rate
            ),
        }
    }

    let out = Output { cfg };
    out.write("summary.csv", &summary_csv(&rows))?;
    out.write("frontier.csv", &frontier_csv(&points))?;
    out.chart("summary.svg", || {
        let categories: Vec<String> = rows
            .iter()
            .filter(|r| r.eta == cfg.etas[0])
            .map(|r| format!("{} °C, {}", r.target, r.discount_rate))
            .collect();
        let npvs = rows
            .iter()
            .filter(|r| r.eta == cfg.etas[0])
            .map(|r| r.npv_trillion_usd)
            .collect();
        bar_chart(
            "Net present value of central net benefits",
            "trillion USD",
            &categories,
            &[("NPV", npvs)],
        )
    })
}
