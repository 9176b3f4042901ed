use std::fmt::{self, Write as _};
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

use super::{DamageFunction, ImpactEstimate};

/// Functional forms for D(T), each zero at T = 0.
///
/// | form | D(T) | params |
/// |---|---|---|
/// | linear | aT | a |
/// | quadratic-no-linear | bT² | b |
/// | quadratic | aT + bT² | a, b |
/// | exponential | a(e^{kT} − 1) | a, k |
/// | piecewise-linear-2seg | aT + b·max(T − κ, 0) | a, b, κ |
/// | power | aT^p | a, p |
/// | cubic | aT + bT² + cT³ | a, b, c |
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ImpactForm {
    Linear,
    QuadraticNoLinear,
    Quadratic,
    Exponential,
    PiecewiseLinear,
    Power,
    Cubic,
}

impl ImpactForm {
    pub const ALL: [ImpactForm; 7] = [
        ImpactForm::Linear,
        ImpactForm::QuadraticNoLinear,
        ImpactForm::Quadratic,
        ImpactForm::Exponential,
        ImpactForm::PiecewiseLinear,
        ImpactForm::Power,
        ImpactForm::Cubic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ImpactForm::Linear => "linear",
            ImpactForm::QuadraticNoLinear => "quadratic-no-linear",
            ImpactForm::Quadratic => "quadratic",
            ImpactForm::Exponential => "exponential",
            ImpactForm::PiecewiseLinear => "piecewise-linear-2seg",
            ImpactForm::Power => "power",
            ImpactForm::Cubic => "cubic",
        }
    }

    /// Number of linear coefficients.
    pub fn n_coefficients(self) -> usize {
        match self {
            ImpactForm::Linear | ImpactForm::QuadraticNoLinear => 1,
            ImpactForm::Exponential | ImpactForm::Power => 1,
            ImpactForm::Quadratic | ImpactForm::PiecewiseLinear => 2,
            ImpactForm::Cubic => 3,
        }
    }

    pub fn has_shape(self) -> bool {
        matches!(
            self,
            ImpactForm::Exponential | ImpactForm::PiecewiseLinear | ImpactForm::Power
        )
    }

    pub fn n_params(self) -> usize {
        self.n_coefficients() + usize::from(self.has_shape())
    }

    fn basis(self, t: f64, shape: f64, out: &mut [f64]) {
        match self {
            ImpactForm::Linear => out[0] = t,
            ImpactForm::QuadraticNoLinear => out[0] = t * t,
            ImpactForm::Quadratic => {
                out[0] = t;
                out[1] = t * t;
            }
            ImpactForm::Exponential => out[0] = (shape * t).exp_m1(),
            ImpactForm::PiecewiseLinear => {
                out[0] = t;
                out[1] = (t - shape).max(0.0);
            }
            ImpactForm::Power => out[0] = if t == 0.0 { 0.0 } else { t.powf(shape) },
            ImpactForm::Cubic => {
                out[0] = t;
                out[1] = t * t;
                out[2] = t * t * t;
            }
        }
    }
}

impl fmt::Display for ImpactForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ImpactForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ImpactForm::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown impact form `{s}`")))
    }
}

/// A fitted or prescribed damage function. `params` holds the linear
/// coefficients in table order followed by the shape parameter, if any.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpactFunction {
    pub form: ImpactForm,
    pub params: Vec<f64>,
    pub fit_weight: f64,
    /// Weighted sum of squared residuals of the fit; zero when prescribed.
    pub wsse: f64,
}

impl ImpactFunction {
    pub fn new(form: ImpactForm, params: Vec<f64>) -> Result<Self> {
        if params.len() != form.n_params() {
            return Err(Error::InvalidParameter(format!(
                "{form} takes {} parameters, got {}",
                form.n_params(),
                params.len()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidParameter("parameters must be finite".into()));
        }
        Ok(Self {
            form,
            params,
            fit_weight: 1.0,
            wsse: 0.0,
        })
    }

    pub fn linear(a: f64) -> Self {
        Self::new(ImpactForm::Linear, vec![a]).expect("one finite parameter")
    }

    pub fn quadratic(a: f64, b: f64) -> Self {
        Self::new(ImpactForm::Quadratic, vec![a, b]).expect("two finite parameters")
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.params[..self.form.n_coefficients()]
    }

    pub fn shape(&self) -> Option<f64> {
        self.form.has_shape().then(|| self.params[self.form.n_coefficients()])
    }
}

impl DamageFunction for ImpactFunction {
    fn damage(&self, t: f64) -> f64 {
        let mut basis = [0.0; 3];
        let m = self.form.n_coefficients();
        self.form.basis(t, self.shape().unwrap_or(0.0), &mut basis[..m]);
        basis[..m].iter().zip(self.coefficients()).map(|(x, c)| x * c).sum()
    }
}

/// Weighted combination of fitted functions.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelAverage {
    /// Members with `fit_weight` normalized to sum to one.
    pub members: Vec<ImpactFunction>,
}

impl DamageFunction for ModelAverage {
    fn damage(&self, t: f64) -> f64 {
        self.members.iter().map(|m| m.fit_weight * m.damage(t)).sum()
    }
}

/// Composite of the given fits weighted by their `fit_weight`. Weights are
/// renormalized; if they are all zero every member counts equally.
pub fn model_average(fits: &[ImpactFunction]) -> ModelAverage {
    let total: f64 = fits.iter().map(|f| f.fit_weight).sum();
    let members = fits
        .iter()
        .map(|f| ImpactFunction {
            fit_weight: if total > 0.0 {
                f.fit_weight / total
            } else {
                1.0 / fits.len() as f64
            },
            ..f.clone()
        })
        .collect();
    ModelAverage { members }
}

struct Design {
    t: Vec<f64>,
    y: Vec<f64>,
    w: Vec<f64>,
}

impl Design {
    fn new(estimates: &[ImpactEstimate]) -> Result<Self> {
        if estimates.is_empty() {
            return Err(Error::SingularDesign("no estimates".into()));
        }
        for e in estimates {
            if !(e.weight >= 0.0 && e.weight.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "estimate from `{}` has invalid weight {}",
                    e.paper_id, e.weight
                )));
            }
            if !(e.warming > 0.0) || !e.impact.is_finite() {
                return Err(Error::Domain(format!(
                    "estimate from `{}` needs positive warming and finite impact",
                    e.paper_id
                )));
            }
        }
        if estimates.iter().map(|e| e.weight).sum::<f64>() <= 0.0 {
            return Err(Error::InvalidParameter("estimate weights sum to zero".into()));
        }
        Ok(Self {
            t: estimates.iter().map(|e| e.warming).collect(),
            y: estimates.iter().map(|e| e.damage()).collect(),
            w: estimates.iter().map(|e| e.weight).collect(),
        })
    }

    fn range(&self) -> (f64, f64) {
        self.t.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &t| {
            (lo.min(t), hi.max(t))
        })
    }

    /// Weighted least squares for the coefficients at a fixed shape.
    fn solve(&self, form: ImpactForm, shape: f64) -> Result<(Vec<f64>, f64)> {
        let n = self.t.len();
        let m = form.n_coefficients();
        if n < m {
            return Err(Error::SingularDesign(format!(
                "{form} needs at least {m} estimates, got {n}"
            )));
        }
        let mut basis = [0.0; 3];
        let mut x = DMatrix::<f64>::zeros(n, m);
        let mut y = DVector::<f64>::zeros(n);
        for i in 0..n {
            let sw = self.w[i].sqrt();
            form.basis(self.t[i], shape, &mut basis[..m]);
            for j in 0..m {
                x[(i, j)] = sw * basis[j];
            }
            y[i] = sw * self.y[i];
        }
        let svd = x.clone().svd(true, true);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        if !(smax > 0.0) || smin <= smax * 1e-12 * n.max(m) as f64 {
            return Err(Error::SingularDesign(format!(
                "{form} design is rank deficient for these warming levels"
            )));
        }
        let beta = svd.solve(&y, 0.0).map_err(|e| Error::SingularDesign(e.to_string()))?;
        let resid = &y - &x * &beta;
        Ok((beta.iter().copied().collect(), resid.norm_squared()))
    }

    fn wsse_at(&self, form: ImpactForm, shape: f64) -> f64 {
        self.solve(form, shape).map_or(f64::INFINITY, |(_, s)| s)
    }

    fn shape_range(&self, form: ImpactForm) -> (f64, f64) {
        match form {
            ImpactForm::Exponential => (0.01, 1.5),
            ImpactForm::Power => (0.5, 6.0),
            ImpactForm::PiecewiseLinear => self.range(),
            _ => (0.0, 0.0),
        }
    }
}

const SHAPE_GRID: usize = 40;

/// Weighted least-squares fit of `form` to the estimates, with damage
/// `−impact` as the response. Shape parameters are found by a grid scan
/// refined with golden-section search; coefficients are solved exactly at
/// each shape.
pub fn fit_impact_function(estimates: &[ImpactEstimate], form: ImpactForm) -> Result<ImpactFunction> {
    let design = Design::new(estimates)?;
    if estimates.len() < form.n_params() {
        return Err(Error::SingularDesign(format!(
            "{form} needs at least {} estimates, got {}",
            form.n_params(),
            estimates.len()
        )));
    }
    if !form.has_shape() {
        let (coef, wsse) = design.solve(form, 0.0)?;
        return Ok(ImpactFunction {
            form,
            params: coef,
            fit_weight: 1.0,
            wsse,
        });
    }

    let (lo, hi) = design.shape_range(form);
    let grid: Vec<f64> = (0..=SHAPE_GRID)
        .map(|i| lo + (hi - lo) * i as f64 / SHAPE_GRID as f64)
        .collect();
    let scores: Vec<f64> = grid.iter().map(|&s| design.wsse_at(form, s)).collect();
    let best = (0..grid.len())
        .min_by(|&a, &b| scores[a].total_cmp(&scores[b]))
        .expect("non-empty grid");
    if !scores[best].is_finite() {
        return Err(Error::SingularDesign(format!(
            "{form} design is rank deficient at every shape value"
        )));
    }
    let bracket = (grid[best.saturating_sub(1)], grid[(best + 1).min(SHAPE_GRID)]);
    let refined = golden_min(|s| design.wsse_at(form, s), bracket);
    let shape = if design.wsse_at(form, refined) <= scores[best] {
        refined
    } else {
        grid[best]
    };
    let (mut params, wsse) = design.solve(form, shape)?;
    params.push(shape);
    Ok(ImpactFunction {
        form,
        params,
        fit_weight: 1.0,
        wsse,
    })
}

/// Fits every form that the data can identify and sets likelihood-style fit
/// weights: `w ∝ exp(−½·(n − k)·(wsse − wsse_min)/wsse_min)`, where `k` is
/// the parameter count of the best fit.
/// `form,params,fit_weight,wsse`, with the parameters space-separated in
/// table order.
pub fn fits_csv(fits: &[ImpactFunction]) -> String {
    let mut out = String::from("form,params,fit_weight,wsse\n");
    for f in fits {
        let params: Vec<String> = f.params.iter().map(|p| format!("{p:.6}")).collect();
        let _ = writeln!(out, "{},{},{:.6},{:.6}", f.form, params.join(" "), f.fit_weight, f.wsse);
    }
    out
}

pub fn fit_all_forms(estimates: &[ImpactEstimate]) -> Result<Vec<ImpactFunction>> {
    let mut fits = Vec::new();
    for form in ImpactForm::ALL {
        match fit_impact_function(estimates, form) {
            Ok(f) => fits.push(f),
            Err(Error::SingularDesign(_)) => {}
            Err(e) => return Err(e),
        }
    }
    if fits.is_empty() {
        return Err(Error::SingularDesign("no form can be fitted to these estimates".into()));
    }
    let design = Design::new(estimates)?;
    let scale: f64 = design.y.iter().zip(&design.w).map(|(y, w)| w * y * y).sum();
    let best = fits
        .iter()
        .min_by(|a, b| a.wsse.total_cmp(&b.wsse))
        .cloned()
        .expect("non-empty");
    let n = estimates.len() as f64;
    let dof = (n - best.form.n_params() as f64).max(1.0);
    for f in &mut fits {
        f.fit_weight = if best.wsse <= 1e-15 * scale.max(f64::MIN_POSITIVE) {
            if f.wsse <= 1e-12 * scale {
                1.0
            } else {
                0.0
            }
        } else {
            (-0.5 * dof * (f.wsse - best.wsse) / best.wsse).exp()
        };
    }
    let total: f64 = fits.iter().map(|f| f.fit_weight).sum();
    for f in &mut fits {
        f.fit_weight /= total;
    }
    Ok(fits)
}

fn golden_min(f: impl Fn(f64) -> f64, (mut lo, mut hi): (f64, f64)) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..200 {
        if hi - lo <= 1e-12 * (1.0 + lo.abs() + hi.abs()) {
            break;
        }
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

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn est(t: f64, impact: f64, weight: f64) -> ImpactEstimate {
        ImpactEstimate {
            paper_id: "p".into(),
            warming: t,
            impact,
            weight,
        }
    }

    #[test]
    fn every_form_is_zero_at_zero() {
        for form in ImpactForm::ALL {
            let params = match form.n_params() {
                1 => vec![1.3],
                2 => vec![1.3, 0.7],
                _ => vec![1.3, 0.7, 0.4],
            };
            let f = ImpactFunction::new(form, params).unwrap();
            assert_eq!(f.damage(0.0), 0.0, "{form}");
        }
    }

    #[test]
    fn form_names_round_trip() {
        for form in ImpactForm::ALL {
            assert_eq!(form.name().parse::<ImpactForm>().unwrap(), form);
        }
        assert!("sextic".parse::<ImpactForm>().is_err());
    }

    #[test]
    fn noiseless_quadratic_is_recovered() {
        let truth = ImpactFunction::quadratic(0.4, 0.15);
        let data: Vec<_> = [0.5, 1.0, 2.0, 2.5, 3.0, 4.5]
            .iter()
            .map(|&t| est(t, -truth.damage(t), 1.0 / 6.0))
            .collect();
        let f = fit_impact_function(&data, ImpactForm::Quadratic).unwrap();
        assert_abs_diff_eq!(f.params[0], 0.4, epsilon = 1e-8);
        assert_abs_diff_eq!(f.params[1], 0.15, epsilon = 1e-8);
        assert!(f.wsse < 1e-20);
    }

    #[test]
    fn noiseless_power_law_is_recovered() {
        let data: Vec<_> = [1.0, 1.5, 2.0, 3.0, 4.0, 5.0]
            .iter()
            .map(|&t| est(t, -0.3 * f64::powf(t, 2.4), 1.0))
            .collect();
        let f = fit_impact_function(&data, ImpactForm::Power).unwrap();
        assert_abs_diff_eq!(f.params[0], 0.3, epsilon = 1e-6);
        assert_abs_diff_eq!(f.params[1], 2.4, epsilon = 1e-6);
    }

    #[test]
    fn single_estimate_linear_passes_through_point() {
        let f = fit_impact_function(&[est(2.0, -1.0, 1.0)], ImpactForm::Linear).unwrap();
        assert_abs_diff_eq!(f.params[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(f.damage(2.0), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn repeated_warming_is_singular_for_two_coefficients() {
        let data = [est(2.0, -1.0, 0.5), est(2.0, -1.4, 0.5)];
        assert!(matches!(
            fit_impact_function(&data, ImpactForm::Quadratic),
            Err(Error::SingularDesign(_))
        ));
        assert!(fit_impact_function(&data, ImpactForm::Linear).is_ok());
    }

    #[test]
    fn too_few_estimates_for_cubic() {
        let data = [est(1.0, -1.0, 0.5), est(2.0, -3.0, 0.5)];
        assert!(matches!(
            fit_impact_function(&data, ImpactForm::Cubic),
            Err(Error::SingularDesign(_))
        ));
    }

    #[test]
    fn linear_matches_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let n = rng.random_range(2..8);
            let data: Vec<_> = (0..n)
                .map(|_| {
                    est(
                        rng.random_range(0.5..6.0),
                        rng.random_range(-10.0..2.0),
                        rng.random_range(0.1..1.0),
                    )
                })
                .collect();
            let num: f64 = data.iter().map(|e| e.weight * e.warming * -e.impact).sum();
            let den: f64 = data.iter().map(|e| e.weight * e.warming * e.warming).sum();
            let f = fit_impact_function(&data, ImpactForm::Linear).unwrap();
            assert_abs_diff_eq!(f.params[0], num / den, epsilon = 1e-10);
        }
    }

    #[test]
    fn quadratic_matches_normal_equations_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let n = rng.random_range(3..11);
            let data: Vec<_> = (0..n)
                .map(|_| {
                    est(
                        rng.random_range(0.5..6.0),
                        rng.random_range(-12.0..3.0),
                        rng.random_range(0.05..1.0),
                    )
                })
                .collect();
            // Weighted normal equations for (a, b), solved by Cramer's rule.
            let s = |p: i32| -> f64 { data.iter().map(|e| e.weight * e.warming.powi(p)).sum() };
            let r = |p: i32| -> f64 { data.iter().map(|e| e.weight * e.warming.powi(p) * -e.impact).sum() };
            let (s2, s3, s4, r1, r2) = (s(2), s(3), s(4), r(1), r(2));
            let det = s2 * s4 - s3 * s3;
            let a = (r1 * s4 - s3 * r2) / det;
            let b = (s2 * r2 - s3 * r1) / det;
            let f = fit_impact_function(&data, ImpactForm::Quadratic).unwrap();
            assert_abs_diff_eq!(f.params[0], a, epsilon = 1e-8);
            assert_abs_diff_eq!(f.params[1], b, epsilon = 1e-8);
        }
    }

    #[test]
    fn identical_members_average_to_themselves() {
        let f = ImpactFunction::quadratic(0.2, 0.1);
        let avg = model_average(&vec![f.clone(); 7]);
        for t in [0.0, 1.0, 2.5, 5.0] {
            assert_abs_diff_eq!(avg.damage(t), f.damage(t), epsilon = 1e-14);
        }
    }

    #[test]
    fn unit_weight_selects_one_member() {
        let mut a = ImpactFunction::linear(1.0);
        let mut b = ImpactFunction::quadratic(0.0, 2.0);
        a.fit_weight = 0.0;
        b.fit_weight = 1.0;
        let avg = model_average(&[a, b.clone()]);
        assert_eq!(avg.damage(3.0), b.damage(3.0));
    }

    #[test]
    fn equal_weights_average_slopes() {
        let avg = model_average(&[ImpactFunction::linear(1.0), ImpactFunction::linear(3.0)]);
        assert_abs_diff_eq!(avg.damage(1.0), 2.0, epsilon = 1e-15);
    }

    #[test]
    fn fit_weights_sum_to_one_and_favour_better_fits() {
        let data = super::super::bundled_estimates().unwrap();
        let fits = fit_all_forms(&data).unwrap();
        assert_eq!(fits.len(), 7);
        assert_abs_diff_eq!(fits.iter().map(|f| f.fit_weight).sum::<f64>(), 1.0, epsilon = 1e-12);
        for a in &fits {
            for b in &fits {
                if a.wsse < b.wsse {
                    assert!(a.fit_weight >= b.fit_weight);
                }
            }
        }
        let avg = model_average(&fits);
        assert_eq!(avg.damage(0.0), 0.0);
    }
}
