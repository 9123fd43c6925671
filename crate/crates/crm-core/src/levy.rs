//! Levy densities l(x, s), the three example families and their
//! integrability / mass-finiteness predicates.
//!
//! The intensity measure of the driving Poisson process is
//! `dm(x, s) = l(x, s)/s dx ds` on window x R_+. A model is the function
//! `l` together with the spatial fields it is built from.

use crate::error::{CrmError, Result};
use crate::numerics::quad::{integrate_1d, QuadratureResult};
use crate::numerics::special::exp_integral_e1;
use crate::window::Window;
use std::sync::Arc;

pub type SpatialFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type MarkedFn = Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>;

/// A real field on the window: constant, piecewise-constant on a grid, or a
/// smooth closure.
#[derive(Clone)]
pub enum FieldFn {
    Constant(f64),
    /// Row-major cell values over the window's grid.
    Grid { window: Window, values: Vec<f64> },
    Smooth(SpatialFn),
}

impl std::fmt::Debug for FieldFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FieldFn::Constant(v) => write!(f, "Constant({v})"),
            FieldFn::Grid { values, .. } => write!(f, "Grid({} cells)", values.len()),
            FieldFn::Smooth(_) => write!(f, "Smooth(..)"),
        }
    }
}

impl FieldFn {
    pub fn grid(window: Window, values: Vec<f64>) -> Result<Self> {
        if values.len() != window.n_cells() {
            return Err(CrmError::Invariant(format!(
                "grid field needs {} values, got {}",
                window.n_cells(),
                values.len()
            )));
        }
        Ok(FieldFn::Grid { window, values })
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            FieldFn::Constant(v) => *v,
            FieldFn::Grid { window, values } => match window.cell_index(x) {
                Some(i) => values[i],
                None => 0.0,
            },
            FieldFn::Smooth(f) => f(x),
        }
    }

    /// (min, max) over the window. Exact for constant and grid fields,
    /// a dense spot-check for smooth closures.
    pub fn range_on(&self, window: &Window) -> (f64, f64) {
        match self {
            FieldFn::Constant(v) => (*v, *v),
            FieldFn::Grid { values, .. } => {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for &v in values {
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
                (lo, hi)
            }
            FieldFn::Smooth(f) => {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for x in sample_points(window, 1024) {
                    let v = f(&x);
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
                (lo, hi)
            }
        }
    }
}

fn sample_points(window: &Window, n_per_axis: usize) -> Vec<Vec<f64>> {
    // Dense only along the first axis; midpoints elsewhere. Desk default is d=1.
    let d = window.dim();
    let mut out = Vec::with_capacity(n_per_axis);
    for i in 0..n_per_axis {
        let t = (i as f64 + 0.5) / n_per_axis as f64;
        let mut x = vec![0.0; d];
        x[0] = window.lower[0] + t * (window.upper[0] - window.lower[0]);
        for axis in 1..d {
            x[axis] = 0.5 * (window.lower[axis] + window.upper[axis]);
        }
        out.push(x);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Gamma,
    LogType,
    PowerType,
    Custom,
}

/// The tail g(x, s) used by the log- and power-type families for
/// s >= eps_family. Defaults to beta(x) e^{-s}.
#[derive(Clone)]
pub enum Tail {
    BetaExp,
    Custom(MarkedFn),
}

impl std::fmt::Debug for Tail {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Tail::BetaExp => write!(f, "BetaExp"),
            Tail::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

#[derive(Clone)]
pub struct LevyModel {
    pub family: Family,
    pub alpha: FieldFn,
    pub beta: FieldFn,
    pub eps_family: f64,
    pub tail: Tail,
    custom_l: Option<MarkedFn>,
}

impl std::fmt::Debug for LevyModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LevyModel")
            .field("family", &self.family)
            .field("alpha", &self.alpha)
            .field("beta", &self.beta)
            .field("eps_family", &self.eps_family)
            .field("tail", &self.tail)
            .finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MassClass {
    Finite,
    Infinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Q3Status {
    Satisfied,
    Violated,
    Inconclusive,
}

#[derive(Debug, Clone)]
pub struct Q3Report {
    pub status: Q3Status,
    /// Value at the deepest cutoff reached.
    pub value: f64,
    pub ladder: Vec<f64>,
}

pub const DEFAULT_EPS_LOG: f64 = 0.3;
pub const DEFAULT_EPS_POWER: f64 = 0.5;

impl LevyModel {
    pub fn gamma(alpha: FieldFn, beta: FieldFn) -> Result<Self> {
        let m = LevyModel {
            family: Family::Gamma,
            alpha,
            beta,
            eps_family: DEFAULT_EPS_LOG,
            tail: Tail::BetaExp,
            custom_l: None,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn log_type(alpha: FieldFn, beta: FieldFn, eps_family: f64, tail: Tail) -> Result<Self> {
        if !(eps_family > 0.0 && eps_family < (-1.0f64).exp()) {
            return Err(CrmError::Invariant(format!(
                "log-type eps_family must lie in (0, e^-1), got {eps_family}"
            )));
        }
        let m = LevyModel { family: Family::LogType, alpha, beta, eps_family, tail, custom_l: None };
        m.validate()?;
        Ok(m)
    }

    pub fn power_type(alpha: FieldFn, beta: FieldFn, eps_family: f64, tail: Tail) -> Result<Self> {
        if !(eps_family > 0.0 && eps_family < 1.0) {
            return Err(CrmError::Invariant(format!(
                "power-type eps_family must lie in (0, 1), got {eps_family}"
            )));
        }
        let m = LevyModel { family: Family::PowerType, alpha, beta, eps_family, tail, custom_l: None };
        m.validate()?;
        Ok(m)
    }

    pub fn custom(l: MarkedFn) -> Self {
        LevyModel {
            family: Family::Custom,
            alpha: FieldFn::Constant(1.0),
            beta: FieldFn::Constant(1.0),
            eps_family: DEFAULT_EPS_POWER,
            tail: Tail::BetaExp,
            custom_l: Some(l),
        }
    }

    fn validate(&self) -> Result<()> {
        let check_grid = |field: &FieldFn, pred: &dyn Fn(f64) -> bool, what: &str| -> Result<()> {
            match field {
                FieldFn::Constant(v) => {
                    if !pred(*v) {
                        return Err(CrmError::Invariant(format!("{what}: value {v} out of range")));
                    }
                }
                FieldFn::Grid { values, .. } => {
                    if let Some(v) = values.iter().find(|v| !pred(**v)) {
                        return Err(CrmError::Invariant(format!("{what}: value {v} out of range")));
                    }
                }
                FieldFn::Smooth(_) => {}
            }
            Ok(())
        };
        check_grid(&self.beta, &|v| v >= 0.0 && v.is_finite(), "beta must be >= 0")?;
        match self.family {
            Family::Gamma | Family::LogType => {
                check_grid(&self.alpha, &|v| v > 0.0 && v.is_finite(), "alpha must be > 0")?
            }
            Family::PowerType => {
                check_grid(&self.alpha, &|v| v > 0.0 && v < 1.0, "power-type alpha must lie in (0,1)")?
            }
            Family::Custom => {}
        }
        Ok(())
    }

    fn tail_value(&self, x: &[f64], s: f64) -> f64 {
        match &self.tail {
            Tail::BetaExp => self.beta.eval(x) * (-s).exp(),
            Tail::Custom(g) => g(x, s),
        }
    }

    /// l(x, s) per the family formulas; 0 exactly when beta(x) = 0.
    pub fn eval_l(&self, x: &[f64], s: f64) -> Result<f64> {
        if !(s > 0.0) {
            return Err(CrmError::Domain(format!("eval_l requires s > 0, got {s}")));
        }
        Ok(self.eval_l_unchecked(x, s))
    }

    #[inline]
    pub(crate) fn eval_l_unchecked(&self, x: &[f64], s: f64) -> f64 {
        match self.family {
            Family::Gamma => {
                let b = self.beta.eval(x);
                if b == 0.0 {
                    0.0
                } else {
                    b * (-s / self.alpha.eval(x)).exp()
                }
            }
            Family::LogType => {
                let b = self.beta.eval(x);
                if b == 0.0 {
                    0.0
                } else if s < self.eps_family {
                    b * (-s.ln()).powf(-self.alpha.eval(x))
                } else {
                    self.tail_value(x, s)
                }
            }
            Family::PowerType => {
                let b = self.beta.eval(x);
                if b == 0.0 {
                    0.0
                } else if s < self.eps_family {
                    b * s.powf(1.0 - self.alpha.eval(x))
                } else {
                    self.tail_value(x, s)
                }
            }
            Family::Custom => (self.custom_l.as_ref().expect("custom family has custom_l"))(x, s),
        }
    }

    /// Truncated Levy mass of the marked cylinder:
    /// m(window x [s_min, inf)) = int_window int_{s_min}^inf l(x,s)/s ds dx.
    ///
    /// `s_min = 0` is accepted for finite-mass models and reports an
    /// infinite-mass error otherwise.
    pub fn total_mass(&self, window: &Window, s_min: f64) -> Result<f64> {
        if s_min <= 0.0 {
            match self.family {
                Family::Custom => {
                    return Err(CrmError::UnsupportedClassification(
                        "total_mass at s_min <= 0 needs a named family".into(),
                    ))
                }
                _ => {
                    if self.mass_classification(window)? == MassClass::Infinite {
                        return Err(CrmError::InfiniteMass(
                            "m(window x R_+) is infinite for this model; pick s_min > 0".into(),
                        ));
                    }
                }
            }
        }
        spatial_integral(window, |x| self.mark_mass_at(x, s_min.max(0.0)).unwrap_or(f64::NAN))
            .and_then(|v| {
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(CrmError::Numeric("total_mass: non-finite spatial integral".into()))
                }
            })
    }

    /// int_{s_min}^inf l(x,s)/s ds at a fixed location, closed forms where
    /// the family provides them.
    pub fn mark_mass_at(&self, x: &[f64], s_min: f64) -> Result<f64> {
        let b = self.beta.eval(x);
        match self.family {
            Family::Gamma => {
                if b == 0.0 {
                    return Ok(0.0);
                }
                if s_min <= 0.0 {
                    return Err(CrmError::InfiniteMass("gamma family has infinite mark mass".into()));
                }
                Ok(b * exp_integral_e1(s_min / self.alpha.eval(x))?)
            }
            Family::LogType => {
                if b == 0.0 {
                    return Ok(0.0);
                }
                let a = self.alpha.eval(x);
                let eps = self.eps_family;
                let head = if s_min < eps {
                    // int (−ln s)^{-a} ds/s = int t^{-a} dt with t = −ln s.
                    let t_hi = if s_min > 0.0 { -s_min.ln() } else { f64::INFINITY };
                    let t_lo = -eps.ln();
                    if (a - 1.0).abs() < 1e-12 {
                        if t_hi.is_finite() {
                            b * (t_hi / t_lo).ln()
                        } else {
                            return Err(CrmError::InfiniteMass("log-type with alpha = 1 has infinite mass".into()));
                        }
                    } else if a > 1.0 {
                        let hi_part = if t_hi.is_finite() { t_hi.powf(1.0 - a) } else { 0.0 };
                        b * (hi_part - t_lo.powf(1.0 - a)) / (1.0 - a)
                    } else {
                        if !t_hi.is_finite() {
                            return Err(CrmError::InfiniteMass("log-type with alpha < 1 has infinite mass".into()));
                        }
                        b * (t_hi.powf(1.0 - a) - t_lo.powf(1.0 - a)) / (1.0 - a)
                    }
                } else {
                    0.0
                };
                Ok(head + self.tail_mass_at(x, s_min.max(eps))?)
            }
            Family::PowerType => {
                if b == 0.0 {
                    return Ok(0.0);
                }
                let a = self.alpha.eval(x);
                let eps = self.eps_family;
                let head = if s_min < eps {
                    b * (eps.powf(1.0 - a) - s_min.max(0.0).powf(1.0 - a)) / (1.0 - a)
                } else {
                    0.0
                };
                Ok(head + self.tail_mass_at(x, s_min.max(eps))?)
            }
            Family::Custom => {
                if s_min <= 0.0 {
                    return Err(CrmError::UnsupportedClassification(
                        "custom family has no closed-form mark mass at s_min = 0".into(),
                    ));
                }
                let r = integrate_1d(
                    |s| self.eval_l_unchecked(x, s) / s,
                    s_min,
                    f64::INFINITY,
                    1e-10,
                    1e-13,
                );
                if r.converged {
                    Ok(r.value)
                } else {
                    Err(CrmError::InfiniteMass("custom mark mass quadrature did not converge".into()))
                }
            }
        }
    }

    fn tail_mass_at(&self, x: &[f64], from: f64) -> Result<f64> {
        match &self.tail {
            Tail::BetaExp => Ok(self.beta.eval(x) * exp_integral_e1(from)?),
            Tail::Custom(g) => {
                let r = integrate_1d(|s| g(x, s) / s, from, f64::INFINITY, 1e-10, 1e-13);
                if r.converged {
                    Ok(r.value)
                } else {
                    Err(CrmError::Numeric("tail mass quadrature did not converge".into()))
                }
            }
        }
    }

    /// Analytic mass classification of m(window x R_+) for the named families.
    pub fn mass_classification(&self, window: &Window) -> Result<MassClass> {
        let (_, beta_max) = self.beta.range_on(window);
        match self.family {
            Family::Gamma => Ok(if beta_max > 0.0 { MassClass::Infinite } else { MassClass::Finite }),
            Family::LogType => {
                if beta_max == 0.0 {
                    return Ok(MassClass::Finite);
                }
                // Finite iff alpha > 1 everywhere on the support of beta.
                let alpha_min_on_support = match (&self.alpha, &self.beta) {
                    (FieldFn::Grid { values: av, .. }, FieldFn::Grid { values: bv, .. })
                        if av.len() == bv.len() =>
                    {
                        av.iter()
                            .zip(bv)
                            .filter(|(_, b)| **b > 0.0)
                            .map(|(a, _)| *a)
                            .fold(f64::INFINITY, f64::min)
                    }
                    _ => self.alpha.range_on(window).0,
                };
                Ok(if alpha_min_on_support > 1.0 { MassClass::Finite } else { MassClass::Infinite })
            }
            Family::PowerType => {
                // alpha in (0,1) is enforced at construction; with bounded
                // fields int beta/(1-alpha) over a window is finite.
                let (_, alpha_max) = self.alpha.range_on(window);
                Ok(if alpha_max < 1.0 { MassClass::Finite } else { MassClass::Infinite })
            }
            Family::Custom => Err(CrmError::UnsupportedClassification(
                "mass classification is only defined for the named families".into(),
            )),
        }
    }

    /// Numeric diagnostic for the integrability condition
    /// int l(x,s) min{1/s, 1} ds dx < inf.
    pub fn check_q3(&self, window: &Window) -> Q3Report {
        let inner = |x: &[f64], cutoff: f64| -> f64 {
            // min{1/s, 1} is 1 below s = 1 and 1/s above.
            let low = if cutoff < 1.0 {
                integrate_1d(|s| self.eval_l_unchecked(x, s), cutoff, 1.0, 1e-9, 1e-12).value
            } else {
                0.0
            };
            let high = integrate_1d(
                |s| self.eval_l_unchecked(x, s) / s,
                cutoff.max(1.0),
                f64::INFINITY,
                1e-9,
                1e-12,
            )
            .value;
            low + high
        };
        let mut ladder = Vec::new();
        for k in 2..=8 {
            let cutoff = 10f64.powi(-k);
            match spatial_integral(window, |x| inner(x, cutoff)) {
                Ok(v) => ladder.push(v),
                Err(_) => {
                    return Q3Report { status: Q3Status::Inconclusive, value: f64::NAN, ladder }
                }
            }
        }
        let value = *ladder.last().unwrap();
        let growing = ladder
            .windows(2)
            .rev()
            .take(3)
            .all(|w| w[1] > w[0] * 1.10);
        if growing {
            return Q3Report { status: Q3Status::Violated, value, ladder };
        }
        let n = ladder.len();
        let settled = (1..n)
            .rev()
            .take(2)
            .all(|i| (ladder[i] - ladder[i - 1]).abs() <= 1e-3 * ladder[i].abs().max(1e-300));
        let status = if settled && value.is_finite() {
            Q3Status::Satisfied
        } else {
            Q3Status::Inconclusive
        };
        Q3Report { status, value, ladder }
    }
}

/// Closed form of the Frullani-type integral
/// int_0^inf (e^{-u s} - 1)/s e^{-s} ds = -log(1 + u), u > -1.
pub fn frullani(u: f64) -> Result<f64> {
    if u <= -1.0 {
        return Err(CrmError::Domain(format!("frullani requires u > -1, got {u}")));
    }
    Ok(-u.ln_1p())
}

/// Companion quadrature mode of `frullani`, used for cross-checking.
pub fn frullani_quadrature(u: f64) -> Result<f64> {
    if u <= -1.0 {
        return Err(CrmError::Domain(format!("frullani requires u > -1, got {u}")));
    }
    // Written as (e^{-(1+u)s} - e^{-s})/s so both exponents stay <= 0 and
    // nothing overflows for u near -1.
    let r = integrate_1d(
        move |s| {
            if s == 0.0 {
                -u
            } else {
                ((-(1.0 + u) * s).exp() - (-s).exp()) / s
            }
        },
        0.0,
        f64::INFINITY,
        1e-11,
        1e-14,
    );
    if r.converged {
        Ok(r.value)
    } else {
        Err(CrmError::Numeric("frullani quadrature did not converge".into()))
    }
}

/// Integral of `f` over the window against Lebesgue measure.
///
/// d = 1 uses adaptive quadrature; higher dimensions need a grid and use
/// midpoint sums per cell (fields are piecewise-constant there by contract).
pub fn spatial_integral<F: Fn(&[f64]) -> f64>(window: &Window, f: F) -> Result<f64> {
    if window.dim() == 1 {
        let r: QuadratureResult =
            integrate_1d(|x| f(&[x]), window.lower[0], window.upper[0], 1e-9, 1e-12);
        if r.value.is_finite() {
            Ok(r.value)
        } else {
            Err(CrmError::Numeric("spatial integral is non-finite".into()))
        }
    } else if window.grid.is_some() {
        let mut total = 0.0;
        for idx in 0..window.n_cells() {
            let (lo, hi) = window.cell_bounds(idx);
            let mid: Vec<f64> = lo.iter().zip(&hi).map(|(l, u)| 0.5 * (l + u)).collect();
            total += f(&mid) * window.cell_volume(idx);
        }
        Ok(total)
    } else {
        Err(CrmError::Config(
            "spatial integrals with d > 1 need a grid on the window".into(),
        ))
    }
}
