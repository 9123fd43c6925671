//! Transformation densities of the random-measure law under currents,
//! diffeomorphisms and semidirect-product elements, plus the Hellinger-type
//! diagnostic that decides whether a diffeomorphism admits a density at all.
//!
//! All spatial work here is one-dimensional: the group elements act on an
//! interval window, and every correction integral is a quadrature over the
//! hull where the transformation differs from the identity.

use crate::error::{CrmError, Result};
use crate::groups::{Current, Diffeo, GroupElement};
use crate::levy::{Family, LevyModel, MassClass, Tail};
use crate::measure::DiscreteMeasure;
use crate::numerics::quad::{integrate_1d, integrate_singular0};
use crate::numerics::special::exp_integral_e1;
use crate::window::Window;

/// A log-density split into the product over atoms and the deterministic
/// correction exponent, so callers can inspect (and test) both pieces.
#[derive(Debug, Clone, Copy)]
pub struct LogDensity {
    pub atom_term: f64,
    pub correction_term: f64,
}

impl LogDensity {
    pub fn zero() -> Self {
        LogDensity { atom_term: 0.0, correction_term: 0.0 }
    }

    pub fn log_value(&self) -> f64 {
        self.atom_term + self.correction_term
    }

    pub fn value(&self) -> f64 {
        self.log_value().exp()
    }
}

fn require_interval(window: &Window) -> Result<()> {
    if window.dim() == 1 {
        Ok(())
    } else {
        Err(CrmError::Config(
            "group transformation densities are implemented for interval windows (d = 1)".into(),
        ))
    }
}

fn ln_l(model: &LevyModel, x: &[f64], s: f64) -> Result<f64> {
    let v = model.eval_l(x, s)?;
    if v > 0.0 && v.is_finite() {
        Ok(v.ln())
    } else {
        Err(CrmError::Singular(format!(
            "levy density vanishes at (x, s) = ({:?}, {s}); the transformed law is singular there",
            x
        )))
    }
}

/// Spatial integration domain for a multiplier: where it differs from 1,
/// clipped to the window. None means the integrand vanishes everywhere.
fn clip_hull(hull: Option<(f64, f64)>, window: &Window) -> Option<(f64, f64)> {
    let (wl, wu) = (window.lower[0], window.upper[0]);
    match hull {
        None => Some((wl, wu)),
        Some((a, b)) => {
            let (lo, hi) = (a.max(wl), b.min(wu));
            if lo < hi {
                Some((lo, hi))
            } else {
                None
            }
        }
    }
}

/// inner correction for a current at one location:
/// int_0^inf (l(x,s) - l(x, r s))/s ds  with r = 1/theta(x).
///
/// Closed forms cover the named families with the default exponential tail;
/// the branch-mixing middle segment falls back to quadrature.
fn current_inner_correction(model: &LevyModel, x: &[f64], theta_x: f64) -> Result<f64> {
    if theta_x == 1.0 {
        return Ok(0.0);
    }
    if !(theta_x > 0.0) {
        return Err(CrmError::Domain(format!("current value must be positive, got {theta_x}")));
    }
    let r = 1.0 / theta_x;
    let b = model.beta.eval(x);
    if b == 0.0 && model.family != Family::Custom {
        return Ok(0.0);
    }
    match (&model.family, &model.tail) {
        (Family::Gamma, _) => Ok(b * r.ln()),
        (Family::LogType, Tail::BetaExp) | (Family::PowerType, Tail::BetaExp) => {
            let eps = model.eps_family;
            let (lo, hi) = ((eps).min(eps / r), (eps).max(eps / r));
            let head = match model.family {
                Family::LogType => {
                    let a = model.alpha.eval(x);
                    if a > 1.0 {
                        // int_0^lo (-ln s)^{-a} ds/s = (-ln lo)^{1-a}/(a-1).
                        let first = (-lo.ln()).powf(1.0 - a) / (a - 1.0);
                        let second = (-(r * lo).ln()).powf(1.0 - a) / (a - 1.0);
                        b * (first - second)
                    } else {
                        // Each piece diverges but the difference is
                        // integrable; integrate it directly.
                        let q = integrate_singular0(
                            |s| {
                                (model.eval_l_unchecked(x, s) - model.eval_l_unchecked(x, r * s)) / s
                            },
                            lo,
                            1e-9,
                            1e-12,
                        );
                        if !q.converged {
                            return Err(CrmError::IntegrabilityViolation(
                                "current correction integral does not converge near s = 0".into(),
                            ));
                        }
                        q.value
                    }
                }
                Family::PowerType => {
                    let a = model.alpha.eval(x);
                    b * (1.0 - r.powf(1.0 - a)) * lo.powf(1.0 - a) / (1.0 - a)
                }
                _ => unreachable!(),
            };
            let middle = if hi > lo {
                let q = integrate_1d(
                    |s| (model.eval_l_unchecked(x, s) - model.eval_l_unchecked(x, r * s)) / s,
                    lo,
                    hi,
                    1e-10,
                    1e-13,
                );
                if !q.converged {
                    return Err(CrmError::Numeric("current correction middle segment failed".into()));
                }
                q.value
            } else {
                0.0
            };
            // s >= hi puts both arguments in the exponential tail.
            let tail = b * (exp_integral_e1(hi)? - exp_integral_e1(r * hi)?);
            Ok(head + middle + tail)
        }
        _ => {
            let diff = |s: f64| (model.eval_l_unchecked(x, s) - model.eval_l_unchecked(x, r * s)) / s;
            let head = integrate_singular0(diff, 1.0, 1e-9, 1e-12);
            let tail = integrate_1d(diff, 1.0, f64::INFINITY, 1e-9, 1e-12);
            if head.converged && tail.converged {
                Ok(head.value + tail.value)
            } else {
                Err(CrmError::IntegrabilityViolation(
                    "current correction integral does not converge for this model".into(),
                ))
            }
        }
    }
}

pub(crate) fn current_correction(model: &LevyModel, window: &Window, theta: &Current) -> Result<f64> {
    let domain = match clip_hull(theta.support_hull(), window) {
        Some(d) => d,
        None => return Ok(0.0),
    };
    let failed = std::cell::Cell::new(false);
    let q = integrate_1d(
        |x| match current_inner_correction(model, &[x], theta.eval(x)) {
            Ok(v) => v,
            Err(_) => {
                failed.set(true);
                f64::NAN
            }
        },
        domain.0,
        domain.1,
        1e-9,
        1e-12,
    );
    if failed.get() || !q.value.is_finite() {
        return Err(CrmError::IntegrabilityViolation(
            "current correction integral does not converge on the multiplier's support".into(),
        ));
    }
    Ok(q.value)
}

/// log of d(mu after theta)/d(mu) at eta:
/// sum_x log( l(x, s_x/theta(x)) / l(x, s_x) )
///   + int int ( l(x,s) - l(x, s/theta(x)) )/s ds dx.
pub fn current_log_density(
    model: &LevyModel,
    window: &Window,
    theta: &Current,
    eta: &DiscreteMeasure,
) -> Result<LogDensity> {
    require_interval(window)?;
    if theta.is_identity() {
        return Ok(LogDensity::zero());
    }
    let atom = current_atom_term(model, window, theta, eta)?;
    let correction = current_correction(model, window, theta)?;
    Ok(LogDensity { atom_term: atom, correction_term: correction })
}

/// The eta-dependent part of the current log-density.
pub(crate) fn current_atom_term(
    model: &LevyModel,
    window: &Window,
    theta: &Current,
    eta: &DiscreteMeasure,
) -> Result<f64> {
    let mut atom = 0.0;
    for a in eta.atoms() {
        if !window.contains(&a.location) {
            return Err(CrmError::Singular(format!(
                "atom at {:?} lies outside the window",
                a.location
            )));
        }
        let th = theta.eval(a.location[0]);
        if th == 1.0 {
            continue;
        }
        atom += ln_l(model, &a.location, a.weight / th)? - ln_l(model, &a.location, a.weight)?;
    }
    Ok(atom)
}

/// Closed form of `current_log_density` for the gamma family:
/// exp[ int (1 - 1/theta(x))/alpha(x) d eta(x) - int beta(x) log theta(x) dx ].
pub fn current_log_density_gamma(
    model: &LevyModel,
    window: &Window,
    theta: &Current,
    eta: &DiscreteMeasure,
) -> Result<LogDensity> {
    require_interval(window)?;
    if model.family != Family::Gamma {
        return Err(CrmError::Config("closed-form current density applies to the gamma family".into()));
    }
    let atom = eta
        .atoms()
        .iter()
        .map(|a| {
            let th = theta.eval(a.location[0]);
            a.weight * (1.0 - 1.0 / th) / model.alpha.eval(&a.location)
        })
        .sum();
    let correction = match clip_hull(theta.support_hull(), window) {
        None => 0.0,
        Some((lo, hi)) => {
            let q = integrate_1d(
                |x| -model.beta.eval(&[x]) * theta.eval(x).ln(),
                lo,
                hi,
                1e-10,
                1e-13,
            );
            if !q.converged {
                return Err(CrmError::Numeric("gamma correction quadrature failed".into()));
            }
            q.value
        }
    };
    Ok(LogDensity { atom_term: atom, correction_term: correction })
}

fn diffeo_finite_mass_precondition(
    model: &LevyModel,
    window: &Window,
    phi: &Diffeo,
) -> Result<()> {
    if phi.is_identity() {
        return Ok(());
    }
    if let Some((a, b)) = phi.support_hull() {
        if a == b {
            return Ok(());
        }
        if a < window.lower[0] || b > window.upper[0] {
            return Err(CrmError::Config(
                "diffeomorphism support must lie inside the window".into(),
            ));
        }
    }
    let domain = match clip_hull(phi.support_hull(), window) {
        Some(d) => d,
        None => return Ok(()),
    };
    let sub = Window::interval(domain.0, domain.1)?;
    match model.mass_classification(&sub)? {
        MassClass::Finite => Ok(()),
        MassClass::Infinite => Err(CrmError::IntegrabilityViolation(
            "the intensity has infinite mass on the support of phi; \
             no density exists for this diffeomorphism"
                .into(),
        )),
    }
}

/// Derivative of phi^{-1} at y (the Jacobian factor attached to each atom).
fn inverse_jacobian(phi: &Diffeo, y: f64) -> Result<f64> {
    let pre = phi.inverse(y)?;
    let d = phi.derivative(pre);
    if d > 0.0 && d.is_finite() {
        Ok(1.0 / d)
    } else {
        Err(CrmError::Numeric(format!("phi' is not positive at {pre}")))
    }
}

/// log of d(mu after phi)/d(mu) at eta:
/// sum_x log( l(phi^{-1}(x), s_x)/l(x, s_x) * J(x) ),  J = (phi^{-1})'.
///
/// Exists only when the intensity mass over supp(phi) is finite; there is no
/// correction exponent because phi preserves that mass.
pub fn diffeo_log_density(
    model: &LevyModel,
    window: &Window,
    phi: &Diffeo,
    eta: &DiscreteMeasure,
) -> Result<LogDensity> {
    require_interval(window)?;
    if phi.is_identity() {
        return Ok(LogDensity::zero());
    }
    diffeo_finite_mass_precondition(model, window, phi)?;
    let mut atom = 0.0;
    for a in eta.atoms() {
        if !window.contains(&a.location) {
            return Err(CrmError::Singular(format!(
                "atom at {:?} lies outside the window",
                a.location
            )));
        }
        let x = a.location[0];
        let pre = phi.inverse(x)?;
        if pre == x {
            continue;
        }
        atom += ln_l(model, &[pre], a.weight)? - ln_l(model, &[x], a.weight)?
            + inverse_jacobian(phi, x)?.ln();
    }
    Ok(LogDensity { atom_term: atom, correction_term: 0.0 })
}

/// log of d(mu after g)/d(mu) at eta for g = (phi, theta):
/// atoms contribute log( l(phi^{-1}(x), s_x/theta(x)) * J(x) / l(x, s_x) ),
/// the correction exponent is the current one.
pub fn semidirect_log_density(
    model: &LevyModel,
    window: &Window,
    g: &GroupElement,
    eta: &DiscreteMeasure,
) -> Result<LogDensity> {
    require_interval(window)?;
    diffeo_finite_mass_precondition(model, window, &g.phi)?;
    let atom = semidirect_atom_term(model, window, g, eta)?;
    let correction = current_correction(model, window, &g.theta)?;
    Ok(LogDensity { atom_term: atom, correction_term: correction })
}

/// The eta-dependent part of the semidirect log-density (no precondition
/// checks; callers are expected to have run them once).
pub(crate) fn semidirect_atom_term(
    model: &LevyModel,
    window: &Window,
    g: &GroupElement,
    eta: &DiscreteMeasure,
) -> Result<f64> {
    let mut atom = 0.0;
    for a in eta.atoms() {
        if !window.contains(&a.location) {
            return Err(CrmError::Singular(format!(
                "atom at {:?} lies outside the window",
                a.location
            )));
        }
        let x = a.location[0];
        let th = g.theta.eval(x);
        let pre = g.phi.inverse(x)?;
        if th == 1.0 && pre == x {
            continue;
        }
        atom += ln_l(model, &[pre], a.weight / th)? - ln_l(model, &[x], a.weight)?
            + inverse_jacobian(&g.phi, x)?.ln();
    }
    Ok(atom)
}

/// The level-n partial density for g = (phi, theta). The spatial atom factor
/// is restricted to atoms with s_x >= theta(x)/k where k = ceil(n sup theta),
/// which makes it finite even when the intensity mass is infinite.
///
/// Returns the log-density together with the level k actually used.
pub fn partial_log_density(
    model: &LevyModel,
    window: &Window,
    g: &GroupElement,
    eta: &DiscreteMeasure,
    n: u32,
) -> Result<(LogDensity, u64)> {
    require_interval(window)?;
    if n == 0 {
        return Err(CrmError::Config("partial density level n must be >= 1".into()));
    }
    let k = partial_level_k(&g.theta, window, n);
    let atom = partial_atom_term(model, window, g, eta, k)?;
    let correction = current_correction(model, window, &g.theta)?;
    Ok((LogDensity { atom_term: atom, correction_term: correction }, k))
}

/// k = ceil(n sup theta): the level on which the partial density lives.
pub(crate) fn partial_level_k(theta: &Current, window: &Window, n: u32) -> u64 {
    let sup_theta = theta.range_on(window.lower[0], window.upper[0]).1.max(1.0);
    (n as f64 * sup_theta).ceil() as u64
}

pub(crate) fn partial_atom_term(
    model: &LevyModel,
    window: &Window,
    g: &GroupElement,
    eta: &DiscreteMeasure,
    k: u64,
) -> Result<f64> {
    let mut atom = 0.0;
    for a in eta.atoms() {
        if !window.contains(&a.location) {
            return Err(CrmError::Singular(format!(
                "atom at {:?} lies outside the window",
                a.location
            )));
        }
        let x = a.location[0];
        let th = g.theta.eval(x);
        let scaled = a.weight / th;
        if th != 1.0 {
            atom += ln_l(model, &[x], scaled)? - ln_l(model, &[x], a.weight)?;
        }
        if a.weight >= th / k as f64 {
            let pre = g.phi.inverse(x)?;
            if pre != x {
                atom += ln_l(model, &[pre], scaled)? - ln_l(model, &[x], scaled)?
                    + inverse_jacobian(&g.phi, x)?.ln();
            }
        }
    }
    Ok(atom)
}

/// H(eps) = int int_eps^inf ( sqrt(l(phi^{-1}(x), s) J(x)) - sqrt(l(x, s)) )^2 / s ds dx.
///
/// The diffeomorphism admits a density iff H stays bounded as eps -> 0.
pub fn hellinger_integral(
    model: &LevyModel,
    window: &Window,
    phi: &Diffeo,
    eps: f64,
) -> Result<f64> {
    require_interval(window)?;
    if !(eps > 0.0) {
        return Err(CrmError::Domain("hellinger cutoff must be > 0".into()));
    }
    let domain = match clip_hull(phi.support_hull(), window) {
        Some(d) => d,
        None => return Ok(0.0),
    };
    let failed = std::cell::Cell::new(false);
    let inner = |x: f64| -> f64 {
        let pre = match phi.inverse(x) {
            Ok(p) => p,
            Err(_) => {
                failed.set(true);
                return f64::NAN;
            }
        };
        let jac = match inverse_jacobian(phi, x) {
            Ok(j) => j,
            Err(_) => {
                failed.set(true);
                return f64::NAN;
            }
        };
        if pre == x && jac == 1.0 {
            return 0.0;
        }
        let integrand = |s: f64| {
            let a = (model.eval_l_unchecked(&[pre], s) * jac).sqrt();
            let b = model.eval_l_unchecked(&[x], s).sqrt();
            (a - b) * (a - b) / s
        };
        // The family head/tail switch sits at eps_family for both terms.
        let split = model.eps_family.max(eps);
        let mut total = 0.0;
        if split > eps {
            total += integrate_1d(&integrand, eps, split, 1e-8, 1e-12).value;
        }
        total += integrate_1d(&integrand, split, f64::INFINITY, 1e-8, 1e-12).value;
        total
    };
    let q = integrate_1d(inner, domain.0, domain.1, 1e-7, 1e-11);
    if failed.get() || !q.value.is_finite() {
        return Err(CrmError::Numeric("hellinger integral did not converge".into()));
    }
    Ok(q.value)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QiVerdict {
    Converges,
    Diverges,
    Inconclusive,
}

#[derive(Debug, Clone)]
pub struct HellingerReport {
    pub eps: Vec<f64>,
    pub values: Vec<f64>,
    pub verdict: QiVerdict,
    /// Least-squares slope of H against ln(1/eps); near zero when H settles,
    /// near the atom-mass rate when it diverges logarithmically.
    pub fitted_log_slope: f64,
    /// Residual-based standard error of that slope. A log-divergent H is an
    /// almost perfect line, so slope >> se; a convergent H bends, inflating
    /// the residuals relative to the (shrinking) slope.
    pub fitted_log_slope_se: f64,
}

/// Evaluate H on a cutoff ladder and classify its eps -> 0 behavior.
///
/// A logarithmically divergent H has (nearly) equal increments per decade, so
/// the ratio of successive increments tends to 1; a convergent H has summable
/// increments with ratio bounded away from 1.
pub fn diagnose_diffeo_qi(
    model: &LevyModel,
    window: &Window,
    phi: &Diffeo,
) -> Result<HellingerReport> {
    let eps: Vec<f64> = vec![1e-2, 1e-3, 1e-4, 1e-5];
    let mut values = Vec::with_capacity(eps.len());
    for &e in &eps {
        values.push(hellinger_integral(model, window, phi, e)?);
    }
    let h_last = *values.last().unwrap();
    // Least-squares fit of H against t = ln(1/eps).
    let ts: Vec<f64> = eps.iter().map(|e| (1.0 / e).ln()).collect();
    let tm = ts.iter().sum::<f64>() / ts.len() as f64;
    let hm = values.iter().sum::<f64>() / values.len() as f64;
    let sxy: f64 = ts.iter().zip(&values).map(|(t, h)| (t - tm) * (h - hm)).sum();
    let sxx: f64 = ts.iter().map(|t| (t - tm) * (t - tm)).sum();
    let fitted_log_slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let dof = ts.len() as f64 - 2.0;
    let ss_res: f64 = ts
        .iter()
        .zip(&values)
        .map(|(t, h)| {
            let r = h - hm - fitted_log_slope * (t - tm);
            r * r
        })
        .sum();
    let fitted_log_slope_se =
        if sxx > 0.0 && dof > 0.0 { (ss_res / dof / sxx).sqrt() } else { f64::INFINITY };

    if h_last < 1e-12 {
        return Ok(HellingerReport {
            eps,
            values,
            verdict: QiVerdict::Converges,
            fitted_log_slope,
            fitted_log_slope_se,
        });
    }
    let incs: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    let last_ratio = if incs[incs.len() - 2] > 0.0 {
        incs[incs.len() - 1] / incs[incs.len() - 2]
    } else {
        0.0
    };
    let rel_last = incs[incs.len() - 1] / h_last.max(1e-300);
    let verdict = if last_ratio > 0.9 && rel_last > 1e-2 {
        QiVerdict::Diverges
    } else if last_ratio <= 0.8 || rel_last < 1e-3 {
        QiVerdict::Converges
    } else {
        QiVerdict::Inconclusive
    };
    Ok(HellingerReport { eps, values, verdict, fitted_log_slope, fitted_log_slope_se })
}

/// Weights scaled by the (pointwise inverse of the) current:
/// sum s_x delta_x -> sum s_x/theta(x) delta_x.
pub fn scale_weights_inverse(theta: &Current, eta: &DiscreteMeasure) -> Result<DiscreteMeasure> {
    crate::groups::apply_current(&theta.clone().inv(), eta)
}
