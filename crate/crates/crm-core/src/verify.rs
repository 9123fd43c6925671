//! Statistical verification of the change-of-variables identities.
//!
//! Each check compares two estimators of the same expectation on the same
//! replicates: E[F(g eta)] against E[F(eta) R_g(eta)]. Because the pairing
//! removes most of the Monte Carlo variance, the z-score of the paired
//! differences is sensitive to even small errors in the density formulas —
//! scaling a density by a percent is enough to fail the check.

use crate::density::{
    current_atom_term, current_correction, diffeo_log_density, partial_atom_term, partial_level_k,
    semidirect_atom_term,
};
use crate::error::{CrmError, Result};
use crate::groups::{Current, Diffeo, GroupElement};
use crate::levy::{Family, FieldFn, LevyModel};
use crate::measure::DiscreteMeasure;
use crate::numerics::stats::{ks_test, TestResult};
use crate::sampler::{laplace_exact, McEstimate, Sampler, SamplerSpec};
use crate::window::Window;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FunctionalKind {
    /// exp(-t eta(region))
    ExpNegMass,
    /// exp(-t <f, eta>) with f the tent peaking at the region's center.
    ExpNegTent,
    /// 1 when the region holds at least one atom.
    AtomIndicator,
}

/// A bounded test functional of the measure, optionally looking only at the
/// level-n restriction (atoms of weight >= 1/n).
#[derive(Debug, Clone)]
pub struct Functional {
    pub kind: FunctionalKind,
    pub region: Window,
    pub t: f64,
    pub level: Option<u32>,
}

impl Functional {
    pub fn exp_neg_mass(region: Window, t: f64) -> Self {
        Functional { kind: FunctionalKind::ExpNegMass, region, t, level: None }
    }

    pub fn eval(&self, eta: &DiscreteMeasure) -> f64 {
        let restricted;
        let eta = match self.level {
            Some(n) => {
                restricted = eta.restrict_level(n);
                &restricted
            }
            None => eta,
        };
        match self.kind {
            FunctionalKind::ExpNegMass => (-self.t * eta.mass_in(&self.region)).exp(),
            FunctionalKind::ExpNegTent => {
                let c = 0.5 * (self.region.lower[0] + self.region.upper[0]);
                let half = 0.5 * (self.region.upper[0] - self.region.lower[0]);
                let v = eta.integrate(|x| (1.0 - (x[0] - c).abs() / half).max(0.0));
                (-self.t * v).exp()
            }
            FunctionalKind::AtomIndicator => {
                if eta.atoms().iter().any(|a| self.region.contains(&a.location)) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct VerifyOptions {
    pub eps_trunc: f64,
    pub seed: u64,
    pub n_samples: usize,
    /// Multiplier applied to the density before comparing; 1.0 verifies the
    /// formula, anything else is a deliberate mutation that must fail.
    pub density_scale: f64,
}

impl VerifyOptions {
    pub fn new(eps_trunc: f64, seed: u64, n_samples: usize) -> Self {
        VerifyOptions { eps_trunc, seed, n_samples, density_scale: 1.0 }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct VerifyReport {
    pub lhs: McEstimate,
    pub rhs: McEstimate,
    /// Paired z-score of the per-replicate differences.
    pub z: f64,
    pub pass: bool,
    pub seed: u64,
}

fn beta_sup(model: &LevyModel, window: &Window) -> f64 {
    model.beta.range_on(window).1
}

/// The truncated sampler only matches the two-sided identity up to a bias of
/// order t * sup beta * vol * eps * sup theta; insist it is far below the
/// Monte Carlo resolution.
fn check_truncation_bias(
    func: &Functional,
    model: &LevyModel,
    window: &Window,
    sup_theta: f64,
    opts: &VerifyOptions,
) -> Result<()> {
    match func.level {
        Some(n) => {
            // A level-n functional ignores atoms below 1/n entirely; the
            // truncation must sit safely below that threshold on both sides.
            let needed = 1.0 / n as f64;
            if opts.eps_trunc * sup_theta.max(1.0) * 2.0 > needed {
                return Err(CrmError::Config(format!(
                    "eps_trunc {} too coarse for level-{n} functionals under sup theta {sup_theta}",
                    opts.eps_trunc
                )));
            }
            Ok(())
        }
        None => {
            if func.kind == FunctionalKind::AtomIndicator {
                return Ok(()); // insensitive to weights
            }
            let bias = func.t.abs()
                * beta_sup(model, window)
                * func.region.volume()
                * opts.eps_trunc
                * sup_theta.max(1.0);
            let resolution = 0.1 / (opts.n_samples as f64).sqrt();
            if bias >= resolution {
                Err(CrmError::Config(format!(
                    "truncation bias bound {bias:.3e} is not far below the Monte Carlo \
                     resolution {resolution:.3e}; lower eps_trunc"
                )))
            } else {
                Ok(())
            }
        }
    }
}

/// Paired comparison of per-replicate values (lhs_i, rhs_i).
fn paired_report(pairs: &[(f64, f64)], seed: u64) -> VerifyReport {
    let n = pairs.len() as f64;
    let (mut sl, mut sl2, mut sr, mut sr2, mut sd, mut sd2) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for &(l, r) in pairs {
        sl += l;
        sl2 += l * l;
        sr += r;
        sr2 += r * r;
        let d = l - r;
        sd += d;
        sd2 += d * d;
    }
    let mean_l = sl / n;
    let mean_r = sr / n;
    let mean_d = sd / n;
    let se = |s2: f64, m: f64| ((s2 / n - m * m).max(0.0) / n).sqrt();
    let se_d = se(sd2, mean_d);
    let z = if se_d > 0.0 {
        mean_d / se_d
    } else if mean_d == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    VerifyReport {
        lhs: McEstimate { mean: mean_l, std_error: se(sl2, mean_l), n_samples: pairs.len() },
        rhs: McEstimate { mean: mean_r, std_error: se(sr2, mean_r), n_samples: pairs.len() },
        z,
        pass: z.abs() <= 3.0,
        seed,
    }
}

fn make_sampler(model: &LevyModel, window: &Window, opts: &VerifyOptions) -> Result<Sampler> {
    Sampler::new(SamplerSpec {
        model: model.clone(),
        window: window.clone(),
        eps_trunc: opts.eps_trunc,
        seed: opts.seed,
    })
}

/// Check E[F(theta eta)] = E[F(eta) R_theta(eta)] on paired replicates.
pub fn verify_current(
    model: &LevyModel,
    window: &Window,
    theta: &Current,
    func: &Functional,
    opts: &VerifyOptions,
) -> Result<VerifyReport> {
    let sup_theta = theta.range_on(window.lower[0], window.upper[0]).1;
    check_truncation_bias(func, model, window, sup_theta, opts)?;
    let sampler = make_sampler(model, window, opts)?;
    let correction = current_correction(model, window, theta)?;
    let log_scale = opts.density_scale.ln();
    let mut pairs = Vec::with_capacity(opts.n_samples);
    for i in 0..opts.n_samples {
        let eta = sampler.sample_replicate(i as u64)?;
        let lhs = func.eval(&crate::groups::apply_current(theta, &eta)?);
        let log_r = current_atom_term(model, window, theta, &eta)? + correction + log_scale;
        pairs.push((lhs, func.eval(&eta) * log_r.exp()));
    }
    Ok(paired_report(&pairs, opts.seed))
}

/// Check E[F(phi eta)] = E[F(eta) R_phi(eta)]; errors out when no density
/// exists (infinite intensity mass on supp phi).
pub fn verify_diffeo(
    model: &LevyModel,
    window: &Window,
    phi: &Diffeo,
    func: &Functional,
    opts: &VerifyOptions,
) -> Result<VerifyReport> {
    check_truncation_bias(func, model, window, 1.0, opts)?;
    // Surfaces the finite-mass precondition before any sampling.
    diffeo_log_density(model, window, phi, &DiscreteMeasure::empty())?;
    let sampler = make_sampler(model, window, opts)?;
    let log_scale = opts.density_scale.ln();
    let mut pairs = Vec::with_capacity(opts.n_samples);
    for i in 0..opts.n_samples {
        let eta = sampler.sample_replicate(i as u64)?;
        let lhs = func.eval(&crate::groups::apply_diffeo(phi, &eta)?);
        let log_r = diffeo_log_density(model, window, phi, &eta)?.log_value() + log_scale;
        pairs.push((lhs, func.eval(&eta) * log_r.exp()));
    }
    Ok(paired_report(&pairs, opts.seed))
}

/// Check E[F(g eta)] = E[F(eta) R_g(eta)] for g = (phi, theta).
pub fn verify_semidirect(
    model: &LevyModel,
    window: &Window,
    g: &GroupElement,
    func: &Functional,
    opts: &VerifyOptions,
) -> Result<VerifyReport> {
    let sup_theta = g.theta.range_on(window.lower[0], window.upper[0]).1;
    check_truncation_bias(func, model, window, sup_theta, opts)?;
    crate::density::semidirect_log_density(model, window, g, &DiscreteMeasure::empty())?;
    let sampler = make_sampler(model, window, opts)?;
    let correction = current_correction(model, window, &g.theta)?;
    let log_scale = opts.density_scale.ln();
    let mut pairs = Vec::with_capacity(opts.n_samples);
    for i in 0..opts.n_samples {
        let eta = sampler.sample_replicate(i as u64)?;
        let lhs = func.eval(&g.apply(&eta)?);
        let log_r = semidirect_atom_term(model, window, g, &eta)? + correction + log_scale;
        pairs.push((lhs, func.eval(&eta) * log_r.exp()));
    }
    Ok(paired_report(&pairs, opts.seed))
}

/// Check the level-n identity E[F(g eta)] = E[F(eta) R_g^(n)(eta)] for a
/// level-n functional F. Works on infinite-mass models; that is its point.
pub fn verify_partial(
    model: &LevyModel,
    window: &Window,
    g: &GroupElement,
    func: &Functional,
    opts: &VerifyOptions,
) -> Result<VerifyReport> {
    let n = func.level.ok_or_else(|| {
        CrmError::Config("verify_partial needs a level-n functional (set func.level)".into())
    })?;
    let sup_theta = g.theta.range_on(window.lower[0], window.upper[0]).1;
    check_truncation_bias(func, model, window, sup_theta, opts)?;
    let sampler = make_sampler(model, window, opts)?;
    let k = partial_level_k(&g.theta, window, n);
    let correction = current_correction(model, window, &g.theta)?;
    let log_scale = opts.density_scale.ln();
    let mut pairs = Vec::with_capacity(opts.n_samples);
    for i in 0..opts.n_samples {
        let eta = sampler.sample_replicate(i as u64)?;
        let lhs = func.eval(&g.apply(&eta)?);
        let log_r = partial_atom_term(model, window, g, &eta, k)? + correction + log_scale;
        pairs.push((lhs, func.eval(&eta) * log_r.exp()));
    }
    Ok(paired_report(&pairs, opts.seed))
}

/// Reference value for E[exp(-t eta(region))]: the closed form
/// (1 + alpha t)^{-beta vol} for the constant-field gamma family, quadrature
/// of the Laplace exponent otherwise.
pub fn laplace_reference(
    model: &LevyModel,
    window: &Window,
    region: &Window,
    t: f64,
    eps_trunc: f64,
) -> Result<f64> {
    let vol = region.volume();
    match (&model.family, &model.alpha, &model.beta) {
        (Family::Gamma, FieldFn::Constant(a), FieldFn::Constant(b)) => {
            Ok((1.0 + a * t).powf(-b * vol))
        }
        _ => laplace_exact(
            model,
            window,
            |x| if region.contains(x) { 1.0 } else { 0.0 },
            t,
            eps_trunc,
        ),
    }
}

/// Monte Carlo Laplace functional against the reference value.
pub fn verify_laplace(
    model: &LevyModel,
    window: &Window,
    region: &Window,
    t: f64,
    opts: &VerifyOptions,
) -> Result<VerifyReport> {
    let sampler = make_sampler(model, window, opts)?;
    let mc = sampler.laplace_mc(
        |x| if region.contains(x) { 1.0 } else { 0.0 },
        t,
        opts.n_samples,
    )?;
    let exact = laplace_reference(model, window, region, t, 0.0)?;
    let z = if mc.std_error > 0.0 { (mc.mean - exact) / mc.std_error } else { 0.0 };
    Ok(VerifyReport {
        lhs: mc,
        rhs: McEstimate { mean: exact, std_error: 0.0, n_samples: 0 },
        z,
        pass: z.abs() <= 3.0,
        seed: opts.seed,
    })
}

#[derive(Debug, Clone)]
pub struct MarginalReport {
    pub test: TestResult,
    pub pass: bool,
    pub shape: f64,
    pub scale: f64,
    pub seed: u64,
}

/// KS test of eta(region) against the Gamma(beta vol, alpha) marginal of the
/// gamma family with constant fields.
pub fn verify_gamma_marginal(
    model: &LevyModel,
    window: &Window,
    region: &Window,
    alpha_level: f64,
    opts: &VerifyOptions,
) -> Result<MarginalReport> {
    let (shape_rate, scale) = match (&model.family, &model.alpha, &model.beta) {
        (Family::Gamma, FieldFn::Constant(a), FieldFn::Constant(b)) => (*b, *a),
        _ => {
            return Err(CrmError::Config(
                "the marginal-law check applies to the constant-field gamma family".into(),
            ))
        }
    };
    let shape = shape_rate * region.volume();
    let sampler = make_sampler(model, window, opts)?;
    let mut values: Vec<f64> = (0..opts.n_samples)
        .map(|i| sampler.sample_replicate(i as u64).map(|eta| eta.mass_in(region)))
        .collect::<Result<_>>()?;
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let test = ks_test(&values, |x| {
        crate::numerics::special::gamma_cdf(x, shape, scale).unwrap_or(0.0)
    })?;
    Ok(MarginalReport { pass: test.p_value >= alpha_level, test, shape, scale, seed: opts.seed })
}
