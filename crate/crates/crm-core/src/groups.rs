//! The transformation groups: currents (positive multiplier fields), compactly
//! supported diffeomorphisms of the window, and their semidirect product.
//!
//! Everything is built from the standard mollifier bump so elements are smooth
//! and equal to the identity outside an explicit hull. A step current is also
//! available, gated behind an opt-in flag, for probing what happens when the
//! smoothness hypotheses fail.

use crate::error::{CrmError, Result};
use crate::measure::{DiscreteMeasure, WeightedAtom};
use std::sync::{Arc, OnceLock};

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// exp(-1/(1-u^2)) on (-1, 1), zero outside: the standard smooth bump.
pub fn bump(u: f64) -> f64 {
    if u.abs() < 1.0 {
        (-1.0 / (1.0 - u * u)).exp()
    } else {
        0.0
    }
}

/// d/du of `bump`.
pub fn bump_deriv(u: f64) -> f64 {
    if u.abs() < 1.0 {
        let q = 1.0 - u * u;
        bump(u) * (-2.0 * u) / (q * q)
    } else {
        0.0
    }
}

/// max_u |bump'(u)|, used by the diffeomorphism contraction check.
fn bump_deriv_sup() -> f64 {
    static SUP: OnceLock<f64> = OnceLock::new();
    *SUP.get_or_init(|| {
        let mut hi = 0.0f64;
        for i in 0..200_000 {
            let u = -1.0 + 2.0 * (i as f64 + 0.5) / 200_000.0;
            hi = hi.max(bump_deriv(u).abs());
        }
        hi
    })
}

/// One additive term of a log-multiplier: amplitude * bump((x - center)/width).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BumpTerm {
    pub amplitude: f64,
    pub center: f64,
    pub width: f64,
}

impl BumpTerm {
    pub fn new(amplitude: f64, center: f64, width: f64) -> Result<Self> {
        if !(width > 0.0) || !amplitude.is_finite() || !center.is_finite() {
            return Err(CrmError::Invariant(format!(
                "bump term needs finite amplitude/center and width > 0, got ({amplitude}, {center}, {width})"
            )));
        }
        Ok(BumpTerm { amplitude, center, width })
    }

    fn eval(&self, x: f64) -> f64 {
        self.amplitude * bump((x - self.center) / self.width)
    }
}

/// A current: a measurable multiplier theta with values in (0, inf), equal
/// to 1 outside a bounded hull. Smooth variants are built from bumps in the
/// exponent; `Step` is deliberately non-smooth.
#[derive(Clone)]
pub enum Current {
    /// theta(x) = exp(sum_i a_i bump((x - c_i)/w_i)); identity when empty.
    Bumps(Vec<BumpTerm>),
    /// theta = factor on [lo, hi], 1 elsewhere. Not smooth; construct via
    /// `Current::step` which demands an explicit opt-in.
    Step { factor: f64, lo: f64, hi: f64 },
    Prod(Box<Current>, Box<Current>),
    Inv(Box<Current>),
    /// theta Composed with a diffeomorphism: x -> theta(phi(x)).
    Precomposed(Box<Current>, Box<Diffeo>),
}

impl std::fmt::Debug for Current {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Current::Bumps(terms) => write!(f, "Bumps({} terms)", terms.len()),
            Current::Step { factor, lo, hi } => write!(f, "Step({factor} on [{lo}, {hi}])"),
            Current::Prod(a, b) => write!(f, "Prod({a:?}, {b:?})"),
            Current::Inv(a) => write!(f, "Inv({a:?})"),
            Current::Precomposed(a, _) => write!(f, "Precomposed({a:?}, phi)"),
        }
    }
}

impl Current {
    pub fn identity() -> Self {
        Current::Bumps(Vec::new())
    }

    pub fn bumps(terms: Vec<BumpTerm>) -> Self {
        Current::Bumps(terms)
    }

    /// Single-bump convenience: theta(x) = exp(a * bump((x-c)/w)).
    pub fn bump(amplitude: f64, center: f64, width: f64) -> Result<Self> {
        Ok(Current::Bumps(vec![BumpTerm::new(amplitude, center, width)?]))
    }

    /// Discontinuous multiplier; callers must acknowledge the smoothness
    /// hypotheses are being dropped.
    pub fn step(factor: f64, lo: f64, hi: f64, allow_nonsmooth: bool) -> Result<Self> {
        if !allow_nonsmooth {
            return Err(CrmError::Config(
                "step currents are outside the smooth class; pass allow_nonsmooth to use one".into(),
            ));
        }
        if !(factor > 0.0) || !(lo < hi) {
            return Err(CrmError::Invariant(format!(
                "step current needs factor > 0 and lo < hi, got ({factor}, {lo}, {hi})"
            )));
        }
        Ok(Current::Step { factor, lo, hi })
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Current::Bumps(terms) => terms.iter().map(|t| t.eval(x)).sum::<f64>().exp(),
            Current::Step { factor, lo, hi } => {
                if x >= *lo && x <= *hi {
                    *factor
                } else {
                    1.0
                }
            }
            Current::Prod(a, b) => a.eval(x) * b.eval(x),
            Current::Inv(a) => 1.0 / a.eval(x),
            Current::Precomposed(a, phi) => a.eval(phi.forward(x)),
        }
    }

    pub fn is_identity(&self) -> bool {
        match self {
            Current::Bumps(terms) => terms.iter().all(|t| t.amplitude == 0.0),
            Current::Step { factor, .. } => *factor == 1.0,
            Current::Prod(a, b) => a.is_identity() && b.is_identity(),
            Current::Inv(a) => a.is_identity(),
            Current::Precomposed(a, _) => a.is_identity(),
        }
    }

    /// Interval outside of which theta is identically 1, or None when no
    /// bound is known.
    pub fn support_hull(&self) -> Option<(f64, f64)> {
        match self {
            Current::Bumps(terms) => {
                let mut hull: Option<(f64, f64)> = None;
                for t in terms {
                    if t.amplitude == 0.0 {
                        continue;
                    }
                    let (lo, hi) = (t.center - t.width, t.center + t.width);
                    hull = Some(match hull {
                        None => (lo, hi),
                        Some((a, b)) => (a.min(lo), b.max(hi)),
                    });
                }
                hull.or(Some((0.0, 0.0)))
            }
            Current::Step { lo, hi, factor } => {
                if *factor == 1.0 {
                    Some((0.0, 0.0))
                } else {
                    Some((*lo, *hi))
                }
            }
            Current::Prod(a, b) => match (a.support_hull(), b.support_hull()) {
                (Some((a0, a1)), Some((b0, b1))) => Some((a0.min(b0), a1.max(b1))),
                _ => None,
            },
            Current::Inv(a) => a.support_hull(),
            Current::Precomposed(a, phi) => {
                // phi is the identity outside its own hull, so the composed
                // multiplier is 1 outside phi^{-1}(hull(a)) union hull(phi).
                let (a0, a1) = a.support_hull()?;
                let (p0, p1) = (phi.inverse(a0).ok()?, phi.inverse(a1).ok()?);
                match phi.support_hull() {
                    Some((q0, q1)) => Some((p0.min(q0), p1.max(q1))),
                    None => None,
                }
            }
        }
    }

    /// (inf, sup) of theta over [lo, hi] by dense scan; exact enough for
    /// preconditions and truncation-level bookkeeping.
    pub fn range_on(&self, lo: f64, hi: f64) -> (f64, f64) {
        const N: usize = 8192;
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for i in 0..=N {
            let x = lo + (hi - lo) * i as f64 / N as f64;
            let v = self.eval(x);
            min = min.min(v);
            max = max.max(v);
        }
        // Step discontinuities can slip between scan points.
        if let Current::Step { factor, lo: a, hi: b } = self {
            if *a <= hi && *b >= lo {
                min = min.min(*factor);
                max = max.max(*factor);
            }
        }
        (min, max)
    }

    pub fn prod(self, other: Current) -> Current {
        Current::Prod(Box::new(self), Box::new(other))
    }

    pub fn inv(self) -> Current {
        Current::Inv(Box::new(self))
    }

    pub fn precompose(self, phi: Diffeo) -> Current {
        if phi.is_identity() {
            self
        } else {
            Current::Precomposed(Box::new(self), Box::new(phi))
        }
    }
}

/// A compactly supported diffeomorphism of R (the spatial group acts axis by
/// axis; the desk case is d = 1).
#[derive(Clone)]
pub enum Diffeo {
    Identity,
    /// phi(x) = x + a * bump((x - c)/w). A diffeomorphism iff
    /// |a| sup|bump'| / w < 1, enforced at construction.
    Bump { amplitude: f64, center: f64, width: f64 },
    /// Right-to-left composition: Composed([f, g]) is x -> f(g(x)).
    Composed(Vec<Diffeo>),
    /// Escape hatch for tests: explicit forward/inverse/derivative closures.
    Raw { forward: ScalarFn, inverse: ScalarFn, derivative: ScalarFn },
}

impl std::fmt::Debug for Diffeo {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Diffeo::Identity => write!(f, "Identity"),
            Diffeo::Bump { amplitude, center, width } => {
                write!(f, "Bump(a={amplitude}, c={center}, w={width})")
            }
            Diffeo::Composed(parts) => write!(f, "Composed({} parts)", parts.len()),
            Diffeo::Raw { .. } => write!(f, "Raw(..)"),
        }
    }
}

impl Diffeo {
    pub fn bump(amplitude: f64, center: f64, width: f64) -> Result<Self> {
        if !(width > 0.0) || !amplitude.is_finite() || !center.is_finite() {
            return Err(CrmError::Invariant(format!(
                "bump diffeomorphism needs finite parameters and width > 0, got ({amplitude}, {center}, {width})"
            )));
        }
        let contraction = amplitude.abs() * bump_deriv_sup() / width;
        if contraction >= 1.0 {
            return Err(CrmError::Invariant(format!(
                "|amplitude| * sup|bump'| / width = {contraction:.4} >= 1: not injective"
            )));
        }
        Ok(Diffeo::Bump { amplitude, center, width })
    }

    pub fn compose(self, inner: Diffeo) -> Diffeo {
        match (self, inner) {
            (Diffeo::Identity, g) => g,
            (f, Diffeo::Identity) => f,
            (Diffeo::Composed(mut fs), Diffeo::Composed(gs)) => {
                fs.extend(gs);
                Diffeo::Composed(fs)
            }
            (Diffeo::Composed(mut fs), g) => {
                fs.push(g);
                Diffeo::Composed(fs)
            }
            (f, Diffeo::Composed(mut gs)) => {
                gs.insert(0, f);
                Diffeo::Composed(gs)
            }
            (f, g) => Diffeo::Composed(vec![f, g]),
        }
    }

    pub fn is_identity(&self) -> bool {
        match self {
            Diffeo::Identity => true,
            Diffeo::Bump { amplitude, .. } => *amplitude == 0.0,
            Diffeo::Composed(parts) => parts.iter().all(Diffeo::is_identity),
            Diffeo::Raw { .. } => false,
        }
    }

    /// Interval outside of which phi(x) = x, or None when unknown.
    pub fn support_hull(&self) -> Option<(f64, f64)> {
        match self {
            Diffeo::Identity => Some((0.0, 0.0)),
            Diffeo::Bump { amplitude, center, width } => {
                if *amplitude == 0.0 {
                    Some((0.0, 0.0))
                } else {
                    Some((center - width, center + width))
                }
            }
            Diffeo::Composed(parts) => {
                let mut hull: Option<(f64, f64)> = None;
                for p in parts {
                    let (lo, hi) = p.support_hull()?;
                    if lo == hi {
                        continue;
                    }
                    hull = Some(match hull {
                        None => (lo, hi),
                        Some((a, b)) => (a.min(lo), b.max(hi)),
                    });
                }
                hull.or(Some((0.0, 0.0)))
            }
            Diffeo::Raw { .. } => None,
        }
    }

    pub fn forward(&self, x: f64) -> f64 {
        match self {
            Diffeo::Identity => x,
            Diffeo::Bump { amplitude, center, width } => {
                x + amplitude * bump((x - center) / width)
            }
            Diffeo::Composed(parts) => parts.iter().rev().fold(x, |y, p| p.forward(y)),
            Diffeo::Raw { forward, .. } => forward(x),
        }
    }

    /// phi'(x).
    pub fn derivative(&self, x: f64) -> f64 {
        match self {
            Diffeo::Identity => 1.0,
            Diffeo::Bump { amplitude, center, width } => {
                1.0 + amplitude / width * bump_deriv((x - center) / width)
            }
            Diffeo::Composed(parts) => {
                // Chain rule, innermost first.
                let mut y = x;
                let mut d = 1.0;
                for p in parts.iter().rev() {
                    d *= p.derivative(y);
                    y = p.forward(y);
                }
                d
            }
            Diffeo::Raw { derivative, .. } => derivative(x),
        }
    }

    /// phi^{-1}(y) by safeguarded Newton iteration (bisection fallback);
    /// analytic where available.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        match self {
            Diffeo::Identity => Ok(y),
            Diffeo::Raw { inverse, .. } => Ok(inverse(y)),
            Diffeo::Composed(parts) => {
                let mut x = y;
                for p in parts {
                    x = p.inverse(x)?;
                }
                Ok(x)
            }
            Diffeo::Bump { amplitude, center, width } => {
                if *amplitude == 0.0 {
                    return Ok(y);
                }
                // phi moves points by at most |amplitude|, so the preimage
                // lies in [y - |a|, y + |a|].
                let a = amplitude.abs();
                let (mut lo, mut hi) = (y - a, y + a);
                if (y - center).abs() >= width + a {
                    return Ok(y); // outside the support, phi = id
                }
                let mut x = y;
                for _ in 0..200 {
                    let f = self.forward(x) - y;
                    if f.abs() < 1e-14 * (1.0 + y.abs()) {
                        return Ok(x);
                    }
                    if f > 0.0 {
                        hi = x;
                    } else {
                        lo = x;
                    }
                    let d = self.derivative(x);
                    let mut next = x - f / d;
                    if !(next > lo && next < hi) {
                        next = 0.5 * (lo + hi);
                    }
                    if (next - x).abs() < 1e-15 * (1.0 + x.abs()) {
                        return Ok(next);
                    }
                    x = next;
                }
                if (self.forward(x) - y).abs() < 1e-10 * (1.0 + y.abs()) {
                    Ok(x)
                } else {
                    Err(CrmError::Numeric(format!("diffeomorphism inverse failed to converge at y = {y}")))
                }
            }
        }
    }

    pub fn inverted(&self) -> Diffeo {
        match self {
            Diffeo::Identity => Diffeo::Identity,
            other => {
                let fwd = other.clone();
                let back = other.clone();
                let dv = other.clone();
                Diffeo::Raw {
                    forward: Arc::new(move |x| fwd.inverse(x).unwrap_or(f64::NAN)),
                    inverse: Arc::new(move |y| back.forward(y)),
                    derivative: Arc::new(move |x| {
                        let pre = dv.inverse(x).unwrap_or(f64::NAN);
                        1.0 / dv.derivative(pre)
                    }),
                }
            }
        }
    }
}

/// An element (phi, theta) of the semidirect product Diff(X) x Currents,
/// acting on a measure by sum s_x delta_x -> sum theta(phi(x)) s_x delta_{phi(x)}.
#[derive(Debug, Clone)]
pub struct GroupElement {
    pub phi: Diffeo,
    pub theta: Current,
}

impl GroupElement {
    pub fn identity() -> Self {
        GroupElement { phi: Diffeo::Identity, theta: Current::identity() }
    }

    pub fn from_current(theta: Current) -> Self {
        GroupElement { phi: Diffeo::Identity, theta }
    }

    pub fn from_diffeo(phi: Diffeo) -> Self {
        GroupElement { phi, theta: Current::identity() }
    }

    pub fn apply(&self, eta: &DiscreteMeasure) -> Result<DiscreteMeasure> {
        let atoms = eta
            .atoms()
            .iter()
            .map(|a| {
                let x = self.phi.forward(a.location[0]);
                let mut loc = a.location.clone();
                loc[0] = x;
                WeightedAtom::new(loc, self.theta.eval(x) * a.weight)
            })
            .collect::<Result<Vec<_>>>()?;
        DiscreteMeasure::new(atoms)
    }

    /// (phi1, theta1) * (phi2, theta2) = (phi1 . phi2, theta1 * (theta2 . phi1^{-1})),
    /// so that apply(compose(g1, g2)) = apply(g1) . apply(g2).
    pub fn compose(&self, other: &GroupElement) -> GroupElement {
        let phi = self.phi.clone().compose(other.phi.clone());
        let theta = self
            .theta
            .clone()
            .prod(other.theta.clone().precompose(self.phi.inverted()));
        GroupElement { phi, theta }
    }

    pub fn inverse(&self) -> GroupElement {
        GroupElement {
            phi: self.phi.inverted(),
            theta: self.theta.clone().inv().precompose(self.phi.clone()),
        }
    }
}

/// Weight-only action of a current: sum s_x delta_x -> sum theta(x) s_x delta_x.
pub fn apply_current(theta: &Current, eta: &DiscreteMeasure) -> Result<DiscreteMeasure> {
    GroupElement::from_current(theta.clone()).apply(eta)
}

/// Location-only action of a diffeomorphism: weights ride along unchanged.
pub fn apply_diffeo(phi: &Diffeo, eta: &DiscreteMeasure) -> Result<DiscreteMeasure> {
    GroupElement::from_diffeo(phi.clone()).apply(eta)
}
