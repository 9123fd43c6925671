//! Flat key=value run configuration, shared by the command-line tools.
//!
//! The format is deliberately simple: one `key = value` per line, `#` starts
//! a comment. Keys are dotted for grouping (`current.amplitude`). Builders
//! turn the parsed map into the typed objects of the crate.

use crate::error::{CrmError, Result};
use crate::groups::{BumpTerm, Current, Diffeo, GroupElement};
use crate::levy::{FieldFn, LevyModel, Tail};
use crate::verify::{Functional, FunctionalKind, VerifyOptions};
use crate::window::Window;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Default)]
pub struct Config {
    entries: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(i) => &raw[..i],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CrmError::Config(format!("line {}: expected key = value, got `{raw}`", lineno + 1))
            })?;
            entries.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(Config { entries })
    }

    pub fn from_pairs<I: IntoIterator<Item = (String, String)>>(pairs: I) -> Self {
        Config { entries: pairs.into_iter().collect() }
    }

    /// Apply overrides of the form `key=value` on top of the file contents.
    pub fn override_with(&mut self, assignments: &[String]) -> Result<()> {
        for a in assignments {
            let (k, v) = a
                .split_once('=')
                .ok_or_else(|| CrmError::Config(format!("override `{a}` is not key=value")))?;
            self.entries.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(())
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.entries
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| CrmError::Config(format!("missing required key `{key}`")))
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        self.require(key)?
            .parse()
            .map_err(|_| CrmError::Config(format!("key `{key}` is not a number")))
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        match self.get(key) {
            Some(v) => v
                .parse()
                .map_err(|_| CrmError::Config(format!("key `{key}` is not a number"))),
            None => Ok(default),
        }
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64> {
        match self.get(key) {
            Some(v) => v
                .parse()
                .map_err(|_| CrmError::Config(format!("key `{key}` is not an integer"))),
            None => Ok(default),
        }
    }

    pub fn bool_or(&self, key: &str, default: bool) -> Result<bool> {
        match self.get(key) {
            Some("true") | Some("1") | Some("yes") => Ok(true),
            Some("false") | Some("0") | Some("no") => Ok(false),
            Some(v) => Err(CrmError::Config(format!("key `{key}`: `{v}` is not a boolean"))),
            None => Ok(default),
        }
    }

    fn interval(&self, key: &str) -> Result<(f64, f64)> {
        let raw = self.require(key)?;
        let (lo, hi) = raw
            .split_once(':')
            .ok_or_else(|| CrmError::Config(format!("key `{key}` must look like `lo:hi`")))?;
        let lo = lo
            .trim()
            .parse()
            .map_err(|_| CrmError::Config(format!("key `{key}`: bad lower bound")))?;
        let hi = hi
            .trim()
            .parse()
            .map_err(|_| CrmError::Config(format!("key `{key}`: bad upper bound")))?;
        Ok((lo, hi))
    }

    fn field(&self, key: &str, window: &Window) -> Result<FieldFn> {
        let raw = self.require(key)?;
        if raw.contains(',') {
            let values: Vec<f64> = raw
                .split(',')
                .map(|v| {
                    v.trim()
                        .parse()
                        .map_err(|_| CrmError::Config(format!("key `{key}`: bad grid value `{v}`")))
                })
                .collect::<Result<_>>()?;
            FieldFn::grid(window.clone(), values)
        } else {
            Ok(FieldFn::Constant(raw.parse().map_err(|_| {
                CrmError::Config(format!("key `{key}` is not a number or comma list"))
            })?))
        }
    }

    pub fn window(&self) -> Result<Window> {
        let (lo, hi) = self.interval("window")?;
        let grid = match self.get("grid") {
            Some(g) => Some(vec![g
                .parse()
                .map_err(|_| CrmError::Config("key `grid` is not an integer".into()))?]),
            None => None,
        };
        Window::with_grid(vec![lo], vec![hi], grid)
    }

    pub fn model(&self) -> Result<LevyModel> {
        let window = self.window()?;
        let alpha = self.field("alpha", &window)?;
        let beta = self.field("beta", &window)?;
        match self.require("family")? {
            "gamma" => LevyModel::gamma(alpha, beta),
            "log" | "log_type" => {
                let eps = self.f64_or("eps_family", crate::levy::DEFAULT_EPS_LOG)?;
                LevyModel::log_type(alpha, beta, eps, Tail::BetaExp)
            }
            "power" | "power_type" => {
                let eps = self.f64_or("eps_family", crate::levy::DEFAULT_EPS_POWER)?;
                LevyModel::power_type(alpha, beta, eps, Tail::BetaExp)
            }
            other => Err(CrmError::Config(format!("unknown family `{other}`"))),
        }
    }

    pub fn current(&self) -> Result<Current> {
        if self.get("current.step.factor").is_some() {
            let allow = self.bool_or("allow_nonsmooth", false)?;
            return Current::step(
                self.f64("current.step.factor")?,
                self.f64("current.step.lo")?,
                self.f64("current.step.hi")?,
                allow,
            );
        }
        match self.get("current.amplitude") {
            None => Ok(Current::identity()),
            Some(_) => Ok(Current::bumps(vec![BumpTerm::new(
                self.f64("current.amplitude")?,
                self.f64("current.center")?,
                self.f64("current.width")?,
            )?])),
        }
    }

    pub fn diffeo(&self) -> Result<Diffeo> {
        match self.get("diffeo.amplitude") {
            None => Ok(Diffeo::Identity),
            Some(_) => Diffeo::bump(
                self.f64("diffeo.amplitude")?,
                self.f64("diffeo.center")?,
                self.f64("diffeo.width")?,
            ),
        }
    }

    pub fn group(&self) -> Result<GroupElement> {
        Ok(GroupElement { phi: self.diffeo()?, theta: self.current()? })
    }

    pub fn functional(&self) -> Result<Functional> {
        let kind = match self.get("functional.kind").unwrap_or("exp_neg_mass") {
            "exp_neg_mass" => FunctionalKind::ExpNegMass,
            "exp_neg_tent" => FunctionalKind::ExpNegTent,
            "atom_indicator" => FunctionalKind::AtomIndicator,
            other => return Err(CrmError::Config(format!("unknown functional kind `{other}`"))),
        };
        let (lo, hi) = self.interval("functional.region")?;
        let level = match self.get("functional.level") {
            Some(v) => Some(v.parse().map_err(|_| {
                CrmError::Config("key `functional.level` is not an integer".into())
            })?),
            None => None,
        };
        Ok(Functional { kind, region: Window::interval(lo, hi)?, t: self.f64_or("functional.t", 1.0)?, level })
    }

    pub fn verify_options(&self) -> Result<VerifyOptions> {
        Ok(VerifyOptions {
            eps_trunc: self.f64_or("eps_trunc", 1e-6)?,
            seed: self.u64_or("seed", 0)?,
            n_samples: self.u64_or("n_samples", 10_000)? as usize,
            density_scale: self.f64_or("density_scale", 1.0)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::Family;

    const SAMPLE: &str = "
        # gamma on the unit interval
        family = gamma
        alpha = 1.0
        beta = 1.0
        window = 0:1
        eps_trunc = 1e-6
        seed = 42
        n_samples = 5000
        current.amplitude = 0.8
        current.center = 0.5
        current.width = 0.3
        functional.region = 0.2:0.8
        functional.t = 1.5
    ";

    #[test]
    fn parses_typed_objects() {
        let c = Config::parse(SAMPLE).unwrap();
        let m = c.model().unwrap();
        assert_eq!(m.family, Family::Gamma);
        let w = c.window().unwrap();
        assert_eq!(w.dim(), 1);
        let theta = c.current().unwrap();
        assert!(!theta.is_identity());
        assert!(c.diffeo().unwrap().is_identity());
        let f = c.functional().unwrap();
        assert_eq!(f.t, 1.5);
        let opts = c.verify_options().unwrap();
        assert_eq!(opts.seed, 42);
        assert_eq!(opts.n_samples, 5000);
    }

    #[test]
    fn overrides_win() {
        let mut c = Config::parse(SAMPLE).unwrap();
        c.override_with(&["seed=7".to_string(), "beta=2.0".to_string()]).unwrap();
        assert_eq!(c.verify_options().unwrap().seed, 7);
        assert_eq!(c.model().unwrap().beta.eval(&[0.5]), 2.0);
    }

    #[test]
    fn grid_fields_parse() {
        let c = Config::parse("family=gamma\nalpha=1.0\nbeta=1.0,2.0\nwindow=0:1\ngrid=2").unwrap();
        let m = c.model().unwrap();
        assert_eq!(m.beta.eval(&[0.25]), 1.0);
        assert_eq!(m.beta.eval(&[0.75]), 2.0);
    }

    #[test]
    fn step_current_needs_flag() {
        let base = "family=gamma\nalpha=1\nbeta=1\nwindow=0:1\ncurrent.step.factor=2\ncurrent.step.lo=0.2\ncurrent.step.hi=0.6";
        let c = Config::parse(base).unwrap();
        assert!(c.current().is_err());
        let c = Config::parse(&format!("{base}\nallow_nonsmooth=true")).unwrap();
        assert!(c.current().is_ok());
    }

    #[test]
    fn bad_lines_are_rejected() {
        assert!(Config::parse("not a pair").is_err());
        let c = Config::parse("family=nope\nalpha=1\nbeta=1\nwindow=0:1").unwrap();
        assert!(c.model().is_err());
    }
}
