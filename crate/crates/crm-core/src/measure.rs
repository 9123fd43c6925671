//! Discrete Radon measures, marked configurations on X x R_+, and the
//! bijection between them.
//!
//! Atoms are kept sorted lexicographically by location so serialization and
//! reports are deterministic. Duplicate locations are rejected rather than
//! merged: merging would silently break the one-to-one weight-transformation
//! semantics of the group actions.

use crate::error::{CrmError, Result};
use crate::window::Window;
use std::cmp::Ordering;
use std::io::{BufRead, Write};

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedAtom {
    pub location: Vec<f64>,
    pub weight: f64,
}

impl WeightedAtom {
    pub fn new(location: Vec<f64>, weight: f64) -> Result<Self> {
        if !(weight > 0.0) || !weight.is_finite() {
            return Err(CrmError::Invariant(format!("atom weight must be positive and finite, got {weight}")));
        }
        if location.is_empty() || location.iter().any(|c| !c.is_finite()) {
            return Err(CrmError::Invariant("atom location must be nonempty and finite".into()));
        }
        Ok(WeightedAtom { location, weight })
    }
}

fn cmp_locations(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y) {
            Some(Ordering::Equal) | None => continue,
            Some(ord) => return ord,
        }
    }
    a.len().cmp(&b.len())
}

/// An element of K(X): a finite sum of positive point masses with pairwise
/// distinct locations.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DiscreteMeasure {
    atoms: Vec<WeightedAtom>,
}

impl DiscreteMeasure {
    pub fn empty() -> Self {
        DiscreteMeasure { atoms: Vec::new() }
    }

    pub fn new(mut atoms: Vec<WeightedAtom>) -> Result<Self> {
        atoms.sort_by(|a, b| cmp_locations(&a.location, &b.location));
        for pair in atoms.windows(2) {
            if pair[0].location == pair[1].location {
                return Err(CrmError::Pinpointing(format!(
                    "duplicate atom location {:?}",
                    pair[0].location
                )));
            }
        }
        Ok(DiscreteMeasure { atoms })
    }

    pub fn atoms(&self) -> &[WeightedAtom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// <f, eta> = sum_i f(x_i) s_i.
    pub fn integrate<F: Fn(&[f64]) -> f64>(&self, f: F) -> f64 {
        self.atoms.iter().map(|a| f(&a.location) * a.weight).sum()
    }

    /// Total weight carried by atoms inside `region`.
    pub fn mass_in(&self, region: &Window) -> f64 {
        self.atoms
            .iter()
            .filter(|a| region.contains(&a.location))
            .map(|a| a.weight)
            .sum()
    }

    /// Keep exactly the atoms of weight >= 1/n (the level-n restriction of
    /// the filtration underlying partial quasi-invariance).
    pub fn restrict_level(&self, n: u32) -> Self {
        assert!(n >= 1, "restriction level must be >= 1");
        let threshold = 1.0 / n as f64;
        DiscreteMeasure {
            atoms: self
                .atoms
                .iter()
                .filter(|a| a.weight >= threshold)
                .cloned()
                .collect(),
        }
    }

    pub fn write_csv<W: Write>(&self, dim: usize, out: &mut W) -> Result<()> {
        let header: Vec<String> = (1..=dim).map(|i| format!("x_{i}")).collect();
        writeln!(out, "{},weight", header.join(","))?;
        for a in &self.atoms {
            let coords: Vec<String> = a.location.iter().map(|c| format!("{c:?}")).collect();
            writeln!(out, "{},{:?}", coords.join(","), a.weight)?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines
            .next()
            .ok_or_else(|| CrmError::Config("empty CSV: missing header".into()))??;
        let cols: Vec<&str> = header.trim().split(',').collect();
        if cols.last() != Some(&"weight") || cols.len() < 2 {
            return Err(CrmError::Config(format!("bad CSV header: {header}")));
        }
        let d = cols.len() - 1;
        let mut atoms = Vec::new();
        for line in lines {
            let line = line?;
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            let parts: Vec<&str> = t.split(',').collect();
            if parts.len() != d + 1 {
                return Err(CrmError::Config(format!("bad CSV row: {t}")));
            }
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| CrmError::Config(format!("bad number in CSV: {s}")))
            };
            let location = parts[..d].iter().map(|s| parse(s)).collect::<Result<Vec<_>>>()?;
            let weight = parse(parts[d])?;
            atoms.push(WeightedAtom::new(location, weight)?);
        }
        DiscreteMeasure::new(atoms)
    }
}

/// A finite pinpointing configuration on X x R_+: pairwise distinct
/// locations, strictly positive marks.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Configuration {
    pub points: Vec<(Vec<f64>, f64)>,
}

impl Configuration {
    pub fn new(points: Vec<(Vec<f64>, f64)>) -> Result<Self> {
        if points.iter().any(|(_, s)| !(*s > 0.0)) {
            return Err(CrmError::Invariant("configuration marks must be positive".into()));
        }
        Ok(Configuration { points })
    }
}

/// The map R sending a configuration {(x_i, s_i)} to the measure
/// sum_i s_i delta_{x_i}.
pub fn r_map(gamma: &Configuration) -> Result<DiscreteMeasure> {
    DiscreteMeasure::new(
        gamma
            .points
            .iter()
            .map(|(x, s)| WeightedAtom::new(x.clone(), *s))
            .collect::<Result<Vec<_>>>()?,
    )
}

/// Inverse of `r_map`; exact on the sorted representation.
pub fn r_inverse(eta: &DiscreteMeasure) -> Configuration {
    Configuration {
        points: eta
            .atoms
            .iter()
            .map(|a| (a.location.clone(), a.weight))
            .collect(),
    }
}
