//! Bounded rectangular windows of R^d with Lebesgue reference measure.

use crate::error::{CrmError, Result};
use serde::{Deserialize, Serialize};

/// A bounded axis-aligned box, optionally carrying a grid used by
/// piecewise-constant fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Cell count per axis for piecewise-constant fields.
    pub grid: Option<Vec<usize>>,
}

impl Window {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        Self::with_grid(lower, upper, None)
    }

    pub fn with_grid(lower: Vec<f64>, upper: Vec<f64>, grid: Option<Vec<usize>>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(CrmError::Invariant("window bounds must be nonempty and of equal dimension".into()));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l < u) || !l.is_finite() || !u.is_finite()) {
            return Err(CrmError::Invariant("window requires lower < upper componentwise".into()));
        }
        if let Some(g) = &grid {
            if g.len() != lower.len() || g.iter().any(|&n| n == 0) {
                return Err(CrmError::Invariant("grid must give a positive cell count per axis".into()));
            }
        }
        Ok(Window { lower, upper, grid })
    }

    /// Convenience constructor for the desk default d = 1.
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo], vec![hi])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn volume(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(l, u)| u - l).product()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(xi, (l, u))| *xi >= *l && *xi <= *u)
    }

    /// Total number of grid cells (1 when no grid is set).
    pub fn n_cells(&self) -> usize {
        match &self.grid {
            Some(g) => g.iter().product(),
            None => 1,
        }
    }

    /// Axis-aligned bounds of the cell with the given flat index (row-major).
    pub fn cell_bounds(&self, index: usize) -> (Vec<f64>, Vec<f64>) {
        match &self.grid {
            None => (self.lower.clone(), self.upper.clone()),
            Some(g) => {
                let d = self.dim();
                let mut lo = vec![0.0; d];
                let mut hi = vec![0.0; d];
                let mut rem = index;
                for axis in (0..d).rev() {
                    let n = g[axis];
                    let i = rem % n;
                    rem /= n;
                    let step = (self.upper[axis] - self.lower[axis]) / n as f64;
                    lo[axis] = self.lower[axis] + i as f64 * step;
                    hi[axis] = lo[axis] + step;
                }
                (lo, hi)
            }
        }
    }

    /// Flat cell index of a point, or None outside the window.
    pub fn cell_index(&self, x: &[f64]) -> Option<usize> {
        if !self.contains(x) {
            return None;
        }
        match &self.grid {
            None => Some(0),
            Some(g) => {
                let mut index = 0usize;
                for axis in 0..self.dim() {
                    let n = g[axis];
                    let step = (self.upper[axis] - self.lower[axis]) / n as f64;
                    let i = (((x[axis] - self.lower[axis]) / step) as usize).min(n - 1);
                    index = index * n + i;
                }
                Some(index)
            }
        }
    }

    pub fn cell_volume(&self, index: usize) -> f64 {
        let (lo, hi) = self.cell_bounds(index);
        lo.iter().zip(&hi).map(|(l, u)| u - l).product()
    }
}
