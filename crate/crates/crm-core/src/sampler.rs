//! Sampling from the law of the random measure with a hard truncation of the
//! mark space at `eps_trunc`.
//!
//! The truncated intensity `l(x,s)/s` on window x [eps, inf) has finite mass,
//! so a draw is: atom count ~ Poisson(total mass), cell chosen proportionally
//! to cell mass, location uniform in the cell, weight by inverse-CDF lookup in
//! a per-cell table. Fields must be constant on each sampling cell; smooth
//! field closures are rejected rather than silently discretized.

use crate::error::{CrmError, Result};
use crate::levy::{spatial_integral, Family, FieldFn, LevyModel, Tail};
use crate::measure::{DiscreteMeasure, WeightedAtom};
use crate::numerics::quad::integrate_1d;
use crate::rng::CounterRng;
use crate::window::Window;

/// Number of log-spaced CDF knots per sampling cell.
const CDF_KNOTS: usize = 4096;
/// Relative mark mass allowed beyond the tabulated upper endpoint.
const TAIL_CUT: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct SamplerSpec {
    pub model: LevyModel,
    pub window: Window,
    /// Lower mark cutoff; must be > 0 for infinite-mass models.
    pub eps_trunc: f64,
    pub seed: u64,
}

struct CellTable {
    lo: Vec<f64>,
    hi: Vec<f64>,
    mass: f64,
    /// ln s at each knot.
    log_knots: Vec<f64>,
    /// Unnormalized CDF of the mark distribution at the knots.
    cdf: Vec<f64>,
}

pub struct Sampler {
    spec: SamplerSpec,
    cells: Vec<CellTable>,
    /// Cumulative cell masses for cell selection.
    cell_cum: Vec<f64>,
    total_mass: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: usize,
}

fn require_cellwise_constant(field: &FieldFn, window: &Window, what: &str) -> Result<()> {
    match field {
        FieldFn::Constant(_) => Ok(()),
        FieldFn::Grid { window: w, .. } => {
            if w == window {
                Ok(())
            } else {
                Err(CrmError::Config(format!(
                    "{what}: grid field must live on the sampling window's own grid"
                )))
            }
        }
        FieldFn::Smooth(_) => Err(CrmError::Config(format!(
            "{what}: sampling needs piecewise-constant fields, not a smooth closure"
        ))),
    }
}

impl Sampler {
    pub fn new(spec: SamplerSpec) -> Result<Self> {
        if !(spec.eps_trunc > 0.0) {
            return Err(CrmError::Config(format!(
                "eps_trunc must be > 0, got {}",
                spec.eps_trunc
            )));
        }
        if spec.model.family == Family::Custom {
            return Err(CrmError::Config(
                "sampling needs a named family with per-cell closed-form masses".into(),
            ));
        }
        if matches!(spec.model.tail, Tail::Custom(_)) {
            return Err(CrmError::Config(
                "sampling supports the default exponential tail only".into(),
            ));
        }
        require_cellwise_constant(&spec.model.alpha, &spec.window, "alpha")?;
        require_cellwise_constant(&spec.model.beta, &spec.window, "beta")?;

        let eps = spec.eps_trunc;
        let mut cells = Vec::with_capacity(spec.window.n_cells());
        let mut cell_cum = Vec::with_capacity(spec.window.n_cells());
        let mut total = 0.0;
        for idx in 0..spec.window.n_cells() {
            let (lo, hi) = spec.window.cell_bounds(idx);
            let mid: Vec<f64> = lo.iter().zip(&hi).map(|(l, u)| 0.5 * (l + u)).collect();
            let volume = spec.window.cell_volume(idx);
            let mark_mass = spec.model.mark_mass_at(&mid, eps)?;
            let mass = mark_mass * volume;
            let table = if mass > 0.0 {
                // Grow the tabulated range until the remaining tail is
                // negligible relative to the cell's mark mass.
                let mut s_max = (2.0 * eps).max(1.0);
                while spec.model.mark_mass_at(&mid, s_max)? > TAIL_CUT * mark_mass {
                    s_max *= 2.0;
                    if s_max > 1e300 {
                        return Err(CrmError::Numeric("mark tail does not decay".into()));
                    }
                }
                let (l0, l1) = (eps.ln(), s_max.ln());
                let mut log_knots = Vec::with_capacity(CDF_KNOTS);
                let mut cdf = Vec::with_capacity(CDF_KNOTS);
                for k in 0..CDF_KNOTS {
                    let ls = l0 + (l1 - l0) * k as f64 / (CDF_KNOTS - 1) as f64;
                    log_knots.push(ls);
                    cdf.push(mark_mass - spec.model.mark_mass_at(&mid, ls.exp())?);
                }
                CellTable { lo, hi, mass, log_knots, cdf }
            } else {
                CellTable { lo, hi, mass: 0.0, log_knots: Vec::new(), cdf: Vec::new() }
            };
            total += table.mass;
            cells.push(table);
            cell_cum.push(total);
        }
        Ok(Sampler { spec, cells, cell_cum, total_mass: total })
    }

    /// m(window x [eps, inf)): the Poisson mean of the atom count.
    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn spec(&self) -> &SamplerSpec {
        &self.spec
    }

    fn draw_weight(&self, cell: &CellTable, rng: &mut CounterRng) -> f64 {
        let target = rng.next_f64() * cell.cdf[CDF_KNOTS - 1];
        let i = match cell.cdf.partition_point(|c| *c < target) {
            0 => 0,
            i => i - 1,
        };
        let i = i.min(CDF_KNOTS - 2);
        let (c0, c1) = (cell.cdf[i], cell.cdf[i + 1]);
        let t = if c1 > c0 { ((target - c0) / (c1 - c0)).clamp(0.0, 1.0) } else { 0.5 };
        (cell.log_knots[i] + t * (cell.log_knots[i + 1] - cell.log_knots[i])).exp()
    }

    /// One draw from the truncated law, using the given stream.
    pub fn sample_with(&self, rng: &mut CounterRng) -> Result<DiscreteMeasure> {
        let n = rng.poisson(self.total_mass);
        let mut atoms: Vec<WeightedAtom> = Vec::with_capacity(n as usize);
        for _ in 0..n {
            let u = rng.next_f64() * self.total_mass;
            let cell_idx = self.cell_cum.partition_point(|c| *c < u).min(self.cells.len() - 1);
            let cell = &self.cells[cell_idx];
            // Ties in location have probability zero; redraw on an exact hit
            // so the atom map stays well defined.
            let location = loop {
                let loc: Vec<f64> = cell
                    .lo
                    .iter()
                    .zip(&cell.hi)
                    .map(|(l, h)| l + rng.next_f64() * (h - l))
                    .collect();
                if !atoms.iter().any(|a| a.location == loc) {
                    break loc;
                }
            };
            let weight = self.draw_weight(cell, rng);
            atoms.push(WeightedAtom::new(location, weight)?);
        }
        DiscreteMeasure::new(atoms)
    }

    /// Replicate `i` of the run keyed by the spec's seed.
    pub fn sample_replicate(&self, i: u64) -> Result<DiscreteMeasure> {
        let mut rng = CounterRng::stream(self.spec.seed, i);
        self.sample_with(&mut rng)
    }

    pub fn sample_measure(&self) -> Result<DiscreteMeasure> {
        self.sample_replicate(0)
    }

    /// Monte Carlo estimate of E[exp(-t <f, eta>)] under the truncated law.
    pub fn laplace_mc<F: Fn(&[f64]) -> f64>(
        &self,
        f: F,
        t: f64,
        n_samples: usize,
    ) -> Result<McEstimate> {
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for i in 0..n_samples {
            let eta = self.sample_replicate(i as u64)?;
            let v = (-t * eta.integrate(&f)).exp();
            sum += v;
            sum_sq += v * v;
        }
        let n = n_samples as f64;
        let mean = sum / n;
        let var = (sum_sq / n - mean * mean).max(0.0);
        Ok(McEstimate { mean, std_error: (var / n).sqrt(), n_samples })
    }
}

/// Exact Laplace functional of the truncated law:
/// E[exp(-t <f, eta>)] = exp(-int int_eps^inf (1 - e^{-t f(x) s}) l(x,s)/s ds dx).
pub fn laplace_exact<F: Fn(&[f64]) -> f64>(
    model: &LevyModel,
    window: &Window,
    f: F,
    t: f64,
    eps_trunc: f64,
) -> Result<f64> {
    if t < 0.0 {
        return Err(CrmError::Domain(format!("laplace_exact needs t >= 0, got {t}")));
    }
    if !(eps_trunc >= 0.0) {
        return Err(CrmError::Domain("eps_trunc must be >= 0".into()));
    }
    let exponent = spatial_integral(window, |x| {
        let fx = f(x);
        if fx == 0.0 {
            return 0.0;
        }
        let r = integrate_1d(
            |s| (-(-t * fx * s).exp_m1()) * model.eval_l_unchecked(x, s) / s,
            eps_trunc,
            f64::INFINITY,
            1e-10,
            1e-13,
        );
        if r.converged {
            r.value
        } else {
            f64::NAN
        }
    })?;
    if !exponent.is_finite() {
        return Err(CrmError::Numeric("laplace exponent quadrature failed".into()));
    }
    Ok((-exponent).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::Tail;
    use std::sync::Arc;

    fn gamma_sampler(eps: f64, seed: u64) -> Sampler {
        let model = LevyModel::gamma(FieldFn::Constant(1.0), FieldFn::Constant(1.0)).unwrap();
        Sampler::new(SamplerSpec {
            model,
            window: Window::interval(0.0, 1.0).unwrap(),
            eps_trunc: eps,
            seed,
        })
        .unwrap()
    }

    #[test]
    fn total_mass_matches_model() {
        let s = gamma_sampler(1e-4, 1);
        let expect = s.spec.model.total_mass(&s.spec.window, 1e-4).unwrap();
        assert!((s.total_mass() - expect).abs() < 1e-9 * expect);
    }

    #[test]
    fn replicates_are_deterministic() {
        let s = gamma_sampler(1e-4, 42);
        let a = s.sample_replicate(7).unwrap();
        let b = s.sample_replicate(7).unwrap();
        assert_eq!(a, b);
        let c = s.sample_replicate(8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn atom_count_tracks_poisson_mean() {
        let s = gamma_sampler(1e-3, 5);
        let mean = s.total_mass();
        let n_rep = 4000;
        let total: usize = (0..n_rep).map(|i| s.sample_replicate(i).unwrap().len()).sum();
        let sample_mean = total as f64 / n_rep as f64;
        let se = (mean / n_rep as f64).sqrt();
        assert!(
            (sample_mean - mean).abs() < 5.0 * se,
            "mean {mean} sample {sample_mean}"
        );
    }

    #[test]
    fn atoms_live_in_window_with_valid_weights() {
        let s = gamma_sampler(1e-4, 9);
        for i in 0..200 {
            let eta = s.sample_replicate(i).unwrap();
            for a in eta.atoms() {
                assert!(s.spec.window.contains(&a.location));
                assert!(a.weight >= 1e-4 * (1.0 - 1e-9));
                assert!(a.weight.is_finite());
            }
        }
    }

    #[test]
    fn weight_marginal_matches_density() {
        // Empirical mean of sum s_i must match int_window int s l/s ds dx
        // = alpha beta vol e^{-eps/alpha} for the gamma family.
        let s = gamma_sampler(1e-6, 13);
        let n_rep = 4000u64;
        let total: f64 = (0..n_rep)
            .map(|i| s.sample_replicate(i).unwrap().integrate(|_| 1.0))
            .sum();
        let mean = total / n_rep as f64;
        let expect = (-1e-6f64).exp();
        // Var of eta(X) per replicate = int s^2 l/s ds dx = alpha^2 ~ 1.
        let se = (2.0 / n_rep as f64).sqrt();
        assert!((mean - expect).abs() < 5.0 * se, "mean {mean} expect {expect}");
    }

    #[test]
    fn grid_beta_controls_cell_occupancy() {
        let w = Window::with_grid(vec![0.0], vec![1.0], Some(vec![2])).unwrap();
        let beta = FieldFn::grid(w.clone(), vec![2.0, 0.0]).unwrap();
        let model = LevyModel::gamma(FieldFn::Constant(1.0), beta).unwrap();
        let s = Sampler::new(SamplerSpec { model, window: w, eps_trunc: 1e-3, seed: 3 }).unwrap();
        for i in 0..100 {
            let eta = s.sample_replicate(i).unwrap();
            for a in eta.atoms() {
                assert!(a.location[0] < 0.5, "atom in zero-intensity cell");
            }
        }
    }

    #[test]
    fn smooth_fields_rejected() {
        let model = LevyModel::gamma(
            FieldFn::Smooth(Arc::new(|x: &[f64]| 1.0 + x[0])),
            FieldFn::Constant(1.0),
        )
        .unwrap();
        let r = Sampler::new(SamplerSpec {
            model,
            window: Window::interval(0.0, 1.0).unwrap(),
            eps_trunc: 1e-3,
            seed: 0,
        });
        assert!(matches!(r, Err(CrmError::Config(_))));
    }

    #[test]
    fn finite_mass_families_sample_at_tiny_eps() {
        let model = LevyModel::power_type(
            FieldFn::Constant(0.5),
            FieldFn::Constant(1.0),
            0.5,
            Tail::BetaExp,
        )
        .unwrap();
        let s = Sampler::new(SamplerSpec {
            model,
            window: Window::interval(0.0, 1.0).unwrap(),
            eps_trunc: 1e-12,
            seed: 2,
        })
        .unwrap();
        let eta = s.sample_replicate(0).unwrap();
        for a in eta.atoms() {
            assert!(a.weight > 0.0);
        }
    }

    #[test]
    fn laplace_mc_matches_exact_gamma() {
        // Truncated reference via quadrature, MC within 4 standard errors.
        let s = gamma_sampler(1e-6, 21);
        let t = 1.0;
        let exact = laplace_exact(&s.spec.model, &s.spec.window, |_| 1.0, t, 1e-6).unwrap();
        let est = s.laplace_mc(|_| 1.0, t, 4000).unwrap();
        assert!(
            (est.mean - exact).abs() < 4.0 * est.std_error + 1e-4,
            "mc {} exact {exact} se {}",
            est.mean,
            est.std_error
        );
        // And the truncated reference is within bias range of the closed form
        // (1 + t)^{-1} for alpha = beta = vol = 1.
        assert!((exact - 0.5f64).abs() < 1e-4);
    }

    #[test]
    fn laplace_exact_indicator_region() {
        // f = indicator of [0, 0.5]: exponent halves.
        let model = LevyModel::gamma(FieldFn::Constant(1.0), FieldFn::Constant(1.0)).unwrap();
        let window = Window::interval(0.0, 1.0).unwrap();
        let full = laplace_exact(&model, &window, |_| 1.0, 2.0, 0.0).unwrap();
        let half = laplace_exact(
            &model,
            &window,
            |x| if x[0] <= 0.5 { 1.0 } else { 0.0 },
            2.0,
            0.0,
        )
        .unwrap();
        assert!((half - full.sqrt()).abs() < 1e-8);
        // Closed form: (1 + t)^{-vol}.
        assert!((full - 1.0 / 3.0).abs() < 1e-8);
    }
}
