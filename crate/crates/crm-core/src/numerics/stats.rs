//! Goodness-of-fit tests consumed by the verification harness.

use crate::error::{CrmError, Result};
use crate::numerics::special::reg_gamma_q;

#[derive(Debug, Clone, Copy)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// One-sample Kolmogorov-Smirnov test against a continuous CDF.
///
/// `samples` must be sorted ascending; the p-value comes from the asymptotic
/// Kolmogorov distribution with the Stephens small-sample correction.
pub fn ks_test<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<TestResult> {
    let n = samples.len();
    if n < 10 {
        return Err(CrmError::Domain(format!("ks_test requires n >= 10, got {n}")));
    }
    if samples.windows(2).any(|w| w[0] > w[1]) {
        return Err(CrmError::Domain("ks_test requires sorted samples".into()));
    }
    let nf = n as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in samples.iter().enumerate() {
        let f = cdf(x).clamp(0.0, 1.0);
        let d_plus = (i as f64 + 1.0) / nf - f;
        let d_minus = f - i as f64 / nf;
        d = d.max(d_plus).max(d_minus);
    }
    let lambda = (nf.sqrt() + 0.12 + 0.11 / nf.sqrt()) * d;
    Ok(TestResult { statistic: d, p_value: kolmogorov_sf(lambda) })
}

/// Survival function of the Kolmogorov distribution,
/// Q(x) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 x^2), truncated at 1e-10.
fn kolmogorov_sf(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=200 {
        let term = (-2.0 * (k as f64) * (k as f64) * x * x).exp();
        sum += sign * term;
        if term < 1e-10 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Chi-square goodness-of-fit of observed Poisson counts against a fixed mean.
///
/// Count values are binned with tail pooling so each expected bin mass is at
/// least 5 observations.
pub fn chi_square_poisson_test(counts: &[u64], mean: f64) -> Result<TestResult> {
    let n = counts.len();
    if n < 30 {
        return Err(CrmError::Domain(format!(
            "chi_square_poisson_test requires >= 30 observations, got {n}"
        )));
    }
    if mean <= 0.0 {
        return Err(CrmError::Domain("chi_square_poisson_test requires mean > 0".into()));
    }

    let max_count = *counts.iter().max().unwrap() as usize;
    // Poisson pmf over 0..=k_max, plus an overflow cell for the upper tail.
    let k_max = max_count.max(mean as usize * 3 + 10);
    let mut pmf = Vec::with_capacity(k_max + 1);
    let mut p = (-mean).exp();
    let mut cum = 0.0;
    for k in 0..=k_max {
        if k > 0 {
            p *= mean / k as f64;
        }
        pmf.push(p);
        cum += p;
    }
    let tail = (1.0 - cum).max(0.0);

    let mut observed = vec![0u64; k_max + 2];
    for &c in counts {
        observed[(c as usize).min(k_max + 1)] += 1;
    }
    let nf = n as f64;
    let mut expected: Vec<f64> = pmf.iter().map(|&q| q * nf).collect();
    expected.push(tail * nf);

    // Pool cells until every bin expects at least 5 observations.
    let mut bins_obs = Vec::new();
    let mut bins_exp = Vec::new();
    let mut acc_o = 0u64;
    let mut acc_e = 0.0;
    for (o, e) in observed.iter().zip(expected.iter()) {
        acc_o += o;
        acc_e += e;
        if acc_e >= 5.0 {
            bins_obs.push(acc_o);
            bins_exp.push(acc_e);
            acc_o = 0;
            acc_e = 0.0;
        }
    }
    if acc_e > 0.0 || acc_o > 0 {
        if let (Some(lo), Some(le)) = (bins_obs.last_mut(), bins_exp.last_mut()) {
            *lo += acc_o;
            *le += acc_e;
        } else {
            bins_obs.push(acc_o);
            bins_exp.push(acc_e);
        }
    }
    if bins_obs.len() < 2 {
        return Err(CrmError::Domain("chi_square_poisson_test: fewer than 2 pooled bins".into()));
    }

    let statistic: f64 = bins_obs
        .iter()
        .zip(bins_exp.iter())
        .map(|(&o, &e)| {
            let diff = o as f64 - e;
            diff * diff / e
        })
        .sum();
    let dof = (bins_obs.len() - 1) as f64;
    let p_value = reg_gamma_q(dof / 2.0, statistic / 2.0)?;
    Ok(TestResult { statistic, p_value })
}
