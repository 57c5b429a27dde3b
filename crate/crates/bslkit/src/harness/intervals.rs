//! Equal-tailed credible intervals from (weighted) posterior draws.

use crate::error::{Error, Result};
use serde::Serialize;

/// Equal-tailed credible interval.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CredibleInterval {
    pub lo: f64,
    pub hi: f64,
    pub level: f64,
}

impl CredibleInterval {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// Quantile of a weighted sample. Weights need not be normalized; uniform
/// weights reduce to the ordinary empirical quantile.
pub fn weighted_quantile(values: &[f64], weights: Option<&[f64]>, p: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Precondition("empty sample".into()));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Precondition(format!(
            "quantile level must lie in [0,1], got {p}"
        )));
    }
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let total: f64 = match weights {
        Some(w) => w.iter().sum(),
        None => values.len() as f64,
    };
    if !(total > 0.0) {
        return Err(Error::Precondition("weights sum to zero".into()));
    }
    let target = p * total;
    let mut acc = 0.0;
    for &i in &idx {
        acc += weights.map(|w| w[i]).unwrap_or(1.0);
        if acc >= target {
            return Ok(values[i]);
        }
    }
    Ok(values[*idx.last().unwrap()])
}

/// Effective sample size of possibly-unnormalized weights.
fn weight_ess(weights: &[f64]) -> f64 {
    let sum: f64 = weights.iter().sum();
    let sum_sq: f64 = weights.iter().map(|w| w * w).sum();
    if sum_sq == 0.0 {
        0.0
    } else {
        sum * sum / sum_sq
    }
}

/// Equal-tailed interval from weighted quantiles at (1-level)/2 and
/// 1-(1-level)/2. Requires an effective sample size of at least 50.
pub fn credible_interval(
    values: &[f64],
    weights: Option<&[f64]>,
    level: f64,
) -> Result<CredibleInterval> {
    if !(0.0 < level && level < 1.0) {
        return Err(Error::Precondition(format!(
            "level must lie in (0,1), got {level}"
        )));
    }
    let ess = match weights {
        Some(w) => weight_ess(w),
        None => values.len() as f64,
    };
    if ess < 50.0 {
        return Err(Error::Precondition(format!(
            "effective sample size must be >= 50, got {ess:.1}"
        )));
    }
    let tail = (1.0 - level) / 2.0;
    let lo = weighted_quantile(values, weights, tail)?;
    let hi = weighted_quantile(values, weights, 1.0 - tail)?;
    Ok(CredibleInterval { lo, hi, level })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn uniform_sample_interval() {
        let mut rng = crate::rng::RngStream::root(11).rng();
        let values: Vec<f64> = (0..100_000).map(|_| rng.gen_range(0.0..1.0)).collect();
        let ci = credible_interval(&values, None, 0.8).unwrap();
        assert!((ci.lo - 0.1).abs() < 0.01, "lo {}", ci.lo);
        assert!((ci.hi - 0.9).abs() < 0.01, "hi {}", ci.hi);
    }

    #[test]
    fn point_mass_interval_degenerates() {
        let values = vec![3.5; 60];
        let ci = credible_interval(&values, None, 0.95).unwrap();
        assert_eq!(ci.lo, 3.5);
        assert_eq!(ci.hi, 3.5);
    }

    #[test]
    fn normal_sample_95_interval() {
        let mut rng = crate::rng::RngStream::root(12).rng();
        let values: Vec<f64> = (0..100_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let ci = credible_interval(&values, None, 0.95).unwrap();
        assert!((ci.lo + 1.96).abs() < 0.03, "lo {}", ci.lo);
        assert!((ci.hi - 1.96).abs() < 0.03, "hi {}", ci.hi);
    }

    #[test]
    fn low_ess_rejected() {
        let values: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        let mut weights = vec![0.0; 1000];
        weights[0] = 1.0;
        weights[1] = 1.0;
        let err = credible_interval(&values, Some(&weights), 0.9).unwrap_err();
        assert!(err.to_string().contains("effective sample size"), "{err}");
    }

    #[test]
    fn weighted_matches_resampled_quantile() {
        // weight 2 on a value == that value appearing twice
        let values = vec![1.0, 2.0, 3.0];
        let weights = vec![1.0, 2.0, 1.0];
        let expanded = vec![1.0, 2.0, 2.0, 3.0];
        for p in [0.25, 0.5, 0.75] {
            let a = weighted_quantile(&values, Some(&weights), p).unwrap();
            let b = weighted_quantile(&expanded, None, p).unwrap();
            assert_eq!(a, b, "p {p}");
        }
    }
}
