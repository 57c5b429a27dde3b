//! Latin hypercube designs.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// B x d Latin hypercube sample over [lo, hi] per coordinate: each
/// coordinate's B values occupy distinct equal-width bins, one point uniform
/// within each bin, bins permuted independently per coordinate.
pub fn latin_hypercube(
    lo: &DVector<f64>,
    hi: &DVector<f64>,
    b: usize,
    rng: &mut ChaCha8Rng,
) -> Result<DMatrix<f64>> {
    let d = lo.len();
    if hi.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: hi.len(),
        });
    }
    if b < 1 {
        return Err(Error::Precondition("design size must be >= 1".into()));
    }
    for k in 0..d {
        if !(hi[k] > lo[k]) {
            return Err(Error::Precondition(format!(
                "empty design interval in coordinate {k}"
            )));
        }
    }
    let mut design = DMatrix::zeros(b, d);
    let mut bins: Vec<usize> = (0..b).collect();
    for k in 0..d {
        bins.shuffle(rng);
        let width = (hi[k] - lo[k]) / b as f64;
        for (row, &bin) in bins.iter().enumerate() {
            let u: f64 = rng.gen_range(0.0..1.0);
            design[(row, k)] = lo[k] + (bin as f64 + u) * width;
        }
    }
    Ok(design)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    #[test]
    fn marginals_fill_distinct_bins() {
        let lo = DVector::from_vec(vec![0.0, -1.0]);
        let hi = DVector::from_vec(vec![1.0, 1.0]);
        let b = 50;
        let mut rng = RngStream::root(31).rng();
        let design = latin_hypercube(&lo, &hi, b, &mut rng).unwrap();
        for k in 0..2 {
            let width = (hi[k] - lo[k]) / b as f64;
            let mut seen = vec![false; b];
            for row in 0..b {
                let bin = (((design[(row, k)] - lo[k]) / width) as usize).min(b - 1);
                assert!(!seen[bin], "bin {bin} hit twice in coordinate {k}");
                seen[bin] = true;
            }
        }
    }

    #[test]
    fn design_is_centered() {
        let lo = DVector::from_vec(vec![2.0]);
        let hi = DVector::from_vec(vec![4.0]);
        let mut rng = RngStream::root(32).rng();
        let design = latin_hypercube(&lo, &hi, 200, &mut rng).unwrap();
        let mean = design.column(0).mean();
        // delta = 1, so within delta/10 of the midpoint
        assert!((mean - 3.0).abs() < 0.1, "mean {mean}");
    }

    #[test]
    fn rejects_empty_interval() {
        let lo = DVector::from_vec(vec![1.0]);
        let hi = DVector::from_vec(vec![1.0]);
        let mut rng = RngStream::root(33).rng();
        assert!(latin_hypercube(&lo, &hi, 10, &mut rng).is_err());
    }
}
