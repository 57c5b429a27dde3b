//! Gaussian kernel density estimates for the plotting-grid outputs.

use nalgebra::DMatrix;

/// Silverman's rule-of-thumb bandwidth.
pub fn silverman_bandwidth(samples: &[f64]) -> f64 {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let sd = (samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let iqr = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    (0.9 * spread * n.powf(-0.2)).max(f64::MIN_POSITIVE)
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = p * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - h.floor()) * (sorted[hi] - sorted[lo])
}

/// Density estimate of `samples` at each grid point.
pub fn kde_1d(samples: &[f64], grid: &[f64]) -> Vec<f64> {
    let h = silverman_bandwidth(samples);
    let norm = 1.0 / (samples.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
    grid.iter()
        .map(|&g| {
            norm * samples
                .iter()
                .map(|&x| (-0.5 * ((g - x) / h).powi(2)).exp())
                .sum::<f64>()
        })
        .collect()
}

/// Evenly spaced grid covering the sample range padded by 3 bandwidths.
pub fn kde_auto_grid(samples: &[f64], points: usize) -> Vec<f64> {
    let h = silverman_bandwidth(samples);
    let lo = samples.iter().cloned().fold(f64::INFINITY, f64::min) - 3.0 * h;
    let hi = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 3.0 * h;
    linspace(lo, hi, points)
}

pub fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let step = (hi - lo) / (points - 1) as f64;
    (0..points).map(|i| lo + step * i as f64).collect()
}

/// Bivariate product-Gaussian KDE on an automatic grid. Returns
/// (x grid, y grid, density matrix indexed [y, x]).
pub fn kde_2d(xs: &[f64], ys: &[f64], points: usize) -> (Vec<f64>, Vec<f64>, DMatrix<f64>) {
    let hx = silverman_bandwidth(xs);
    let hy = silverman_bandwidth(ys);
    let gx = kde_auto_grid(xs, points);
    let gy = kde_auto_grid(ys, points);
    let n = xs.len() as f64;
    let norm = 1.0 / (n * hx * hy * 2.0 * std::f64::consts::PI);
    // separable kernel: accumulate per-sample column/row factors
    let mut density = DMatrix::zeros(points, points);
    for (&x, &y) in xs.iter().zip(ys.iter()) {
        let col: Vec<f64> = gx
            .iter()
            .map(|&g| (-0.5 * ((g - x) / hx).powi(2)).exp())
            .collect();
        let row: Vec<f64> = gy
            .iter()
            .map(|&g| (-0.5 * ((g - y) / hy).powi(2)).exp())
            .collect();
        for (i, &ry) in row.iter().enumerate() {
            if ry < 1e-300 {
                continue;
            }
            for (j, &cx) in col.iter().enumerate() {
                density[(i, j)] += ry * cx;
            }
        }
    }
    density *= norm;
    (gx, gy, density)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn kde_integrates_to_one() {
        let mut rng = crate::rng::RngStream::root(3).rng();
        let samples: Vec<f64> = (0..5000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let grid = kde_auto_grid(&samples, 512);
        let dens = kde_1d(&samples, &grid);
        let step = grid[1] - grid[0];
        let mass: f64 = dens.iter().sum::<f64>() * step;
        assert!((mass - 1.0).abs() < 0.01, "mass {mass}");
    }

    #[test]
    fn kde_peak_near_mode() {
        let mut rng = crate::rng::RngStream::root(4).rng();
        let samples: Vec<f64> = (0..20_000)
            .map(|_| 2.0 + 0.5 * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let grid = kde_auto_grid(&samples, 512);
        let dens = kde_1d(&samples, &grid);
        let argmax = dens
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert!((grid[argmax] - 2.0).abs() < 0.1, "mode {}", grid[argmax]);
    }

    #[test]
    fn kde_2d_mass_and_symmetry() {
        let mut rng = crate::rng::RngStream::root(5).rng();
        let xs: Vec<f64> = (0..3000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let ys: Vec<f64> = (0..3000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let (gx, gy, dens) = kde_2d(&xs, &ys, 48);
        let sx = gx[1] - gx[0];
        let sy = gy[1] - gy[0];
        let mass: f64 = dens.iter().sum::<f64>() * sx * sy;
        assert!((mass - 1.0).abs() < 0.03, "mass {mass}");
    }
}
