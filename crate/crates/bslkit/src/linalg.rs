//! Symmetric matrix helpers: spectral square roots, guarded Cholesky,
//! log-determinants.

use crate::error::{Error, Result};
use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

/// Relative tolerance for symmetry checks.
pub const SYM_TOL: f64 = 1e-12;
/// Eigenvalues below -1e-10 * lambda_max flag a non-PSD matrix.
pub const PSD_TOL: f64 = 1e-10;

/// Largest absolute asymmetry relative to the largest entry.
fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let scale = m.amax().max(f64::MIN_POSITIVE);
    let mut worst: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst / scale
}

pub fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            got: m.ncols(),
        });
    }
    let asym = max_asymmetry(m);
    if asym > SYM_TOL {
        return Err(Error::NotSymmetric { max_asym: asym });
    }
    Ok(())
}

/// Force exact symmetry, (M + M^T)/2.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

fn spectral(m: &DMatrix<f64>) -> SymmetricEigen<f64, Dyn> {
    SymmetricEigen::new(symmetrize(m))
}

/// Symmetric matrix square root by eigendecomposition, with eigenvalues
/// clamped at zero.
pub fn sym_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_symmetric(m)?;
    let eig = spectral(m);
    let lam_max = eig.eigenvalues.amax();
    let floor = -PSD_TOL * lam_max.max(0.0);
    if eig.eigenvalues.iter().any(|&l| l < floor) {
        return Err(Error::NotPositiveSemiDefinite {
            min_eig: eig.eigenvalues.min(),
        });
    }
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    Ok(rebuild(&eig.eigenvectors, &roots))
}

/// Symmetric inverse square root. Requires lambda_min > 1e-12 * lambda_max.
pub fn sym_inv_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_symmetric(m)?;
    let eig = spectral(m);
    let lam_max = eig.eigenvalues.max();
    let lam_min = eig.eigenvalues.min();
    if lam_min <= 1e-12 * lam_max.max(0.0) || lam_max <= 0.0 {
        return Err(Error::SingularPosteriorCovariance { min_eig: lam_min });
    }
    let roots = eig.eigenvalues.map(|l| 1.0 / l.sqrt());
    Ok(rebuild(&eig.eigenvectors, &roots))
}

fn rebuild(vectors: &DMatrix<f64>, diag: &DVector<f64>) -> DMatrix<f64> {
    let scaled = vectors * DMatrix::from_diagonal(diag);
    symmetrize(&(&scaled * vectors.transpose()))
}

/// Clamp negative eigenvalues at zero, returning the nearest PSD matrix.
pub fn clamp_psd(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = spectral(m);
    let clamped = eig.eigenvalues.map(|l| l.max(0.0));
    rebuild(&eig.eigenvectors, &clamped)
}

/// Cholesky factorization with a single nugget retry.
///
/// On failure, 1e-8 times the mean diagonal is added once; a second failure
/// returns `None` (the caller decides whether that means -inf likelihood or a
/// hard error).
pub fn cholesky_with_nugget(m: &DMatrix<f64>) -> Option<Cholesky<f64, Dyn>> {
    if let Some(chol) = Cholesky::new(m.clone()) {
        return Some(chol);
    }
    let d = m.nrows();
    let nugget = 1e-8 * m.diagonal().sum() / d as f64;
    let mut bumped = m.clone();
    for i in 0..d {
        bumped[(i, i)] += nugget;
    }
    Cholesky::new(bumped)
}

/// Log-determinant from a Cholesky factor.
pub fn log_det(chol: &Cholesky<f64, Dyn>) -> f64 {
    2.0 * chol.l_dirty().diagonal().iter().map(|x| x.ln()).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;

    fn random_psd(d: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let a = DMatrix::from_fn(d, d, |_, _| rng.gen_range(-1.0..1.0));
        symmetrize(&(&a * a.transpose()))
    }

    #[test]
    fn sqrt_identity() {
        let m = DMatrix::identity(3, 3);
        let s = sym_sqrt(&m).unwrap();
        assert_relative_eq!(s, m, epsilon = 1e-12);
    }

    #[test]
    fn sqrt_diagonal() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 9.0]));
        let s = sym_sqrt(&m).unwrap();
        assert_relative_eq!(s[(0, 0)], 2.0, epsilon = 1e-12);
        assert_relative_eq!(s[(1, 1)], 3.0, epsilon = 1e-12);
        assert!(s[(0, 1)].abs() < 1e-14);
    }

    #[test]
    fn sqrt_round_trip_random() {
        let m = random_psd(5, 11);
        let s = sym_sqrt(&m).unwrap();
        let back = &s * &s;
        let rel = (&back - &m).norm() / m.norm();
        assert!(rel < 1e-8, "relative error {rel}");
    }

    #[test]
    fn inv_sqrt_identity_and_diag() {
        let m = DMatrix::identity(2, 2);
        assert_relative_eq!(sym_inv_sqrt(&m).unwrap(), m, epsilon = 1e-12);
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![4.0]));
        assert_relative_eq!(sym_inv_sqrt(&m).unwrap()[(0, 0)], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn inv_sqrt_whitens() {
        let m = random_psd(4, 3) + DMatrix::identity(4, 4) * 0.5;
        let t = sym_inv_sqrt(&m).unwrap();
        let white = &t * &m * &t;
        let rel = (&white - DMatrix::identity(4, 4)).norm();
        assert!(rel < 1e-8, "||TMT - I|| = {rel}");
    }

    #[test]
    fn inv_sqrt_matches_sqrt_of_inverse() {
        let m = random_psd(4, 5) + DMatrix::identity(4, 4);
        let a = sym_inv_sqrt(&m).unwrap();
        let b = sym_sqrt(&m.clone().try_inverse().unwrap()).unwrap();
        let rel = (&a - &b).norm() / b.norm();
        assert!(rel < 1e-8);
    }

    #[test]
    fn rejects_asymmetric() {
        let mut m = DMatrix::identity(2, 2);
        m[(0, 1)] = 0.5;
        assert!(matches!(sym_sqrt(&m), Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn rejects_indefinite() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -0.5]));
        assert!(matches!(
            sym_sqrt(&m),
            Err(Error::NotPositiveSemiDefinite { .. })
        ));
    }

    #[test]
    fn singular_inv_sqrt_is_distinct_error() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0]));
        assert!(matches!(
            sym_inv_sqrt(&m),
            Err(Error::SingularPosteriorCovariance { .. })
        ));
    }

    #[test]
    fn log_det_matches_direct() {
        let m = random_psd(3, 7) + DMatrix::identity(3, 3);
        let chol = Cholesky::new(m.clone()).unwrap();
        assert_relative_eq!(log_det(&chol), m.determinant().ln(), epsilon = 1e-10);
    }
}
