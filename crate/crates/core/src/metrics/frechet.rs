use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Square root of a symmetric positive semidefinite matrix; negative
/// eigenvalues from rounding are clamped to zero.
fn psd_sqrt(c: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(c.clone());
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose()
}

fn check_cov(c: &DMatrix<f64>, n: usize, what: &str) -> Result<()> {
    if c.nrows() != n || c.ncols() != n {
        return Err(Error::DimensionMismatch(format!("{what} is {}x{}, expected {n}x{n}", c.nrows(), c.ncols())));
    }
    let asym = (c - c.transpose()).amax();
    if asym > 1e-8 {
        return Err(Error::Invalid(format!("{what} is not symmetric (max deviation {asym:e})")));
    }
    Ok(())
}

/// Fréchet distance between two Gaussians:
/// `‖μa − μb‖² + tr(Ca) + tr(Cb) − 2 tr((Ca Cb)^½)`.
///
/// The trace of the square root is evaluated as the nuclear norm of
/// `Cb^½ Ca^½`, whose singular values are the square roots of the eigenvalues
/// of `Ca Cb`.
pub fn frechet_distance(mu_a: &DVector<f64>, cov_a: &DMatrix<f64>, mu_b: &DVector<f64>, cov_b: &DMatrix<f64>) -> Result<f64> {
    let n = mu_a.len();
    if mu_b.len() != n {
        return Err(Error::DimensionMismatch(format!("means have lengths {n} and {}", mu_b.len())));
    }
    check_cov(cov_a, n, "first covariance")?;
    check_cov(cov_b, n, "second covariance")?;
    let sa = psd_sqrt(&cov_a.symmetrize());
    let sb = psd_sqrt(&cov_b.symmetrize());
    let cross: f64 = (&sb * &sa).singular_values().iter().sum();
    let mean_term = (mu_a - mu_b).norm_squared();
    Ok((mean_term + cov_a.trace() + cov_b.trace() - 2.0 * cross).max(0.0))
}

trait Symmetrize {
    fn symmetrize(&self) -> Self;
}

impl Symmetrize for DMatrix<f64> {
    fn symmetrize(&self) -> Self {
        (self + self.transpose()) * 0.5
    }
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn random_psd(rng: &mut ChaCha8Rng, n: usize, rank: usize) -> DMatrix<f64> {
        let b = DMatrix::from_fn(n, rank, |_, _| rng.gen_range(-1.0..1.0));
        &b * b.transpose()
    }

    #[test]
    fn closed_forms() {
        let mu = DVector::from_vec(vec![1.0, 2.0]);
        let id = DMatrix::identity(2, 2);
        assert!(frechet_distance(&mu, &id, &mu, &id).unwrap().abs() < 1e-12);
        let mu2 = DVector::from_vec(vec![2.0, 2.0]);
        assert!((frechet_distance(&mu, &id, &mu2, &id).unwrap() - 1.0).abs() < 1e-12);
        let z = DMatrix::zeros(2, 2);
        let e1 = DVector::from_vec(vec![1.0, 0.0]);
        let e2 = DVector::from_vec(vec![2.0, 0.0]);
        assert!((frechet_distance(&e1, &z, &e2, &z).unwrap() - 1.0).abs() < 1e-12);
        // diagonal covariances: Σ (√a − √b)²
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 9.0]));
        let b = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0]));
        let zero = DVector::zeros(2);
        assert!((frechet_distance(&zero, &a, &zero, &b).unwrap() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn agrees_with_product_eigenvalues() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let n = 6;
            let a = random_psd(&mut rng, n, n);
            let b = random_psd(&mut rng, n, n);
            // eigenvalues of A B equal those of the symmetric A^½ B A^½
            let sa = psd_sqrt(&a);
            let m = &sa * &b * &sa;
            let tr_sqrt: f64 = SymmetricEigen::new(m.symmetrize()).eigenvalues.iter().map(|l| l.max(0.0).sqrt()).sum();
            let expected = a.trace() + b.trace() - 2.0 * tr_sqrt;
            let zero = DVector::zeros(n);
            let got = frechet_distance(&zero, &a, &zero, &b).unwrap();
            assert!((got - expected).abs() < 1e-9 * (1.0 + expected.abs()), "{got} vs {expected}");
            let swapped = frechet_distance(&zero, &b, &zero, &a).unwrap();
            assert!((got - swapped).abs() < 1e-9 * (1.0 + got));
        }
    }

    #[test]
    fn identical_rank_deficient() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let a = random_psd(&mut rng, 35, 9);
        let mu = DVector::from_fn(35, |_, _| rng.gen_range(-5.0..5.0));
        assert!(frechet_distance(&mu, &a, &mu, &a).unwrap() < 1e-9);
    }

    #[test]
    fn rejects_bad_inputs() {
        let mu = DVector::zeros(2);
        let id = DMatrix::identity(2, 2);
        let mut asym = id.clone();
        asym[(0, 1)] = 1e-3;
        assert!(frechet_distance(&mu, &asym, &mu, &id).is_err());
        assert!(frechet_distance(&mu, &id, &DVector::zeros(3), &DMatrix::identity(3, 3)).is_err());
    }
}
