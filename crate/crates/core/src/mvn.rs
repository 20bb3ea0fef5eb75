//! Multivariate Gaussian sampling.

use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::matrix::{CholeskyFactor, DataMatrix, SpdMatrix};
use crate::rng::RngState;

/// Draw `n` i.i.d. rows from N(mean, cov).
///
/// Each row is `mean + L z` with `L` the lower Cholesky factor of `cov` and
/// `z` standard normal. The normal variates come from the ziggurat algorithm;
/// the draw sequence is fully determined by `rng`.
pub fn mvn_sample(mean: &[f64], cov: &SpdMatrix, n: usize, rng: RngState) -> Result<DataMatrix> {
    if mean.len() != cov.dim() {
        return Err(Error::DimensionMismatch(format!(
            "mean has length {}, covariance has dimension {}",
            mean.len(),
            cov.dim()
        )));
    }
    let factor = cov.cholesky()?;
    mvn_sample_with_factor(mean, &factor, n, rng)
}

/// Same as [`mvn_sample`] but reuses a precomputed Cholesky factor.
/// Useful when many samples share one covariance.
pub fn mvn_sample_with_factor(
    mean: &[f64],
    factor: &CholeskyFactor,
    n: usize,
    rng: RngState,
) -> Result<DataMatrix> {
    let p = factor.dim();
    if mean.len() != p {
        return Err(Error::DimensionMismatch(format!(
            "mean has length {}, factor has dimension {p}",
            mean.len()
        )));
    }
    let mut r = rng.rng();
    let mut z = vec![0.0; p];
    let mut lz = vec![0.0; p];
    let mut out = Vec::with_capacity(n * p);
    for _ in 0..n {
        for zi in &mut z {
            *zi = rand::Rng::sample(&mut r, StandardNormal);
        }
        factor.mul_lower(&z, &mut lz);
        out.extend(lz.iter().zip(mean).map(|(v, m)| v + m));
    }
    let arr = ndarray::Array2::from_shape_vec((n, p), out).expect("shape by construction");
    DataMatrix::new(arr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn sample_cov(x: &DataMatrix) -> Array2<f64> {
        let (n, p) = (x.n(), x.p());
        let means = crate::matrix::column_means(x);
        let mut s = Array2::zeros((p, p));
        for i in 0..n {
            let row = x.row(i);
            for a in 0..p {
                for b in 0..p {
                    s[(a, b)] += (row[a] - means[a]) * (row[b] - means[b]);
                }
            }
        }
        s / (n as f64 - 1.0)
    }

    #[test]
    fn identity_covariance_recovered() {
        let cov = SpdMatrix::new(Array2::eye(4)).unwrap();
        let x = mvn_sample(&[0.0; 4], &cov, 10_000, RngState::new(2024)).unwrap();
        let s = sample_cov(&x);
        for a in 0..4 {
            for b in 0..4 {
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!(
                    (s[(a, b)] - expect).abs() < 0.05,
                    "entry ({a},{b}) = {}",
                    s[(a, b)]
                );
            }
        }
    }

    #[test]
    fn diagonal_covariance_gives_uncorrelated_columns() {
        let cov =
            SpdMatrix::new(Array2::from_diag(&ndarray::arr1(&[1.0, 4.0, 0.25]))).unwrap();
        let x = mvn_sample(&[1.0, -2.0, 0.0], &cov, 10_000, RngState::new(5)).unwrap();
        let s = sample_cov(&x);
        for a in 0..3 {
            for b in 0..3 {
                if a != b {
                    let r = s[(a, b)] / (s[(a, a)] * s[(b, b)]).sqrt();
                    assert!(r.abs() < 0.05, "corr({a},{b}) = {r}");
                }
            }
        }
        // means land near the requested vector
        let m = crate::matrix::column_means(&x);
        assert!((m[0] - 1.0).abs() < 0.05 && (m[1] + 2.0).abs() < 0.1);
    }

    #[test]
    fn identical_state_is_bit_identical() {
        let cov = SpdMatrix::new(Array2::eye(3)).unwrap();
        let a = mvn_sample(&[0.0; 3], &cov, 50, RngState::new(9).substream(3)).unwrap();
        let b = mvn_sample(&[0.0; 3], &cov, 50, RngState::new(9).substream(3)).unwrap();
        assert_eq!(a.values(), b.values());
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let cov = SpdMatrix::new(Array2::eye(3)).unwrap();
        assert!(mvn_sample(&[0.0; 2], &cov, 10, RngState::new(0)).is_err());
    }
}
