//! Data matrices, symmetric positive-definite matrices, and the Cholesky
//! kernel every quadratic form in the crate goes through.
//!
//! Solves never form an explicit inverse: `v' S⁻¹ v` is a forward solve
//! against the Cholesky factor followed by a dot product.

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};

/// Relative pivot tolerance: a Cholesky pivot at or below
/// `CHOL_PIVOT_RTOL * max(diagonal)` means "singular".
pub(crate) const CHOL_PIVOT_RTOL: f64 = 1e-12;

/// Relative symmetry tolerance for [`SpdMatrix`].
const SYMMETRY_RTOL: f64 = 1e-10;

/// An n × p matrix of observations: rows are subjects, columns are dimensions.
#[derive(Clone, Debug, PartialEq)]
pub struct DataMatrix {
    values: Array2<f64>,
}

impl DataMatrix {
    /// Wrap a matrix, enforcing n ≥ 2, p ≥ 1, and finite entries.
    pub fn new(values: Array2<f64>) -> Result<Self> {
        let (n, p) = values.dim();
        if n < 2 {
            return Err(Error::InvalidData(format!(
                "data matrix needs at least 2 rows, got {n}"
            )));
        }
        if p < 1 {
            return Err(Error::InvalidData("data matrix needs at least 1 column".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("data matrix contains non-finite entries".into()));
        }
        Ok(DataMatrix { values })
    }

    /// Build from row vectors (convenience for tests and file loading).
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyInput("no rows".into()));
        }
        let p = rows[0].len();
        for (i, r) in rows.iter().enumerate() {
            if r.len() != p {
                return Err(Error::DimensionMismatch(format!(
                    "row {} has {} columns, expected {p}",
                    i + 1,
                    r.len()
                )));
            }
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let arr = Array2::from_shape_vec((rows.len(), p), flat)
            .expect("shape checked above");
        DataMatrix::new(arr)
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn p(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }

    /// Contiguous row-major storage.
    pub(crate) fn as_slice(&self) -> &[f64] {
        self.values.as_slice().expect("DataMatrix is standard layout")
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let p = self.p();
        &self.as_slice()[i * p..(i + 1) * p]
    }
}

/// Arithmetic mean of each column.
pub fn column_means(x: &DataMatrix) -> Vec<f64> {
    let (n, p) = (x.n(), x.p());
    let mut means = vec![0.0; p];
    for i in 0..n {
        let row = x.row(i);
        for j in 0..p {
            means[j] += row[j];
        }
    }
    let inv = 1.0 / n as f64;
    for m in &mut means {
        *m *= inv;
    }
    means
}

/// A symmetric positive-definite matrix. Symmetry is checked on construction;
/// positive definiteness is checked by factorization, not eigenvalues.
#[derive(Clone, Debug, PartialEq)]
pub struct SpdMatrix {
    values: Array2<f64>,
}

impl SpdMatrix {
    /// Wrap a square matrix after verifying symmetry to relative 1e-10.
    pub fn new(values: Array2<f64>) -> Result<Self> {
        let (r, c) = values.dim();
        if r != c {
            return Err(Error::InvalidData(format!("matrix is {r}x{c}, not square")));
        }
        if r == 0 {
            return Err(Error::InvalidData("matrix is empty".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("matrix contains non-finite entries".into()));
        }
        let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tol = SYMMETRY_RTOL * scale.max(f64::MIN_POSITIVE);
        for i in 0..r {
            for j in (i + 1)..r {
                if (values[(i, j)] - values[(j, i)]).abs() > tol {
                    return Err(Error::InvalidData(format!(
                        "matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(SpdMatrix { values })
    }

    pub fn dim(&self) -> usize {
        self.values.nrows()
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub(crate) fn as_slice(&self) -> &[f64] {
        self.values.as_slice().expect("SpdMatrix is standard layout")
    }

    /// Factor as L Lᵀ. This is the positive-definiteness check.
    pub fn cholesky(&self) -> Result<CholeskyFactor> {
        CholeskyFactor::factor(self.as_slice(), self.dim())
    }
}

/// Lower-triangular Cholesky factor stored row-major in a k × k buffer.
#[derive(Clone, Debug)]
pub struct CholeskyFactor {
    lower: Vec<f64>,
    k: usize,
}

impl CholeskyFactor {
    /// Factor a symmetric matrix given by its row-major storage. Only the
    /// lower triangle of `a` is read. Fails with [`Error::SingularCovariance`]
    /// when a pivot falls at or below 1e-12 times the largest diagonal entry.
    pub fn factor(a: &[f64], k: usize) -> Result<Self> {
        let mut lower = vec![0.0; k * k];
        factor_into(a, k, &mut lower)?;
        Ok(CholeskyFactor { lower, k })
    }

    pub fn dim(&self) -> usize {
        self.k
    }

    /// Solve L y = b in place.
    pub fn forward_solve(&self, b: &mut [f64]) {
        forward_solve_raw(&self.lower, self.k, b);
    }

    /// Solve (L Lᵀ) x = b in place.
    pub fn solve(&self, b: &mut [f64]) {
        solve_raw(&self.lower, self.k, b);
    }

    pub(crate) fn lower(&self) -> &[f64] {
        &self.lower
    }

    /// v' (L Lᵀ)⁻¹ v  =  ‖L⁻¹ v‖².
    pub fn quad_form_inv(&self, v: &[f64]) -> f64 {
        debug_assert_eq!(v.len(), self.k);
        let mut y = v.to_vec();
        self.forward_solve(&mut y);
        y.iter().map(|t| t * t).sum()
    }

    /// Factor of `scale · A` given this factor of A: every entry is
    /// multiplied by sqrt(scale).
    pub fn scaled(&self, scale: f64) -> CholeskyFactor {
        assert!(scale > 0.0, "covariance scale must be positive");
        let s = scale.sqrt();
        CholeskyFactor {
            lower: self.lower.iter().map(|v| v * s).collect(),
            k: self.k,
        }
    }

    /// out = L · z (used by the Gaussian sampler).
    pub fn mul_lower(&self, z: &[f64], out: &mut [f64]) {
        let k = self.k;
        debug_assert_eq!(z.len(), k);
        debug_assert_eq!(out.len(), k);
        for i in 0..k {
            let row = &self.lower[i * k..i * k + i + 1];
            let mut s = 0.0;
            for (lij, zj) in row.iter().zip(z[..=i].iter()) {
                s += lij * zj;
            }
            out[i] = s;
        }
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Row-major Cholesky, writing L into `lower` (same layout as `a`).
/// Shared by the public factor type and the hot subset engine.
pub(crate) fn factor_into(a: &[f64], k: usize, lower: &mut [f64]) -> Result<()> {
    debug_assert!(a.len() >= k * k && lower.len() >= k * k);
    let mut max_diag = 0.0f64;
    for i in 0..k {
        max_diag = max_diag.max(a[i * k + i]);
    }
    if !(max_diag > 0.0) {
        return Err(Error::SingularCovariance(
            "matrix has no positive diagonal entry".into(),
        ));
    }
    let tol = CHOL_PIVOT_RTOL * max_diag;
    for i in 0..k {
        let ri = i * k;
        // rows before i are finished; split so both are borrowable
        let (done, rest) = lower.split_at_mut(ri);
        let row_i = &mut rest[..k];
        for j in 0..i {
            let rj = j * k;
            let s = a[ri + j] - dot(&row_i[..j], &done[rj..rj + j]);
            row_i[j] = s / done[rj + j];
        }
        let s = a[ri + i] - dot(&row_i[..i], &row_i[..i]);
        if !(s > tol) {
            return Err(Error::SingularCovariance(format!(
                "pivot {s:.3e} at column {i} is at or below tolerance {tol:.3e}"
            )));
        }
        row_i[i] = s.sqrt();
        for t in (i + 1)..k {
            row_i[t] = 0.0;
        }
    }
    Ok(())
}

pub(crate) fn forward_solve_raw(lower: &[f64], k: usize, b: &mut [f64]) {
    for i in 0..k {
        let row = &lower[i * k..i * k + i];
        let mut s = b[i];
        for (lij, bj) in row.iter().zip(b[..i].iter()) {
            s -= lij * bj;
        }
        b[i] = s / lower[i * k + i];
    }
}

/// Solve (L Lᵀ) x = b in place, given the raw lower factor.
pub(crate) fn solve_raw(lower: &[f64], k: usize, b: &mut [f64]) {
    forward_solve_raw(lower, k, b);
    for i in (0..k).rev() {
        let mut s = b[i];
        for j in (i + 1)..k {
            s -= lower[j * k + i] * b[j];
        }
        b[i] = s / lower[i * k + i];
    }
}

/// Pooled covariance of two samples with a common dimension:
/// (n_x + n_y − 2)⁻¹ [Σ(Xᵢ−X̄)(Xᵢ−X̄)' + Σ(Yⱼ−Ȳ)(Yⱼ−Ȳ)'].
///
/// The result is validated positive definite by factorization.
pub fn pooled_covariance(x: &DataMatrix, y: &DataMatrix) -> Result<SpdMatrix> {
    if x.p() != y.p() {
        return Err(Error::DimensionMismatch(format!(
            "group dimensions differ: {} vs {}",
            x.p(),
            y.p()
        )));
    }
    let p = x.p();
    let n = x.n() + y.n();
    if n < p + 2 {
        return Err(Error::InsufficientSamples(format!(
            "pooled covariance of dimension {p} needs n_x + n_y >= {}, got {n}",
            p + 2
        )));
    }
    let mut scatter = vec![0.0; p * p];
    accumulate_scatter(x, &mut scatter);
    accumulate_scatter(y, &mut scatter);
    let inv = 1.0 / (n as f64 - 2.0);
    for v in &mut scatter {
        *v *= inv;
    }
    let arr = Array2::from_shape_vec((p, p), scatter).expect("square");
    let spd = SpdMatrix::new(arr)?;
    spd.cholesky()?; // the positive-definiteness check
    Ok(spd)
}

/// Centered scatter of one sample added into a p × p accumulator.
fn accumulate_scatter(x: &DataMatrix, acc: &mut [f64]) {
    let (n, p) = (x.n(), x.p());
    let means = column_means(x);
    let mut dev = vec![0.0; p];
    for i in 0..n {
        let row = x.row(i);
        for j in 0..p {
            dev[j] = row[j] - means[j];
        }
        for a in 0..p {
            let da = dev[a];
            let out = &mut acc[a * p..(a + 1) * p];
            for b in 0..p {
                out[b] += da * dev[b];
            }
        }
    }
}

/// v' S⁻¹ v by Cholesky factorization and triangular solve.
pub fn quadratic_form_inv(s: &SpdMatrix, v: &[f64]) -> Result<f64> {
    if v.len() != s.dim() {
        return Err(Error::DimensionMismatch(format!(
            "vector has length {}, matrix has dimension {}",
            v.len(),
            s.dim()
        )));
    }
    Ok(s.cholesky()?.quad_form_inv(v))
}
