//! Random dimension subsets and the fast subset-Hotelling kernels.
//!
//! The engine precomputes Gram matrices of the (grand-centered) combined data
//! once, so each subset statistic reduces to extracting an m × m block,
//! subtracting rank-one mean terms, and one Cholesky factorization. Group
//! relabelings (permutation shuffles) only change the group means, not the
//! combined Gram matrix.

use rand::Rng;

use crate::error::{Error, Result};
use crate::matrix::{factor_into, forward_solve_raw, DataMatrix};
use crate::rng::RngState;
use crate::special::f_cdf;

/// Default subset size: min(floor(n/2), p, n − 2), with n the total
/// number of observations.
pub fn default_m(n_total: usize, p: usize) -> usize {
    debug_assert!(n_total >= 4, "default_m requires n_total >= 4");
    (n_total / 2).min(p).min(n_total - 2)
}

/// Default number of subset draws: ceil(p ln p), the coupon-collector scale
/// at which every dimension is drawn at least once with high probability.
pub fn default_b(p: usize) -> usize {
    debug_assert!(p >= 2, "default_b requires p >= 2");
    let pf = p as f64;
    (pf * pf.ln()).ceil() as usize
}

/// A draw of m distinct column indices, kept sorted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubsetDraw {
    indices: Vec<usize>,
}

impl SubsetDraw {
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// m distinct indices from 0..p, uniform over all m-subsets, in draw order.
/// Partial Fisher-Yates; the sequence is fully determined by `rng`.
pub(crate) fn sample_indices(p: usize, m: usize, rng: &mut impl Rng) -> Vec<usize> {
    debug_assert!(m <= p);
    let mut pool: Vec<usize> = (0..p).collect();
    for i in 0..m {
        let j = rng.gen_range(i..p);
        pool.swap(i, j);
    }
    pool.truncate(m);
    pool
}

/// Uniform draw of m distinct column indices without replacement.
/// Successive draws from fresh states are independent, so the same subset
/// may recur across draws.
pub fn sample_subset(p: usize, m: usize, rng: RngState) -> SubsetDraw {
    assert!(m <= p, "subset size {m} exceeds dimension {p}");
    let mut indices = sample_indices(p, m, &mut rng.rng());
    indices.sort_unstable();
    SubsetDraw { indices }
}

/// Uniform random permutation of 0..n (Fisher-Yates).
pub(crate) fn sample_permutation(n: usize, rng: RngState) -> Vec<usize> {
    let mut r = rng.rng();
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = r.gen_range(0..=i);
        perm.swap(i, j);
    }
    perm
}

/// Two samples stacked row-wise and centered by the grand column means.
/// Centering leaves every statistic below unchanged (they depend on data
/// only through mean differences and centered scatters) and keeps the
/// Gram-based covariance assembly well conditioned.
pub(crate) struct CombinedData {
    data: Vec<f64>, // n × p row major; rows 0..n1 are group X under the identity labeling
    pub n1: usize,
    pub n2: usize,
    pub p: usize,
}

impl CombinedData {
    pub fn new(x: &DataMatrix, y: &DataMatrix) -> Self {
        let p = x.p();
        debug_assert_eq!(p, y.p());
        let (n1, n2) = (x.n(), y.n());
        let n = n1 + n2;
        let mut data = Vec::with_capacity(n * p);
        data.extend_from_slice(x.as_slice());
        data.extend_from_slice(y.as_slice());
        let mut grand = vec![0.0; p];
        for i in 0..n {
            for j in 0..p {
                grand[j] += data[i * p + j];
            }
        }
        for g in &mut grand {
            *g /= n as f64;
        }
        for i in 0..n {
            for j in 0..p {
                data[i * p + j] -= grand[j];
            }
        }
        CombinedData { data, n1, n2, p }
    }

    pub fn n(&self) -> usize {
        self.n1 + self.n2
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.p..(i + 1) * self.p]
    }

    /// Gram matrix of all rows (labeling-independent), full symmetric p × p.
    pub fn total_gram(&self) -> Vec<f64> {
        let p = self.p;
        let mut gram = vec![0.0; p * p];
        for i in 0..self.n() {
            accumulate_rank1_lower(&mut gram, self.row(i), p);
        }
        mirror_lower(&mut gram, p);
        gram
    }

    /// Group means under a labeling. `None` is the identity labeling;
    /// `Some(perm)` assigns rows perm[0..n1] to group X.
    pub fn group_means(&self, perm: Option<&[usize]>) -> (Vec<f64>, Vec<f64>) {
        let p = self.p;
        let mut m1 = vec![0.0; p];
        let mut m2 = vec![0.0; p];
        let row_index = |slot: usize| -> usize {
            match perm {
                None => slot,
                Some(perm) => perm[slot],
            }
        };
        for slot in 0..self.n1 {
            let row = self.row(row_index(slot));
            for j in 0..p {
                m1[j] += row[j];
            }
        }
        for slot in self.n1..self.n() {
            let row = self.row(row_index(slot));
            for j in 0..p {
                m2[j] += row[j];
            }
        }
        let (f1, f2) = (1.0 / self.n1 as f64, 1.0 / self.n2 as f64);
        for v in &mut m1 {
            *v *= f1;
        }
        for v in &mut m2 {
            *v *= f2;
        }
        (m1, m2)
    }

    /// Per-group Gram matrices under a labeling (full symmetric p × p each).
    pub fn group_grams(&self, perm: Option<&[usize]>) -> (Vec<f64>, Vec<f64>) {
        let p = self.p;
        let mut g1 = vec![0.0; p * p];
        let mut g2 = vec![0.0; p * p];
        for slot in 0..self.n() {
            let idx = match perm {
                None => slot,
                Some(perm) => perm[slot],
            };
            let target = if slot < self.n1 { &mut g1 } else { &mut g2 };
            accumulate_rank1_lower(target, self.row(idx), p);
        }
        mirror_lower(&mut g1, p);
        mirror_lower(&mut g2, p);
        (g1, g2)
    }
}

fn accumulate_rank1_lower(acc: &mut [f64], row: &[f64], p: usize) {
    for a in 0..p {
        let ra = row[a];
        let out = &mut acc[a * p..a * p + a + 1];
        for (o, rb) in out.iter_mut().zip(row[..=a].iter()) {
            *o += ra * rb;
        }
    }
}

fn mirror_lower(m: &mut [f64], p: usize) {
    for a in 0..p {
        for b in (a + 1)..p {
            m[a * p + b] = m[b * p + a];
        }
    }
}

/// Reusable buffers for the per-subset kernels.
#[derive(Default)]
pub(crate) struct SubsetScratch {
    w: Vec<f64>,
    l: Vec<f64>,
    d: Vec<f64>,
    sx: Vec<f64>,
    m_buf: Vec<f64>,
    col: Vec<f64>,
}

/// Subset Hotelling T² under the pooled-covariance model.
///
/// `gram` is the labeling-independent total Gram matrix; `m1`, `m2` are the
/// group means for the current labeling. The pooled scatter of the subset is
/// G_S − n1 m̄1 m̄1' − n2 m̄2 m̄2' restricted to the subset.
pub(crate) fn pooled_subset_t2(
    gram: &[f64],
    p: usize,
    m1: &[f64],
    m2: &[f64],
    n1: usize,
    n2: usize,
    subset: &[usize],
    scratch: &mut SubsetScratch,
) -> Result<f64> {
    let m = subset.len();
    let n = n1 + n2;
    let (n1f, n2f) = (n1 as f64, n2 as f64);
    scratch.w.resize(m * m, 0.0);
    scratch.l.resize(m * m, 0.0);
    scratch.d.resize(m, 0.0);
    for (i, &si) in subset.iter().enumerate() {
        let (a1, a2) = (m1[si], m2[si]);
        scratch.d[i] = a1 - a2;
        let grow = &gram[si * p..];
        let wrow = &mut scratch.w[i * m..i * m + i + 1];
        for (j, &sj) in subset[..=i].iter().enumerate() {
            wrow[j] = grow[sj] - n1f * a1 * m1[sj] - n2f * a2 * m2[sj];
        }
    }
    factor_into(&scratch.w, m, &mut scratch.l)?;
    forward_solve_raw(&scratch.l, m, &mut scratch.d);
    let q: f64 = scratch.d.iter().map(|v| v * v).sum();
    let (nf, mf) = (n as f64, m as f64);
    let tau = n1f * n2f / nf;
    Ok((nf - mf - 1.0) * tau * q / mf)
}

/// Upper-tail p-value of the subset statistic under its F(m, n−1−m) null law.
pub(crate) fn pooled_subset_pvalue(t2: f64, m: usize, n: usize) -> Result<f64> {
    Ok(1.0 - f_cdf(t2, m as f64, (n - 1 - m) as f64)?)
}

/// Welch-type subset statistic and its approximate degrees of freedom.
///
/// `g1`, `g2` are per-group Gram matrices for the current labeling.
pub(crate) fn welch_subset_stat(
    g1: &[f64],
    g2: &[f64],
    p: usize,
    m1: &[f64],
    m2: &[f64],
    n1: usize,
    n2: usize,
    subset: &[usize],
    scratch: &mut SubsetScratch,
) -> Result<(f64, f64)> {
    let m = subset.len();
    let (n1f, n2f) = (n1 as f64, n2 as f64);
    scratch.w.resize(m * m, 0.0);
    scratch.l.resize(m * m, 0.0);
    scratch.d.resize(m, 0.0);
    scratch.sx.resize(m * m, 0.0);
    // S̃_g = (G_g,S − n_g m̄_g m̄_g') / (n_g (n_g − 1)) restricted to the subset
    let (c1, c2) = (1.0 / (n1f * (n1f - 1.0)), 1.0 / (n2f * (n2f - 1.0)));
    for (i, &si) in subset.iter().enumerate() {
        let (a1, a2) = (m1[si], m2[si]);
        scratch.d[i] = a1 - a2;
        let g1row = &g1[si * p..];
        let g2row = &g2[si * p..];
        for (j, &sj) in subset.iter().enumerate() {
            let sx = c1 * (g1row[sj] - n1f * a1 * m1[sj]);
            let sy = c2 * (g2row[sj] - n2f * a2 * m2[sj]);
            scratch.sx[i * m + j] = sx;
            scratch.w[i * m + j] = sx + sy;
        }
    }
    factor_into(&scratch.w, m, &mut scratch.l)?;
    let mut y = scratch.d.clone();
    forward_solve_raw(&scratch.l, m, &mut y);
    let t2: f64 = y.iter().map(|v| v * v).sum();
    let nu = crate::classic::welch_dof(
        &scratch.sx,
        &scratch.l,
        m,
        n1,
        n2,
        &mut scratch.m_buf,
        &mut scratch.col,
    );
    Ok((t2, nu))
}

/// Upper-tail p-value of the Welch-type subset statistic:
/// T²·(ν−m+1)/(νm) ~ F(m, ν−m+1).
pub(crate) fn welch_subset_pvalue(t2: f64, nu: f64, m: usize) -> Result<f64> {
    let mf = m as f64;
    let d2 = nu - mf + 1.0;
    if !(d2 > 0.0) {
        return Err(Error::DegenerateDof(format!(
            "nu - m + 1 = {d2} must be positive (nu = {nu}, m = {m})"
        )));
    }
    Ok(1.0 - f_cdf(t2 * d2 / (nu * mf), mf, d2)?)
}
