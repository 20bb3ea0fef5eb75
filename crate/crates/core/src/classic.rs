//! Classical building blocks: two-sample Hotelling T² (pooled and Welch-type),
//! scalar t-tests, the Simes combiner, and the marginal-Simes global test.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{column_means, pooled_covariance, CholeskyFactor, DataMatrix};
use crate::special::{f_cdf, t_cdf};

/// Degrees of freedom attached to a test result.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum DegreesOfFreedom {
    Single(f64),
    Pair(f64, f64),
}

/// A named test result: statistic, p-value, degrees of freedom, and
/// method-specific extras (e.g. the approximate ν of the Welch variant).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub method: String,
    pub statistic: f64,
    pub p_value: f64,
    pub df: Option<DegreesOfFreedom>,
    pub extras: BTreeMap<String, f64>,
}

impl TestOutcome {
    pub(crate) fn new(method: &str, statistic: f64, p_value: f64) -> Self {
        TestOutcome {
            method: method.to_string(),
            statistic,
            p_value,
            df: None,
            extras: BTreeMap::new(),
        }
    }

    pub(crate) fn with_df(mut self, df: DegreesOfFreedom) -> Self {
        self.df = Some(df);
        self
    }

    pub(crate) fn with_extra(mut self, key: &str, value: f64) -> Self {
        self.extras.insert(key.to_string(), value);
        self
    }
}

fn check_same_dim(x: &DataMatrix, y: &DataMatrix) -> Result<usize> {
    if x.p() != y.p() {
        return Err(Error::DimensionMismatch(format!(
            "group dimensions differ: {} vs {}",
            x.p(),
            y.p()
        )));
    }
    Ok(x.p())
}

/// Two-sample Hotelling T² with pooled covariance.
///
/// The statistic carries the (n−p−1)/((n−2)p) normalization, so it is
/// F(p, n−p−1)-distributed under the null and the p-value is its upper tail.
pub fn hotelling_two_sample(x: &DataMatrix, y: &DataMatrix) -> Result<TestOutcome> {
    let p = check_same_dim(x, y)?;
    let (nx, ny) = (x.n(), y.n());
    let n = nx + ny;
    if n < p + 2 {
        return Err(Error::InsufficientSamples(format!(
            "Hotelling needs n_x + n_y >= p + 2 = {}, got {n}",
            p + 2
        )));
    }
    let pooled = pooled_covariance(x, y)?;
    let mx = column_means(x);
    let my = column_means(y);
    let d: Vec<f64> = mx.iter().zip(&my).map(|(a, b)| a - b).collect();
    let q = pooled.cholesky()?.quad_form_inv(&d);
    let (nf, pf) = (n as f64, p as f64);
    let tau = (nx as f64) * (ny as f64) / nf;
    let stat = (nf - pf - 1.0) / ((nf - 2.0) * pf) * tau * q;
    let d2 = nf - pf - 1.0;
    let p_value = 1.0 - f_cdf(stat, pf, d2)?;
    Ok(TestOutcome::new("hotelling", stat, p_value).with_df(DegreesOfFreedom::Pair(pf, d2)))
}

/// Unbiased covariance of one sample (divisor n − 1), as flat row-major.
fn group_covariance(x: &DataMatrix) -> Vec<f64> {
    let (n, p) = (x.n(), x.p());
    let means = column_means(x);
    let mut acc = vec![0.0; p * p];
    let mut dev = vec![0.0; p];
    for i in 0..n {
        let row = x.row(i);
        for j in 0..p {
            dev[j] = row[j] - means[j];
        }
        for a in 0..p {
            let da = dev[a];
            let out = &mut acc[a * p..(a + 1) * p];
            for (o, db) in out.iter_mut().zip(dev.iter()) {
                *o += da * db;
            }
        }
    }
    let inv = 1.0 / (n as f64 - 1.0);
    for v in &mut acc {
        *v *= inv;
    }
    acc
}

/// Approximate degrees of freedom ν for the Welch-type statistic, computed
/// from S̃_X = Σ̂_X/n_X, S̃_Y = Σ̂_Y/n_Y, S̃ = S̃_X + S̃_Y:
///
///   ν = (p + p²) / Σ_g (n_g − 1)⁻¹ [ tr((S̃_g S̃⁻¹)²) + tr(S̃_g S̃⁻¹)² ]
///
/// The (n_g − 1)⁻¹ weights make ν reduce exactly to the Welch–Satterthwaite
/// value at p = 1 and keep ν ≤ n_X + n_Y − 2 when the group contributions
/// coincide.
///
/// `lower` is the Cholesky factor of S̃; `m_buf` and `col` are scratch.
pub(crate) fn welch_dof(
    s_tilde_x: &[f64],
    lower: &[f64],
    p: usize,
    nx: usize,
    ny: usize,
    m_buf: &mut Vec<f64>,
    col: &mut Vec<f64>,
) -> f64 {
    // M = S̃⁻¹ S̃_X, column by column (stored column-major in m_buf)
    m_buf.resize(p * p, 0.0);
    col.resize(p, 0.0);
    for c in 0..p {
        for r in 0..p {
            col[r] = s_tilde_x[r * p + c];
        }
        crate::matrix::solve_raw(lower, p, col);
        m_buf[c * p..(c + 1) * p].copy_from_slice(col);
    }
    let mut tr_m = 0.0;
    for i in 0..p {
        tr_m += m_buf[i * p + i];
    }
    let mut tr_m2 = 0.0;
    for i in 0..p {
        for j in 0..p {
            tr_m2 += m_buf[j * p + i] * m_buf[i * p + j];
        }
    }
    let pf = p as f64;
    // Y side via S̃_Y S̃⁻¹ = I − S̃_X S̃⁻¹
    let tr_my = pf - tr_m;
    let tr_my2 = pf - 2.0 * tr_m + tr_m2;
    let denom = (tr_m2 + tr_m * tr_m) / (nx as f64 - 1.0)
        + (tr_my2 + tr_my * tr_my) / (ny as f64 - 1.0);
    (pf + pf * pf) / denom
}

/// Welch-type two-sample test for unequal group covariances:
/// T²* = (X̄−Ȳ)'(Σ̂_X/n_X + Σ̂_Y/n_Y)⁻¹(X̄−Ȳ), with approximate df ν and
/// null law T²*·(ν−p+1)/(νp) ~ F(p, ν−p+1). `extras` carries ν.
pub fn welch_hotelling(x: &DataMatrix, y: &DataMatrix) -> Result<TestOutcome> {
    let p = check_same_dim(x, y)?;
    let (nx, ny) = (x.n(), y.n());
    let n = nx + ny;
    if n < p + 2 {
        return Err(Error::InsufficientSamples(format!(
            "Welch-Hotelling needs n_x + n_y - 2 >= p = {p} for the combined estimate to factor"
        )));
    }
    let cx = group_covariance(x);
    let cy = group_covariance(y);
    let (fx, fy) = (1.0 / nx as f64, 1.0 / ny as f64);
    let mut s_tilde_x = cx;
    for v in &mut s_tilde_x {
        *v *= fx;
    }
    let mut s_tilde = vec![0.0; p * p];
    for i in 0..p * p {
        s_tilde[i] = s_tilde_x[i] + cy[i] * fy;
    }
    let factor = CholeskyFactor::factor(&s_tilde, p).map_err(|e| match e {
        Error::SingularCovariance(msg) => Error::InsufficientSamples(format!(
            "combined covariance estimate failed to factor: {msg}"
        )),
        other => other,
    })?;
    let mx = column_means(x);
    let my = column_means(y);
    let d: Vec<f64> = mx.iter().zip(&my).map(|(a, b)| a - b).collect();
    let stat = factor.quad_form_inv(&d);
    let (mut m_buf, mut col) = (Vec::new(), Vec::new());
    let nu = welch_dof(&s_tilde_x, factor.lower(), p, nx, ny, &mut m_buf, &mut col);
    let pf = p as f64;
    let d2 = nu - pf + 1.0;
    if !(d2 > 0.0) {
        return Err(Error::DegenerateDof(format!(
            "nu - p + 1 = {d2} must be positive (nu = {nu})"
        )));
    }
    let f_stat = stat * d2 / (nu * pf);
    let p_value = 1.0 - f_cdf(f_stat, pf, d2)?;
    Ok(TestOutcome::new("welch_hotelling", stat, p_value)
        .with_df(DegreesOfFreedom::Pair(pf, d2))
        .with_extra("nu", nu))
}

fn mean_and_ss(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let ss = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>();
    (mean, ss)
}

/// Two-sided pooled-variance t-test.
pub fn pooled_t_test(x: &[f64], y: &[f64]) -> Result<TestOutcome> {
    if x.len() < 2 || y.len() < 2 {
        return Err(Error::InsufficientSamples(
            "t-test needs at least 2 observations per group".into(),
        ));
    }
    let (nx, ny) = (x.len() as f64, y.len() as f64);
    let (mx, ssx) = mean_and_ss(x);
    let (my, ssy) = mean_and_ss(y);
    let df = nx + ny - 2.0;
    let pooled_var = (ssx + ssy) / df;
    if !(pooled_var > 0.0) {
        return Err(Error::ZeroVariance("pooled variance is zero".into()));
    }
    let se = (pooled_var * (1.0 / nx + 1.0 / ny)).sqrt();
    let t = (mx - my) / se;
    let p_value = 2.0 * (1.0 - t_cdf(t.abs(), df)?);
    Ok(TestOutcome::new("pooled_t", t, p_value).with_df(DegreesOfFreedom::Single(df)))
}

/// Two-sided Welch t-test with Welch–Satterthwaite degrees of freedom.
pub fn welch_t_test(x: &[f64], y: &[f64]) -> Result<TestOutcome> {
    if x.len() < 2 || y.len() < 2 {
        return Err(Error::InsufficientSamples(
            "t-test needs at least 2 observations per group".into(),
        ));
    }
    let (nx, ny) = (x.len() as f64, y.len() as f64);
    let (mx, ssx) = mean_and_ss(x);
    let (my, ssy) = mean_and_ss(y);
    let vx = ssx / (nx - 1.0) / nx;
    let vy = ssy / (ny - 1.0) / ny;
    let denom = vx + vy;
    if !(denom > 0.0) {
        return Err(Error::ZeroVariance("both group variances are zero".into()));
    }
    let df = denom * denom / (vx * vx / (nx - 1.0) + vy * vy / (ny - 1.0));
    let t = (mx - my) / denom.sqrt();
    let p_value = 2.0 * (1.0 - t_cdf(t.abs(), df)?);
    Ok(TestOutcome::new("welch_t", t, p_value).with_df(DegreesOfFreedom::Single(df)))
}

/// Simes combination of k p-values: min over l of p_(l) · k / l, clamped to [0, 1].
pub fn simes(pvals: &[f64]) -> Result<f64> {
    if pvals.is_empty() {
        return Err(Error::EmptyInput("simes needs at least one p-value".into()));
    }
    if pvals.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::Domain("simes p-values must lie in [0, 1]".into()));
    }
    let mut sorted = pvals.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("no NaN after domain check"));
    let k = sorted.len() as f64;
    let mut best = f64::INFINITY;
    for (i, p) in sorted.iter().enumerate() {
        best = best.min(p * k / (i as f64 + 1.0));
    }
    Ok(best.clamp(0.0, 1.0))
}

/// Bonferroni combination: min(1, k · min p).
pub fn bonferroni(pvals: &[f64]) -> Result<f64> {
    if pvals.is_empty() {
        return Err(Error::EmptyInput(
            "bonferroni needs at least one p-value".into(),
        ));
    }
    if pvals.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::Domain(
            "bonferroni p-values must lie in [0, 1]".into(),
        ));
    }
    let min = pvals.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok((min * pvals.len() as f64).clamp(0.0, 1.0))
}

/// Global-null test: a two-sided t-test per column (pooled or Welch per
/// `equal_var`), combined over the p columns with Simes.
pub fn marginal_simes_test(
    x: &DataMatrix,
    y: &DataMatrix,
    equal_var: bool,
) -> Result<TestOutcome> {
    let p = check_same_dim(x, y)?;
    let mut pvals = Vec::with_capacity(p);
    let mut colx = vec![0.0; x.n()];
    let mut coly = vec![0.0; y.n()];
    for j in 0..p {
        for (i, v) in colx.iter_mut().enumerate() {
            *v = x.values()[(i, j)];
        }
        for (i, v) in coly.iter_mut().enumerate() {
            *v = y.values()[(i, j)];
        }
        let out = if equal_var {
            pooled_t_test(&colx, &coly)?
        } else {
            welch_t_test(&colx, &coly)?
        };
        pvals.push(out.p_value);
    }
    let s = simes(&pvals)?;
    let min_p = pvals.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(TestOutcome::new("simes", s, s).with_extra("min_marginal_p", min_p))
}
