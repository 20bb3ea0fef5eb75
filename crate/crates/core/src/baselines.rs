//! Competitor tests: the diagonally-normalized sum test (SD), the
//! U-statistic distance test (CQ), and the random-projection Hotelling
//! test (Lopes). All three remain usable when p > n.

use rand_distr::StandardNormal;

use crate::classic::{DegreesOfFreedom, TestOutcome};
use crate::error::{Error, Result};
use crate::matrix::{column_means, pooled_covariance, quadratic_form_inv, DataMatrix};
use crate::rng::RngState;
use crate::special::{f_cdf, normal_cdf};

fn check_dims(x: &DataMatrix, y: &DataMatrix) -> Result<usize> {
    if x.p() != y.p() {
        return Err(Error::DimensionMismatch(format!(
            "group dimensions differ: {} vs {}",
            x.p(),
            y.p()
        )));
    }
    Ok(x.p())
}

/// Diagonally-normalized two-sample test.
///
/// T = [τ (X̄−Ȳ)' D⁻¹ (X̄−Ȳ) − Np/(N−2)] / sqrt(2 (tr R̂² − p²/N) c_{p,N}),
/// with D the diagonal of the pooled covariance, R̂ the pooled correlation
/// matrix, N = n_x + n_y − 2, c_{p,N} = 1 + tr R̂² / p^{3/2}, and
/// τ = n_x n_y / (n_x + n_y). Upper-tail standard normal p-value.
pub fn sd_test(x: &DataMatrix, y: &DataMatrix) -> Result<TestOutcome> {
    let p = check_dims(x, y)?;
    let (nx, ny) = (x.n(), y.n());
    let n = nx + ny;
    if n < 5 {
        return Err(Error::InsufficientSamples(format!(
            "the centering term needs n_x + n_y - 4 > 0, got n = {n}"
        )));
    }
    let (nxf, nyf) = (nx as f64, ny as f64);
    let nn = (n - 2) as f64; // N

    // pooled scatter, lower triangle; p can exceed n here so no factorization
    let mx = column_means(x);
    let my = column_means(y);
    let mut scatter = vec![0.0; p * p];
    let mut dev = vec![0.0; p];
    let mut accumulate = |data: &DataMatrix, means: &[f64]| {
        for i in 0..data.n() {
            let row = data.row(i);
            for j in 0..p {
                dev[j] = row[j] - means[j];
            }
            for a in 0..p {
                let da = dev[a];
                let out = &mut scatter[a * p..a * p + a + 1];
                for (o, db) in out.iter_mut().zip(dev[..=a].iter()) {
                    *o += da * db;
                }
            }
        }
    };
    accumulate(x, &mx);
    accumulate(y, &my);

    for j in 0..p {
        if !(scatter[j * p + j] > 0.0) {
            return Err(Error::ZeroVariance(format!(
                "column {j} has zero pooled variance"
            )));
        }
    }

    // tr R̂² is scale-free, so the unnormalized scatter works directly
    let mut tr_r2 = p as f64;
    for a in 1..p {
        let saa = scatter[a * p + a];
        for b in 0..a {
            let r2 = scatter[a * p + b] * scatter[a * p + b] / (saa * scatter[b * p + b]);
            tr_r2 += 2.0 * r2;
        }
    }

    let tau = nxf * nyf / (nxf + nyf);
    // D = diag(pooled covariance) = diag(scatter) / N
    let mut quad = 0.0;
    for j in 0..p {
        let d = mx[j] - my[j];
        quad += d * d * nn / scatter[j * p + j];
    }
    let pf = p as f64;
    let numerator = tau * quad - nn * pf / (nn - 2.0);
    let c_pn = 1.0 + tr_r2 / pf.powf(1.5);
    let bracket = 2.0 * (tr_r2 - pf * pf / nn) * c_pn;
    if !(bracket > 0.0) {
        return Err(Error::ZeroVariance(format!(
            "variance estimate {bracket} of the normalized sum is not positive"
        )));
    }
    let stat = numerator / bracket.sqrt();
    Ok(TestOutcome::new("sd", stat, 1.0 - normal_cdf(stat)).with_extra("tr_r2", tr_r2))
}

/// U-statistic distance test. The statistic estimates ‖μ_X − μ_Y‖²
/// without covariance inversion:
///
/// T = Σ_{i≠j} X_i'X_j / (n_x(n_x−1)) + Σ_{i≠j} Y_i'Y_j / (n_y(n_y−1))
///     − 2 Σ_{i,k} X_i'Y_k / (n_x n_y),
///
/// standardized by the leave-out trace estimates of tr Σ², and referred to
/// the upper standard normal tail.
pub fn cq_test(x: &DataMatrix, y: &DataMatrix) -> Result<TestOutcome> {
    let p = check_dims(x, y)?;
    let (nx, ny) = (x.n(), y.n());
    if nx < 3 || ny < 3 {
        return Err(Error::InsufficientSamples(
            "the leave-two-out trace estimator needs at least 3 observations per group".into(),
        ));
    }
    let (nxf, nyf) = (nx as f64, ny as f64);

    // grand-center both samples; every term below is translation invariant
    // and centering keeps the inner products small
    let mut grand = vec![0.0; p];
    for i in 0..nx {
        let row = x.row(i);
        for j in 0..p {
            grand[j] += row[j];
        }
    }
    for i in 0..ny {
        let row = y.row(i);
        for j in 0..p {
            grand[j] += row[j];
        }
    }
    for g in &mut grand {
        *g /= (nx + ny) as f64;
    }
    let center = |data: &DataMatrix| -> Vec<f64> {
        let mut out = Vec::with_capacity(data.n() * p);
        for i in 0..data.n() {
            out.extend(data.row(i).iter().zip(&grand).map(|(v, g)| v - g));
        }
        out
    };
    let cx = center(x);
    let cy = center(y);
    let dot = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(u, v)| u * v).sum() };
    let xrow = |i: usize| &cx[i * p..(i + 1) * p];
    let yrow = |i: usize| &cy[i * p..(i + 1) * p];

    // Gram blocks
    let mut gxx = vec![0.0; nx * nx];
    for i in 0..nx {
        for j in 0..=i {
            let v = dot(xrow(i), xrow(j));
            gxx[i * nx + j] = v;
            gxx[j * nx + i] = v;
        }
    }
    let mut gyy = vec![0.0; ny * ny];
    for i in 0..ny {
        for j in 0..=i {
            let v = dot(yrow(i), yrow(j));
            gyy[i * ny + j] = v;
            gyy[j * ny + i] = v;
        }
    }
    let mut gxy = vec![0.0; nx * ny];
    for i in 0..nx {
        for j in 0..ny {
            gxy[i * ny + j] = dot(xrow(i), yrow(j));
        }
    }

    let off_mean = |g: &[f64], n: usize| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += g[i * n + j];
                }
            }
        }
        s / (n as f64 * (n as f64 - 1.0))
    };
    let cross_mean = gxy.iter().sum::<f64>() / (nxf * nyf);
    let stat = off_mean(&gxx, nx) + off_mean(&gyy, ny) - 2.0 * cross_mean;

    // leave-two-out estimate of tr Σ_h²
    let tr_sq = |g: &[f64], n: usize| -> f64 {
        let nf = n as f64;
        let rowsum: Vec<f64> = (0..n).map(|i| (0..n).map(|j| g[i * n + j]).sum()).collect();
        let mut acc = 0.0;
        for j in 0..n {
            for k in 0..n {
                if j == k {
                    continue;
                }
                let gjk = g[j * n + k];
                let pj = gjk - (rowsum[j] - g[j * n + j] - gjk) / (nf - 2.0);
                let pk = gjk - (rowsum[k] - g[k * n + k] - gjk) / (nf - 2.0);
                acc += pj * pk;
            }
        }
        acc / (nf * (nf - 1.0))
    };
    let tr1 = tr_sq(&gxx, nx);
    let tr2 = tr_sq(&gyy, ny);

    // leave-one-out estimate of tr Σ_X Σ_Y
    let rowsum_x: Vec<f64> = (0..nx).map(|l| (0..ny).map(|k| gxy[l * ny + k]).sum()).collect();
    let colsum_y: Vec<f64> = (0..ny).map(|k| (0..nx).map(|l| gxy[l * ny + k]).sum()).collect();
    let mut tr12 = 0.0;
    for l in 0..nx {
        for k in 0..ny {
            let glk = gxy[l * ny + k];
            let a = glk - (rowsum_x[l] - glk) / (nyf - 1.0);
            let b = glk - (colsum_y[k] - glk) / (nxf - 1.0);
            tr12 += a * b;
        }
    }
    tr12 /= nxf * nyf;

    let var = 2.0 / (nxf * (nxf - 1.0)) * tr1 + 2.0 / (nyf * (nyf - 1.0)) * tr2
        + 4.0 / (nxf * nyf) * tr12;
    if !(var > 0.0) {
        return Err(Error::ZeroVariance(format!(
            "null variance estimate {var} of the distance statistic is not positive"
        )));
    }
    let sigma = var.sqrt();
    let z = stat / sigma;
    Ok(TestOutcome::new("cq", stat, 1.0 - normal_cdf(z))
        .with_extra("sigma_hat", sigma)
        .with_extra("z", z))
}

/// Random-projection Hotelling test: project both samples through a p × k
/// matrix of i.i.d. standard normals and run the k-dimensional Hotelling
/// machinery in the projected space.
///
/// T = τ (X̄−Ȳ)' P (P' Σ̂ P)⁻¹ P' (X̄−Ȳ), with
/// T (n−k−1)/((n−2)k) ~ F(k, n−k−1) under the null.
pub fn lopes_test(x: &DataMatrix, y: &DataMatrix, k: usize, rng: RngState) -> Result<TestOutcome> {
    let p = check_dims(x, y)?;
    let (nx, ny) = (x.n(), y.n());
    let n = nx + ny;
    if k < 1 || k + 2 > n {
        return Err(Error::ConfigInvalid(format!(
            "projection dimension k = {k} must satisfy 1 <= k <= n - 2 = {}",
            n.saturating_sub(2)
        )));
    }
    // projection matrix, drawn row-major (dimension-major) from the stream
    let mut r = rng.rng();
    let mut proj = vec![0.0; p * k];
    for v in &mut proj {
        *v = rand::Rng::sample(&mut r, StandardNormal);
    }
    let project = |data: &DataMatrix| -> DataMatrix {
        let mut rows = Vec::with_capacity(data.n());
        for i in 0..data.n() {
            let row = data.row(i);
            let mut z = vec![0.0; k];
            for (j, &v) in row.iter().enumerate() {
                let prow = &proj[j * k..(j + 1) * k];
                for (zc, pc) in z.iter_mut().zip(prow) {
                    *zc += v * pc;
                }
            }
            rows.push(z);
        }
        DataMatrix::from_rows(&rows).expect("projected data is finite")
    };
    let zx = project(x);
    let zy = project(y);

    // P'Σ̂P equals the pooled covariance of the projected samples
    let pooled = pooled_covariance(&zx, &zy)?;
    let mzx = column_means(&zx);
    let mzy = column_means(&zy);
    let d: Vec<f64> = mzx.iter().zip(&mzy).map(|(a, b)| a - b).collect();
    let quad = quadratic_form_inv(&pooled, &d)?;
    let (nf, kf) = (n as f64, k as f64);
    let tau = (nx as f64) * (ny as f64) / nf;
    let stat = tau * quad;
    let d2 = nf - kf - 1.0;
    let p_value = 1.0 - f_cdf(stat * d2 / ((nf - 2.0) * kf), kf, d2)?;
    Ok(TestOutcome::new("lopes", stat, p_value)
        .with_df(DegreesOfFreedom::Pair(kf, d2))
        .with_extra("k", kf))
}
