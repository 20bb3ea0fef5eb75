//! Special functions backing the t, F, and normal distribution functions.
//!
//! Everything is implemented in-house on top of the regularized incomplete
//! beta and gamma functions, targeting absolute error below 1e-12 so p-value
//! comparisons at conventional levels are never resolution-limited.

use crate::error::{Error, Result};

/// Lanczos approximation (g = 7, 9 terms) for ln Γ(x), x > 0.
/// Relative error is at the 1e-15 level over the range used here.
pub fn ln_gamma(x: f64) -> f64 {
    const COEFFS: [f64; 8] = [
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    const G: f64 = 7.0;
    debug_assert!(x > 0.0);
    if x < 0.5 {
        // reflection keeps the small-argument range accurate
        let s = (std::f64::consts::PI * x).sin();
        return std::f64::consts::PI.ln() - s.ln() - ln_gamma(1.0 - x);
    }
    let z = x - 1.0;
    let mut acc = 0.99999999999980993;
    for (i, c) in COEFFS.iter().enumerate() {
        acc += c / (z + i as f64 + 1.0);
    }
    let t = z + G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (z + 0.5) * t.ln() - t + acc.ln()
}

/// Continued fraction for the incomplete beta (Lentz's algorithm).
/// Assumes x < (a + 1)/(a + b + 2) so the fraction converges quickly.
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 500;
    const EPS: f64 = 1e-16;
    const TINY: f64 = 1e-300;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;

    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;

    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;

        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;

        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta function I_x(a, b).
///
/// Continued-fraction evaluation with the symmetry reduction
/// I_x(a,b) = 1 - I_{1-x}(b,a) applied when x > (a+1)/(a+b+2).
pub fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> Result<f64> {
    if !(a > 0.0) || !(b > 0.0) {
        return Err(Error::Domain(format!(
            "incomplete beta requires a > 0 and b > 0, got a={a}, b={b}"
        )));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!(
            "incomplete beta requires x in [0, 1], got x={x}"
        )));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == 1.0 {
        return Ok(1.0);
    }
    let front =
        (ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln()).exp();
    let value = if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, 1.0 - x) / b
    };
    Ok(value.clamp(0.0, 1.0))
}

/// Student-t CDF with `df` degrees of freedom. Exact 0.5 at x = 0.
pub fn t_cdf(x: f64, df: f64) -> Result<f64> {
    if !(df > 0.0) {
        return Err(Error::Domain(format!("t_cdf requires df > 0, got {df}")));
    }
    if x.is_nan() {
        return Err(Error::Domain("t_cdf: x is NaN".into()));
    }
    if x == 0.0 {
        return Ok(0.5);
    }
    let ib = regularized_incomplete_beta(0.5 * df, 0.5, df / (df + x * x))?;
    Ok(if x > 0.0 { 1.0 - 0.5 * ib } else { 0.5 * ib })
}

/// F distribution CDF with (d1, d2) degrees of freedom.
pub fn f_cdf(x: f64, d1: f64, d2: f64) -> Result<f64> {
    if !(d1 > 0.0) || !(d2 > 0.0) {
        return Err(Error::Domain(format!(
            "f_cdf requires positive degrees of freedom, got d1={d1}, d2={d2}"
        )));
    }
    if x.is_nan() || x < 0.0 {
        return Err(Error::Domain(format!("f_cdf requires x >= 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    regularized_incomplete_beta(0.5 * d1, 0.5 * d2, d1 * x / (d1 * x + d2))
}

/// Series expansion for the regularized lower incomplete gamma P(a, x), x < a + 1.
fn gamma_p_series(a: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 500;
    const EPS: f64 = 1e-16;
    let mut ap = a;
    let mut sum = 1.0 / a;
    let mut del = sum;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * EPS {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma(a)).exp()
}

/// Continued fraction for the regularized upper incomplete gamma Q(a, x), x >= a + 1.
fn gamma_q_cf(a: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 500;
    const EPS: f64 = 1e-16;
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}

/// Regularized lower incomplete gamma P(a, x).
fn gamma_p(a: f64, x: f64) -> f64 {
    debug_assert!(a > 0.0 && x >= 0.0);
    if x == 0.0 {
        0.0
    } else if x < a + 1.0 {
        gamma_p_series(a, x)
    } else {
        1.0 - gamma_q_cf(a, x)
    }
}

/// Complementary error function, |error| at the 1e-15 level.
pub fn erfc(z: f64) -> f64 {
    if z >= 0.0 {
        if z == 0.0 {
            1.0
        } else if z * z < 1.5 {
            1.0 - gamma_p(0.5, z * z)
        } else {
            gamma_q_cf(0.5, z * z)
        }
    } else {
        2.0 - erfc(-z)
    }
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Adaptive Simpson quadrature, independent of the functions under test.
    fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
        fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
            let m = 0.5 * (a + b);
            let fm = f(m);
            ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
        }
        fn rec(
            f: &dyn Fn(f64) -> f64,
            a: f64,
            fa: f64,
            b: f64,
            fb: f64,
            whole: f64,
            m: f64,
            fm: f64,
            tol: f64,
            depth: u32,
        ) -> f64 {
            let (left, lm, flm) = simpson(f, a, fa, m, fm);
            let (right, rm, frm) = simpson(f, m, fm, b, fb);
            if depth == 0 || (left + right - whole).abs() < 15.0 * tol {
                left + right + (left + right - whole) / 15.0
            } else {
                rec(f, a, fa, m, fm, left, lm, flm, 0.5 * tol, depth - 1)
                    + rec(f, m, fm, b, fb, right, rm, frm, 0.5 * tol, depth - 1)
            }
        }
        let fa = f(a);
        let fb = f(b);
        let (whole, m, fm) = simpson(f, a, fa, b, fb);
        rec(f, a, fa, b, fb, whole, m, fm, tol, 50)
    }

    /// Quadrature oracle for I_x(a,b): integrate the unnormalized beta density
    /// and normalize by its integral over [0, 1].
    fn beta_inc_oracle(a: f64, b: f64, x: f64) -> f64 {
        let dens = move |t: f64| t.powf(a - 1.0) * (1.0 - t).powf(b - 1.0);
        let num = adaptive_simpson(&dens, 0.0, x, 1e-14);
        let den = adaptive_simpson(&dens, 0.0, 1.0, 1e-14);
        num / den
    }

    /// Quadrature oracle for the t CDF via the substitution t = sqrt(df) tan(u),
    /// which maps the density onto cos^(df-1) over a finite interval.
    fn t_cdf_oracle(x: f64, df: f64) -> f64 {
        let g = move |u: f64| u.cos().powf(df - 1.0);
        let half_pi = std::f64::consts::FRAC_PI_2;
        let upper = (x / df.sqrt()).atan();
        let num = adaptive_simpson(&g, -half_pi, upper, 1e-14);
        let den = adaptive_simpson(&g, -half_pi, half_pi, 1e-14);
        num / den
    }

    #[test]
    fn incomplete_beta_boundaries() {
        assert_eq!(regularized_incomplete_beta(2.0, 3.0, 0.0).unwrap(), 0.0);
        assert_eq!(regularized_incomplete_beta(2.0, 3.0, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn incomplete_beta_uniform_case() {
        // I_x(1,1) = x
        let v = regularized_incomplete_beta(1.0, 1.0, 0.37).unwrap();
        assert!((v - 0.37).abs() < 1e-14);
    }

    #[test]
    fn incomplete_beta_matches_quadrature() {
        // oracle computed first, frozen here; quadrature re-checks it at runtime
        let frozen = 0.3521975859067672;
        let oracle = beta_inc_oracle(2.5, 4.0, 0.3);
        assert!((oracle - frozen).abs() < 1e-10, "oracle drifted: {oracle}");
        let v = regularized_incomplete_beta(2.5, 4.0, 0.3).unwrap();
        assert!((v - oracle).abs() < 1e-10);
        assert!((v - frozen).abs() < 1e-12);
    }

    #[test]
    fn incomplete_beta_domain_errors() {
        assert!(regularized_incomplete_beta(0.0, 1.0, 0.5).is_err());
        assert!(regularized_incomplete_beta(1.0, -2.0, 0.5).is_err());
        assert!(regularized_incomplete_beta(1.0, 1.0, 1.5).is_err());
        assert!(regularized_incomplete_beta(1.0, 1.0, -0.1).is_err());
        assert!(regularized_incomplete_beta(f64::NAN, 1.0, 0.5).is_err());
    }

    proptest! {
        #[test]
        fn incomplete_beta_symmetry(a in 0.1f64..20.0, b in 0.1f64..20.0, x in 0.0f64..=1.0) {
            let lhs = regularized_incomplete_beta(a, b, x).unwrap();
            let rhs = regularized_incomplete_beta(b, a, 1.0 - x).unwrap();
            prop_assert!((lhs + rhs - 1.0).abs() < 1e-12);
        }

        #[test]
        fn t_cauchy_identity(x in -50.0f64..50.0) {
            // df = 1 is the Cauchy distribution
            let v = t_cdf(x, 1.0).unwrap();
            let expect = 0.5 + x.atan() / std::f64::consts::PI;
            prop_assert!((v - expect).abs() < 1e-12);
        }

        #[test]
        fn f_is_squared_t(t in -8.0f64..8.0, df in 1.0f64..60.0) {
            let lhs = f_cdf(t * t, 1.0, df).unwrap();
            let rhs = 2.0 * t_cdf(t.abs(), df).unwrap() - 1.0;
            prop_assert!((lhs - rhs).abs() < 1e-12);
        }

        #[test]
        fn f_cdf_monotone(d1 in 0.5f64..40.0, d2 in 0.5f64..40.0) {
            let grid = [0.0, 0.05, 0.3, 1.0, 2.5, 10.0, 1e4];
            let mut prev = -1.0;
            for &x in &grid {
                let v = f_cdf(x, d1, d2).unwrap();
                prop_assert!(v >= prev - 1e-15);
                prev = v;
            }
            prop_assert_eq!(f_cdf(0.0, d1, d2).unwrap(), 0.0);
            prop_assert!(f_cdf(1e300, d1, d2).unwrap() > 1.0 - 1e-6);
        }
    }

    #[test]
    fn t_cdf_center_and_frozen_value() {
        assert_eq!(t_cdf(0.0, 5.0).unwrap(), 0.5);
        // oracle-computed value for the (1.2247, 4) case
        let frozen = 0.8560603424071216;
        let oracle = t_cdf_oracle(1.2247, 4.0);
        assert!((oracle - frozen).abs() < 1e-10, "oracle drifted: {oracle}");
        let v = t_cdf(1.2247, 4.0).unwrap();
        assert!((v - oracle).abs() < 1e-10);
        assert!(t_cdf(-3.0, 7.0).unwrap() < 0.5);
        assert!(t_cdf(0.0, -1.0).is_err());
    }

    #[test]
    fn f_cdf_frozen_value() {
        // from the squared-t identity at t = sqrt(1.5), df = 4
        let frozen = 0.7121358652733093;
        let oracle = 2.0 * t_cdf_oracle(1.5f64.sqrt(), 4.0) - 1.0;
        assert!((oracle - frozen).abs() < 1e-10, "oracle drifted: {oracle}");
        let v = f_cdf(1.5, 1.0, 4.0).unwrap();
        assert!((v - frozen).abs() < 1e-12);
        assert!(f_cdf(-0.5, 3.0, 7.0).is_err());
        assert!(f_cdf(1.0, 0.0, 7.0).is_err());
    }

    #[test]
    fn normal_cdf_values() {
        assert_eq!(normal_cdf(0.0), 0.5);
        assert!((normal_cdf(1.96) - 0.9750021048517796).abs() < 1e-12);
        assert!((normal_cdf(-0.5) - 0.3085375387259869).abs() < 1e-12);
        assert!((normal_cdf(2.5) - 0.9937903346742239).abs() < 1e-12);
        for x in [-4.0, -1.3, -0.2, 0.7, 2.9] {
            assert!((normal_cdf(x) + normal_cdf(-x) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn ln_gamma_known_values() {
        assert!((ln_gamma(5.0) - 24.0f64.ln()).abs() < 1e-13);
        assert!((ln_gamma(0.5) - 0.5 * std::f64::consts::PI.ln()).abs() < 1e-13);
        assert!((ln_gamma(1.0)).abs() < 1e-14);
        // large argument used by F CDFs with hundreds of degrees of freedom
        let x: f64 = 300.0;
        // Stirling bound sanity: ln Γ(x) ≈ (x-0.5)ln x - x + 0.5 ln 2π
        let stirling = (x - 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln();
        assert!((ln_gamma(x) - stirling).abs() < 1e-3);
    }
}
