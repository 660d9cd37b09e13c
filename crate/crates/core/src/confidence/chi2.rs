use statrs::function::gamma::{gamma_lr, ln_gamma};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Chi2Error {
    #[error("probability {0} is outside (0,1)")]
    ProbabilityOutOfRange(f64),
    #[error("degrees of freedom must be positive, got {0}")]
    DegreesOfFreedom(f64),
}

fn cdf(x: f64, df: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        gamma_lr(df / 2.0, x / 2.0)
    }
}

fn pdf(x: f64, df: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let k = df / 2.0;
    ((k - 1.0) * x.ln() - x / 2.0 - k * std::f64::consts::LN_2 - ln_gamma(k)).exp()
}

/// Inverse CDF of the chi-square distribution: bisection to a narrow
/// bracket, then safeguarded Newton steps on the regularized lower
/// incomplete gamma function.
pub fn chi_square_quantile(p: f64, df: f64) -> Result<f64, Chi2Error> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Chi2Error::ProbabilityOutOfRange(p));
    }
    if !(df > 0.0 && df.is_finite()) {
        return Err(Chi2Error::DegreesOfFreedom(df));
    }
    let mut lo = 0.0;
    let mut hi = df.max(1.0);
    while cdf(hi, df) < p {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if cdf(mid, df) < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-6 * hi.max(1e-300) {
            break;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..50 {
        let g = cdf(x, df) - p;
        if g < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let d = pdf(x, df);
        let mut next = if d > 0.0 { x - g / d } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 1e-15 * x.max(1e-300) {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `P(X ≤ q)` for one degree of freedom by composite Simpson quadrature
    /// after substituting `x = t²`, which removes the endpoint singularity:
    /// the integrand becomes `2 φ(t)`.
    fn cdf_oracle(q: f64) -> f64 {
        let b = q.sqrt();
        let n = 20_000;
        let h = b / n as f64;
        let g = |t: f64| 2.0 * (-t * t / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let mut s = g(0.0) + g(b);
        for i in 1..n {
            s += g(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    /// Inverts the quadrature oracle by bisection.
    fn quantile_oracle(p: f64) -> f64 {
        let (mut lo, mut hi) = (0.0, 50.0);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if cdf_oracle(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn matches_quadrature_oracle() {
        for p in [0.5, 0.95, 0.99, 0.1, 0.999, 0.9833] {
            let x = chi_square_quantile(p, 1.0).unwrap();
            let o = quantile_oracle(p);
            assert!((x - o).abs() <= 1e-10, "p={p}: {x} vs {o}");
        }
        assert!((chi_square_quantile(0.95, 1.0).unwrap() - 3.841458820694124).abs() < 1e-10);
        assert!((chi_square_quantile(0.5, 1.0).unwrap() - 0.454936423119572).abs() < 1e-10);
    }

    #[test]
    fn tends_to_zero() {
        let x = chi_square_quantile(1e-12, 1.0).unwrap();
        assert!((0.0..1e-10).contains(&x), "{x}");
        let y = chi_square_quantile(1e-6, 1.0).unwrap();
        assert!(x < y && y < 1e-10);
    }

    #[test]
    fn other_degrees_of_freedom() {
        // Median of chi-square with 2 df is 2 ln 2.
        let x = chi_square_quantile(0.5, 2.0).unwrap();
        assert!((x - 2.0 * std::f64::consts::LN_2).abs() < 1e-10);
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(chi_square_quantile(0.0, 1.0).is_err());
        assert!(chi_square_quantile(1.0, 1.0).is_err());
        assert!(chi_square_quantile(f64::NAN, 1.0).is_err());
        assert!(chi_square_quantile(0.5, 0.0).is_err());
    }
}
