use super::chi2::{chi_square_quantile, Chi2Error};
use crate::interval::Interval;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CiError {
    #[error("a state needs at least two successors, got {0}")]
    TooFewCategories(usize),
    #[error("confidence level {0} is outside (0,1)")]
    Alpha(f64),
    #[error(transparent)]
    Chi2(#[from] Chi2Error),
}

/// Goodman simultaneous confidence intervals for the outgoing distribution
/// of one state, at joint confidence `alpha_state`. With no observations
/// every interval is `[0,1]`.
pub fn state_ci(counts: &[u64], alpha_state: f64) -> Result<Vec<Interval>, CiError> {
    let k = counts.len();
    if k < 2 {
        return Err(CiError::TooFewCategories(k));
    }
    if !(alpha_state > 0.0 && alpha_state < 1.0) {
        return Err(CiError::Alpha(alpha_state));
    }
    let n: u64 = counts.iter().sum();
    if n == 0 {
        return Ok(vec![Interval::new(0.0, 1.0); k]);
    }
    let a = chi_square_quantile(1.0 - (1.0 - alpha_state) / k as f64, 1.0)?;
    let n = n as f64;
    Ok(counts
        .iter()
        .map(|&x| {
            let x = x as f64;
            let centre = a + 2.0 * x;
            let half = (a * (a + 4.0 * x * (n - x) / n)).sqrt();
            let den = 2.0 * (n + a);
            // The closed form gives 0 and 1 at the extremes only up to rounding.
            let lo = if x == 0.0 { 0.0 } else { ((centre - half) / den).clamp(0.0, 1.0) };
            let hi = if x == n { 1.0 } else { ((centre + half) / den).clamp(0.0, 1.0) };
            Interval::new(lo, hi)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_observations() {
        let ci = state_ci(&[0, 0], 0.95).unwrap();
        assert_eq!(ci, vec![Interval::new(0.0, 1.0); 2]);
    }

    #[test]
    fn concentrated_counts() {
        let ci = state_ci(&[100, 0], 0.95).unwrap();
        assert!(ci[0].lo > 0.9);
        assert_eq!(ci[0].hi, 1.0);
        assert_eq!(ci[1].lo, 0.0);
        assert_eq!(ci[1].lo, 0.0);
        assert!(ci[1].hi < 0.1);
    }

    #[test]
    fn intervals_contain_frequencies_and_shrink() {
        let small = state_ci(&[30, 50, 20], 0.9).unwrap();
        let large = state_ci(&[300, 500, 200], 0.9).unwrap();
        for (i, f) in [0.3, 0.5, 0.2].iter().enumerate() {
            assert!(small[i].contains(*f) && large[i].contains(*f));
            assert!(large[i].width() < small[i].width());
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(state_ci(&[5], 0.9).is_err());
        assert!(state_ci(&[5, 5], 1.0).is_err());
    }
}
