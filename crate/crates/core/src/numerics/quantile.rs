use crate::{Error, Result};

/// Type-7 (linear interpolation) sample quantile: with the sample sorted,
/// `h = (n - 1) p` (zero-based) and the result interpolates between
/// `x[floor(h)]` and `x[floor(h) + 1]`.
pub fn empirical_quantile(values: &[f64], p: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyData("quantile of an empty sample".into()));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!(
            "quantile level must lie in [0, 1], got {p}"
        )));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(quantile_sorted(&sorted, p))
}

/// Same as [`empirical_quantile`] for an already ascending, non-empty slice.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    if lo + 1 >= n {
        return sorted[n - 1];
    }
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn type7_examples() {
        assert_eq!(empirical_quantile(&[1.0, 2.0, 3.0, 4.0], 0.5).unwrap(), 2.5);
        let ten: Vec<f64> = (1..=10).map(f64::from).collect();
        assert!((empirical_quantile(&ten, 0.9).unwrap() - 9.1).abs() < 1e-12);
        for p in [0.0, 0.3, 1.0] {
            assert_eq!(empirical_quantile(&[5.0], p).unwrap(), 5.0);
        }
    }

    #[test]
    fn order_does_not_matter() {
        let a = [3.0, 1.0, 4.0, 1.5, 9.0];
        let b = [9.0, 1.5, 1.0, 4.0, 3.0];
        assert_eq!(
            empirical_quantile(&a, 0.37).unwrap(),
            empirical_quantile(&b, 0.37).unwrap()
        );
    }

    #[test]
    fn empty_is_an_error() {
        assert!(matches!(
            empirical_quantile(&[], 0.5),
            Err(Error::EmptyData(_))
        ));
    }
}
