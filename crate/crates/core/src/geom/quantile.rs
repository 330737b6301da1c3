use crate::error::{Error, Result};

/// Linear-interpolation quantile of `values` at `q ∈ [0, 1]`: with the values
/// sorted ascending and `h = (n - 1) q`, returns
/// `v[⌊h⌋] + (h - ⌊h⌋) (v[⌊h⌋ + 1] - v[⌊h⌋])`.
pub fn quantile(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptySample);
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::Invalid(format!("quantile level {q} outside [0, 1]")));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Invalid("quantile of non-finite values".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(quantile_sorted(&sorted, q))
}

/// Same as [`quantile`] on already sorted, nonempty input.
pub(crate) fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    if lo + 1 >= sorted.len() {
        return sorted[sorted.len() - 1];
    }
    sorted[lo] + (h - lo as f64) * (sorted[lo + 1] - sorted[lo])
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn examples() {
        assert_eq!(quantile(&[1.0, 2.0, 3.0, 4.0, 5.0], 0.5).unwrap(), 3.0);
        assert_eq!(quantile(&[7.0], 0.0).unwrap(), 7.0);
        assert_eq!(quantile(&[7.0], 0.83).unwrap(), 7.0);
        assert_eq!(quantile(&[10.0, 0.0], 0.25).unwrap(), 2.5);
        assert!(matches!(quantile(&[], 0.5), Err(Error::EmptySample)));
    }

    proptest! {
        #[test]
        fn monotone_in_q(v in prop::collection::vec(-1e3f64..1e3, 1..40), a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(quantile(&v, lo).unwrap() <= quantile(&v, hi).unwrap());
            let min = v.iter().cloned().fold(f64::INFINITY, f64::min);
            let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert_eq!(quantile(&v, 0.0).unwrap(), min);
            prop_assert_eq!(quantile(&v, 1.0).unwrap(), max);
        }
    }
}
