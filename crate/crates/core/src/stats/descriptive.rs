use super::StatsError;

/// Compensated (Neumaier) sum.
pub(crate) fn sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut s = 0.0f64;
    let mut c = 0.0f64;
    for v in values {
        let t = s + v;
        if s.abs() >= v.abs() {
            c += (s - t) + v;
        } else {
            c += (v - t) + s;
        }
        s = t;
    }
    s + c
}

pub fn mean(values: &[f64]) -> Result<f64, StatsError> {
    if values.is_empty() {
        return Err(StatsError::InsufficientData("mean of an empty sample".into()));
    }
    Ok(sum(values.iter().copied()) / values.len() as f64)
}

/// Unbiased variance (`n - 1` denominator), two-pass.
pub fn variance(values: &[f64]) -> Result<f64, StatsError> {
    if values.len() < 2 {
        return Err(StatsError::InsufficientData(format!(
            "variance needs at least 2 values, got {}",
            values.len()
        )));
    }
    let m = mean(values)?;
    Ok(sum(values.iter().map(|v| (v - m) * (v - m))) / (values.len() - 1) as f64)
}

pub fn sample_std(values: &[f64]) -> Result<f64, StatsError> {
    variance(values).map(f64::sqrt)
}

/// Percentile of ascending `sorted` values by linear interpolation between
/// closest ranks: rank `r = (n - 1) * p / 100`, result
/// `x[floor r] + (r - floor r) * (x[floor r + 1] - x[floor r])`.
pub fn percentile(sorted: &[f64], p: f64) -> Result<f64, StatsError> {
    if sorted.is_empty() {
        return Err(StatsError::InsufficientData("percentile of an empty sample".into()));
    }
    if !(0.0..=100.0).contains(&p) {
        return Err(StatsError::Range(format!("percentile {p} outside [0, 100]")));
    }
    debug_assert!(sorted.windows(2).all(|w| w[0] <= w[1]), "input not sorted");
    let rank = (sorted.len() - 1) as f64 * p / 100.0;
    let lo = rank.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = rank - lo as f64;
    Ok(sorted[lo] + frac * (sorted[hi] - sorted[lo]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_std() {
        assert_eq!(mean(&[3.0, 3.0, 3.0]).unwrap(), 3.0);
        assert_eq!(sample_std(&[3.0, 3.0, 3.0]).unwrap(), 0.0);
        assert_eq!(mean(&[1.0, 2.0, 3.0, 4.0]).unwrap(), 2.5);
        // sum of squared deviations 5, over n - 1 = 3
        assert!((sample_std(&[1.0, 2.0, 3.0, 4.0]).unwrap() - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((sample_std(&[1.0, 2.0, 3.0, 4.0]).unwrap() - 1.2909944).abs() < 1e-7);
        assert!(matches!(sample_std(&[1.0]), Err(StatsError::InsufficientData(_))));
        assert!(mean(&[]).is_err());
    }

    #[test]
    fn percentiles() {
        assert_eq!(percentile(&[1.0, 2.0, 3.0], 50.0).unwrap(), 2.0);
        assert_eq!(percentile(&[1.0, 2.0, 3.0, 4.0], 100.0).unwrap(), 4.0);
        assert_eq!(percentile(&[1.0, 2.0, 3.0, 4.0], 0.0).unwrap(), 1.0);
        assert_eq!(percentile(&[10.0, 20.0], 25.0).unwrap(), 12.5);
        assert_eq!(percentile(&[7.0], 97.5).unwrap(), 7.0);
        assert!(matches!(percentile(&[], 50.0), Err(StatsError::InsufficientData(_))));
        assert!(matches!(percentile(&[1.0], 100.5), Err(StatsError::Range(_))));
        assert!(matches!(percentile(&[1.0], -1.0), Err(StatsError::Range(_))));
    }

    #[test]
    fn compensated_sum_is_accurate() {
        let values = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(sum(values), 2.0);
    }
}
