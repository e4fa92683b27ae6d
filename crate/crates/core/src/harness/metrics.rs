//! Metric reductions: running averages, empirical CDFs, sample statistics.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("empty value list")]
    Empty,
}

/// Running mean: `out[i] = mean(values[..=i])`.
pub fn running_average(values: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut sum = 0.0;
    for (i, v) in values.iter().enumerate() {
        sum += v;
        out.push(sum / (i + 1) as f64);
    }
    out
}

/// Mean and sample standard deviation (n - 1 denominator; 0 for n < 2).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Empirical CDF as sorted `(value, probability)` steps; duplicate values
/// collapse onto the highest step.
pub fn empirical_cdf(values: &[f64]) -> Result<Vec<(f64, f64)>, MetricsError> {
    if values.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("cdf values must be comparable"));
    let n = sorted.len();
    let mut out = Vec::new();
    for (i, &v) in sorted.iter().enumerate() {
        if i + 1 == n || sorted[i + 1] > v {
            out.push((v, (i + 1) as f64 / n as f64));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn running_average_examples() {
        assert_eq!(running_average(&[1.0, 2.0, 3.0]), vec![1.0, 1.5, 2.0]);
        assert!(running_average(&[]).is_empty());
    }

    #[test]
    fn cdf_single_value() {
        assert_eq!(empirical_cdf(&[5.0]).unwrap(), vec![(5.0, 1.0)]);
    }

    #[test]
    fn cdf_collapses_duplicates() {
        let cdf = empirical_cdf(&[1.0, 2.0, 2.0, 4.0]).unwrap();
        assert_eq!(cdf, vec![(1.0, 0.25), (2.0, 0.75), (4.0, 1.0)]);
    }

    #[test]
    fn cdf_is_nondecreasing_and_ends_at_one() {
        let values = [3.0, -1.0, 2.0, 2.0, 7.5, 0.0, 3.0];
        let cdf = empirical_cdf(&values).unwrap();
        for pair in cdf.windows(2) {
            assert!(pair[1].0 > pair[0].0);
            assert!(pair[1].1 > pair[0].1);
        }
        assert_eq!(cdf.last().unwrap().1, 1.0);
        assert!(empirical_cdf(&[]).is_err());
    }

    #[test]
    fn sample_std_uses_n_minus_one() {
        let (mean, std) = mean_std(&[1.0, 3.0]);
        assert_eq!(mean, 2.0);
        assert!((std - 2f64.sqrt()).abs() < 1e-12);
        let (_, lone) = mean_std(&[4.0]);
        assert_eq!(lone, 0.0);
    }
}
