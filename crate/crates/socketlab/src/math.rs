//! Small numeric helpers shared across modules.

/// Least-squares straight line `y = a + b*x`. Returns `(a, b)`.
///
/// Falls back to a flat line through the mean when the x spread is
/// degenerate (all points equal).
pub(crate) fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    if x.is_empty() {
        return (0.0, 0.0);
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        sxx += (xi - mx) * (xi - mx);
        sxy += (xi - mx) * (yi - my);
    }
    if sxx == 0.0 {
        return (my, 0.0);
    }
    let b = sxy / sxx;
    (my - b * mx, b)
}

/// Centered moving average with the window shrunk symmetrically near the
/// edges, so linear trends pass through unchanged everywhere.
pub(crate) fn moving_average(y: &[f64], window: usize) -> Vec<f64> {
    let n = y.len();
    if window <= 1 || n < 3 {
        return y.to_vec();
    }
    let half = window / 2;
    (0..n)
        .map(|i| {
            let h = half.min(i).min(n - 1 - i);
            let sum: f64 = y[i - h..=i + h].iter().sum();
            sum / (2 * h + 1) as f64
        })
        .collect()
}

/// Odd-window median filter; edges use a symmetrically shrunk window.
pub(crate) fn median_filter(y: &[f64], window: usize) -> Vec<f64> {
    let n = y.len();
    if window <= 1 || n < 3 {
        return y.to_vec();
    }
    let half = window / 2;
    (0..n)
        .map(|i| {
            let h = half.min(i).min(n - 1 - i);
            let mut w: Vec<f64> = y[i - h..=i + h].to_vec();
            w.sort_by(|a, b| a.total_cmp(b));
            w[w.len() / 2]
        })
        .collect()
}

/// Nearest-rank percentile of an already sorted slice, `p` in [0, 100].
pub(crate) fn percentile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty());
    let rank = (p / 100.0 * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn linear_fit_recovers_slope_and_intercept() {
        let x: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let y: Vec<f64> = x.iter().map(|&xi| 2.5 - 0.7 * xi).collect();
        let (a, b) = linear_fit(&x, &y);
        assert_relative_eq!(a, 2.5, epsilon = 1e-12);
        assert_relative_eq!(b, -0.7, epsilon = 1e-12);
    }

    #[test]
    fn moving_average_is_exact_on_linear_data() {
        let y: Vec<f64> = (0..30).map(|i| 3.0 + 0.5 * i as f64).collect();
        let s = moving_average(&y, 5);
        for (a, b) in y.iter().zip(&s) {
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn median_filter_preserves_step() {
        let mut y = vec![1.0; 10];
        y.extend(vec![5.0; 10]);
        let f = median_filter(&y, 5);
        assert_eq!(f[9], 1.0);
        assert_eq!(f[10], 5.0);
    }

    #[test]
    fn percentile_endpoints() {
        let v = vec![1.0, 2.0, 3.0, 4.0];
        assert_eq!(percentile_sorted(&v, 100.0), 4.0);
        assert_eq!(percentile_sorted(&v, 50.0), 2.0);
    }
}
