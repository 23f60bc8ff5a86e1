//! Estimators over i.i.d. replica samples.

/// Sample mean and its standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    assert!(n > 0, "empty sample");
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Unbiased sample variance and its standard error
/// `√((m₄ - s⁴(n-3)/(n-1)) / n)`.
pub fn variance_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    assert!(n >= 4, "need at least 4 samples for a variance error");
    let nf = n as f64;
    let mean = xs.iter().sum::<f64>() / nf;
    let s2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / nf;
    let v = (m4 - s2 * s2 * (nf - 3.0) / (nf - 1.0)) / nf;
    (s2, v.max(0.0).sqrt())
}

/// Nearest-rank quantile: the `⌈qn⌉`-th smallest value.
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    assert!(!xs.is_empty() && (0.0..=1.0).contains(&q));
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = ((q * v.len() as f64).ceil() as usize).clamp(1, v.len());
    v[rank - 1]
}

/// Distribution-free standard error of [`quantile`]: half the gap between
/// the order statistics one binomial standard deviation either side of
/// rank `qn`.
pub fn quantile_se(xs: &[f64], q: f64) -> f64 {
    let n = xs.len() as f64;
    let sd = (n * q * (1.0 - q)).sqrt() / n;
    let lo = quantile(xs, (q - sd).max(0.0));
    let hi = quantile(xs, (q + sd).min(1.0));
    (hi - lo) / 2.0
}

/// Weighted least-squares line `y = a + b x`: `(b, se_b, a)` with
/// `se_b = 1/√(∑w (x - x̄_w)²)` for weights `w = 1/σ²`.
pub fn wls_slope(x: &[f64], y: &[f64], w: &[f64]) -> (f64, f64, f64) {
    assert!(x.len() == y.len() && x.len() == w.len() && x.len() >= 2);
    let sw: f64 = w.iter().sum();
    let xm = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let ym = y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let sxx: f64 = x.iter().zip(w).map(|(a, b)| b * (a - xm).powi(2)).sum();
    let sxy: f64 = x
        .iter()
        .zip(y)
        .zip(w)
        .map(|((a, c), b)| b * (a - xm) * (c - ym))
        .sum();
    let slope = sxy / sxx;
    (slope, (1.0 / sxx).sqrt(), ym - slope * xm)
}

/// `½ ∑ |p - q|`.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len());
    p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>() / 2.0
}

/// Pearson correlation.
pub fn correlation(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let xm = xs.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - xm) * (y - ym);
        sxx += (x - xm).powi(2);
        syy += (y - ym).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}

/// Empirical pmf of indices `< size`.
pub fn histogram(idx: impl IntoIterator<Item = usize>, size: usize) -> Vec<f64> {
    let mut h = vec![0.0; size];
    let mut n = 0usize;
    for i in idx {
        h[i] += 1.0;
        n += 1;
    }
    h.iter_mut().for_each(|v| *v /= n.max(1) as f64);
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_variance() {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        let (m, se) = mean_se(&xs);
        assert_eq!(m, 3.0);
        assert!((se - (2.5f64 / 5.0).sqrt()).abs() < 1e-15);
        let (v, vse) = variance_se(&xs);
        assert_eq!(v, 2.5);
        assert!(vse > 0.0);
        assert_eq!(mean_se(&[7.0]), (7.0, 0.0));
    }

    #[test]
    fn quantiles() {
        let xs: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(quantile(&xs, 0.5), 50.0);
        assert_eq!(quantile(&xs, 0.99), 99.0);
        assert_eq!(quantile(&xs, 1.0), 100.0);
        assert_eq!(quantile(&xs, 0.0), 1.0);
        let se = quantile_se(&xs, 0.5);
        assert!((se - 5.0).abs() <= 1.0, "se {se}");
        assert_eq!(quantile_se(&[3.0; 50], 0.9), 0.0);
    }

    #[test]
    fn exact_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 3.0, 5.0, 7.0];
        let (b, se, a) = wls_slope(&x, &y, &[1.0, 2.0, 1.0, 4.0]);
        assert!((b - 2.0).abs() < 1e-12 && (a - 1.0).abs() < 1e-12);
        assert!(se > 0.0);
    }

    #[test]
    fn tv_and_hist() {
        assert_eq!(total_variation(&[0.5, 0.5], &[1.0, 0.0]), 0.5);
        assert_eq!(histogram([0, 1, 1, 3], 4), vec![0.25, 0.5, 0.0, 0.25]);
    }
}
