//! Least-squares line fits and log-log exponent estimation.

use serde::Serialize;

/// Ordinary least squares `y = slope * x + intercept`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Result of fitting `|f| ~ C x^p`.
#[derive(Clone, Debug, Serialize)]
pub struct PowerFit {
    pub exponent: f64,
    pub coefficient: f64,
    /// Exponents fitted on consecutive half-decade windows.
    pub window_exponents: Vec<f64>,
    /// Sign shared by all sampled `f` values (0 if mixed).
    pub sign: f64,
}

impl PowerFit {
    pub fn within(&self, target: f64, tol: f64) -> bool {
        (self.exponent - target).abs() <= tol && self.window_exponents.iter().all(|p| (p - target).abs() <= tol)
    }
}

/// Fits `log|f|` against `log x` on `[lo, hi]` sampled geometrically.
pub fn power_fit<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, samples_per_half_decade: usize) -> PowerFit {
    let half_decades = ((hi / lo).log10() * 2.0).round().max(1.0) as usize;
    let n = half_decades * samples_per_half_decade + 1;
    let ratio = (hi / lo).ln();
    let xs: Vec<f64> = (0..n).map(|i| lo * (ratio * i as f64 / (n - 1) as f64).exp()).collect();
    let vals: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let pos = vals.iter().all(|&v| v > 0.0);
    let neg = vals.iter().all(|&v| v < 0.0);
    let sign = if pos {
        1.0
    } else if neg {
        -1.0
    } else {
        0.0
    };
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = vals.iter().map(|v| v.abs().ln()).collect();
    let (exponent, intercept) = linear_fit(&lx, &ly);
    let window_exponents = (0..half_decades)
        .map(|w| {
            let a = w * samples_per_half_decade;
            let b = a + samples_per_half_decade + 1;
            linear_fit(&lx[a..b], &ly[a..b]).0
        })
        .collect();
    PowerFit { exponent, coefficient: sign * intercept.exp(), window_exponents, sign }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_cubic_exponent() {
        let fit = power_fit(|x| 0.25 * x.powi(3) * (1.0 + x * x), 1e-3, 1e-1, 8);
        assert!(fit.within(3.0, 0.05));
        assert!((fit.coefficient - 0.25).abs() < 0.02);
        assert_eq!(fit.window_exponents.len(), 4);
    }

    #[test]
    fn line_fit_is_exact_on_lines() {
        let (s, i) = linear_fit(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]);
        assert!((s - 2.0).abs() < 1e-15 && (i - 1.0).abs() < 1e-15);
    }
}
