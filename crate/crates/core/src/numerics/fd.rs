//! Central finite-difference stencils and observed-order estimates.

/// Fourth-order central first derivative.
pub fn d1_c4<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h)
}

/// Sixth-order central first derivative.
pub fn d1_c6<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (f(x + 3.0 * h) - 9.0 * f(x + 2.0 * h) + 45.0 * f(x + h) - 45.0 * f(x - h) + 9.0 * f(x - 2.0 * h) - f(x - 3.0 * h))
        / (60.0 * h)
}

/// Sixth-order central second derivative.
pub fn d2_c6<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (2.0 * f(x + 3.0 * h) - 27.0 * f(x + 2.0 * h) + 270.0 * f(x + h) - 490.0 * f(x) + 270.0 * f(x - h) - 27.0 * f(x - 2.0 * h)
        + 2.0 * f(x - 3.0 * h))
        / (180.0 * h * h)
}

/// Second-order central first derivative.
pub fn d1_c2<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Observed orders `log(e_k / e_{k+1}) / log(ratio)` for errors measured on
/// meshes refined by `ratio`.
pub fn observed_orders(errors: &[f64], ratio: f64) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).ln() / ratio.ln()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stencils_reach_their_orders() {
        let f = |x: f64| (2.0 * x).sin();
        let exact = 2.0 * 1.4f64.cos();
        let e4: Vec<f64> = [0.1, 0.05, 0.025].iter().map(|&h| (d1_c4(f, 0.7, h) - exact).abs()).collect();
        let e6: Vec<f64> = [0.2, 0.1, 0.05].iter().map(|&h| (d1_c6(f, 0.7, h) - exact).abs()).collect();
        assert!(observed_orders(&e4, 2.0).iter().all(|&p| (p - 4.0).abs() < 0.1));
        assert!(observed_orders(&e6, 2.0).iter().all(|&p| (p - 6.0).abs() < 0.2));
        let d2 = d2_c6(f, 0.7, 0.05);
        assert!((d2 + 4.0 * 1.4f64.sin()).abs() < 1e-8);
    }
}
