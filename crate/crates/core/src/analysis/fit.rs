use crate::curve::ResponseCurve;
use crate::error::{Error, Result};

/// Least-squares `(kappa, beta)` from samples with `0 < y < 1`, using
/// `ln(-ln y) = beta ln kappa - beta ln x`.
pub fn fit_curve(xs: &[f64], ys: &[f64]) -> Result<ResponseCurve> {
    let (u, v): (Vec<f64>, Vec<f64>) = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0 && **y < 1.0)
        .map(|(x, y)| (x.ln(), (-y.ln()).ln()))
        .unzip();
    let fit = super::linear_regression(&u, &v)
        .ok_or_else(|| Error::invalid("samples", "need two distinct signals with 0 < y < 1"))?;
    let beta = -fit.slope;
    let kappa = (fit.intercept / beta).exp();
    ResponseCurve::new(kappa, beta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_curve() {
        let c = ResponseCurve::new(2.2, 1.6).unwrap();
        let xs: Vec<f64> = (1..30).map(|k| 0.3 * k as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| c.value(*x)).collect();
        let f = fit_curve(&xs, &ys).unwrap();
        assert!((f.kappa() - 2.2).abs() < 1e-9 && (f.beta() - 1.6).abs() < 1e-9);
    }

    #[test]
    fn rejects_degenerate_samples() {
        assert!(fit_curve(&[1.0], &[0.5]).is_err());
        assert!(fit_curve(&[1.0, 2.0], &[0.0, 1.0]).is_err());
    }
}
