//! Compressed/stretched-exponential response curve `y(x) = exp(-(kappa/x)^beta)`.
//!
//! The curve maps an effective signal `x >= 0` to a reliability in `[0, 1)`.
//! For `beta > 1` it is a compressed exponential, for `0 < beta < 1` a
//! stretched one; in both cases it is strictly increasing with exactly one
//! inflection point.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResponseCurve {
    kappa: f64,
    beta: f64,
}

impl ResponseCurve {
    pub fn new(kappa: f64, beta: f64) -> Result<Self> {
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(Error::invalid("curve.kappa", format!("must be > 0, got {kappa}")));
        }
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::invalid("curve.beta", format!("must be > 0, got {beta}")));
        }
        Ok(Self { kappa, beta })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Reliability at signal `x`, with `rel(0) = 0` by continuous extension.
    pub fn rel(&self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(Error::NonFinite { what: "signal", value: x });
        }
        if x < 0.0 {
            return Err(Error::invalid("signal", format!("must be >= 0, got {x}")));
        }
        Ok(self.value(x))
    }

    /// Unchecked evaluation used on hot paths. Non-positive signals map to 0.
    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            (-(self.kappa / x).powf(self.beta)).exp()
        }
    }

    /// Logarithmic slope `y'/y = beta (kappa/x)^beta / x`; zero for `x <= 0`.
    ///
    /// Chain-rule code multiplies this by powers of `y`, which keeps the
    /// product finite where `y` underflows.
    #[inline]
    pub fn log_slope(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            self.beta * (self.kappa / x).powf(self.beta) / x
        }
    }

    /// `(y', y'')` at `x > 0`.
    pub fn rel_derivatives(&self, x: f64) -> Result<(f64, f64)> {
        if !x.is_finite() {
            return Err(Error::NonFinite { what: "signal", value: x });
        }
        if x <= 0.0 {
            return Err(Error::invalid("signal", format!("must be > 0, got {x}")));
        }
        // a = kappa^beta; y' = y a b x^{-(b+1)}; y'' = y a b x^{-(b+2)} (a b x^{-b} - (b+1))
        let b = self.beta;
        let u = (self.kappa / x).powf(b); // a x^{-b}
        let y = (-u).exp();
        let d1 = y * b * u / x;
        let d2 = y * b * u / (x * x) * (b * u - (b + 1.0));
        Ok((d1, d2))
    }

    /// Closed-form inflection `(x*, y(x*))`.
    pub fn inflection(&self) -> (f64, f64) {
        let b = self.beta;
        let x_star = self.kappa * (b / (b + 1.0)).powf(1.0 / b);
        let y_star = (-1.0 - 1.0 / b).exp();
        (x_star, y_star)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn compressed() -> ResponseCurve {
        ResponseCurve::new(2.2, 1.6).unwrap()
    }

    fn stretched() -> ResponseCurve {
        ResponseCurve::new(3.0, 0.8).unwrap()
    }

    #[test]
    fn unit_exponent_at_kappa() {
        assert_relative_eq!(compressed().rel(2.2).unwrap(), (-1.0f64).exp(), epsilon = 1e-15);
        assert_relative_eq!(stretched().rel(3.0).unwrap(), 0.367879441171, epsilon = 1e-12);
        assert_eq!(compressed().rel(0.0).unwrap(), 0.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(ResponseCurve::new(0.0, 1.0).is_err());
        assert!(ResponseCurve::new(1.0, -0.5).is_err());
        assert!(compressed().rel(f64::NAN).is_err());
        assert!(compressed().rel(f64::INFINITY).is_err());
        assert!(compressed().rel_derivatives(0.0).is_err());
        assert!(compressed().rel_derivatives(-1.0).is_err());
    }

    #[test]
    fn first_derivative_matches_central_difference() {
        let c = compressed();
        let h = 1e-6;
        let fd = (c.value(1.0 + h) - c.value(1.0 - h)) / (2.0 * h);
        let (d1, _) = c.rel_derivatives(1.0).unwrap();
        assert!(((d1 - fd) / fd).abs() < 1e-6, "analytic {d1} vs fd {fd}");
    }

    #[test]
    fn second_derivative_negative_above_inflection() {
        let c = stretched();
        let (_, d2) = c.rel_derivatives(5.0).unwrap();
        let h = 1e-4;
        let fd2 = (c.value(5.0 + h) - 2.0 * c.value(5.0) + c.value(5.0 - h)) / (h * h);
        assert!(d2 < 0.0 && fd2 < 0.0);
        assert!(((d2 - fd2) / fd2).abs() < 1e-4);
    }

    #[test]
    fn slope_positive_at_inflection() {
        let c = compressed();
        let (x_star, _) = c.inflection();
        let (d1, d2) = c.rel_derivatives(x_star).unwrap();
        assert!(d1 > 0.0);
        assert!(d2.abs() < 1e-12);
    }

    /// Independent oracle: scan a uniform grid for the sign change of the
    /// second difference of `value`, never touching the closed form.
    fn scan_inflection(c: &ResponseCurve, lo: f64, hi: f64, step: f64) -> f64 {
        let h = 1e-3;
        let d2 = |x: f64| c.value(x + h) - 2.0 * c.value(x) + c.value(x - h);
        let mut x = lo;
        let mut prev = d2(x);
        while x < hi {
            let next = d2(x + step);
            if prev > 0.0 && next <= 0.0 {
                return x + step / 2.0;
            }
            prev = next;
            x += step;
        }
        panic!("no sign change found");
    }

    #[test]
    fn inflection_matches_grid_scan() {
        for (c, x_expect, y_expect) in [
            (compressed(), 1.62419, 0.196912),
            (stretched(), 1.08864, 0.105399),
        ] {
            let (x_star, y_star) = c.inflection();
            let x_scan = scan_inflection(&c, 0.5, 3.0, 1e-5);
            assert!((x_star - x_scan).abs() < 1e-4, "{x_star} vs scan {x_scan}");
            assert!((x_star - x_expect).abs() < 5e-5);
            assert!((y_star - y_expect).abs() < 5e-6);
            assert!((c.value(x_star) - y_star).abs() < 1e-9);
            assert!(y_star < (-1.0f64).exp());
            assert_eq!(y_star > (-2.0f64).exp(), c.beta() > 1.0);
        }
    }

    #[test]
    fn inflection_height_independent_of_kappa() {
        for kappa in [0.1, 1.0, 7.5, 40.0] {
            let c = ResponseCurve::new(kappa, 1.6).unwrap();
            let (x_star, y_star) = c.inflection();
            assert_relative_eq!(c.value(x_star), y_star, epsilon = 1e-12);
            assert_relative_eq!(y_star, compressed().inflection().1, epsilon = 1e-15);
        }
    }
}
