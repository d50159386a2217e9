//! Scalar golden-section maximization.

const INV_PHI: f64 = 0.618_033_988_749_894_8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarMax {
    pub x: f64,
    pub value: f64,
    pub iterations: usize,
    /// False when the interior bracket looked non-unimodal.
    pub unimodal: bool,
}

/// Maximizes `f` on `[lo, hi]`, comparing the endpoints against the interior optimum.
pub fn golden_section_max<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64, max_iter: usize) -> ScalarMax {
    if hi <= lo {
        return ScalarMax { x: lo, value: f(lo), iterations: 0, unimodal: true };
    }
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut iterations = 0;
    while (b - a) > tol && iterations < max_iter {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        iterations += 1;
    }
    let xm = 0.5 * (a + b);
    let fm = f(xm);
    let (flo, fhi) = (f(lo), f(hi));
    let mut best = (xm, fm);
    if flo > best.1 {
        best = (lo, flo);
    }
    if fhi > best.1 {
        best = (hi, fhi);
    }
    // A concave function never has an endpoint beating the interior optimum
    // unless the search has already converged onto that endpoint.
    let unimodal = best.0 == xm || (best.0 - xm).abs() <= 2.0 * tol.max(1e-12);
    ScalarMax { x: best.0, value: best.1, iterations, unimodal }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interior_and_boundary_maxima() {
        let r = golden_section_max(|p| -(p - 0.7) * (p - 0.7), 0.0, 1.0, 1e-8, 200);
        assert!((r.x - 0.7).abs() < 1e-7);
        let r = golden_section_max(|p| -(p - 1.5) * (p - 1.5), 0.0, 1.0, 1e-8, 200);
        assert!((r.x - 1.0).abs() < 1e-7);
        assert!(r.unimodal);
    }

    #[test]
    fn degenerate_interval() {
        let r = golden_section_max(|p| p, 0.4, 0.4, 1e-8, 200);
        assert_eq!(r.x, 0.4);
    }

    #[test]
    fn flags_bimodal() {
        // Global max at 0 but the interior search locks onto the bump near 0.8.
        let f = |p: f64| if p < 0.05 { 2.0 - p } else { -(p - 0.8) * (p - 0.8) };
        let r = golden_section_max(f, 0.0, 1.0, 1e-8, 200);
        assert_eq!(r.x, 0.0);
        assert!(!r.unimodal);
    }
}
