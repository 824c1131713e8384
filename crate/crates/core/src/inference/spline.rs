use crate::error::{Error, Result};

/// Interpolating cubic spline with zero second derivative at both ends.
#[derive(Debug, Clone)]
pub struct NaturalCubicSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// Second derivatives at the knots.
    m: Vec<f64>,
}

impl NaturalCubicSpline {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        let n = xs.len();
        if n < 3 || ys.len() != n {
            return Err(Error::contract("spline needs at least 3 knots with matching values"));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::contract("spline knots must be strictly increasing"));
        }
        // Thomas algorithm on the interior equations.
        let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        let mut diag = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        let mut upper = vec![0.0; n];
        for i in 1..n - 1 {
            diag[i] = 2.0 * (h[i - 1] + h[i]);
            upper[i] = h[i];
            rhs[i] = 6.0 * ((ys[i + 1] - ys[i]) / h[i] - (ys[i] - ys[i - 1]) / h[i - 1]);
        }
        for i in 2..n - 1 {
            let factor = h[i - 1] / diag[i - 1];
            diag[i] -= factor * upper[i - 1];
            rhs[i] -= factor * rhs[i - 1];
        }
        let mut m = vec![0.0; n];
        for i in (1..n - 1).rev() {
            m[i] = (rhs[i] - upper[i] * m[i + 1]) / diag[i];
        }
        Ok(Self { xs, ys, m })
    }

    /// Value, first and second derivative at `x` (clamped to the knot range).
    pub fn eval(&self, x: f64) -> (f64, f64, f64) {
        let n = self.xs.len();
        let x = x.clamp(self.xs[0], self.xs[n - 1]);
        let i = match self.xs.partition_point(|&k| k <= x) {
            0 => 0,
            p => (p - 1).min(n - 2),
        };
        let h = self.xs[i + 1] - self.xs[i];
        let a = (self.xs[i + 1] - x) / h;
        let b = (x - self.xs[i]) / h;
        let (m0, m1) = (self.m[i], self.m[i + 1]);
        let (y0, y1) = (self.ys[i], self.ys[i + 1]);
        let value = a * y0 + b * y1 + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
        let d1 = (y1 - y0) / h - (3.0 * a * a - 1.0) * h * m0 / 6.0 + (3.0 * b * b - 1.0) * h * m1 / 6.0;
        let d2 = a * m0 + b * m1;
        (value, d1, d2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_linear_data() {
        let xs: Vec<f64> = (0..8).map(f64::from).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 0.7 * x - 2.0).collect();
        let s = NaturalCubicSpline::new(xs, ys).unwrap();
        for x in [0.0, 0.5, 3.0, 6.9, 7.0] {
            let (v, d1, d2) = s.eval(x);
            assert!((v - (0.7 * x - 2.0)).abs() < 1e-13);
            assert!((d1 - 0.7).abs() < 1e-13);
            assert!(d2.abs() < 1e-13);
        }
    }

    #[test]
    fn interpolates_and_is_natural() {
        let xs = vec![0.0, 1.0, 2.5, 3.0, 5.0];
        let ys = vec![1.0, -1.0, 2.0, 0.5, 4.0];
        let s = NaturalCubicSpline::new(xs.clone(), ys.clone()).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            assert!((s.eval(*x).0 - y).abs() < 1e-12);
        }
        assert!(s.eval(0.0).2.abs() < 1e-12);
        assert!(s.eval(5.0).2.abs() < 1e-12);
        // first derivative continuous at an interior knot
        let left = s.eval(2.5 - 1e-9).1;
        let right = s.eval(2.5 + 1e-9).1;
        assert!((left - right).abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_knots() {
        assert!(NaturalCubicSpline::new(vec![0.0, 1.0], vec![0.0, 1.0]).is_err());
        assert!(NaturalCubicSpline::new(vec![0.0, 1.0, 1.0], vec![0.0, 1.0, 2.0]).is_err());
    }
}
