//! Small numerical kernels shared across modules: compensated summation,
//! fixed-order quadrature rules and ordinary least squares.

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1] (Golub-Welsch free Newton
/// iteration on the Legendre recurrence).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { z } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * p - pm1) / (z * z - 1.0);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Fixed double-exponential (tanh-sinh) rule on [-1, 1].
///
/// Abscissas are stored as distances from the nearer endpoint so integrands
/// with endpoint singularities can be evaluated without cancellation.
#[derive(Debug, Clone)]
pub struct TanhSinh {
    /// (distance from endpoint, weight), one entry per node on one side.
    half: Vec<(f64, f64)>,
    center_weight: f64,
}

impl TanhSinh {
    /// `step` is the trapezoid spacing in the transformed variable. The rule
    /// runs out until the endpoint distance underflows, so power-law
    /// endpoint singularities lose no tail mass.
    pub fn new(step: f64) -> Self {
        let half_pi = std::f64::consts::FRAC_PI_2;
        let mut half = Vec::new();
        let mut k = 1;
        loop {
            let t = k as f64 * step;
            if t > 6.5 {
                break;
            }
            let u = half_pi * t.sinh();
            let cu = u.cosh();
            // 1 - tanh(u) = 2 / (exp(2u) + 1)
            let dist = 2.0 / ((2.0 * u).exp() + 1.0);
            let weight = step * half_pi * t.cosh() / (cu * cu);
            if dist == 0.0 || weight == 0.0 {
                break;
            }
            half.push((dist, weight));
            k += 1;
        }
        Self { half, center_weight: step * half_pi }
    }

    /// Integrates `f` over `[a, b]`.
    ///
    /// The integrand is always evaluated at `a + d` or `b - d` with `d` the
    /// exact offset, so a singular point placed at an endpoint is resolved.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        if b <= a {
            return 0.0;
        }
        let half_len = 0.5 * (b - a);
        let mid = a + half_len;
        let mut acc = CompensatedSum::new();
        acc.add(self.center_weight * f(mid));
        for &(dist, weight) in &self.half {
            let d = dist * half_len;
            acc.add(weight * f(a + d));
            acc.add(weight * f(b - d));
        }
        acc.value() * half_len
    }
}

/// Ordinary least squares of `y` on `x`: returns (slope, intercept, r²).
pub fn ols(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
        syy += (b - my) * (b - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { ((sxy * sxy) / (sxx * syy)).clamp(0.0, 1.0) };
    (slope, intercept, r2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = CompensatedSum::new();
        s.add(1.0);
        for _ in 0..10 {
            s.add(1e-16);
        }
        s.add(-1.0);
        assert!((s.value() - 1e-15).abs() < 1e-28);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(6);
        let integral: f64 = x.iter().zip(&w).map(|(&x, &w)| w * x.powi(10)).sum();
        assert!((integral - 2.0 / 11.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn tanh_sinh_handles_endpoint_singularity() {
        let rule = TanhSinh::new(1.0 / 16.0);
        // ∫_0^1 x^{-0.7} dx = 1/0.3
        let v = rule.integrate(0.0, 1.0, |x| x.powf(-0.7));
        assert!((v - 1.0 / 0.3).abs() < 1e-9, "{v}");
        let v = rule.integrate(-2.0, 0.0, |x| (-x).powf(-0.5));
        assert!((v - 2.0 * 2f64.sqrt()).abs() < 1e-10, "{v}");
    }

    #[test]
    fn ols_exact_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v - 1.0).collect();
        let (s, i, r2) = ols(&x, &y);
        assert!((s - 2.0).abs() < 1e-14 && (i + 1.0).abs() < 1e-14 && (r2 - 1.0).abs() < 1e-14);
    }
}
