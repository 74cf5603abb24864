//! Log-log exponent regressions.

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::grid::GridField;
use crate::numeric::ols;

/// How a [`RegressionFit`] was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitStatus {
    /// Ordinary least squares on at least three points.
    Fitted,
    /// Every magnitude vanished: the quantity is reproduced exactly.
    Exact,
    /// Every probe increment vanished; no exponent can be read off.
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub points_used: usize,
    /// Points dropped because their magnitude was zero.
    pub dropped: usize,
    pub scales: Vec<f64>,
    pub status: FitStatus,
}

impl RegressionFit {
    /// Placeholder fit carrying no exponent, used for the exact and
    /// degenerate outcomes.
    pub fn sentinel(status: FitStatus, scales: Vec<f64>) -> Self {
        Self { slope: 0.0, intercept: 0.0, r2: 0.0, points_used: 0, dropped: scales.len(), scales, status }
    }

    pub fn is_fitted(&self) -> bool {
        self.status == FitStatus::Fitted
    }
}

/// OLS of `log(magnitude)` on `log(scale)`, ignoring zero magnitudes.
pub fn scaling_regression(pairs: &[(f64, f64)]) -> Result<RegressionFit> {
    for &(s, m) in pairs {
        ensure!(s > 0.0 && s.is_finite(), Parameter, "scale {s} must be positive");
        ensure!(m >= 0.0 && m.is_finite(), Parameter, "magnitude {m} must be nonnegative");
    }
    let used: Vec<(f64, f64)> = pairs.iter().copied().filter(|&(_, m)| m > 0.0).collect();
    ensure!(used.len() >= 3, Statistics, "need at least 3 nonzero points, have {}", used.len());
    let x: Vec<f64> = used.iter().map(|p| p.0.ln()).collect();
    let y: Vec<f64> = used.iter().map(|p| p.1.ln()).collect();
    let (slope, intercept, r2) = ols(&x, &y);
    Ok(RegressionFit {
        slope,
        intercept,
        r2,
        points_used: used.len(),
        dropped: pairs.len() - used.len(),
        scales: used.iter().map(|p| p.0).collect(),
        status: FitStatus::Fitted,
    })
}

/// Root-mean-square of rectangular increments over all node-aligned
/// `ls × lt` rectangles whose lower-left node `(i, j)` passes `keep`.
pub fn rms_increment<M>(f: &GridField, ls: usize, lt: usize, keep: &M) -> Option<f64>
where
    M: Fn(usize, usize, usize, usize) -> bool,
{
    if ls > f.ns() || lt > f.nt() {
        return None;
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for i in 0..=f.ns() - ls {
        for j in 0..=f.nt() - lt {
            if keep(i, j, ls, lt) {
                let d = f.rect_increment_idx(i, i + ls, j, j + lt);
                sum += d * d;
                count += 1;
            }
        }
    }
    (count > 0).then(|| (sum / count as f64).sqrt())
}

/// Rectangular exponent-sum estimate from the RMS increment over dyadic
/// squares of side `2^k` cells, `k < levels`.
pub fn rect_exponent_sum_estimate(f: &GridField, levels: usize) -> Result<RegressionFit> {
    rect_exponent_sum_estimate_masked(f, levels, |_, _, _, _| true)
}

/// As [`rect_exponent_sum_estimate`], probing only the rectangles accepted
/// by `keep(i, j, ls, lt)` (lower-left node and side lags in cells).
pub fn rect_exponent_sum_estimate_masked<M>(f: &GridField, levels: usize, keep: M) -> Result<RegressionFit>
where
    M: Fn(usize, usize, usize, usize) -> bool,
{
    ensure!(levels >= 4, Statistics, "need at least 4 dyadic scales, got {levels}");
    ensure!(
        1usize << (levels - 1) <= f.ns().min(f.nt()),
        Statistics,
        "grid {}x{} has fewer than {levels} dyadic scales",
        f.ns(),
        f.nt()
    );
    let h = (f.ds() * f.dt()).sqrt();
    let mut pairs = Vec::with_capacity(levels);
    for k in 0..levels {
        let lag = 1usize << k;
        let rms = rms_increment(f, lag, lag, &keep)
            .ok_or_else(|| crate::Error::Statistics(format!("no admissible square of side {lag}")))?;
        pairs.push((lag as f64 * h, rms));
    }
    if pairs.iter().all(|p| p.1 == 0.0) {
        return Ok(RegressionFit::sentinel(FitStatus::Degenerate, pairs.iter().map(|p| p.0).collect()));
    }
    scaling_regression(&pairs)
}

/// Per-axis exponents: the RMS increment is regressed on one side length
/// while the other side stays at one cell. Noisier than the square probe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnisotropicReport {
    pub gamma: RegressionFit,
    pub gamma_hat: RegressionFit,
}

pub fn anisotropic_exponents<M>(f: &GridField, levels: usize, keep: M) -> Result<AnisotropicReport>
where
    M: Fn(usize, usize, usize, usize) -> bool,
{
    ensure!(levels >= 3, Statistics, "need at least 3 dyadic scales, got {levels}");
    ensure!(1usize << (levels - 1) < f.ns().min(f.nt()), Statistics, "grid too small for {levels} scales");
    let axis = |along_s: bool| -> Result<RegressionFit> {
        let step = if along_s { f.ds() } else { f.dt() };
        let mut pairs = Vec::new();
        for k in 0..levels {
            let lag = 1usize << k;
            let (ls, lt) = if along_s { (lag, 1) } else { (1, lag) };
            if let Some(r) = rms_increment(f, ls, lt, &keep) {
                pairs.push((lag as f64 * step, r));
            }
        }
        if pairs.iter().all(|p| p.1 == 0.0) {
            return Ok(RegressionFit::sentinel(FitStatus::Degenerate, pairs.iter().map(|p| p.0).collect()));
        }
        scaling_regression(&pairs)
    };
    Ok(AnisotropicReport { gamma: axis(true)?, gamma_hat: axis(false)? })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Rectangle;

    #[test]
    fn exact_power_laws() {
        let pairs: Vec<(f64, f64)> = (1..6).map(|k| (k as f64, (k * k) as f64)).collect();
        let fit = scaling_regression(&pairs).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-12 && (fit.r2 - 1.0).abs() < 1e-12);
        let flat: Vec<(f64, f64)> = (1..6).map(|k| (k as f64, 3.0)).collect();
        assert!(scaling_regression(&flat).unwrap().slope.abs() < 1e-12);
    }

    #[test]
    fn zero_magnitudes_are_dropped_and_counted() {
        let pairs = [(1.0, 0.0), (2.0, 2.0), (4.0, 4.0), (8.0, 8.0)];
        let fit = scaling_regression(&pairs).unwrap();
        assert_eq!((fit.points_used, fit.dropped), (3, 1));
        assert!(scaling_regression(&pairs[..3]).is_err());
        assert!(scaling_regression(&[(0.0, 1.0), (1.0, 1.0), (2.0, 1.0)]).is_err());
    }

    #[test]
    fn scale_equivariance() {
        let pairs = [(0.1, 0.3), (0.2, 0.5), (0.4, 1.1), (0.8, 1.9)];
        let a = scaling_regression(&pairs).unwrap();
        let scaled: Vec<(f64, f64)> = pairs.iter().map(|&(s, m)| (s, 5.0 * m)).collect();
        let b = scaling_regression(&scaled).unwrap();
        assert!((a.slope - b.slope).abs() < 1e-12);
        assert!((b.intercept - a.intercept - 5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn bilinear_field_has_exponent_sum_two() {
        let f = GridField::from_fn(Rectangle::unit(), 64, 64, |u, v| u * v).unwrap();
        let fit = rect_exponent_sum_estimate(&f, 5).unwrap();
        assert!((fit.slope - 2.0).abs() < 0.05);
        let zero = GridField::zeros(Rectangle::unit(), 64, 64).unwrap();
        assert_eq!(rect_exponent_sum_estimate(&zero, 5).unwrap().status, FitStatus::Degenerate);
        assert!(rect_exponent_sum_estimate(&f, 3).is_err());
        let a = anisotropic_exponents(&f, 4, |_, _, _, _| true).unwrap();
        assert!((a.gamma.slope - 1.0).abs() < 1e-9 && (a.gamma_hat.slope - 1.0).abs() < 1e-9);
    }
}
