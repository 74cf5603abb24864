//! One- and two-parameter Young integrals as limits of lower-left Riemann
//! sums over nested dyadic partitions.

use serde::{Deserialize, Serialize};

use crate::diagnostics::{scaling_regression, FitStatus, RegressionFit};
use crate::error::{ensure, Result};
use crate::grid::{holder_seminorms_dyadic, GridField, HolderExponents, Rectangle};
use crate::numeric::CompensatedSum;
use crate::par::Exec;

/// Cell count above which Riemann sums switch to compensated summation.
pub const COMPENSATED_THRESHOLD: usize = 1 << 16;

/// Empirical constant of the a priori bound, calibrated on polynomial pairs
/// (see `certificate_constant_calibration` in the integration tests).
pub const DEFAULT_CERTIFICATE_CONSTANT: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct YoungResult {
    pub value: f64,
    /// `(mesh, riemann sum)` from coarsest to finest.
    pub levels: Vec<(f64, f64)>,
    pub cauchy_gap: f64,
    /// Right side of the a priori bound; absent for one-parameter sums.
    pub certificate: Option<f64>,
    /// Some level strayed from the anchor term `y(s1,t1) Δ_R x` by more
    /// than the certificate.
    #[serde(default)]
    pub violation: bool,
}

impl YoungResult {
    pub(crate) fn from_levels(levels: Vec<(f64, f64)>) -> Self {
        let n = levels.len();
        let value = levels[n - 1].1;
        let cauchy_gap = if n >= 2 { (levels[n - 1].1 - levels[n - 2].1).abs() } else { 0.0 };
        Self { value, levels, cauchy_gap, certificate: None, violation: false }
    }

    /// Absolute differences between consecutive levels, tagged with the
    /// coarser mesh.
    pub fn gaps(&self) -> Vec<(f64, f64)> {
        self.levels.windows(2).map(|w| (w[0].0, (w[1].1 - w[0].1).abs())).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YoungOptions {
    pub levels: usize,
    pub certificate_constant: f64,
    pub exec: Exec,
}

impl Default for YoungOptions {
    fn default() -> Self {
        Self { levels: 4, certificate_constant: DEFAULT_CERTIFICATE_CONSTANT, exec: Exec::default() }
    }
}

fn check_levels(n: usize, levels: usize, what: &str) -> Result<()> {
    ensure!(levels >= 2, Parameter, "at least 2 levels are required, got {levels}");
    ensure!(levels < usize::BITS as usize, Parameter, "too many levels");
    let step = 1usize << (levels - 1);
    ensure!(n.is_multiple_of(step), Alignment, "{what} count {n} is not divisible by 2^{}", levels - 1);
    Ok(())
}

/// Left-point Riemann-Stieltjes sums `Σ y(t_j)(g(t_{j+1}) − g(t_j))` of
/// two paths sampled on the same uniform grid of `[t1, t2]`.
pub fn young_integral_1d(y: &[f64], g: &[f64], t1: f64, t2: f64, levels: usize) -> Result<YoungResult> {
    ensure!(y.len() == g.len(), Alignment, "paths have {} and {} samples", y.len(), g.len());
    ensure!(y.len() >= 2, Alignment, "paths need at least two samples");
    ensure!(t1 < t2, Geometry, "empty interval [{t1}, {t2}]");
    let n = y.len() - 1;
    check_levels(n, levels, "sample")?;
    let mut out = Vec::with_capacity(levels);
    for k in 0..levels {
        let step = 1usize << (levels - 1 - k);
        let mut acc = CompensatedSum::new();
        for j in (0..n).step_by(step) {
            acc.add(y[j] * (g[j + step] - g[j]));
        }
        out.push(((t2 - t1) * step as f64 / n as f64, acc.value()));
    }
    Ok(YoungResult::from_levels(out))
}

/// Hypothesis on the exponents: `x` has rectangular exponents `(γ, γ̂)`,
/// `y` has `(ρ, ρ̂)` and directional exponents `(α, β)`.
pub fn check_young_exponents(e_x: &HolderExponents, e_y: &HolderExponents) -> Result<()> {
    ensure!(e_x.gamma + e_y.gamma > 1.0, Contract, "gamma + rho = {} must exceed 1", e_x.gamma + e_y.gamma);
    ensure!(
        e_x.gamma_hat + e_y.gamma_hat > 1.0,
        Contract,
        "gamma_hat + rho_hat = {} must exceed 1",
        e_x.gamma_hat + e_y.gamma_hat
    );
    ensure!(e_y.alpha > 1.0 - e_x.gamma, Contract, "alpha = {} must exceed 1 - gamma = {}", e_y.alpha, 1.0 - e_x.gamma);
    ensure!(
        e_y.beta > 1.0 - e_x.gamma_hat,
        Contract,
        "beta = {} must exceed 1 - gamma_hat = {}",
        e_y.beta,
        1.0 - e_x.gamma_hat
    );
    Ok(())
}

/// `Σ_{cells} y(lower-left) Δ_cell x` on the sub-grid of every `step`-th
/// node, restricted to node range `[i0, i1] × [j0, j1]`.
///
/// Rows are summed independently and reduced in ascending order, so the
/// result does not depend on the execution strategy.
pub fn riemann_sum(
    y: &GridField,
    x: &GridField,
    (i0, i1, j0, j1): (usize, usize, usize, usize),
    step: usize,
    exec: Exec,
) -> f64 {
    let rows = (i1 - i0) / step;
    let cols = (j1 - j0) / step;
    let compensated = rows * cols > COMPENSATED_THRESHOLD;
    let row_sums = exec.map(rows, |r| {
        let i = i0 + r * step;
        let mut plain = 0.0;
        let mut acc = CompensatedSum::new();
        for c in 0..cols {
            let j = j0 + c * step;
            let term = y.at(i, j) * x.rect_increment_idx(i, i + step, j, j + step);
            if compensated {
                acc.add(term);
            } else {
                plain += term;
            }
        }
        if compensated {
            acc.value()
        } else {
            plain
        }
    });
    if compensated {
        let mut acc = CompensatedSum::new();
        row_sums.iter().for_each(|&v| acc.add(v));
        acc.value()
    } else {
        row_sums.iter().sum()
    }
}

/// Two-parameter Young integral `∫∫_R y dx` over the whole grid domain.
pub fn young_integral_2d(
    y: &GridField,
    x: &GridField,
    e_x: &HolderExponents,
    e_y: &HolderExponents,
    levels: usize,
) -> Result<YoungResult> {
    young_integral_2d_with(y, x, e_x, e_y, &YoungOptions { levels, ..YoungOptions::default() })
}

pub fn young_integral_2d_with(
    y: &GridField,
    x: &GridField,
    e_x: &HolderExponents,
    e_y: &HolderExponents,
    opts: &YoungOptions,
) -> Result<YoungResult> {
    ensure!(y.same_grid(x), Alignment, "integrand and integrator live on different grids");
    check_young_exponents(e_x, e_y)?;
    check_levels(x.ns(), opts.levels, "s-cell")?;
    check_levels(x.nt(), opts.levels, "t-cell")?;
    let nodes = (0, x.ns(), 0, x.nt());
    let mut out = Vec::with_capacity(opts.levels);
    for k in 0..opts.levels {
        let step = 1usize << (opts.levels - 1 - k);
        let mesh = (x.ds() * step as f64).max(x.dt() * step as f64);
        out.push((mesh, riemann_sum(y, x, nodes, step, opts.exec)));
    }
    let mut res = YoungResult::from_levels(out);
    let bound = certificate(y, x, e_x, e_y, &x.domain(), opts.certificate_constant);
    let anchor = y.at(0, 0) * x.rect_increment_idx(0, x.ns(), 0, x.nt());
    res.violation = res.levels.iter().any(|&(_, v)| (v - anchor).abs() > bound);
    res.certificate = Some(bound);
    Ok(res)
}

/// Right side of the a priori estimate
/// `C ‖x‖_{γ,γ̂} { ‖y‖_∞ Δs^γ Δt^γ̂ + ‖y‖ (Δs^{γ+ρ} Δt^{γ̂+ρ̂} + Δs^{γ+α} Δt^γ̂ + Δs^γ Δt^{γ̂+β}) }`
/// with grid estimates of the semi-norms.
pub fn certificate(
    y: &GridField,
    x: &GridField,
    e_x: &HolderExponents,
    e_y: &HolderExponents,
    r: &Rectangle,
    constant: f64,
) -> f64 {
    let nx = holder_seminorms_dyadic(x, e_x);
    let ny = holder_seminorms_dyadic(y, e_y);
    let (ds, dt) = (r.width(), r.height());
    let (g, gh) = (e_x.gamma, e_x.gamma_hat);
    constant
        * nx.rect
        * (ny.sup * ds.powf(g) * dt.powf(gh)
            + ny.total
                * (ds.powf(g + e_y.gamma) * dt.powf(gh + e_y.gamma_hat)
                    + ds.powf(g + e_y.alpha) * dt.powf(gh)
                    + ds.powf(g) * dt.powf(gh + e_y.beta)))
}

/// The four pieces of the boundary decomposition of `∫∫_R y dx`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub full: f64,
    /// `∫∫ χ dx` with `χ(u,v) = Δ_{[s1,u]×[t1,v]} y`.
    pub chi: f64,
    /// `∫ y(s1,v) d(x(s2,v) − x(s1,v))`.
    pub left_edge: f64,
    /// `∫ y(u,t1) d(x(u,t2) − x(u,t1))`.
    pub bottom_edge: f64,
    /// `y(s1,t1) Δ_R x`.
    pub corner: f64,
    pub residual: f64,
}

/// Evaluates both sides of
/// `∫∫_R y dx = ∫∫_R χ dx + ∫ y(s1,v) d_v(x(s2,v)−x(s1,v)) + ∫ y(u,t1) d_u(x(u,t2)−x(u,t1)) − y(s1,t1) Δ_R x`
/// at grid resolution and returns the pieces with `|left − right|`.
pub fn decomposition_identity_check(
    y: &GridField,
    x: &GridField,
    e_x: &HolderExponents,
    e_y: &HolderExponents,
    r: &Rectangle,
) -> Result<Decomposition> {
    ensure!(y.same_grid(x), Alignment, "integrand and integrator live on different grids");
    check_young_exponents(e_x, e_y)?;
    let (i1, i2, j1, j2) = x.rect_indices(r)?;
    ensure!(i1 < i2 && j1 < j2, Geometry, "rectangle spans no cells");
    let full = compensated_riemann(x, (i1, i2, j1, j2), |i, j| y.at(i, j));
    let y11 = y.at(i1, j1);
    let chi = compensated_riemann(x, (i1, i2, j1, j2), |i, j| y.at(i, j) - y.at(i, j1) - y.at(i1, j) + y11);
    let left_path: Vec<f64> = (j1..=j2).map(|j| y.at(i1, j)).collect();
    let left_integrator: Vec<f64> = (j1..=j2).map(|j| x.at(i2, j) - x.at(i1, j)).collect();
    let left_edge = stieltjes(&left_path, &left_integrator);
    let bottom_path: Vec<f64> = (i1..=i2).map(|i| y.at(i, j1)).collect();
    let bottom_integrator: Vec<f64> = (i1..=i2).map(|i| x.at(i, j2) - x.at(i, j1)).collect();
    let bottom_edge = stieltjes(&bottom_path, &bottom_integrator);
    let corner = y11 * x.rect_increment_idx(i1, i2, j1, j2);
    let mut rhs = CompensatedSum::new();
    rhs.add(chi);
    rhs.add(left_edge);
    rhs.add(bottom_edge);
    rhs.add(-corner);
    Ok(Decomposition { full, chi, left_edge, bottom_edge, corner, residual: (full - rhs.value()).abs() })
}

fn compensated_riemann<F: Fn(usize, usize) -> f64>(
    x: &GridField,
    (i1, i2, j1, j2): (usize, usize, usize, usize),
    w: F,
) -> f64 {
    let mut acc = CompensatedSum::new();
    for i in i1..i2 {
        for j in j1..j2 {
            acc.add(w(i, j) * x.rect_increment_idx(i, i + 1, j, j + 1));
        }
    }
    acc.value()
}

fn stieltjes(y: &[f64], g: &[f64]) -> f64 {
    let mut acc = CompensatedSum::new();
    for k in 0..y.len() - 1 {
        acc.add(y[k] * (g[k + 1] - g[k]));
    }
    acc.value()
}

/// Decay order of the Cauchy gaps between successive dyadic levels,
/// regressed as `log gap` against `log mesh`.
pub fn convergence_order(
    y: &GridField,
    x: &GridField,
    e_x: &HolderExponents,
    e_y: &HolderExponents,
    levels: usize,
) -> Result<RegressionFit> {
    ensure!(levels >= 4, Statistics, "at least 4 levels are required, got {levels}");
    let res = young_integral_2d(y, x, e_x, e_y, levels)?;
    gap_order(&res)
}

/// Regression of the consecutive-level gaps of an existing result.
pub fn gap_order(res: &YoungResult) -> Result<RegressionFit> {
    let gaps = res.gaps();
    ensure!(gaps.len() >= 3, Statistics, "need at least 3 gaps, have {}", gaps.len());
    if gaps.iter().all(|g| g.1 == 0.0) {
        return Ok(RegressionFit::sentinel(FitStatus::Exact, gaps.iter().map(|g| g.0).collect()));
    }
    scaling_regression(&gaps)
}
