//! The unrotated scheme: Riemann sums of
//! `I(s,t) = ∫₀^s ∫ G_{s−u}(t,v) X(du,dv)`, `G_s(t,v) = ½ 1{|t−v| < s}`,
//! over the dyadic grid `u_i = s·i/2ⁿ`, `v_j = t − s + s·j/2ⁿ` of the
//! rectangle `[0,s] × [t−s, t+s]`.
//!
//! The kernel is an indicator, so the sums converge only at rate
//! `2^{−n(γ+γ̂−1)}` and the resulting field is rougher than the noise by a
//! full unit of exponent sum. [`regularity_comparison`] measures that loss
//! against the rotated cone integral.

use serde::{Deserialize, Serialize};

use crate::cone::snapped_cone_field;
use crate::diagnostics::{rect_exponent_sum_estimate_masked, FitStatus, RegressionFit};
use crate::error::{ensure, Error, Result};
use crate::grid::{GridField, Rectangle};
use crate::noise::{OriginalSampler, RotatedGrid, RotatedSampler};
use crate::par::Exec;
use crate::young::{gap_order, YoungResult};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DirectConfig {
    /// Dyadic levels `n₀..=n₁`.
    pub levels: (u32, u32),
    /// Interpolation parameter of the predicted exponents
    /// `η = ργ̂ + γ − 1`, `η̂ = (1−ρ)γ̂`.
    pub rho: f64,
    /// Rectangular exponents of the noise.
    pub gamma: f64,
    pub gamma_hat: f64,
    pub exec: Exec,
}

impl Default for DirectConfig {
    fn default() -> Self {
        Self { levels: (1, 6), rho: 0.5, gamma: 0.85, gamma_hat: 0.85, exec: Exec::default() }
    }
}

impl DirectConfig {
    pub fn validate(&self) -> Result<()> {
        let (n0, n1) = self.levels;
        ensure!(n0 <= n1 && n1 < 30, Parameter, "level range {n0}..={n1} is invalid");
        for (name, g) in [("gamma", self.gamma), ("gamma_hat", self.gamma_hat)] {
            ensure!(g > 0.0 && g < 1.0, Parameter, "{name} = {g} must lie in (0, 1)");
        }
        let lo = (1.0 - self.gamma) / self.gamma_hat;
        ensure!(self.rho > lo && self.rho < 1.0, Parameter, "rho = {} must lie in ({lo}, 1)", self.rho);
        Ok(())
    }

    /// Exponents `(η, η̂)` the integral is expected to have.
    pub fn predicted_exponents(&self) -> (f64, f64) {
        (self.rho * self.gamma_hat + self.gamma - 1.0, (1.0 - self.rho) * self.gamma_hat)
    }
}

/// `2 G_{s,t}(u_i, v_j)` on the level-`n` grid with `N = 2ⁿ` cells per unit
/// `s`: `|N − j| < N − i`. Exact in integers, so cells on the cone edge
/// never flip with rounding.
#[inline]
fn in_cone(big_n: i64, i: i64, j: i64) -> bool {
    (big_n - j).abs() < big_n - i
}

/// Node indices of `X` at the level-`n` grid lines.
fn level_indices(x: &GridField, s: f64, t: f64, n: u32) -> Result<(Vec<usize>, Vec<usize>)> {
    let big_n = 1usize << n;
    let h = s / big_n as f64;
    let us = (0..=big_n).map(|i| x.s_index(h * i as f64)).collect::<Result<Vec<_>>>()?;
    let vs = (0..=2 * big_n).map(|j| x.t_index(t - s + h * j as f64)).collect::<Result<Vec<_>>>()?;
    Ok((us, vs))
}

fn check_window(x: &GridField, s: f64, t: f64) -> Result<()> {
    ensure!(s > 0.0 && s.is_finite() && t.is_finite(), Geometry, "apex ({s}, {t}) is invalid");
    let window = Rectangle { s1: 0.0, s2: s, t1: t - s, t2: t + s };
    ensure!(
        x.domain().contains(&window, 1e-9 * (x.ds() + x.dt())),
        Geometry,
        "cone rectangle [0, {s}] x [{}, {}] is not inside the field domain",
        t - s,
        t + s
    );
    Ok(())
}

/// `J_n = Σ G(u_i, v_j) w(u_i, v_j) Δ_{I_ij} X` for every level in range.
fn dyadic_sums<W>(x: &GridField, s: f64, t: f64, cfg: &DirectConfig, weight: W) -> Result<YoungResult>
where
    W: Fn(f64, f64) -> Result<f64> + Sync,
{
    check_window(x, s, t)?;
    let (n0, n1) = cfg.levels;
    let mut levels = Vec::with_capacity((n1 - n0 + 1) as usize);
    for n in n0..=n1 {
        let big_n = 1i64 << n;
        let (us, vs) = level_indices(x, s, t, n)?;
        let h = s / big_n as f64;
        let rows = cfg.exec.try_map(big_n as usize, |i| -> Result<f64> {
            let mut row = 0.0;
            for j in 0..2 * big_n as usize {
                if in_cone(big_n, i as i64, j as i64) {
                    let w = weight(h * i as f64, t - s + h * j as f64)?;
                    row += 0.5 * w * x.rect_increment_idx(us[i], us[i + 1], vs[j], vs[j + 1]);
                }
            }
            Ok(row)
        })?;
        levels.push((h, rows.iter().sum()));
    }
    Ok(YoungResult::from_levels(levels))
}

/// Dyadic sums of the linear integral at apex `(s, t)`; `X` is an
/// original-frame field with time as first coordinate.
pub fn direct_linear(x: &GridField, s: f64, t: f64, cfg: &DirectConfig) -> Result<YoungResult> {
    // checked first: the admissible rho range is empty otherwise
    ensure!(
        cfg.gamma + cfg.gamma_hat > 1.0,
        Contract,
        "gamma + gamma_hat = {} must exceed 1",
        cfg.gamma + cfg.gamma_hat
    );
    cfg.validate()?;
    dyadic_sums(x, s, t, cfg, |_, _| Ok(1.0))
}

/// `Z`-weighted dyadic sums. `Z` must vanish at time 0 and is read at the
/// lower-left corner of each cell, so its grid must contain every grid
/// line of the finest level.
pub fn direct_weighted(x: &GridField, z: &GridField, s: f64, t: f64, cfg: &DirectConfig) -> Result<YoungResult> {
    cfg.validate()?;
    ensure!(
        cfg.gamma + cfg.gamma_hat > 5.0 / 3.0,
        Contract,
        "weighted integral needs gamma + gamma_hat > 5/3, got {}",
        cfg.gamma + cfg.gamma_hat
    );
    let i0 = z.s_index(0.0).map_err(|_| Error::Contract("Z must be defined at time 0".into()))?;
    let scale = z.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for j in 0..=z.nt() {
        let v = z.at(i0, j);
        ensure!(v.abs() <= 1e-12 * scale, Contract, "Z(0, {}) = {v} but Z must vanish at time 0", z.t_coord(j));
    }
    weighted_unchecked(x, z, s, t, cfg)
}

fn weighted_unchecked(x: &GridField, z: &GridField, s: f64, t: f64, cfg: &DirectConfig) -> Result<YoungResult> {
    dyadic_sums(x, s, t, cfg, |u, v| Ok(z.at(z.s_index(u)?, z.t_index(v)?)))
}

/// Whether the cone of node `(i, j)` stays inside the space window of a
/// direct field with `nt` space cells.
#[inline]
pub fn direct_cone_complete(nt: usize, i: usize, j: usize) -> bool {
    i == 0 || (j + 1 >= i && j + i <= nt)
}

/// The linear integral at every node of `X`'s grid, at the grid's own
/// resolution: `I(i,j) = ½ Σ_{a<i} Σ_{|b−j| < i−a} ΔX(a,b)`.
///
/// Cones leaving the space window are truncated (no noise outside);
/// [`direct_cone_complete`] tells which nodes are unaffected.
pub fn direct_field(x: &GridField, exec: Exec) -> Result<GridField> {
    let d = x.domain();
    ensure!(d.s1.abs() <= 1e-12 * x.ds(), Geometry, "time axis must start at 0, got {}", d.s1);
    ensure!(
        (x.ds() - x.dt()).abs() <= 1e-12 * x.ds().max(x.dt()),
        Alignment,
        "direct field needs square cells, got {} x {}",
        x.ds(),
        x.dt()
    );
    let (ns, nt) = (x.ns(), x.nt());
    // prefix[a][b] = Σ_{b' < b} ΔX(a, b')
    let prefix: Vec<Vec<f64>> = exec.map(ns, |a| {
        let mut p = vec![0.0; nt + 1];
        for b in 0..nt {
            p[b + 1] = p[b] + x.rect_increment_idx(a, a + 1, b, b + 1);
        }
        p
    });
    let rows: Vec<Vec<f64>> = exec.map(ns + 1, |i| {
        (0..=nt)
            .map(|j| {
                let mut acc = 0.0;
                for (a, p) in prefix.iter().enumerate().take(i) {
                    let r = i - a;
                    let lo = (j + 1).saturating_sub(r);
                    let hi = (j + r).min(nt);
                    if hi > lo {
                        acc += p[hi] - p[lo];
                    }
                }
                0.5 * acc
            })
            .collect()
    });
    GridField::new(d, ns, nt, rows.concat())
}

/// Estimates below this are treated as saturated by smoothness.
pub const SATURATED_EXPONENT_SUM: f64 = 1.9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ComparisonParams {
    pub h: f64,
    pub nu: f64,
    /// Time horizon of both pipelines.
    pub t: f64,
    /// Cells per side of the rotated grid and per time axis of the direct
    /// grid (the direct space window has `2n` cells).
    pub n: usize,
    /// Dyadic probe scales of the exponent estimates.
    pub levels: usize,
    pub seeds: usize,
    pub base_seed: u64,
    pub exec: Exec,
}

impl Default for ComparisonParams {
    fn default() -> Self {
        Self { h: 0.85, nu: 0.3, t: 1.0, n: 64, levels: 5, seeds: 30, base_seed: 0, exec: Exec::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SeedComparison {
    pub seed: u64,
    pub rotated: RegressionFit,
    pub direct: RegressionFit,
    /// Decay order of the telescoping gaps of `J_n` at apex `(T, 0)`.
    pub gap_decay: RegressionFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RegularityReport {
    pub rotated_exponent_sum: f64,
    pub direct_exponent_sum: f64,
    pub gap: f64,
    /// Mean telescoping-gap decay slope over seeds with a fitted decay.
    pub gap_decay_slope: Option<f64>,
    pub seeds: usize,
    /// False when the rotated estimate is saturated, i.e. the noise looks
    /// smooth at the probed scales and the gap carries no information.
    pub informative: bool,
    pub regressions: Vec<SeedComparison>,
}

/// Exponent-sum estimates for one rotated sample and one original-frame
/// sample on `[0,T] × [−T,T]`.
pub fn compare_sample(
    x_rot: &GridField,
    x_orig: &GridField,
    levels: usize,
    seed: u64,
    exec: Exec,
) -> Result<SeedComparison> {
    let n = x_rot.ns();
    let cone = snapped_cone_field(x_rot)?;
    let rotated = rect_exponent_sum_estimate_masked(&cone, levels, |i, j, _, _| i + j >= n)?;
    let direct_f = direct_field(x_orig, exec)?;
    let nt = x_orig.nt();
    let keep = |i: usize, j: usize, ls: usize, lt: usize| {
        [(i, j), (i + ls, j), (i, j + lt), (i + ls, j + lt)].iter().all(|&(a, b)| direct_cone_complete(nt, a, b))
    };
    let direct = rect_exponent_sum_estimate_masked(&direct_f, levels, keep)?;
    let d = x_orig.domain();
    let top = x_orig.ns().ilog2();
    let cfg = DirectConfig { levels: (1, top), exec, ..DirectConfig::default() };
    let sums = dyadic_sums(x_orig, d.s2, 0.0, &cfg, |_, _| Ok(1.0))?;
    let gap_decay = gap_order(&sums)?;
    Ok(SeedComparison { seed, rotated, direct, gap_decay })
}

/// Monte Carlo comparison of the two integrals' exponent sums. Each seed
/// draws the rotated sample on stream 0 and the original-frame sample on
/// stream 1, so the two pipelines see independent noise of the same law.
pub fn regularity_comparison(p: &ComparisonParams) -> Result<RegularityReport> {
    ensure!(p.seeds >= 1, Parameter, "need at least one seed");
    ensure!(p.n.is_power_of_two() && p.n >= 8, Parameter, "n = {} must be a power of two ≥ 8", p.n);
    let rotated = RotatedSampler::with_cap(p.h, p.nu, RotatedGrid::new(p.t, p.n)?, usize::MAX, p.exec)?;
    let original = OriginalSampler::new(p.h, p.nu, Rectangle::new(0.0, p.t, -p.t, p.t)?, p.n, 2 * p.n)?;
    let regressions = p.exec.try_map(p.seeds, |k| {
        let seed = p.base_seed + k as u64;
        compare_sample(&rotated.sample(seed, 0), &original.sample(seed, 1), p.levels, seed, Exec::Sequential)
    })?;
    Ok(summarize(regressions))
}

fn summarize(regressions: Vec<SeedComparison>) -> RegularityReport {
    let mean = |f: &dyn Fn(&SeedComparison) -> Option<f64>| {
        let v: Vec<f64> = regressions.iter().filter_map(f).collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    };
    let slope = |r: &RegressionFit| r.is_fitted().then_some(r.slope);
    let rotated_exponent_sum = mean(&|c| slope(&c.rotated)).unwrap_or(f64::NAN);
    let direct_exponent_sum = mean(&|c| slope(&c.direct)).unwrap_or(f64::NAN);
    let gap_decay_slope = mean(&|c| slope(&c.gap_decay));
    let degenerate = regressions.iter().all(|c| c.rotated.status != FitStatus::Fitted);
    RegularityReport {
        rotated_exponent_sum,
        direct_exponent_sum,
        gap: rotated_exponent_sum - direct_exponent_sum,
        gap_decay_slope,
        seeds: regressions.len(),
        informative: !degenerate && rotated_exponent_sum < SATURATED_EXPONENT_SUM,
        regressions,
    }
}
