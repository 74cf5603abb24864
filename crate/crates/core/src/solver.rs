//! Discrete mild solution of the rotated wave equation
//! `y(s,t) = ∫∫_{C̃(s,t)} σ(y(u,v)) x(du,dv)` on the slab above the initial
//! line `s + t = 0`.
//!
//! The discrete map `Γ` replaces each cone by the grid cells lying entirely
//! inside it and evaluates `σ(y)` at the lower-left corner of every cell.
//! A cell only feeds nodes on later anti-diagonals, so `Γ` is causal:
//! marching along increasing `s + t` computes its fixed point exactly, and
//! Picard iteration converges to the same point.

use serde::{Deserialize, Serialize};

use crate::cone::{cone_integral, first_slab_cell, Cone};
use crate::diagnostics::{scaling_regression, FitStatus, RegressionFit};
use crate::error::{ensure, Error, Result};
use crate::grid::{
    holder_seminorms_dyadic, rotate_minus_45, unrotate_coords, FramePoint, GridField, HolderExponents, HolderSeminorms,
};
use crate::par::Exec;
use crate::sigma::SigmaFn;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Marching,
    Picard,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct SolverConfig {
    /// Slab width: the slab is `0 ≤ s + t ≤ √2 T`.
    pub t: f64,
    /// Solution exponents used for the reported semi-norms and the Picard
    /// stopping rule.
    pub kappa: f64,
    pub kappa_hat: f64,
    pub scheme: Scheme,
    pub picard_tol: f64,
    pub picard_max_iter: usize,
    /// Depth of the dyadic cover used by the cone-integral cross-check.
    pub cone_depth: usize,
    /// Retry a non-converged Picard run band by band.
    pub fallback: bool,
    pub exec: Exec,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            t: 0.5,
            kappa: 0.6,
            kappa_hat: 0.6,
            scheme: Scheme::Marching,
            picard_tol: 1e-8,
            picard_max_iter: 30,
            cone_depth: 10,
            fallback: true,
            exec: Exec::default(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        ensure!(self.t > 0.0 && self.t.is_finite(), Parameter, "T = {} must be positive", self.t);
        for (name, k) in [("kappa", self.kappa), ("kappa_hat", self.kappa_hat)] {
            ensure!(k > 0.0 && k < 1.0, Parameter, "{name} = {k} must lie in (0, 1)");
        }
        ensure!(self.picard_tol > 0.0, Parameter, "picard tolerance must be positive");
        ensure!(self.picard_max_iter >= 1, Parameter, "picard needs at least one iteration");
        Ok(())
    }

    /// The target exponents must sit in `(1−γ, γ) × (1−γ̂, γ̂)`, which is
    /// empty unless `γ, γ̂ > 1/2`.
    pub fn check_noise_exponents(&self, gamma: f64, gamma_hat: f64) -> Result<()> {
        ensure!(gamma > 0.5 && gamma_hat > 0.5, Contract, "noise exponents ({gamma}, {gamma_hat}) must exceed 1/2");
        ensure!(
            self.kappa > 1.0 - gamma && self.kappa < gamma,
            Contract,
            "kappa = {} outside ({}, {gamma})",
            self.kappa,
            1.0 - gamma
        );
        ensure!(
            self.kappa_hat > 1.0 - gamma_hat && self.kappa_hat < gamma_hat,
            Contract,
            "kappa_hat = {} outside ({}, {gamma_hat})",
            self.kappa_hat,
            1.0 - gamma_hat
        );
        Ok(())
    }

    fn exponents(&self) -> HolderExponents {
        HolderExponents { gamma: self.kappa, gamma_hat: self.kappa_hat, alpha: self.kappa, beta: self.kappa_hat }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Termination {
    /// Explicit marching; the discrete system is solved exactly.
    Exact,
    Tolerance,
    MaxIter,
    /// Picard stalled and the banded retry produced the result.
    Fallback,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BandReport {
    /// Anti-diagonal index range `(lo, hi]` of the band.
    pub diagonals: (usize, usize),
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FallbackReport {
    pub bands: Vec<BandReport>,
    pub succeeded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Diagnostics {
    pub iterations: usize,
    pub residual: f64,
    pub termination: Termination,
    pub converged: bool,
    pub seminorms: HolderSeminorms,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fallback: Option<FallbackReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub y_rotated: GridField,
    /// Slab nodes expressed in original `(time, space)` coordinates.
    pub y_original: Vec<FramePoint>,
    pub diagnostics: Diagnostics,
}

impl SolveResult {
    pub fn converged(&self) -> bool {
        self.diagnostics.converged
    }
}

/// Grid geometry shared by both schemes.
struct Slab<'a> {
    x: &'a GridField,
    /// First slab cell in each row.
    first: Vec<usize>,
    /// Cell increments of `x`, zero outside the slab.
    dx: Vec<f64>,
    lowest_diag: usize,
}

impl<'a> Slab<'a> {
    fn new(x: &'a GridField) -> Result<Self> {
        let (ds, dt) = (x.ds(), x.dt());
        ensure!((ds - dt).abs() <= 1e-12 * ds.max(dt), Alignment, "solver grid needs square cells, got {ds} x {dt}");
        let d = x.domain();
        let k = (d.s1 + d.t1) / ds;
        ensure!(
            (k - k.round()).abs() <= 1e-9 * (1.0 + k.abs()),
            Alignment,
            "the initial line s + t = 0 must pass through grid nodes"
        );
        let (ns, nt) = (x.ns(), x.nt());
        let first: Vec<usize> = (0..ns).map(|a| first_slab_cell(x, a)).collect();
        let mut dx = vec![0.0; ns * nt];
        for a in 0..ns {
            for b in first[a]..nt {
                dx[a * nt + b] = x.rect_increment_idx(a, a + 1, b, b + 1);
            }
        }
        // nodes with i + j below this index have empty cones
        let lowest_diag = (0..ns).map(|a| a + first[a]).min().unwrap_or(0);
        Ok(Self { x, first, dx, lowest_diag })
    }

    fn ns(&self) -> usize {
        self.x.ns()
    }

    fn nt(&self) -> usize {
        self.x.nt()
    }

    fn max_diag(&self) -> usize {
        self.ns() + self.nt()
    }

    fn node_diag_range(&self, d: usize) -> std::ops::RangeInclusive<usize> {
        d.saturating_sub(self.nt())..=d.min(self.ns())
    }

    /// `Γ(y)` at every node, from row-prefix sums of `σ(y)Δx`.
    fn gamma(&self, sig: &SigmaFn, y: &[f64], exec: Exec) -> Vec<f64> {
        let (ns, nt) = (self.ns(), self.nt());
        let w = nt + 1;
        let prefix: Vec<Vec<f64>> = exec.map(ns, |a| {
            let mut row = vec![0.0; w];
            for b in self.first[a]..nt {
                row[b + 1] = row[b] + sig.eval(y[a * w + b]) * self.dx[a * nt + b];
            }
            row
        });
        let rows: Vec<Vec<f64>> = exec.map(ns + 1, |i| {
            let mut out = vec![0.0; w];
            for (j, slot) in out.iter_mut().enumerate() {
                let mut acc = 0.0;
                for row in prefix.iter().take(i) {
                    acc += row[j];
                }
                *slot = acc;
            }
            out
        });
        rows.concat()
    }

    fn field(&self, values: Vec<f64>) -> Result<GridField> {
        ensure!(values.iter().all(|v| v.is_finite()), Numerical, "solution blew up");
        GridField::new(self.x.domain(), self.ns(), self.nt(), values)
    }
}

fn check_grid(x: &GridField) -> Result<()> {
    ensure!(x.values().iter().all(|v| v.is_finite()), Numerical, "noise field is not finite");
    Ok(())
}

/// Marching along anti-diagonals; nodes of one anti-diagonal are computed
/// concurrently.
pub fn solve_marching(x: &GridField, sig: &SigmaFn, cfg: &SolverConfig) -> Result<SolveResult> {
    cfg.validate()?;
    check_grid(x)?;
    let slab = Slab::new(x)?;
    let y = march(&slab, sig, cfg.exec)?;
    let residual = fixed_point_residual(&slab, sig, &y, cfg)?;
    finish(&slab, y, cfg, 0, residual, Termination::Exact, None)
}

fn march(slab: &Slab, sig: &SigmaFn, exec: Exec) -> Result<Vec<f64>> {
    let (ns, nt) = (slab.ns(), slab.nt());
    let w = nt + 1;
    let mut y = vec![0.0; (ns + 1) * w];
    // prefix[a][j] = Σ_{first[a] ≤ b < j} σ(y(a,b)) Δx(a,b), valid for j ≤ ready[a]
    let mut prefix = vec![0.0; ns * w];
    let mut ready: Vec<usize> = slab.first.clone();
    for d in slab.lowest_diag..=slab.max_diag() {
        let range = slab.node_diag_range(d);
        let start = *range.start();
        let count = range.end() + 1 - start;
        let values: Vec<Result<f64>> = exec.map(count, |k| {
            let (i, j) = (start + k, d - start - k);
            let mut acc = 0.0;
            for a in 0..i {
                if j > slab.first[a] {
                    if ready[a] < j {
                        return Err(Error::Ordering(format!(
                            "node ({i}, {j}) needs cell row {a} up to {j}, only {} is final",
                            ready[a]
                        )));
                    }
                    acc += prefix[a * w + j];
                } else {
                    acc += 0.0;
                }
            }
            Ok(acc)
        });
        for (k, v) in values.into_iter().enumerate() {
            y[(start + k) * w + d - start - k] = v?;
        }
        for a in range {
            let b = d - a;
            if a < ns && b < nt && b >= slab.first[a] {
                prefix[a * w + b + 1] = prefix[a * w + b] + sig.eval(y[a * w + b]) * slab.dx[a * nt + b];
                ready[a] = b + 1;
            }
        }
    }
    Ok(y)
}

fn diff_norm(slab: &Slab, a: &[f64], b: &[f64], cfg: &SolverConfig) -> Result<f64> {
    let d: Vec<f64> = a.iter().zip(b).map(|(p, q)| p - q).collect();
    let f = slab.field(d)?;
    let n = holder_seminorms_dyadic(&f, &cfg.exponents());
    Ok(n.sup + n.total)
}

fn fixed_point_residual(slab: &Slab, sig: &SigmaFn, y: &[f64], cfg: &SolverConfig) -> Result<f64> {
    let g = slab.gamma(sig, y, cfg.exec);
    diff_norm(slab, &g, y, cfg)
}

fn finish(
    slab: &Slab,
    y: Vec<f64>,
    cfg: &SolverConfig,
    iterations: usize,
    residual: f64,
    termination: Termination,
    fallback: Option<FallbackReport>,
) -> Result<SolveResult> {
    let field = slab.field(y)?;
    let seminorms = holder_seminorms_dyadic(&field, &cfg.exponents());
    let y_original = rotate_minus_45(&field)
        .into_iter()
        .zip(0..)
        .filter(|&(_, k)| {
            let (i, j) = (k / (slab.nt() + 1), k % (slab.nt() + 1));
            i + j >= slab.lowest_diag
        })
        .map(|(p, _)| p)
        .collect();
    let converged = termination != Termination::MaxIter;
    Ok(SolveResult {
        y_rotated: field,
        y_original,
        diagnostics: Diagnostics { iterations, residual, termination, converged, seminorms, fallback },
    })
}

/// Picard iteration `y_{k+1} = Γ(y_k)` from `y_0 = 0`, stopped when the sup
/// norm plus total semi-norm of the update drops below the tolerance.
pub fn solve_picard(x: &GridField, sig: &SigmaFn, cfg: &SolverConfig) -> Result<SolveResult> {
    cfg.validate()?;
    check_grid(x)?;
    let slab = Slab::new(x)?;
    let size = (slab.ns() + 1) * (slab.nt() + 1);
    let mut y = vec![0.0; size];
    let mut residual = f64::INFINITY;
    for it in 1..=cfg.picard_max_iter {
        let next = slab.gamma(sig, &y, cfg.exec);
        residual = diff_norm(&slab, &next, &y, cfg)?;
        y = next;
        if residual < cfg.picard_tol {
            return finish(&slab, y, cfg, it, residual, Termination::Tolerance, None);
        }
    }
    if !cfg.fallback {
        return finish(&slab, y, cfg, cfg.picard_max_iter, residual, Termination::MaxIter, None);
    }
    let (y, report, iterations) = banded_picard(&slab, sig, cfg)?;
    let residual = fixed_point_residual(&slab, sig, &y, cfg)?;
    let termination = if report.succeeded { Termination::Fallback } else { Termination::MaxIter };
    finish(&slab, y, cfg, cfg.picard_max_iter + iterations, residual, termination, Some(report))
}

/// Maximum number of band halvings tried by the fallback.
const MAX_BAND_SPLITS: usize = 6;

/// Picard restricted to bands of anti-diagonals, each of width `T/2` in
/// the slab, processed in order with earlier bands frozen. A band that
/// does not converge is split in two, up to [`MAX_BAND_SPLITS`] times.
fn banded_picard(slab: &Slab, sig: &SigmaFn, cfg: &SolverConfig) -> Result<(Vec<f64>, FallbackReport, usize)> {
    let w = slab.nt() + 1;
    let size = (slab.ns() + 1) * w;
    let mut y = vec![0.0; size];
    let lo = slab.lowest_diag;
    let hi = slab.max_diag();
    let half = (hi - lo).div_ceil(2).max(1);
    let mut queue: Vec<(usize, usize, usize)> = Vec::new();
    let mut start = lo;
    while start < hi {
        let end = (start + half).min(hi);
        queue.push((start, end, 0));
        start = end;
    }
    queue.reverse();
    let mut bands = Vec::new();
    let mut total = 0;
    let mut succeeded = true;
    while let Some((b0, b1, depth)) = queue.pop() {
        let in_band = |k: usize| {
            let d = k / w + k % w;
            d > b0 && d <= b1
        };
        let mut converged = false;
        let mut iterations = 0;
        let mut trial = y.clone();
        for it in 1..=cfg.picard_max_iter {
            let g = slab.gamma(sig, &trial, cfg.exec);
            let mut next = trial.clone();
            for (k, v) in next.iter_mut().enumerate() {
                if in_band(k) {
                    *v = g[k];
                }
            }
            let r = diff_norm(slab, &next, &trial, cfg)?;
            trial = next;
            iterations = it;
            if r < cfg.picard_tol {
                converged = true;
                break;
            }
        }
        total += iterations;
        bands.push(BandReport { diagonals: (b0, b1), iterations, converged });
        if converged {
            y = trial;
        } else if depth < MAX_BAND_SPLITS && b1 - b0 >= 2 {
            let mid = b0 + (b1 - b0) / 2;
            queue.push((mid, b1, depth + 1));
            queue.push((b0, mid, depth + 1));
        } else {
            succeeded = false;
            y = trial;
        }
    }
    Ok((y, FallbackReport { bands, succeeded }, total))
}

/// Dispatches on `cfg.scheme`.
pub fn solve(x: &GridField, sig: &SigmaFn, cfg: &SolverConfig) -> Result<SolveResult> {
    match cfg.scheme {
        Scheme::Marching => solve_marching(x, sig, cfg),
        Scheme::Picard => solve_picard(x, sig, cfg),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ConeCrossCheck {
    pub probes: usize,
    /// Largest `|y − cone integral|` relative to the summed magnitude of
    /// the cell terms.
    pub worst: f64,
    /// The discrepancy stayed within the rounding bound of two summation
    /// orders.
    pub passed: bool,
}

/// Recomputes `y` at probe nodes as the cone integral of `σ(y)` over the
/// dyadic cover of depth `cfg.cone_depth`.
///
/// Probes sit on the anti-diagonals whose cones span `2^p ≤ 2^depth` cells
/// per leg. There the cover squares snapped to the grid tile exactly the
/// cells of the marching sum, so only the summation order differs.
pub fn cone_cross_check(x: &GridField, y: &GridField, sig: &SigmaFn, cfg: &SolverConfig) -> Result<ConeCrossCheck> {
    ensure!(x.same_grid(y), Alignment, "solution and noise live on different grids");
    let slab = Slab::new(x)?;
    let z = crate::sigma::compose(sig, y);
    // the exponents only feed the certificate, which is not used here
    let e = HolderExponents::uniform(0.9)?;
    let (ns, nt) = (x.ns(), x.nt());
    let base = slab.lowest_diag;
    let mut worst: f64 = 0.0;
    let mut probes = 0;
    let mut passed = true;
    for p in 0..=cfg.cone_depth.min(usize::BITS as usize - 2) {
        let d = base + (1usize << p);
        if d > ns + nt {
            break;
        }
        let lo = d.saturating_sub(nt);
        let hi = d.min(ns);
        for i in [lo, (lo + hi) / 2, hi] {
            let j = d - i;
            let cone = Cone::rotated(x.s_coord(i), x.t_coord(j))?;
            let value = cone_integral(&z, x, &e, &e, &cone, cfg.cone_depth, 1)?.result.value;
            let (mut scale, mut cells) = (0.0, 0usize);
            for a in 0..i {
                for b in first_slab_cell(x, a)..j {
                    scale += (z.at(a, b) * x.rect_increment_idx(a, a + 1, b, b + 1)).abs();
                    cells += 1;
                }
            }
            let err = (y.at(i, j) - value).abs();
            passed &= err <= 2.0 * cells as f64 * f64::EPSILON * scale;
            if scale > 0.0 {
                worst = worst.max(err / scale);
            }
            probes += 1;
        }
    }
    Ok(ConeCrossCheck { probes, worst, passed })
}

/// Values of a rotated-frame solution at original-frame points
/// `(time, space)`.
///
/// Each grid cell is split along its anti-diagonal into two triangles and
/// the solution is interpolated linearly on each, so nodes are reproduced
/// exactly and the initial line, a union of cell anti-diagonals, maps to 0.
pub fn pull_back(y_rot: &GridField, queries: &[(f64, f64)]) -> Result<Vec<f64>> {
    let d = y_rot.domain();
    let (ds, dt) = (y_rot.ds(), y_rot.dt());
    let tol = 1e-9 * (ds + dt);
    queries
        .iter()
        .map(|&(time, space)| {
            let (s, t) = unrotate_coords(time, space);
            ensure!(
                s >= d.s1 - tol && s <= d.s2 + tol && t >= d.t1 - tol && t <= d.t2 + tol && s + t >= -tol,
                Geometry,
                "point (time {time}, space {space}) maps outside the solution slab"
            );
            let fs = ((s - d.s1) / ds).clamp(0.0, y_rot.ns() as f64);
            let ft = ((t - d.t1) / dt).clamp(0.0, y_rot.nt() as f64);
            let a = (fs.floor() as usize).min(y_rot.ns() - 1);
            let b = (ft.floor() as usize).min(y_rot.nt() - 1);
            let (al, be) = (fs - a as f64, ft - b as f64);
            let (y00, y10, y01, y11) = (y_rot.at(a, b), y_rot.at(a + 1, b), y_rot.at(a, b + 1), y_rot.at(a + 1, b + 1));
            let v = if al + be <= 1.0 {
                y00 + al * (y10 - y00) + be * (y01 - y00)
            } else {
                y11 + (1.0 - al) * (y01 - y11) + (1.0 - be) * (y10 - y11)
            };
            Ok(v)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SelfConvergence {
    pub fit: RegressionFit,
    /// `(coarse cell size, sup distance to the next finer solution)`.
    pub distances: Vec<(f64, f64)>,
}

/// Solves by marching on `levels` dyadic restrictions of `x_fine` and
/// regresses the sup distance between successive solutions (on the coarse
/// nodes) against the coarse cell size.
///
/// With three levels only two distances exist; the slope through them is
/// reported as the fit.
pub fn self_convergence_study(
    x_fine: &GridField,
    sig: &SigmaFn,
    cfg: &SolverConfig,
    levels: usize,
) -> Result<SelfConvergence> {
    ensure!(levels >= 3, Statistics, "self-convergence needs at least 3 levels, got {levels}");
    let top = 1usize << (levels - 1);
    ensure!(
        x_fine.ns().is_multiple_of(top) && x_fine.nt().is_multiple_of(top),
        Alignment,
        "grid {}x{} cannot be restricted {levels} times",
        x_fine.ns(),
        x_fine.nt()
    );
    let mut sols = Vec::with_capacity(levels);
    for k in (0..levels).rev() {
        let x = x_fine.restrict(1 << k)?;
        sols.push(solve_marching(&x, sig, cfg)?.y_rotated);
    }
    let mut distances = Vec::with_capacity(levels - 1);
    for pair in sols.windows(2) {
        let (coarse, fine) = (&pair[0], &pair[1]);
        let mut m: f64 = 0.0;
        for i in 0..=coarse.ns() {
            for j in 0..=coarse.nt() {
                m = m.max((coarse.at(i, j) - fine.at(2 * i, 2 * j)).abs());
            }
        }
        distances.push((coarse.ds(), m));
    }
    let fit = if distances.iter().all(|d| d.1 == 0.0) {
        RegressionFit::sentinel(FitStatus::Exact, distances.iter().map(|d| d.0).collect())
    } else if distances.len() == 2 && distances.iter().all(|d| d.1 > 0.0) {
        let (a, b) = (distances[0], distances[1]);
        let slope = (b.1.ln() - a.1.ln()) / (b.0.ln() - a.0.ln());
        RegressionFit {
            slope,
            intercept: a.1.ln() - slope * a.0.ln(),
            r2: 1.0,
            points_used: 2,
            dropped: 0,
            scales: vec![a.0, b.0],
            status: FitStatus::Fitted,
        }
    } else {
        scaling_regression(&distances)?
    };
    Ok(SelfConvergence { fit, distances })
}
