//! Light cones, their dyadic covers by squares, and integrals over them.
//!
//! In rotated coordinates the cone with apex `(s, t)` is the right triangle
//! `C̃(s,t) = {u ≤ s, v ≤ t, u + v ≥ 0}` of area `(s+t)²/2`.

use serde::{Deserialize, Serialize};
use std::io::Write;

use crate::error::{ensure, Error, Result};
use crate::grid::{holder_seminorms_dyadic, unrotate_coords, GridField, HolderExponents, Rectangle};
use crate::par::Exec;
use crate::young::{check_young_exponents, riemann_sum, YoungResult, DEFAULT_CERTIFICATE_CONSTANT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    Original,
    Rotated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cone {
    pub apex: (f64, f64),
    pub frame: Frame,
}

impl Cone {
    /// Rotated cone `C̃(s,t)`; requires `s + t > 0`.
    pub fn rotated(s: f64, t: f64) -> Result<Self> {
        ensure!(s + t > 0.0, Geometry, "empty cone: s + t = {} must be positive", s + t);
        Ok(Self { apex: (s, t), frame: Frame::Rotated })
    }

    /// Backward light cone of `(time, space)`; requires `time > 0`.
    pub fn original(time: f64, space: f64) -> Result<Self> {
        ensure!(time > 0.0, Geometry, "empty cone: time = {time} must be positive");
        Ok(Self { apex: (time, space), frame: Frame::Original })
    }

    /// The same cone in rotated coordinates.
    pub fn to_rotated(&self) -> Result<Self> {
        match self.frame {
            Frame::Rotated => Ok(*self),
            Frame::Original => {
                let (s, t) = unrotate_coords(self.apex.0, self.apex.1);
                Cone::rotated(s, t)
            }
        }
    }

    /// `s + t` of the rotated apex, the leg length of the triangle.
    pub fn size(&self) -> Result<f64> {
        let r = self.to_rotated()?;
        Ok(r.apex.0 + r.apex.1)
    }

    pub fn area(&self) -> Result<f64> {
        let d = self.size()?;
        Ok(0.5 * d * d)
    }

    /// Bounding box `[−t, s] × [−s, t]` of the rotated triangle.
    pub fn bounding_box(&self) -> Result<Rectangle> {
        let r = self.to_rotated()?;
        let (s, t) = r.apex;
        Rectangle::new(-t, s, -s, t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverSquare {
    pub level: usize,
    pub idx: usize,
    pub rect: Rectangle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeCover {
    pub rectangles: Vec<CoverSquare>,
    pub depth: usize,
    /// `Σ (s2−s1)^γ (t2−t1)^γ̂` over the cover, filled in by
    /// [`ConeCover::with_summability`].
    pub summability_value: f64,
}

impl ConeCover {
    pub fn covered_area(&self) -> f64 {
        self.rectangles.iter().map(|r| r.rect.area()).sum()
    }

    pub fn with_summability(mut self, gamma: f64, gamma_hat: f64) -> Self {
        self.summability_value =
            self.rectangles.iter().map(|r| r.rect.width().powf(gamma) * r.rect.height().powf(gamma_hat)).sum();
        self
    }
}

/// Cover variants with the same covered region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoverKind {
    /// Level `k` holds `2^{k−1}` squares of side `(s+t)/2^k` placed at the
    /// right-angle corners of the triangles left over by level `k−1`.
    Dyadic,
    /// As `Dyadic`, with the level-1 square split into four level-2 squares.
    Shifted,
}

/// Dyadic cover of a rotated cone down to `depth` levels.
pub fn dyadic_cover(c: &Cone, depth: usize) -> Result<ConeCover> {
    cover(c, depth, CoverKind::Dyadic)
}

pub fn cover(c: &Cone, depth: usize, kind: CoverKind) -> Result<ConeCover> {
    ensure!(depth >= 1, Parameter, "cover depth must be at least 1");
    ensure!(depth <= 40, Parameter, "cover depth {depth} is too large");
    let r = c.to_rotated()?;
    let (s, t) = r.apex;
    let d = s + t;
    let mut rectangles = Vec::new();
    for k in 1..=depth {
        let side = d / (1u64 << k) as f64;
        let pitch = 2.0 * side;
        let count = 1usize << (k - 1);
        // distances (a, b) from the apex; i = count − 1 is the lowest u
        for idx in 0..count {
            let i = count - 1 - idx;
            let j = idx;
            let (a, b) = (i as f64 * pitch, j as f64 * pitch);
            let sq = Rectangle::new(s - a - side, s - a, t - b - side, t - b)?;
            if k == 1 && kind == CoverKind::Shifted {
                let h = 0.5 * side;
                for (q, (du, dv)) in [(0.0, 0.0), (h, 0.0), (0.0, h), (h, h)].into_iter().enumerate() {
                    let rect = Rectangle::new(sq.s1 + du, sq.s1 + du + h, sq.t1 + dv, sq.t1 + dv + h)?;
                    rectangles.push(CoverSquare { level: 1, idx: q, rect });
                }
            } else {
                rectangles.push(CoverSquare { level: k, idx, rect: sq });
            }
        }
    }
    Ok(ConeCover { rectangles, depth, summability_value: 0.0 })
}

/// `Σ_{k ≤ depth} 2^{k−1} (D/2^k)^{γ+γ̂}` in closed form.
pub fn summability_partial(d: f64, sum_exp: f64, depth: usize) -> f64 {
    let r = 2f64.powf(1.0 - sum_exp);
    let mut acc = 0.0;
    let mut term = 0.5 * d.powf(sum_exp) * r;
    for _ in 0..depth {
        acc += term;
        term *= r;
    }
    acc
}

/// Remainder `Σ_{k > depth} 2^{k−1} (D/2^k)^{γ+γ̂}` of the summability series.
pub fn summability_tail(d: f64, sum_exp: f64, depth: usize) -> f64 {
    let r = 2f64.powf(1.0 - sum_exp);
    if r >= 1.0 {
        return f64::INFINITY;
    }
    0.5 * d.powf(sum_exp) * r.powi(depth as i32 + 1) / (1.0 - r)
}

pub fn write_cover_csv<W: Write>(c: &ConeCover, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| Error::Parameter(format!("cover csv: {e}"));
    w.write_record(["level", "idx", "s1", "s2", "t1", "t2"]).map_err(err)?;
    for r in &c.rectangles {
        w.write_record([
            r.level.to_string(),
            r.idx.to_string(),
            format!("{:.16e}", r.rect.s1),
            format!("{:.16e}", r.rect.s2),
            format!("{:.16e}", r.rect.t1),
            format!("{:.16e}", r.rect.t2),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| Error::Parameter(format!("cover csv: {e}")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ConeIntegral {
    pub result: YoungResult,
    /// Bound on the contribution of the levels beyond the truncation depth.
    pub tail_bound: f64,
    pub rectangles_used: usize,
    /// Cover area dropped when snapping squares inward to grid nodes.
    pub snapped_area_lost: f64,
}

/// Node ranges of a rectangle shrunk inward to the grid.
fn snap_inward(f: &GridField, r: &Rectangle) -> Option<(usize, usize, usize, usize)> {
    let d = f.domain();
    let eps = 1e-9;
    let lo = |x: f64, a: f64, h: f64| ((x - a) / h - eps).ceil().max(0.0) as usize;
    let hi = |x: f64, a: f64, h: f64| ((x - a) / h + eps).floor().max(0.0) as usize;
    let (i1, i2) = (lo(r.s1, d.s1, f.ds()), hi(r.s2, d.s1, f.ds()).min(f.ns()));
    let (j1, j2) = (lo(r.t1, d.t1, f.dt()), hi(r.t2, d.t1, f.dt()).min(f.nt()));
    (i1 < i2 && j1 < j2).then_some((i1, i2, j1, j2))
}

/// `∫∫_{C̃} y dx` as the sum of Young integrals over a dyadic cover whose
/// squares are snapped inward to grid nodes.
///
/// Level `k` of the result uses, on every square, the coarsest sub-grid
/// with step at most `2^{levels−1−k}` that tiles the square.
pub fn cone_integral(
    y: &GridField,
    x: &GridField,
    e_x: &HolderExponents,
    e_y: &HolderExponents,
    c: &Cone,
    depth: usize,
    levels: usize,
) -> Result<ConeIntegral> {
    cone_integral_with(y, x, e_x, e_y, c, depth, levels, CoverKind::Dyadic, Exec::default())
}

#[allow(clippy::too_many_arguments)]
pub fn cone_integral_with(
    y: &GridField,
    x: &GridField,
    e_x: &HolderExponents,
    e_y: &HolderExponents,
    c: &Cone,
    depth: usize,
    levels: usize,
    kind: CoverKind,
    exec: Exec,
) -> Result<ConeIntegral> {
    ensure!(y.same_grid(x), Alignment, "integrand and integrator live on different grids");
    check_young_exponents(e_x, e_y)?;
    ensure!(levels >= 1, Parameter, "at least one level is required");
    let bbox = c.bounding_box()?;
    let tol = 1e-9 * (x.ds() + x.dt());
    ensure!(x.domain().contains(&bbox, tol), Geometry, "cone {:?} exceeds the field domain", c.apex);
    let cov = cover(c, depth, kind)?;
    type Snapped = (Rectangle, Option<(usize, usize, usize, usize)>);
    let snapped: Vec<Snapped> = cov.rectangles.iter().map(|r| (r.rect, snap_inward(x, &r.rect))).collect();
    let mut lost = 0.0;
    for (r, s) in &snapped {
        let kept = s.map_or(0.0, |(i1, i2, j1, j2)| (i2 - i1) as f64 * x.ds() * (j2 - j1) as f64 * x.dt());
        lost += r.area() - kept;
    }
    let used: Vec<(usize, usize, usize, usize)> = snapped.iter().filter_map(|s| s.1).collect();
    let mut out = Vec::with_capacity(levels);
    for k in 0..levels {
        let max_step = 1usize << (levels - 1 - k);
        let sums = exec.map(used.len(), |q| {
            let (i1, i2, j1, j2) = used[q];
            let mut step = max_step;
            while (i2 - i1) % step != 0 || (j2 - j1) % step != 0 {
                step /= 2;
            }
            riemann_sum(y, x, (i1, i2, j1, j2), step, Exec::Sequential)
        });
        let mesh = max_step as f64 * x.ds().max(x.dt());
        out.push((mesh, sums.iter().sum::<f64>()));
    }
    let n = out.len();
    let cauchy_gap = if n >= 2 { (out[n - 1].1 - out[n - 2].1).abs() } else { 0.0 };

    let nx = holder_seminorms_dyadic(x, e_x);
    let ny = holder_seminorms_dyadic(y, e_y);
    let (g, gh) = (e_x.gamma, e_x.gamma_hat);
    let cst = DEFAULT_CERTIFICATE_CONSTANT;
    let certificate: f64 = used
        .iter()
        .map(|&(i1, i2, j1, j2)| {
            let (ds, dt) = ((i2 - i1) as f64 * x.ds(), (j2 - j1) as f64 * x.dt());
            cst * nx.rect
                * (ny.sup * ds.powf(g) * dt.powf(gh)
                    + ny.total
                        * (ds.powf(g + e_y.gamma) * dt.powf(gh + e_y.gamma_hat)
                            + ds.powf(g + e_y.alpha) * dt.powf(gh)
                            + ds.powf(g) * dt.powf(gh + e_y.beta)))
        })
        .sum();
    let ynorm = ny.sup + ny.total;
    let tail_bound = cst * nx.rect * (1.0 + ynorm * (1.0 + ynorm)) * summability_tail(c.size()?, g + gh, depth);
    let result =
        YoungResult { value: out[n - 1].1, levels: out, cauchy_gap, certificate: Some(certificate), violation: false };
    Ok(ConeIntegral { result, tail_bound, rectangles_used: used.len(), snapped_area_lost: lost })
}

/// Cells `(a, b)` of a grid whose lower-left corner lies on or above the
/// line `u + v = 0`, i.e. cells entirely inside the slab.
#[inline]
pub fn cell_above_initial_line(f: &GridField, a: usize, b: usize) -> bool {
    f.s_coord(a) + f.t_coord(b) >= -1e-9 * (f.ds() + f.dt())
}

/// First `b` such that cell `(a, b)` lies above the initial line.
pub fn first_slab_cell(f: &GridField, a: usize) -> usize {
    (0..f.nt()).find(|&b| cell_above_initial_line(f, a, b)).unwrap_or(f.nt())
}

/// Sum of `Δx` over the cells of the snapped cone of node `(i, j)`: cells
/// `a < i`, `b < j` above the initial line. Each row `a` is summed with `b`
/// ascending, then the row sums are added with `a` ascending.
pub fn snapped_cone_sum(x: &GridField, i: usize, j: usize) -> Result<f64> {
    ensure!(i <= x.ns() && j <= x.nt(), Geometry, "node ({i}, {j}) outside the grid");
    let mut acc = 0.0;
    for a in 0..i {
        let mut row = 0.0;
        for b in first_slab_cell(x, a)..j {
            row += x.rect_increment_idx(a, a + 1, b, b + 1);
        }
        acc += row;
    }
    Ok(acc)
}

/// [`snapped_cone_sum`] at every node.
pub fn snapped_cone_field(x: &GridField) -> Result<GridField> {
    let mut values = Vec::with_capacity((x.ns() + 1) * (x.nt() + 1));
    for i in 0..=x.ns() {
        for j in 0..=x.nt() {
            values.push(snapped_cone_sum(x, i, j)?);
        }
    }
    GridField::new(x.domain(), x.ns(), x.nt(), values)
}
