//! Two-parameter functions on uniform tensor grids.

use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{ensure, Error, Result};
use crate::par::Exec;

/// Axis-parallel rectangle `[s1, s2] × [t1, t2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rectangle {
    pub s1: f64,
    pub s2: f64,
    pub t1: f64,
    pub t2: f64,
}

impl Rectangle {
    pub fn new(s1: f64, s2: f64, t1: f64, t2: f64) -> Result<Self> {
        ensure!([s1, s2, t1, t2].iter().all(|v| v.is_finite()), Geometry, "rectangle corners must be finite");
        ensure!(s1 < s2 && t1 < t2, Geometry, "degenerate rectangle [{s1}, {s2}] x [{t1}, {t2}]");
        Ok(Self { s1, s2, t1, t2 })
    }

    pub fn unit() -> Self {
        Self { s1: 0.0, s2: 1.0, t1: 0.0, t2: 1.0 }
    }

    pub fn width(&self) -> f64 {
        self.s2 - self.s1
    }

    pub fn height(&self) -> f64 {
        self.t2 - self.t1
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn contains(&self, other: &Rectangle, tol: f64) -> bool {
        other.s1 >= self.s1 - tol && other.s2 <= self.s2 + tol && other.t1 >= self.t1 - tol && other.t2 <= self.t2 + tol
    }
}

/// Exponents `(γ, γ̂)` for rectangular increments and `(α, β)` for the
/// one-directional increments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderExponents {
    pub gamma: f64,
    pub gamma_hat: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl HolderExponents {
    pub fn new(gamma: f64, gamma_hat: f64, alpha: f64, beta: f64) -> Result<Self> {
        for (name, v) in [("gamma", gamma), ("gamma_hat", gamma_hat), ("alpha", alpha), ("beta", beta)] {
            ensure!(v > 0.0 && v < 1.0, Parameter, "{name} = {v} must lie in (0, 1)");
        }
        Ok(Self { gamma, gamma_hat, alpha, beta })
    }

    /// All four exponents equal to `e`.
    pub fn uniform(e: f64) -> Result<Self> {
        Self::new(e, e, e, e)
    }
}

/// Discrete Hölder semi-norms of a grid function.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct HolderSeminorms {
    pub rect: f64,
    pub dir1: f64,
    pub dir2: f64,
    pub sup: f64,
    pub total: f64,
}

/// Node values of a function on a uniform `(ns+1) × (nt+1)` grid, stored
/// with `s` as the outer index.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    domain: Rectangle,
    ns: usize,
    nt: usize,
    values: Vec<f64>,
}

impl GridField {
    pub fn new(domain: Rectangle, ns: usize, nt: usize, values: Vec<f64>) -> Result<Self> {
        ensure!(ns > 0 && nt > 0, Parameter, "grid counts must be positive");
        ensure!(
            values.len() == (ns + 1) * (nt + 1),
            Parameter,
            "expected {} values, got {}",
            (ns + 1) * (nt + 1),
            values.len()
        );
        ensure!(values.iter().all(|v| v.is_finite()), Numerical, "field contains non-finite values");
        Ok(Self { domain, ns, nt, values })
    }

    pub fn zeros(domain: Rectangle, ns: usize, nt: usize) -> Result<Self> {
        Self::new(domain, ns, nt, vec![0.0; (ns + 1) * (nt + 1)])
    }

    pub fn from_fn<F: Fn(f64, f64) -> f64>(domain: Rectangle, ns: usize, nt: usize, f: F) -> Result<Self> {
        ensure!(ns > 0 && nt > 0, Parameter, "grid counts must be positive");
        let mut values = Vec::with_capacity((ns + 1) * (nt + 1));
        for i in 0..=ns {
            let s = node_coord(domain.s1, domain.s2, ns, i);
            for j in 0..=nt {
                values.push(f(s, node_coord(domain.t1, domain.t2, nt, j)));
            }
        }
        Self::new(domain, ns, nt, values)
    }

    pub fn domain(&self) -> Rectangle {
        self.domain
    }

    pub fn ns(&self) -> usize {
        self.ns
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn ds(&self) -> f64 {
        self.domain.width() / self.ns as f64
    }

    pub fn dt(&self) -> f64 {
        self.domain.height() / self.nt as f64
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * (self.nt + 1) + j]
    }

    pub fn s_coord(&self, i: usize) -> f64 {
        node_coord(self.domain.s1, self.domain.s2, self.ns, i)
    }

    pub fn t_coord(&self, j: usize) -> f64 {
        node_coord(self.domain.t1, self.domain.t2, self.nt, j)
    }

    /// Index of the `s` node at coordinate `s`, if it is one.
    pub fn s_index(&self, s: f64) -> Result<usize> {
        snap(s, self.domain.s1, self.domain.s2, self.ns)
            .ok_or_else(|| Error::Alignment(format!("s = {s} is not a grid node")))
    }

    pub fn t_index(&self, t: f64) -> Result<usize> {
        snap(t, self.domain.t1, self.domain.t2, self.nt)
            .ok_or_else(|| Error::Alignment(format!("t = {t} is not a grid node")))
    }

    /// `f(i2,j2) − f(i2,j1) − f(i1,j2) + f(i1,j1)`.
    #[inline]
    pub fn rect_increment_idx(&self, i1: usize, i2: usize, j1: usize, j2: usize) -> f64 {
        self.at(i2, j2) - self.at(i2, j1) - self.at(i1, j2) + self.at(i1, j1)
    }

    pub fn same_grid(&self, other: &GridField) -> bool {
        self.ns == other.ns && self.nt == other.nt && self.domain == other.domain
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Result<GridField> {
        GridField::new(self.domain, self.ns, self.nt, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Pointwise `a·self + b·other` on a shared grid.
    pub fn axpby(&self, a: f64, other: &GridField, b: f64) -> Result<GridField> {
        ensure!(self.same_grid(other), Alignment, "fields live on different grids");
        let values = self.values.iter().zip(&other.values).map(|(&x, &y)| a * x + b * y).collect();
        GridField::new(self.domain, self.ns, self.nt, values)
    }

    /// Keeps every `factor`-th node in both directions.
    pub fn restrict(&self, factor: usize) -> Result<GridField> {
        ensure!(factor > 0, Parameter, "restriction factor must be positive");
        ensure!(
            self.ns.is_multiple_of(factor) && self.nt.is_multiple_of(factor),
            Alignment,
            "factor {factor} does not divide grid {}x{}",
            self.ns,
            self.nt
        );
        let (ns, nt) = (self.ns / factor, self.nt / factor);
        let mut values = Vec::with_capacity((ns + 1) * (nt + 1));
        for i in 0..=ns {
            for j in 0..=nt {
                values.push(self.at(i * factor, j * factor));
            }
        }
        GridField::new(self.domain, ns, nt, values)
    }

    /// Sub-grid on nodes `i0..=i1`, `j0..=j1`.
    pub fn window(&self, i0: usize, i1: usize, j0: usize, j1: usize) -> Result<GridField> {
        ensure!(
            i0 < i1 && i1 <= self.ns && j0 < j1 && j1 <= self.nt,
            Alignment,
            "window [{i0},{i1}]x[{j0},{j1}] outside {}x{} grid",
            self.ns,
            self.nt
        );
        let domain = Rectangle::new(self.s_coord(i0), self.s_coord(i1), self.t_coord(j0), self.t_coord(j1))?;
        let mut values = Vec::with_capacity((i1 - i0 + 1) * (j1 - j0 + 1));
        for i in i0..=i1 {
            values.extend_from_slice(&self.values[i * (self.nt + 1) + j0..=i * (self.nt + 1) + j1]);
        }
        GridField::new(domain, i1 - i0, j1 - j0, values)
    }

    /// Node indices of a rectangle whose corners are grid nodes.
    pub fn rect_indices(&self, r: &Rectangle) -> Result<(usize, usize, usize, usize)> {
        Ok((self.s_index(r.s1)?, self.s_index(r.s2)?, self.t_index(r.t1)?, self.t_index(r.t2)?))
    }
}

#[inline]
fn node_coord(a: f64, b: f64, n: usize, k: usize) -> f64 {
    if k == n {
        b
    } else {
        a + (b - a) * (k as f64 / n as f64)
    }
}

fn snap(x: f64, a: f64, b: f64, n: usize) -> Option<usize> {
    let k = (x - a) / (b - a) * n as f64;
    let r = k.round();
    if (k - r).abs() > 1e-9 * (1.0 + k.abs()) || r < 0.0 || r > n as f64 {
        return None;
    }
    Some(r as usize)
}

/// Rectangular increment of `f` over a node-aligned rectangle.
pub fn rect_increment(f: &GridField, r: &Rectangle) -> Result<f64> {
    let (i1, i2, j1, j2) = f.rect_indices(r)?;
    Ok(f.rect_increment_idx(i1, i2, j1, j2))
}

/// Grid estimate of the semi-norms over every node-aligned rectangle and
/// directional increment whose side lags are at most `max_lag`.
pub fn holder_seminorms(f: &GridField, e: &HolderExponents, max_lag: usize) -> Result<HolderSeminorms> {
    ensure!(max_lag > 0, Parameter, "max_lag must be positive");
    ensure!(max_lag <= f.ns.min(f.nt), Parameter, "max_lag {max_lag} exceeds grid size {}", f.ns.min(f.nt));
    let lags: Vec<usize> = (1..=max_lag).collect();
    Ok(seminorms_over_lags(f, e, &lags, &lags))
}

/// Cheaper variant restricted to dyadic lags `1, 2, 4, …` plus the full
/// span in each direction.
pub fn holder_seminorms_dyadic(f: &GridField, e: &HolderExponents) -> HolderSeminorms {
    seminorms_over_lags(f, e, &dyadic_lags(f.ns), &dyadic_lags(f.nt))
}

fn dyadic_lags(n: usize) -> Vec<usize> {
    let mut lags: Vec<usize> = std::iter::successors(Some(1usize), |&l| Some(l * 2)).take_while(|&l| l <= n).collect();
    if lags.last() != Some(&n) {
        lags.push(n);
    }
    lags
}

fn seminorms_over_lags(f: &GridField, e: &HolderExponents, lags_s: &[usize], lags_t: &[usize]) -> HolderSeminorms {
    let (ns, nt) = (f.ns, f.nt);
    let (ds, dt) = (f.ds(), f.dt());
    let w = nt + 1;
    // One task per s-lag: (rect, dir1) maxima.
    let per_lag: Vec<(f64, f64)> = Exec::default().map(lags_s.len(), |k| {
        let ls = lags_s[k];
        let mut diff = vec![0.0; (ns + 1 - ls) * w];
        let mut dir1: f64 = 0.0;
        for i in 0..=ns - ls {
            for j in 0..=nt {
                let d = f.values[(i + ls) * w + j] - f.values[i * w + j];
                diff[i * w + j] = d;
                dir1 = dir1.max(d.abs());
            }
        }
        let span_s = (ls as f64 * ds).powf(e.gamma);
        let mut rect: f64 = 0.0;
        for &lt in lags_t {
            let mut m: f64 = 0.0;
            for i in 0..=ns - ls {
                let row = &diff[i * w..i * w + w];
                for j in 0..=nt - lt {
                    m = m.max((row[j + lt] - row[j]).abs());
                }
            }
            rect = rect.max(m / (span_s * (lt as f64 * dt).powf(e.gamma_hat)));
        }
        (rect, dir1 / (ls as f64 * ds).powf(e.alpha))
    });
    let mut out = HolderSeminorms::default();
    for (r, d) in per_lag {
        out.rect = out.rect.max(r);
        out.dir1 = out.dir1.max(d);
    }
    for &lt in lags_t {
        let mut m: f64 = 0.0;
        for i in 0..=ns {
            for j in 0..=nt - lt {
                m = m.max((f.values[i * w + j + lt] - f.values[i * w + j]).abs());
            }
        }
        out.dir2 = out.dir2.max(m / (lt as f64 * dt).powf(e.beta));
    }
    out.sup = f.values.iter().fold(0.0, |m, v| m.max(v.abs()));
    out.total = out.rect + out.dir1 + out.dir2;
    out
}

/// Maps rotated-frame coordinates `(s, t)` to the original `(time, space)`
/// pair `((t+s)/√2, (t−s)/√2)`.
#[inline]
pub fn rotate_coords(s: f64, t: f64) -> (f64, f64) {
    ((t + s) * FRAC_1_SQRT_2, (t - s) * FRAC_1_SQRT_2)
}

/// Inverse of [`rotate_coords`].
#[inline]
pub fn unrotate_coords(time: f64, space: f64) -> (f64, f64) {
    ((time - space) * FRAC_1_SQRT_2, (time + space) * FRAC_1_SQRT_2)
}

/// A node value placed in original `(time, space)` coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FramePoint {
    pub time: f64,
    pub space: f64,
    pub value: f64,
}

/// Re-expresses every node of a rotated-frame field in original coordinates.
pub fn rotate_minus_45(f: &GridField) -> Vec<FramePoint> {
    let mut out = Vec::with_capacity(f.values.len());
    for i in 0..=f.ns {
        for j in 0..=f.nt {
            let (time, space) = rotate_coords(f.s_coord(i), f.t_coord(j));
            out.push(FramePoint { time, space, value: f.at(i, j) });
        }
    }
    out
}
