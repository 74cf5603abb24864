//! Gaussian noise that is fractional in time (Hurst index `H`) and Riesz
//! correlated in space (exponent `ν`), sampled exactly on grids in the
//! original and in the rotated frame.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use crate::error::{ensure, Error, Result};
use crate::grid::{GridField, Rectangle};
use crate::numeric::{gauss_legendre, TanhSinh};
use crate::par::Exec;
use crate::rng::stream;

/// Default cap on rotated-grid nodes; `(64+1)²` admits the 64-cell grid.
pub const DEFAULT_ROTATED_NODE_CAP: usize = 65 * 65;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub h: f64,
    pub nu: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(h: f64, nu: f64, seed: u64) -> Result<Self> {
        check_params(h, nu)?;
        Ok(Self { h, nu, seed })
    }

    /// `c_H = H(2H − 1)`.
    pub fn c_h(&self) -> f64 {
        self.h * (2.0 * self.h - 1.0)
    }
}

fn check_params(h: f64, nu: f64) -> Result<()> {
    ensure!(h > 0.5 && h < 1.0, Parameter, "H = {h} must lie in (1/2, 1)");
    ensure!(nu > 0.0 && nu < 1.0, Parameter, "nu = {nu} must lie in (0, 1)");
    Ok(())
}

/// `c_H ∫_{I1}∫_{I2} |u−v|^{2H−2} du dv` for `I1 = [a, b]`, `I2 = [c, d]`.
///
/// Reversed intervals contribute with a minus sign.
pub fn time_kernel((a, b): (f64, f64), (c, d): (f64, f64), h: f64) -> f64 {
    let p = |z: f64| z.abs().powf(2.0 * h);
    0.5 * (p(b - c) + p(a - d) - p(a - c) - p(b - d))
}

/// `∫_{J1}∫_{J2} |x−y|^{−ν} dx dy`, signed like [`time_kernel`].
pub fn space_kernel((a, b): (f64, f64), (c, d): (f64, f64), nu: f64) -> f64 {
    let norm = 1.0 / ((1.0 - nu) * (2.0 - nu));
    let f = |z: f64| z.abs().powf(2.0 - nu) * norm;
    f(b - c) + f(a - d) - f(a - c) - f(b - d)
}

/// Covariance of the noise measure of two axis-parallel rectangles in the
/// original `(time, space)` frame.
pub fn rectangle_covariance(r1: &Rectangle, r2: &Rectangle, h: f64, nu: f64) -> f64 {
    time_kernel((r1.s1, r1.s2), (r2.s1, r2.s2), h) * space_kernel((r1.t1, r1.t2), (r2.t1, r2.t2), nu)
}

/// Lower Cholesky factor, with the smallest diagonal jitter from the
/// ladder `1e−12·tr/n, 2e−12·tr/n, …, 1e−6·tr/n` that makes it succeed.
pub fn cholesky_with_jitter(m: DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    let n = m.nrows();
    ensure!(n > 0 && m.ncols() == n, Parameter, "covariance must be square and nonempty");
    if let Some(c) = m.clone().cholesky() {
        return Ok((c.l(), 0.0));
    }
    let scale = m.trace() / n as f64;
    let mut jitter = 1e-12 * scale;
    while jitter <= 1e-6 * scale * (1.0 + 1e-12) {
        let mut shifted = m.clone();
        for k in 0..n {
            shifted[(k, k)] += jitter;
        }
        if let Some(c) = shifted.cholesky() {
            return Ok((c.l(), jitter));
        }
        jitter *= 2.0;
    }
    Err(Error::Numerical(format!("covariance of size {n} is not positive definite up to jitter 1e-6·tr/n")))
}

/// Exact fractional Brownian path `B_H(k·dt)`, `k = 0..=n`, normalized so
/// that `E[B_H(t)²] = t^{2H}`.
pub fn sample_fbm_path<R: Rng>(h: f64, n: usize, dt: f64, rng: &mut R) -> Result<Vec<f64>> {
    ensure!(h > 0.0 && h < 1.0, Parameter, "H = {h} must lie in (0, 1)");
    ensure!(n > 0 && dt > 0.0, Parameter, "path needs positive length and step");
    let cov = DMatrix::from_fn(n, n, |r, c| {
        let (a, b) = (r as f64 * dt, c as f64 * dt);
        time_kernel((a, a + dt), (b, b + dt), h)
    });
    let (l, _) = cholesky_with_jitter(cov)?;
    let z = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let inc = l * z;
    let mut path = Vec::with_capacity(n + 1);
    path.push(0.0);
    for k in 0..n {
        path.push(path[k] + inc[k]);
    }
    Ok(path)
}

/// Original-frame field on `[0, T] × [x1, x2]` (first coordinate time).
///
/// Cell increments have covariance `time_kernel ⊗ space_kernel`, so
/// `ΔX = L_t Z L_sᵀ` with one Cholesky factor per axis. Node values are
/// anchored at time 0 and space 0 with the signed-interval convention.
#[derive(Debug, Clone)]
pub struct OriginalSampler {
    domain: Rectangle,
    ns: usize,
    nt: usize,
    zero_col: usize,
    lt: DMatrix<f64>,
    ls: DMatrix<f64>,
    jitter: (f64, f64),
}

impl OriginalSampler {
    pub fn new(h: f64, nu: f64, domain: Rectangle, ns: usize, nt: usize) -> Result<Self> {
        check_params(h, nu)?;
        ensure!(ns > 0 && nt > 0, Parameter, "grid counts must be positive");
        ensure!(domain.s1 == 0.0, Geometry, "time axis must start at 0, got {}", domain.s1);
        let probe = GridField::zeros(domain, ns, nt)?;
        let zero_col = probe.t_index(0.0).map_err(|_| Error::Alignment("space 0 must be a grid node".into()))?;
        let (ds, dt) = (probe.ds(), probe.dt());
        let tcov = DMatrix::from_fn(ns, ns, |r, c| {
            time_kernel((probe.s_coord(r), probe.s_coord(r) + ds), (probe.s_coord(c), probe.s_coord(c) + ds), h)
        });
        let scov = DMatrix::from_fn(nt, nt, |r, c| {
            space_kernel((probe.t_coord(r), probe.t_coord(r) + dt), (probe.t_coord(c), probe.t_coord(c) + dt), nu)
        });
        let (lt, jt) = cholesky_with_jitter(tcov)?;
        let (ls, js) = cholesky_with_jitter(scov)?;
        Ok(Self { domain, ns, nt, zero_col, lt, ls, jitter: (jt, js) })
    }

    /// Jitter added to the (time, space) factors.
    pub fn jitter(&self) -> (f64, f64) {
        self.jitter
    }

    pub fn sample(&self, seed: u64, replicate: u64) -> GridField {
        let mut rng = stream(seed, replicate);
        let mut z = DMatrix::zeros(self.ns, self.nt);
        for a in 0..self.ns {
            for b in 0..self.nt {
                z[(a, b)] = rng.sample::<f64, _>(StandardNormal);
            }
        }
        let cells = &self.lt * z * self.ls.transpose();
        let w = self.nt + 1;
        // prefix in time
        let mut col = vec![0.0; (self.ns + 1) * self.nt];
        for a in 0..self.ns {
            for b in 0..self.nt {
                col[(a + 1) * self.nt + b] = col[a * self.nt + b] + cells[(a, b)];
            }
        }
        let mut values = vec![0.0; (self.ns + 1) * w];
        for i in 0..=self.ns {
            let row = &col[i * self.nt..(i + 1) * self.nt];
            for j in self.zero_col + 1..=self.nt {
                values[i * w + j] = values[i * w + j - 1] + row[j - 1];
            }
            for j in (0..self.zero_col).rev() {
                values[i * w + j] = values[i * w + j + 1] - row[j];
            }
        }
        GridField::new(self.domain, self.ns, self.nt, values).expect("finite gaussian sample")
    }
}

/// Samples the original-frame field with replicate index 0.
pub fn sample_original_field(spec: &NoiseSpec, domain: Rectangle, ns: usize, nt: usize) -> Result<GridField> {
    Ok(OriginalSampler::new(spec.h, spec.nu, domain, ns, nt)?.sample(spec.seed, 0))
}

/// Square grid `[−L, L]²`, `L = T/√2`, in rotated coordinates. Its upper
/// triangle `s + t ≥ 0` is the slab `0 ≤ s + t ≤ √2 T` up to the apex
/// `(L, L)`, i.e. the backward light cone of `(time T, space 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotatedGrid {
    pub t: f64,
    pub n: usize,
}

impl RotatedGrid {
    pub fn new(t: f64, n: usize) -> Result<Self> {
        ensure!(t > 0.0 && t.is_finite(), Parameter, "T = {t} must be positive");
        ensure!(n >= 2, Parameter, "rotated grid needs at least 2 cells per side");
        Ok(Self { t, n })
    }

    pub fn half_width(&self) -> f64 {
        self.t * FRAC_1_SQRT_2
    }

    pub fn domain(&self) -> Rectangle {
        let l = self.half_width();
        Rectangle { s1: -l, s2: l, t1: -l, t2: l }
    }

    /// Cell side.
    pub fn h(&self) -> f64 {
        2.0 * self.half_width() / self.n as f64
    }

    /// Cell `(a, b)` lies above the initial line.
    #[inline]
    pub fn cell_in_slab(&self, a: usize, b: usize) -> bool {
        a + b >= self.n
    }

    pub fn slab_cells(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for a in 0..self.n {
            for b in 0..self.n {
                if self.cell_in_slab(a, b) {
                    out.push((a, b));
                }
            }
        }
        out
    }

    /// Field whose node values are prefix sums of per-cell increments
    /// (`cells[a·n + b]`), restricted to slab cells.
    pub fn assemble(&self, cells: &[f64]) -> GridField {
        let n = self.n;
        let w = n + 1;
        let mut v = vec![0.0; w * w];
        for i in 1..=n {
            for j in 1..=n {
                let (a, b) = (i - 1, j - 1);
                let c = if self.cell_in_slab(a, b) { cells[a * n + b] } else { 0.0 };
                v[i * w + j] = v[(i - 1) * w + j] + v[i * w + j - 1] - v[(i - 1) * w + j - 1] + c;
            }
        }
        GridField::new(self.domain(), n, n, v).expect("finite cell increments")
    }
}

fn hat(z: f64) -> f64 {
    (1.0 - z.abs()).max(0.0)
}

/// Quadrature rules for the rotated cell covariance.
#[derive(Debug, Clone)]
pub struct CellCovariance {
    h: f64,
    nu: f64,
    rule: TanhSinh,
    gl: (Vec<f64>, Vec<f64>),
}

impl CellCovariance {
    pub fn new(h: f64, nu: f64) -> Result<Self> {
        check_params(h, nu)?;
        Ok(Self { h, nu, rule: TanhSinh::new(0.25), gl: gauss_legendre(12) })
    }

    /// Covariance of the noise measure of unit cells `[0,1]²` and
    /// `[−da, 1−da] × [−db, 1−db]` in rotated coordinates.
    ///
    /// With `p, q` the coordinate differences, this is
    /// `c_H ∫∫ T(p−da) T(q−db) |(p+q)/√2|^{2H−2} |(q−p)/√2|^{−ν} dp dq`
    /// with the hat function `T(z) = (1−|z|)⁺`.
    pub fn unit(&self, da: i64, db: i64) -> f64 {
        let c_h = self.h * (2.0 * self.h - 1.0);
        if (da + db).abs() >= 5 && (da - db).abs() >= 5 {
            c_h * self.far(da as f64, db as f64)
        } else {
            c_h * self.near(da as f64, db as f64)
        }
    }

    fn kernel(&self, tau: f64, xi: f64) -> f64 {
        tau.abs().powf(2.0 * self.h - 2.0) * xi.abs().powf(-self.nu)
    }

    /// Tensor Gauss-Legendre on the four sub-squares where the hat product
    /// is a polynomial; the kernel is smooth there.
    fn far(&self, da: f64, db: f64) -> f64 {
        let (x, w) = &self.gl;
        let mut acc = 0.0;
        for p0 in [da - 1.0, da] {
            for q0 in [db - 1.0, db] {
                for (xp, wp) in x.iter().zip(w) {
                    let p = p0 + 0.5 * (xp + 1.0);
                    for (xq, wq) in x.iter().zip(w) {
                        let q = q0 + 0.5 * (xq + 1.0);
                        let val =
                            hat(p - da) * hat(q - db) * self.kernel((p + q) * FRAC_1_SQRT_2, (q - p) * FRAC_1_SQRT_2);
                        acc += 0.25 * wp * wq * val;
                    }
                }
            }
        }
        acc
    }

    /// Tanh-sinh in `(τ, ξ)` with every kink and singularity of the
    /// integrand placed at a piece endpoint.
    fn near(&self, da: f64, db: f64) -> f64 {
        let tau0 = (da + db) * FRAC_1_SQRT_2;
        let xi0 = (db - da) * FRAC_1_SQRT_2;
        let (lo, hi) = (tau0 - SQRT_2, tau0 + SQRT_2);
        let mut cuts = vec![0.0];
        for m in -2..=2 {
            cuts.push(tau0 + m as f64 * FRAC_1_SQRT_2);
        }
        for k in -1..=1 {
            cuts.push(SQRT_2 * (da + k as f64));
            cuts.push(SQRT_2 * (db + k as f64));
        }
        let outer = pieces(lo, hi, cuts);
        let mut total = 0.0;
        for w in outer.windows(2) {
            total += self.rule.integrate(w[0], w[1], |tau| {
                let half = SQRT_2 - (tau - tau0).abs();
                if half <= 0.0 {
                    return 0.0;
                }
                let mut cuts = vec![0.0];
                for k in -1..=1 {
                    cuts.push(tau - SQRT_2 * (da + k as f64));
                    cuts.push(SQRT_2 * (db + k as f64) - tau);
                }
                let inner = pieces(xi0 - half, xi0 + half, cuts);
                let mut acc = 0.0;
                for v in inner.windows(2) {
                    acc += self.rule.integrate(v[0], v[1], |xi| {
                        hat((tau - xi) * FRAC_1_SQRT_2 - da)
                            * hat((tau + xi) * FRAC_1_SQRT_2 - db)
                            * xi.abs().powf(-self.nu)
                    });
                }
                acc * tau.abs().powf(2.0 * self.h - 2.0)
            });
        }
        total
    }
}

/// Sorted breakpoints of `[lo, hi]` including the admissible cuts.
fn pieces(lo: f64, hi: f64, cuts: Vec<f64>) -> Vec<f64> {
    let tol = 1e-12 * (1.0 + hi.abs().max(lo.abs()));
    let mut pts = vec![lo, hi];
    pts.extend(cuts.into_iter().filter(|&c| c > lo + tol && c < hi - tol));
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup_by(|a, b| (*a - *b).abs() <= tol);
    pts
}

/// Offsets related by `C(da,db) = C(−da,−db) = C(db,da)` share a key.
fn canonical(da: i64, db: i64) -> (i64, i64) {
    [(da, db), (-da, -db), (db, da), (-db, -da)].into_iter().min().unwrap()
}

/// Table of rotated cell covariances for all offsets of an `n × n` grid.
#[derive(Debug, Clone)]
pub struct CovarianceTable {
    n: usize,
    scale: f64,
    values: Vec<f64>,
}

impl CovarianceTable {
    pub fn build(h: f64, nu: f64, grid: &RotatedGrid, exec: Exec) -> Result<Self> {
        let q = CellCovariance::new(h, nu)?;
        let n = grid.n as i64;
        let mut keys: Vec<(i64, i64)> = Vec::new();
        let mut index: HashMap<(i64, i64), usize> = HashMap::new();
        for da in -(n - 1)..n {
            for db in -(n - 1)..n {
                let k = canonical(da, db);
                if let std::collections::hash_map::Entry::Vacant(e) = index.entry(k) {
                    e.insert(keys.len());
                    keys.push(k);
                }
            }
        }
        let unique = exec.map(keys.len(), |k| q.unit(keys[k].0, keys[k].1));
        let width = (2 * n - 1) as usize;
        let mut values = vec![0.0; width * width];
        for da in -(n - 1)..n {
            for db in -(n - 1)..n {
                values[(da + n - 1) as usize * width + (db + n - 1) as usize] = unique[index[&canonical(da, db)]];
            }
        }
        let scale = grid.h().powf(2.0 * h + 2.0 - nu);
        Ok(Self { n: grid.n, scale, values })
    }

    /// Covariance of the increments over cells `(a, b)` and `(a', b')`.
    #[inline]
    pub fn get(&self, (a, b): (usize, usize), (a2, b2): (usize, usize)) -> f64 {
        let width = 2 * self.n - 1;
        let da = a as i64 - a2 as i64 + self.n as i64 - 1;
        let db = b as i64 - b2 as i64 + self.n as i64 - 1;
        self.scale * self.values[da as usize * width + db as usize]
    }
}

/// Rotated-frame field `x(s,t) = X̃(rotated region below and left of
/// (s,t), intersected with the slab)`, sampled through a dense Cholesky
/// factor of the slab-cell covariance.
#[derive(Debug, Clone)]
pub struct RotatedSampler {
    grid: RotatedGrid,
    cells: Vec<(usize, usize)>,
    factor: DMatrix<f64>,
    jitter: f64,
}

impl RotatedSampler {
    pub fn new(h: f64, nu: f64, grid: RotatedGrid) -> Result<Self> {
        Self::with_cap(h, nu, grid, DEFAULT_ROTATED_NODE_CAP, Exec::default())
    }

    pub fn with_cap(h: f64, nu: f64, grid: RotatedGrid, cap: usize, exec: Exec) -> Result<Self> {
        check_params(h, nu)?;
        let nodes = (grid.n + 1) * (grid.n + 1);
        ensure!(nodes <= cap, Size, "rotated grid has {nodes} nodes, cap is {cap}");
        let table = CovarianceTable::build(h, nu, &grid, exec)?;
        let cells = grid.slab_cells();
        let m = cells.len();
        let cov = DMatrix::from_fn(m, m, |r, c| table.get(cells[r], cells[c]));
        let (factor, jitter) = cholesky_with_jitter(cov)?;
        Ok(Self { grid, cells, factor, jitter })
    }

    pub fn grid(&self) -> RotatedGrid {
        self.grid
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn sample(&self, seed: u64, replicate: u64) -> GridField {
        let mut rng = stream(seed, replicate);
        let z = DVector::from_fn(self.cells.len(), |_, _| rng.sample::<f64, _>(StandardNormal));
        let inc = &self.factor * z;
        let n = self.grid.n;
        let mut cells = vec![0.0; n * n];
        for (k, &(a, b)) in self.cells.iter().enumerate() {
            cells[a * n + b] = inc[k];
        }
        self.grid.assemble(&cells)
    }

    /// Independent replicates `0..count`, in replicate order.
    pub fn sample_many(&self, seed: u64, count: usize, exec: Exec) -> Vec<GridField> {
        exec.map(count, |r| self.sample(seed, r as u64))
    }
}

/// Samples the rotated-frame field with replicate index 0.
pub fn sample_rotated_field(spec: &NoiseSpec, grid: RotatedGrid) -> Result<GridField> {
    Ok(RotatedSampler::new(spec.h, spec.nu, grid)?.sample(spec.seed, 0))
}
