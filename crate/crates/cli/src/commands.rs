use clap::ValueEnum;
use roughwave::cone::snapped_cone_field;
use roughwave::diagnostics::{
    anisotropic_exponents, rect_exponent_sum_estimate_masked, AnisotropicReport, RegressionFit,
};
use roughwave::direct::{regularity_comparison, ComparisonParams};
use roughwave::grid::rotate_minus_45;
use roughwave::io::{load_field, write_field_csv, FieldMeta};
use roughwave::noise::{OriginalSampler, RotatedGrid, RotatedSampler, DEFAULT_ROTATED_NODE_CAP};
use roughwave::sigma::{SigmaFn, SigmaKind};
use roughwave::solver::{cone_cross_check, solve, Scheme, SolverConfig, Termination};
use roughwave::young::{gap_order, young_integral_2d};
use roughwave::{Error, Exec, GridField, HolderExponents, Rectangle};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::f64::consts::SQRT_2;
use std::path::Path;

use crate::manifest::{artifact, sibling, Manifest, OutDir};
use crate::CliError;

/// Largest dyadic exponent accepted for synthetic integrand grids.
const MAX_CONVERGENCE_LEVEL: u32 = 12;

pub struct Ctx {
    pub out: OutDir,
    pub exec: Exec,
}

fn manifest(command: &'static str, config: &impl Serialize, field: Option<FieldMeta>) -> Manifest {
    Manifest {
        tool: env!("CARGO_BIN_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command,
        config: serde_json::to_value(config).expect("config serializes"),
        field,
        artifacts: Vec::new(),
    }
}

fn csv_bytes(f: &GridField) -> Vec<u8> {
    let mut buf = Vec::new();
    write_field_csv(f, &mut buf).expect("writing to memory");
    buf
}

fn json_bytes(v: &impl Serialize) -> Vec<u8> {
    (serde_json::to_string_pretty(v).expect("report serializes") + "\n").into_bytes()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    Rotated,
    Original,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct SampleNoiseConfig {
    pub h: f64,
    pub nu: f64,
    pub frame: Frame,
    /// Cells per side (rotated) or along time (original, with twice as
    /// many along space).
    pub grid: usize,
    pub t: f64,
    pub seed: u64,
    pub replicate: u64,
    /// Node cap; the rotated frame defaults to the library cap, the
    /// original frame is uncapped unless set.
    pub cap: Option<usize>,
    pub out: String,
}

impl Default for SampleNoiseConfig {
    fn default() -> Self {
        Self {
            h: 0.75,
            nu: 0.5,
            frame: Frame::Rotated,
            grid: 48,
            t: 0.5,
            seed: 0,
            replicate: 0,
            cap: None,
            out: "noise.csv".into(),
        }
    }
}

pub fn sample_noise(cfg: &SampleNoiseConfig, ctx: &Ctx) -> Result<(), CliError> {
    let (field, cap, jitter) = match cfg.frame {
        Frame::Rotated => {
            let cap = cfg.cap.unwrap_or(DEFAULT_ROTATED_NODE_CAP);
            let s = RotatedSampler::with_cap(cfg.h, cfg.nu, RotatedGrid::new(cfg.t, cfg.grid)?, cap, ctx.exec)?;
            (s.sample(cfg.seed, cfg.replicate), Some(cap), json!(s.jitter()))
        }
        Frame::Original => {
            let nodes = (cfg.grid + 1) * (2 * cfg.grid + 1);
            if let Some(cap) = cfg.cap.filter(|&c| nodes > c) {
                return Err(Error::Size(format!("original grid has {nodes} nodes, cap is {cap}")).into());
            }
            let d = Rectangle::new(0.0, cfg.t, -cfg.t, cfg.t)?;
            let s = OriginalSampler::new(cfg.h, cfg.nu, d, cfg.grid, 2 * cfg.grid)?;
            (s.sample(cfg.seed, cfg.replicate), cfg.cap, json!(s.jitter()))
        }
    };
    let bytes = csv_bytes(&field);
    ctx.out.write(&cfg.out, &bytes)?;
    let meta = FieldMeta {
        seed: Some(cfg.seed),
        params: Some(
            json!({"H": cfg.h, "nu": cfg.nu, "seed": cfg.seed, "replicate": cfg.replicate, "frame": cfg.frame, "cap": cap, "jitter": jitter}),
        ),
        ..FieldMeta::of(&field)
    };
    let mut m = manifest("sample-noise", cfg, Some(meta));
    m.artifacts.push(artifact("field", &cfg.out, &bytes));
    m.write(&ctx.out, &sibling(&cfg.out, ".json"))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct SolveConfig {
    /// Rotated-frame noise CSV; sampled inline from the fields below when
    /// absent.
    pub noise: Option<String>,
    pub h: f64,
    pub nu: f64,
    pub grid: usize,
    pub t: f64,
    pub seed: u64,
    pub sigma: String,
    pub sigma_params: Vec<f64>,
    pub scheme: Scheme,
    pub picard_tol: f64,
    pub picard_max_iter: usize,
    pub fallback: bool,
    pub kappa: f64,
    pub kappa_hat: f64,
    pub cone_depth: usize,
    pub out: String,
    /// Optional CSV of the solution in `(time, space)` coordinates.
    pub pull_back: Option<String>,
}

impl Default for SolveConfig {
    fn default() -> Self {
        let s = SolverConfig::default();
        Self {
            noise: None,
            h: 0.75,
            nu: 0.5,
            grid: 48,
            t: s.t,
            seed: 0,
            sigma: "sin".into(),
            sigma_params: Vec::new(),
            scheme: s.scheme,
            picard_tol: s.picard_tol,
            picard_max_iter: s.picard_max_iter,
            fallback: s.fallback,
            kappa: s.kappa,
            kappa_hat: s.kappa_hat,
            cone_depth: s.cone_depth,
            out: "solution.csv".into(),
            pull_back: None,
        }
    }
}

fn pull_back_csv(y: &GridField) -> Vec<u8> {
    let n = y.ns();
    let mut text = String::from("time,space,value\n");
    for (k, p) in rotate_minus_45(y).into_iter().enumerate() {
        let (i, j) = (k / (n + 1), k % (n + 1));
        if i + j >= n {
            text.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", p.time, p.space, p.value));
        }
    }
    text.into_bytes()
}

pub fn solve_cmd(cfg: &SolveConfig, ctx: &Ctx) -> Result<(), CliError> {
    let sig = SigmaFn::by_name(&cfg.sigma, &cfg.sigma_params)?;
    let mut solver = SolverConfig {
        t: cfg.t,
        kappa: cfg.kappa,
        kappa_hat: cfg.kappa_hat,
        scheme: cfg.scheme,
        picard_tol: cfg.picard_tol,
        picard_max_iter: cfg.picard_max_iter,
        cone_depth: cfg.cone_depth,
        fallback: cfg.fallback,
        exec: Exec::Sequential,
    };
    let x = match &cfg.noise {
        Some(path) => {
            let x = load_field(Path::new(path))?;
            solver.t = x.domain().s2 * SQRT_2;
            x
        }
        None => {
            let half = 0.5 * (cfg.h + 1.0 - 0.5 * cfg.nu);
            solver.check_noise_exponents(half, half)?;
            RotatedSampler::new(cfg.h, cfg.nu, RotatedGrid::new(cfg.t, cfg.grid)?)?.sample(cfg.seed, 0)
        }
    };
    let r = solve(&x, &sig, &solver)?;
    // Picard stops at a tolerance, so only the exact marching solution can be
    // held to round-off
    let cone_check = match r.diagnostics.termination {
        Termination::Exact => Some(cone_cross_check(&x, &r.y_rotated, &sig, &solver)?),
        _ => None,
    };
    let diag_rel = sibling(&cfg.out, ".diagnostics.json");
    let diag = json_bytes(&r.diagnostics);
    ctx.out.write(&diag_rel, &diag)?;
    let meta = FieldMeta {
        seed: cfg.noise.is_none().then_some(cfg.seed),
        params: Some(json!({"sigma": sig.kind(), "scheme": cfg.scheme, "t": solver.t, "coneCheck": cone_check})),
        ..FieldMeta::of(&r.y_rotated)
    };
    let mut m = manifest("solve", cfg, Some(meta));
    m.artifacts.push(artifact("diagnostics", &diag_rel, &diag));
    if !r.converged() {
        m.write(&ctx.out, &sibling(&cfg.out, ".json"))?;
        let report = serde_json::to_string(&r.diagnostics.fallback).expect("report serializes");
        return Err(CliError::NotConverged(format!(
            "Picard stopped after {} iterations at residual {:.3e}; fallback: {report}",
            r.diagnostics.iterations, r.diagnostics.residual
        )));
    }
    if let Some(check) = cone_check.filter(|c| !c.passed) {
        return Err(CliError::CrossCheck(format!(
            "cone integrals at {} probe nodes depart from the solution by up to {:.3e} (relative)",
            check.probes, check.worst
        )));
    }
    if let SigmaKind::Constant { c } = *sig.kind() {
        let cone = snapped_cone_field(&x)?;
        let scale = 1.0 + c.abs() * cone.values().iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let worst = r.y_rotated.values().iter().zip(cone.values()).fold(0.0f64, |a, (y, k)| a.max((y - c * k).abs()));
        if worst > 1e-12 * scale {
            return Err(CliError::CrossCheck(format!(
                "constant coefficient solution departs from the cone sums by {worst:.3e}"
            )));
        }
    }
    let bytes = csv_bytes(&r.y_rotated);
    ctx.out.write(&cfg.out, &bytes)?;
    m.artifacts.insert(0, artifact("solution", &cfg.out, &bytes));
    if let Some(pb) = &cfg.pull_back {
        let bytes = pull_back_csv(&r.y_rotated);
        ctx.out.write(pb, &bytes)?;
        m.artifacts.push(artifact("pullBack", pb, &bytes));
    }
    m.write(&ctx.out, &sibling(&cfg.out, ".json"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mask {
    None,
    /// Rectangles of a rotated field with lower-left node on or above the
    /// initial line.
    Slab,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct HolderConfig {
    #[serde(rename = "in")]
    pub input: String,
    pub levels: usize,
    pub mask: Mask,
    pub out: String,
}

impl Default for HolderConfig {
    fn default() -> Self {
        Self { input: String::new(), levels: 5, mask: Mask::None, out: "holder.json".into() }
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct HolderReport {
    exponent_sum: RegressionFit,
    /// Absent when the per-axis probes have too few usable scales.
    anisotropic: Option<AnisotropicReport>,
}

pub fn holder(cfg: &HolderConfig, ctx: &Ctx) -> Result<(), CliError> {
    if cfg.input.is_empty() {
        return Err(CliError::Input("holder needs an input field (--in)".into()));
    }
    let f = load_field(Path::new(&cfg.input))?;
    let n = f.ns();
    if cfg.mask == Mask::Slab && f.nt() != n {
        return Err(CliError::Input("the slab mask needs a square grid".into()));
    }
    let keep = |i: usize, j: usize, _: usize, _: usize| cfg.mask == Mask::None || i + j >= n;
    let report = HolderReport {
        exponent_sum: rect_exponent_sum_estimate_masked(&f, cfg.levels, keep)?,
        anisotropic: anisotropic_exponents(&f, cfg.levels, keep).ok(),
    };
    report_with_manifest("holder", cfg, &cfg.out, &report, ctx)
}

fn report_with_manifest(
    command: &'static str,
    cfg: &impl Serialize,
    rel: &str,
    report: &impl Serialize,
    ctx: &Ctx,
) -> Result<(), CliError> {
    let bytes = json_bytes(report);
    ctx.out.write(rel, &bytes)?;
    let mut m = manifest(command, cfg, None);
    m.artifacts.push(artifact("report", rel, &bytes));
    m.write(&ctx.out, &sibling(rel, ".manifest.json"))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct ConvergenceConfig {
    /// Built-in pair, used unless both `y` and `x` are given.
    pub pair: String,
    pub y: Option<String>,
    pub x: Option<String>,
    /// `coarse:fine` dyadic exponents of the grid sizes.
    pub levels: String,
    pub holder_x: f64,
    pub holder_y: f64,
    pub out: String,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        Self {
            pair: "poly".into(),
            y: None,
            x: None,
            levels: "4:9".into(),
            holder_x: 0.9,
            holder_y: 0.9,
            out: "convergence.json".into(),
        }
    }
}

type Fn2 = fn(f64, f64) -> f64;

/// Integrand and integrator on the unit square.
fn builtin_pair(name: &str) -> Option<(Fn2, Fn2)> {
    let p: (Fn2, Fn2) = match name {
        "poly" => (|u, _| u, |u, v| u * u * v),
        "bilinear" => (|u, v| u * v, |u, v| u * v),
        "mixed" => (|u, v| u * u + v, |u, v| u * u * v * v),
        "trig" => (|u, v| u.sin() * v.cos(), |u, v| u.sin() * v.sin()),
        "exp" => (|u, v| u.exp() * v, |u, v| u * v.exp()),
        _ => return None,
    };
    Some(p)
}

fn parse_levels(s: &str) -> Result<(u32, u32), CliError> {
    let bad = || CliError::Input(format!("levels `{s}` must read coarse:fine with coarse < fine"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    let (a, b): (u32, u32) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
    if a >= b {
        return Err(bad());
    }
    Ok((a, b))
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct ConvergenceReport {
    value: f64,
    /// `(mesh, riemann sum)` from coarsest to finest.
    levels: Vec<(f64, f64)>,
    order: RegressionFit,
}

pub fn convergence(cfg: &ConvergenceConfig, ctx: &Ctx) -> Result<(), CliError> {
    let (lo, hi) = parse_levels(&cfg.levels)?;
    let (y, x) = match (&cfg.y, &cfg.x) {
        (Some(y), Some(x)) => {
            let (y, x) = (load_field(Path::new(y))?, load_field(Path::new(x))?);
            if x.ns() != 1 << hi || x.nt() != 1 << hi {
                return Err(CliError::Input(format!("fields must have 2^{hi} cells per side")));
            }
            (y, x)
        }
        (None, None) => {
            if hi > MAX_CONVERGENCE_LEVEL {
                return Err(Error::Size(format!("grid 2^{hi} exceeds 2^{MAX_CONVERGENCE_LEVEL}")).into());
            }
            let (fy, fx) =
                builtin_pair(&cfg.pair).ok_or_else(|| CliError::Input(format!("unknown pair `{}`", cfg.pair)))?;
            let n = 1 << hi;
            (GridField::from_fn(Rectangle::unit(), n, n, fy)?, GridField::from_fn(Rectangle::unit(), n, n, fx)?)
        }
        _ => return Err(CliError::Input("give both --y and --x, or neither".into())),
    };
    let (ex, ey) = (HolderExponents::uniform(cfg.holder_x)?, HolderExponents::uniform(cfg.holder_y)?);
    let res = young_integral_2d(&y, &x, &ex, &ey, (hi - lo + 1) as usize)?;
    let report = ConvergenceReport { value: res.value, order: gap_order(&res)?, levels: res.levels };
    report_with_manifest("convergence", cfg, &cfg.out, &report, ctx)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct DirectCompareConfig {
    pub h: f64,
    pub nu: f64,
    pub t: f64,
    pub n: usize,
    pub levels: usize,
    pub seeds: usize,
    pub base_seed: u64,
    /// Node cap on the rotated grid.
    pub cap: usize,
    pub out: String,
}

impl Default for DirectCompareConfig {
    fn default() -> Self {
        let p = ComparisonParams::default();
        Self {
            h: p.h,
            nu: p.nu,
            t: p.t,
            n: p.n,
            levels: p.levels,
            seeds: p.seeds,
            base_seed: p.base_seed,
            cap: DEFAULT_ROTATED_NODE_CAP,
            out: "direct-compare.json".into(),
        }
    }
}

pub fn direct_compare(cfg: &DirectCompareConfig, ctx: &Ctx) -> Result<(), CliError> {
    let nodes = (cfg.n + 1) * (cfg.n + 1);
    if nodes > cfg.cap {
        return Err(Error::Size(format!("rotated grid has {nodes} nodes, cap is {}", cfg.cap)).into());
    }
    let p = ComparisonParams {
        h: cfg.h,
        nu: cfg.nu,
        t: cfg.t,
        n: cfg.n,
        levels: cfg.levels,
        seeds: cfg.seeds,
        base_seed: cfg.base_seed,
        exec: ctx.exec,
    };
    let report: Value = serde_json::to_value(regularity_comparison(&p)?).expect("report serializes");
    report_with_manifest("direct-compare", cfg, &cfg.out, &report, ctx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_ranges() {
        assert_eq!(parse_levels("4:9").unwrap(), (4, 9));
        assert!(parse_levels("9:4").is_err());
        assert!(parse_levels("4-9").is_err());
    }

    #[test]
    fn pair_catalog() {
        for name in ["poly", "bilinear", "mixed", "trig", "exp"] {
            assert!(builtin_pair(name).is_some());
        }
        assert!(builtin_pair("nope").is_none());
    }
}
