//! Coefficient functions σ and empirical checks of the composition
//! inequalities
//! `‖σ(y)‖ ≤ C ‖y‖(1 + ‖y‖)` and
//! `‖σ(y1) − σ(y2)‖ ≤ K (‖d‖_∞ + ‖d‖)(1 + ‖y1‖ + ‖y2‖ + ‖d‖ + (‖y1‖ + ‖d‖)²)`,
//! `d = y1 − y2`, where `‖·‖` is the total Hölder semi-norm.

use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

use crate::error::{ensure, Error, Result};
use crate::grid::{holder_seminorms, GridField, HolderExponents, Rectangle};

type Eval = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase")]
pub enum SigmaKind {
    Affine {
        a: f64,
        b: f64,
    },
    Sin,
    Tanh,
    /// `exp(−u²)`.
    Bump,
    Constant {
        c: f64,
    },
    Custom {
        label: String,
    },
}

/// A coefficient function with sup-norm bounds of `σ, σ′, σ″, σ‴`.
#[derive(Clone)]
pub struct SigmaFn {
    kind: SigmaKind,
    eval: Eval,
    bounds: [f64; 4],
}

impl fmt::Debug for SigmaFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SigmaFn").field("kind", &self.kind).field("bounds", &self.bounds).finish()
    }
}

impl SigmaFn {
    pub fn sin() -> Self {
        Self { kind: SigmaKind::Sin, eval: Arc::new(f64::sin), bounds: [1.0; 4] }
    }

    pub fn tanh() -> Self {
        let b2 = 4.0 / (3.0 * 3f64.sqrt());
        Self { kind: SigmaKind::Tanh, eval: Arc::new(f64::tanh), bounds: [1.0, 1.0, b2, 2.0] }
    }

    pub fn bump() -> Self {
        // |σ‴| = |12u − 8u³| e^{−u²} peaks at u² = (3 − √6)/2
        let u2 = (3.0 - 6f64.sqrt()) / 2.0;
        let u = u2.sqrt();
        let b3 = (12.0 * u - 8.0 * u * u2) * (-u2).exp();
        Self {
            kind: SigmaKind::Bump,
            eval: Arc::new(|u: f64| (-u * u).exp()),
            bounds: [1.0, (2.0 / std::f64::consts::E).sqrt(), 2.0, b3],
        }
    }

    pub fn constant(c: f64) -> Self {
        Self { kind: SigmaKind::Constant { c }, eval: Arc::new(move |_| c), bounds: [c.abs(), 0.0, 0.0, 0.0] }
    }

    /// `a·u + b`. Unbounded unless `a = 0`, so outside the bounded-C³ class.
    pub fn affine(a: f64, b: f64) -> Self {
        let sup = if a == 0.0 { b.abs() } else { f64::INFINITY };
        Self { kind: SigmaKind::Affine { a, b }, eval: Arc::new(move |u| a * u + b), bounds: [sup, a.abs(), 0.0, 0.0] }
    }

    /// User-supplied σ with declared (trusted) derivative bounds.
    pub fn custom<F>(label: &str, f: F, bounds: [f64; 4]) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        ensure!(
            bounds.iter().all(|b| b.is_finite() && *b >= 0.0),
            Parameter,
            "custom sigma `{label}` must declare finite nonnegative derivative bounds"
        );
        Ok(Self { kind: SigmaKind::Custom { label: label.to_string() }, eval: Arc::new(f), bounds })
    }

    /// Catalog lookup: `sin`, `tanh`, `bump`, `constant` (param `c`),
    /// `affine` (params `a`, `b`).
    pub fn by_name(name: &str, params: &[f64]) -> Result<Self> {
        let p = |k: usize, default: f64| params.get(k).copied().unwrap_or(default);
        match name {
            "sin" => Ok(Self::sin()),
            "tanh" => Ok(Self::tanh()),
            "bump" => Ok(Self::bump()),
            "constant" | "const" => Ok(Self::constant(p(0, 1.0))),
            "affine" | "identity" => Ok(Self::affine(p(0, 1.0), p(1, 0.0))),
            other => Err(Error::Parameter(format!("unknown sigma `{other}`"))),
        }
    }

    pub fn kind(&self) -> &SigmaKind {
        &self.kind
    }

    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        (self.eval)(u)
    }

    /// Sup norms of `σ, σ′, σ″, σ‴`.
    pub fn derivative_bounds(&self) -> [f64; 4] {
        self.bounds
    }

    /// Bounded with bounded derivatives up to order three.
    pub fn is_bounded_c3(&self) -> bool {
        self.bounds.iter().all(|b| b.is_finite())
    }
}

/// Pointwise `σ(y)` on the grid of `y`.
pub fn compose(sig: &SigmaFn, y: &GridField) -> GridField {
    y.map(|v| sig.eval(v)).expect("sigma of a finite field must be finite")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct InequalityCheck {
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs / rhs`, the smallest constant for this input; `None` when the
    /// right side vanishes.
    pub constant_fit: Option<f64>,
    /// Input was constant, so the check is vacuous.
    pub degenerate: bool,
}

fn full_seminorms(y: &GridField, e: &HolderExponents) -> crate::grid::HolderSeminorms {
    holder_seminorms(y, e, y.ns().min(y.nt())).expect("grid has at least one cell")
}

pub fn check_growth_inequality(sig: &SigmaFn, y: &GridField, e: &HolderExponents) -> InequalityCheck {
    let ny = full_seminorms(y, e).total;
    let lhs = full_seminorms(&compose(sig, y), e).total;
    let rhs = ny * (1.0 + ny);
    InequalityCheck { lhs, rhs, constant_fit: (rhs > 0.0).then(|| lhs / rhs), degenerate: ny == 0.0 }
}

pub fn check_lipschitz_inequality(
    sig: &SigmaFn,
    y1: &GridField,
    y2: &GridField,
    e: &HolderExponents,
) -> Result<InequalityCheck> {
    let d = y1.axpby(1.0, y2, -1.0)?;
    let nd = full_seminorms(&d, e);
    let n1 = full_seminorms(y1, e).total;
    let n2 = full_seminorms(y2, e).total;
    let lhs = full_seminorms(&compose(sig, y1).axpby(1.0, &compose(sig, y2), -1.0)?, e).total;
    let growth = 1.0 + n1 + n2 + nd.total + (n1 + nd.total).powi(2);
    let rhs = (nd.sup + nd.total) * growth;
    Ok(InequalityCheck {
        lhs,
        rhs,
        constant_fit: (rhs > 0.0).then(|| lhs / rhs),
        degenerate: nd.sup == 0.0 && nd.total == 0.0,
    })
}

/// Smallest constant satisfying every non-degenerate check.
pub fn fit_constant(checks: &[InequalityCheck]) -> f64 {
    checks.iter().filter_map(|c| c.constant_fit).fold(0.0, f64::max)
}

/// Random smooth field on `[0,1]²`: a few separable trigonometric modes
/// plus a bilinear term, with a log-uniform overall amplitude in
/// `[0.05, 4]`.
pub fn random_smooth_field<R: Rng>(rng: &mut R, n: usize) -> GridField {
    let amp = (rng.random_range(0.05f64.ln()..4f64.ln())).exp();
    let modes: Vec<[f64; 5]> = (0..4)
        .map(|_| {
            [
                rng.random_range(-1.0..1.0),
                rng.random_range(0.5..6.0),
                rng.random_range(0.0..6.3),
                rng.random_range(0.5..6.0),
                rng.random_range(0.0..6.3),
            ]
        })
        .collect();
    let bilinear = rng.random_range(-1.0..1.0);
    GridField::from_fn(Rectangle::unit(), n, n, |u, v| {
        let mut acc = bilinear * u * v;
        for m in &modes {
            acc += m[0] * (m[1] * u + m[2]).sin() * (m[3] * v + m[4]).cos();
        }
        amp * acc
    })
    .expect("smooth field is finite")
}
