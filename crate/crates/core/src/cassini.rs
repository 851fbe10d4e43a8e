//! The Cassini quartics `f_a(x, y) = (x² + y²)² − 2a²(x² − y²)` and their
//! rotated companions `g_b(x, y) = (x² + y²)² + 2b²(x² − y²)`.
//!
//! `f_a + a⁴` is the product of squared distances to the foci `(±a, 0)`, so
//! the level sets of `f_a` are Cassini ovals and the zero level is the
//! Bernoulli lemniscate. Everything about this family is known in closed
//! form, which makes it the reference fixture for the estimators elsewhere in
//! the crate. [`ground_truth`] is the single place where those closed forms
//! are written down; the other modules have to recover them numerically.
//!
//! Note that the literature display defining `g_b` reuses the name `f_a` on
//! its left-hand side; the `+2b²` quartic is `g_b`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::field::{Point2, ScalarField2, SymMat2, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CassiniParams {
    a: f64,
}

impl CassiniParams {
    pub fn new(a: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(invalid(format!("Cassini parameter a must be finite and > 0, got {a}")));
        }
        Ok(Self { a })
    }

    pub fn a(&self) -> f64 {
        self.a
    }
}

/// Shared quartic `(x² + y²)² + s·(x² − y²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Quartic {
    s: f64,
}

impl Quartic {
    fn value(&self, p: Point2) -> f64 {
        let r2 = p.x * p.x + p.y * p.y;
        r2 * r2 + self.s * (p.x * p.x - p.y * p.y)
    }

    fn gradient(&self, p: Point2) -> Vec2 {
        let r2 = p.x * p.x + p.y * p.y;
        [
            4.0 * p.x * r2 + 2.0 * self.s * p.x,
            4.0 * p.y * r2 - 2.0 * self.s * p.y,
        ]
    }

    fn hessian(&self, p: Point2) -> SymMat2 {
        let (x2, y2) = (p.x * p.x, p.y * p.y);
        SymMat2::new(
            12.0 * x2 + 4.0 * y2 + 2.0 * self.s,
            8.0 * p.x * p.y,
            4.0 * x2 + 12.0 * y2 - 2.0 * self.s,
        )
    }
}

/// `f_a(x, y) = (x² + y²)² − 2a²(x² − y²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CassiniField {
    params: CassiniParams,
    quartic: Quartic,
}

impl CassiniField {
    pub fn a(&self) -> f64 {
        self.params.a
    }
}

pub fn cassini_field(params: CassiniParams) -> CassiniField {
    let a = params.a;
    CassiniField {
        params,
        quartic: Quartic { s: -2.0 * a * a },
    }
}

impl ScalarField2 for CassiniField {
    fn value(&self, p: Point2) -> f64 {
        self.quartic.value(p)
    }
    fn gradient(&self, p: Point2) -> Vec2 {
        self.quartic.gradient(p)
    }
    fn hessian(&self, p: Point2) -> SymMat2 {
        self.quartic.hessian(p)
    }
}

/// `g_b(x, y) = (x² + y²)² + 2b²(x² − y²)`, i.e. `f_b` rotated by 90°.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CassiniGField {
    b: f64,
    quartic: Quartic,
}

impl CassiniGField {
    pub fn b(&self) -> f64 {
        self.b
    }
}

pub fn g_field(b: f64) -> Result<CassiniGField> {
    if !(b > 0.0 && b.is_finite()) {
        return Err(invalid(format!("g_b parameter b must be finite and > 0, got {b}")));
    }
    Ok(CassiniGField {
        b,
        quartic: Quartic { s: 2.0 * b * b },
    })
}

impl ScalarField2 for CassiniGField {
    fn value(&self, p: Point2) -> f64 {
        self.quartic.value(p)
    }
    fn gradient(&self, p: Point2) -> Vec2 {
        self.quartic.gradient(p)
    }
    fn hessian(&self, p: Point2) -> SymMat2 {
        self.quartic.hessian(p)
    }
}

/// Which of the open convex lobes `C⁻`, `C⁺` contains a point.
///
/// `C∓ = {±x < 0 and −a⁴ ≤ f_a < 0}`: the interiors of the two lemniscate
/// loops.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Lobe {
    CMinus,
    CPlus,
    Neither,
}

pub fn c_plus_minus_membership(params: CassiniParams, p: Point2) -> Lobe {
    let a4 = params.a.powi(4);
    let v = cassini_field(params).value(p);
    let in_band = (-a4..0.0).contains(&v);
    match (in_band, p.x) {
        (true, x) if x < 0.0 => Lobe::CMinus,
        (true, x) if x > 0.0 => Lobe::CPlus,
        _ => Lobe::Neither,
    }
}

/// Closed-form constants of `f_a`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroundTruth {
    pub a: f64,
    pub min_value: f64,
    /// `(−a, 0)`, `(0, 0)`, `(a, 0)` with Morse indices 0, 1, 0.
    pub critical_points: [Point2; 3],
    pub critical_values: [f64; 3],
    pub morse_indices: [u8; 3],
    pub nu_max: f64,
    pub h_max: f64,
    pub sql: f64,
    pub scl: f64,
    /// `∂Hess⁺(f_a)` is the level `a⁴/3` of `g_{a/√3}`.
    pub hess_boundary_b: f64,
    pub hess_boundary_level: f64,
    /// `t ↦ f_a(t, 0)` changes convexity at `t = ±a/√3`.
    pub inflection_abscissa: f64,
}

pub fn ground_truth(params: CassiniParams) -> GroundTruth {
    let a = params.a;
    let a4 = a.powi(4);
    let sqrt3 = 3f64.sqrt();
    GroundTruth {
        a,
        min_value: -a4,
        critical_points: [Point2::new(-a, 0.0), Point2::ORIGIN, Point2::new(a, 0.0)],
        critical_values: [-a4, 0.0, -a4],
        morse_indices: [0, 1, 0],
        nu_max: 0.0,
        h_max: 3.0 * a4,
        sql: 3.0 * a4,
        scl: 3.0 * a4,
        hess_boundary_b: a / sqrt3,
        hess_boundary_level: a4 / 3.0,
        inflection_abscissa: a / sqrt3,
    }
}
