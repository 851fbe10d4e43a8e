//! Curvature sign of level curves through the bordered Hessian determinant
//!
//! ```text
//! | f_xx  f_xy  f_x |
//! | f_xy  f_yy  f_y |  =  −(f_xx f_y² − 2 f_xy f_x f_y + f_yy f_x²)
//! | f_x   f_y   0   |
//! ```
//!
//! Negative values mean the level curve bends towards the sublevel set, so
//! the sublevel set is locally convex there. For `‖x‖²` at `(1, 0)` the
//! determinant is `−8`.

use rayon::prelude::*;
use serde::Serialize;

use crate::contour::{level_curve_with, ContourOptions};
use crate::error::{Error, Result};
use crate::field::{norm2, GridSpec, Point2, ScalarField2, SymMat2, Vec2};

/// Relative threshold below which a determinant counts as zero when judging
/// sign changes along a curve.
pub const SIGN_REL_TOL: f64 = 1e-9;

pub fn bordered_determinant(h: &SymMat2, g: Vec2) -> f64 {
    -(h.a11 * g[1] * g[1] - 2.0 * h.a12 * g[0] * g[1] + h.a22 * g[0] * g[0])
}

pub fn curvature_sign<F: ScalarField2 + ?Sized>(field: &F, p: Point2) -> Result<f64> {
    curvature_sign_with(field, p, ContourOptions::default().regularity_tol)
}

/// Bordered determinant at `p`; fails where `‖∇f(p)‖ ≤ regularity_tol`.
pub fn curvature_sign_with<F: ScalarField2 + ?Sized>(field: &F, p: Point2, regularity_tol: f64) -> Result<f64> {
    let g = field.gradient(p);
    let gn = norm2(g);
    if !(gn > regularity_tol) {
        return Err(Error::NearCritical {
            grad_norm: gn,
            tol: regularity_tol,
        });
    }
    Ok(bordered_determinant(&field.hessian(p), g))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelClass {
    pub level: f64,
    pub nonempty: bool,
    pub regular: bool,
    pub components: usize,
    pub curvature_sign_constant: bool,
    /// Extremes of the determinant over the vertices used.
    pub min_det: Option<f64>,
    pub max_det: Option<f64>,
    pub vertices: usize,
    /// Largest `|f − level|` over the curve vertices.
    pub max_residual: f64,
    /// `nonempty && regular && curvature_sign_constant`.
    pub verdict: bool,
}

pub fn classify_levels<F: ScalarField2 + ?Sized>(field: &F, c_values: &[f64], grid: &GridSpec) -> Result<Vec<LevelClass>> {
    classify_levels_with(field, c_values, grid, &ContourOptions::default())
}

pub fn classify_levels_with<F: ScalarField2 + ?Sized>(
    field: &F,
    c_values: &[f64],
    grid: &GridSpec,
    opts: &ContourOptions,
) -> Result<Vec<LevelClass>> {
    grid.validate()?;
    c_values.iter().map(|&c| classify_level(field, c, grid, opts)).collect()
}

fn classify_level<F: ScalarField2 + ?Sized>(
    field: &F,
    c: f64,
    grid: &GridSpec,
    opts: &ContourOptions,
) -> Result<LevelClass> {
    let curve = level_curve_with(field, c, grid, opts)?;
    let keep_out = 3.0 * grid.cell_diagonal();
    let pts: Vec<Point2> = curve
        .vertices()
        .filter(|p| curve.pinch_points.iter().all(|q| q.dist(*p) > keep_out))
        .collect();
    let dets: Vec<f64> = pts
        .par_iter()
        .filter_map(|&p| curvature_sign_with(field, p, opts.regularity_tol).ok())
        .collect();
    let min_det = dets.iter().copied().reduce(f64::min);
    let max_det = dets.iter().copied().reduce(f64::max);
    let scale = dets.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let zero = SIGN_REL_TOL * scale;
    let has_pos = dets.iter().any(|&d| d > zero);
    let has_neg = dets.iter().any(|&d| d < -zero);
    let nonempty = !curve.is_empty();
    let constant = !(has_pos && has_neg);
    Ok(LevelClass {
        level: c,
        nonempty,
        regular: curve.regular,
        components: curve.components,
        curvature_sign_constant: constant,
        min_det,
        max_det,
        vertices: dets.len(),
        max_residual: curve.max_residual,
        verdict: nonempty && curve.regular && constant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins::Quadratic;
    use crate::cassini::{cassini_field, CassiniParams};
    use crate::contour::level_curve;

    #[test]
    fn unit_circle_value() {
        assert_eq!(curvature_sign(&Quadratic, Point2::new(1.0, 0.0)).unwrap(), -8.0);
        assert!(matches!(
            curvature_sign(&Quadratic, Point2::ORIGIN),
            Err(Error::NearCritical { .. })
        ));
    }

    #[test]
    fn sign_matches_cassini_form() {
        // On f⁻¹(c) the determinant has the sign of −(3r⁴ − c).
        let f = cassini_field(CassiniParams::new(1.0).unwrap());
        let grid = GridSpec::square(2.5, 300).unwrap();
        for c in [-0.5, 0.5, 1.0, 2.0, 4.0] {
            let lc = level_curve(&f, c, &grid).unwrap();
            for p in lc.vertices() {
                let d = curvature_sign(&f, p).unwrap();
                let r2 = p.x * p.x + p.y * p.y;
                let form = 3.0 * r2 * r2 - c;
                if form.abs() > 1e-6 {
                    assert_eq!(d < 0.0, form > 0.0, "c={c} p={p:?}");
                }
            }
        }
    }

    #[test]
    fn cassini_levels() {
        let f = cassini_field(CassiniParams::new(1.0).unwrap());
        let grid = GridSpec::square(3.0, 400).unwrap();
        let rows = classify_levels(&f, &[-0.5, 1.0, -2.0, 0.0, 3.0, 4.0], &grid).unwrap();
        assert!(rows[0].verdict && rows[0].components == 2);
        assert!(rows[1].nonempty && rows[1].regular && !rows[1].curvature_sign_constant);
        assert!(!rows[2].nonempty && !rows[2].verdict);
        assert!(!rows[3].regular && !rows[3].verdict);
        assert!(rows[4].verdict, "{:?}", rows[4]);
        assert!(rows[5].verdict);
        assert!(classify_levels(&f, &[], &grid).unwrap().is_empty());
    }
}
