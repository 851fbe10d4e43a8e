//! Rasterized regions, the positive-definite Hessian region `Hess⁺(f)`, and
//! the level `h_max(f)`: the largest value of `f` on the complement of
//! `Hess⁺(f)`.
//!
//! All verdicts here are relative to the sampling window. A complement that
//! stays clear of the window border is reported as bounded, which says
//! nothing about what happens outside the window.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::field::{
    is_positive_definite, is_positive_semidefinite, norm2, GridSpec, Point2, ScalarField2,
};
use crate::sampling::raster_values;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PropertyTag {
    HessPlus,
    HessPlus0,
    Sublevel,
    Overlevel,
    Custom,
}

/// A boolean raster over a [`GridSpec`]; `true` means the property holds at
/// the cell center.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionMask {
    pub grid: GridSpec,
    pub cells: Vec<bool>,
    pub property_tag: PropertyTag,
    /// PD/PSD margin for Hessian masks, the level for sub/overlevel masks.
    pub param: f64,
}

impl RegionMask {
    pub fn from_predicate(
        grid: &GridSpec,
        property_tag: PropertyTag,
        param: f64,
        pred: impl Fn(Point2) -> bool + Sync,
    ) -> Result<Self> {
        grid.validate()?;
        let cells = (0..grid.len())
            .into_par_iter()
            .map(|idx| pred(grid.center_of(idx)))
            .collect();
        Ok(Self {
            grid: *grid,
            cells,
            property_tag,
            param,
        })
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.cells[self.grid.index(i, j)]
    }

    /// Value of the cell containing `p`; `false` outside the window.
    pub fn contains_point(&self, p: Point2) -> bool {
        self.grid
            .cell_of(p)
            .map(|(i, j)| self.get(i, j))
            .unwrap_or(false)
    }

    pub fn count_true(&self) -> usize {
        self.cells.iter().filter(|c| **c).count()
    }

    pub fn true_indices(&self) -> Vec<usize> {
        (0..self.cells.len()).filter(|&i| self.cells[i]).collect()
    }

    pub fn false_indices(&self) -> Vec<usize> {
        (0..self.cells.len()).filter(|&i| !self.cells[i]).collect()
    }

    /// Cells true here and false in `other`.
    pub fn minus(&self, other: &RegionMask) -> Result<RegionMask> {
        if self.grid != other.grid {
            return Err(invalid("masks live on different grids"));
        }
        Ok(RegionMask {
            grid: self.grid,
            cells: self
                .cells
                .iter()
                .zip(&other.cells)
                .map(|(a, b)| *a && !*b)
                .collect(),
            property_tag: PropertyTag::Custom,
            param: f64::NAN,
        })
    }

    /// Number of 4-connected components of true cells.
    pub fn component_count(&self) -> usize {
        self.component_labels().1
    }

    /// Per-cell component label (`usize::MAX` for false cells) and the count.
    pub fn component_labels(&self) -> (Vec<usize>, usize) {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let mut label = vec![usize::MAX; self.cells.len()];
        let mut count = 0;
        let mut stack = Vec::new();
        for start in 0..self.cells.len() {
            if !self.cells[start] || label[start] != usize::MAX {
                continue;
            }
            label[start] = count;
            stack.push(start);
            while let Some(idx) = stack.pop() {
                let (i, j) = self.grid.cell_coords(idx);
                let mut visit = |ni: usize, nj: usize| {
                    let n = self.grid.index(ni, nj);
                    if self.cells[n] && label[n] == usize::MAX {
                        label[n] = count;
                        stack.push(n);
                    }
                };
                if i > 0 {
                    visit(i - 1, j);
                }
                if i + 1 < nx {
                    visit(i + 1, j);
                }
                if j > 0 {
                    visit(i, j - 1);
                }
                if j + 1 < ny {
                    visit(i, j + 1);
                }
            }
            count += 1;
        }
        (label, count)
    }

    /// Binary PGM (P5, 8 bit): 255 for true cells, first row is `y_max`.
    pub fn to_pgm(&self) -> Vec<u8> {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let mut out = format!("P5\n{nx} {ny}\n255\n").into_bytes();
        out.reserve(nx * ny);
        for j in (0..ny).rev() {
            out.extend((0..nx).map(|i| if self.get(i, j) { 255u8 } else { 0 }));
        }
        out
    }

    /// Writes the PGM and a `<path>.json` sidecar with the grid metadata.
    pub fn write_pgm(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_pgm())?;
        let sidecar = MaskSidecar {
            file: path
                .file_name()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default(),
            property_tag: self.property_tag,
            param: self.param.is_finite().then_some(self.param),
            grid: self.grid,
            true_cells: self.count_true(),
            row_order: "top-to-bottom (first row is y_max)".into(),
        };
        let mut side = path.as_os_str().to_owned();
        side.push(".json");
        fs::write(side, serde_json::to_string_pretty(&sidecar)?)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MaskSidecar {
    pub file: String,
    pub property_tag: PropertyTag,
    pub param: Option<f64>,
    pub grid: GridSpec,
    pub true_cells: usize,
    pub row_order: String,
}

/// Cells whose Hessian is positive definite with margin `eps`.
pub fn hess_plus_mask<F: ScalarField2 + ?Sized>(
    field: &F,
    grid: &GridSpec,
    eps: f64,
) -> Result<RegionMask> {
    if !(eps >= 0.0) {
        return Err(invalid(format!("eps must be >= 0, got {eps}")));
    }
    RegionMask::from_predicate(grid, PropertyTag::HessPlus, eps, |p| {
        is_positive_definite(&field.hessian(p), eps).unwrap_or(false)
    })
}

/// Cells whose Hessian is positive semidefinite with slack `eps`.
pub fn hess_plus0_mask<F: ScalarField2 + ?Sized>(
    field: &F,
    grid: &GridSpec,
    eps: f64,
) -> Result<RegionMask> {
    RegionMask::from_predicate(grid, PropertyTag::HessPlus0, eps, |p| {
        is_positive_semidefinite(&field.hessian(p), eps).unwrap_or(false)
    })
}

/// Cells with `f ≤ level`.
pub fn sublevel_mask<F: ScalarField2 + ?Sized>(
    field: &F,
    grid: &GridSpec,
    level: f64,
) -> Result<RegionMask> {
    RegionMask::from_predicate(grid, PropertyTag::Sublevel, level, |p| field.value(p) <= level)
}

/// Cells with `f > level` (strict).
pub fn overlevel_mask<F: ScalarField2 + ?Sized>(
    field: &F,
    grid: &GridSpec,
    level: f64,
) -> Result<RegionMask> {
    RegionMask::from_predicate(grid, PropertyTag::Overlevel, level, |p| field.value(p) > level)
}

/// True iff no false cell lies within `margin_cells` of the window border.
pub fn complement_bounded(mask: &RegionMask, margin_cells: usize) -> Result<bool> {
    if margin_cells == 0 {
        return Err(invalid("margin_cells must be >= 1"));
    }
    let (nx, ny) = (mask.grid.nx, mask.grid.ny);
    if 2 * margin_cells >= nx || 2 * margin_cells >= ny {
        return Err(Error::Inconclusive(format!(
            "window of {nx}×{ny} cells lies entirely within the {margin_cells}-cell margin"
        )));
    }
    let near_border =
        |i: usize, j: usize| i < margin_cells || j < margin_cells || i >= nx - margin_cells || j >= ny - margin_cells;
    Ok(!mask.cells.iter().enumerate().any(|(idx, &c)| {
        let (i, j) = mask.grid.cell_coords(idx);
        !c && near_border(i, j)
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HMaxEstimate {
    pub value: f64,
    pub witness: Point2,
    /// Maximum over the raster cell centers, before refinement.
    pub raster_value: f64,
    pub raster_witness: Point2,
    pub complement_bounded: bool,
    /// Distance between the raster witness and the refined witness.
    pub refinement_radius: f64,
}

/// Border margin used when `h_max` reports whether the complement is bounded.
pub const DEFAULT_MARGIN_CELLS: usize = 2;

/// Maximum of `f` over the false cells of a `Hess⁺` mask, refined towards the
/// boundary of the region.
///
/// The raster argmax is pushed uphill by gradient steps that are halved
/// whenever they would leave the complement. The maximum is typically
/// attained on `∂Hess⁺`, so the result is then polished by a golden-section
/// search over boundary points found by bisection along rays from a nearby
/// interior point. The raster value is always kept as a lower bound.
pub fn h_max<F: ScalarField2 + ?Sized>(
    field: &F,
    mask: &RegionMask,
    refine_iters: usize,
) -> Result<HMaxEstimate> {
    let grid = &mask.grid;
    let eps = if mask.property_tag == PropertyTag::HessPlus && mask.param.is_finite() {
        mask.param
    } else {
        0.0
    };
    let false_cells = mask.false_indices();
    if false_cells.is_empty() {
        return Err(Error::EmptyComplement);
    }

    // Order-independent reduction: largest value, ties to the lexicographically
    // smallest witness.
    let (raster_value, raster_witness) = false_cells
        .par_iter()
        .map(|&idx| {
            let p = grid.center_of(idx);
            (field.value(p), p)
        })
        .reduce(
            || (f64::NEG_INFINITY, Point2::new(f64::INFINITY, f64::INFINITY)),
            |a, b| match a.0.total_cmp(&b.0) {
                std::cmp::Ordering::Greater => a,
                std::cmp::Ordering::Less => b,
                std::cmp::Ordering::Equal => {
                    if a.1.lex_cmp(&b.1).is_le() {
                        a
                    } else {
                        b
                    }
                }
            },
        );

    let in_complement = |p: Point2| {
        grid.contains(p) && !is_positive_definite(&field.hessian(p), eps).unwrap_or(false)
    };

    let mut best = raster_witness;
    let mut best_val = raster_value;

    // Step-halving ascent inside the complement.
    let min_step = 1e-15 * grid.diagonal();
    let mut step = grid.cell_diagonal();
    for _ in 0..refine_iters {
        let g = field.gradient(best);
        let gn = norm2(g);
        if gn == 0.0 || step < min_step {
            break;
        }
        let trial = best.offset(step * g[0] / gn, step * g[1] / gn);
        let v = field.value(trial);
        if in_complement(trial) && v > best_val {
            best = trial;
            best_val = v;
        } else {
            step *= 0.5;
        }
    }

    if let Some((p, v)) = boundary_polish(field, grid, best, &in_complement, refine_iters) {
        if v > best_val {
            best = p;
            best_val = v;
        }
    }

    Ok(HMaxEstimate {
        value: best_val,
        witness: best,
        raster_value,
        raster_witness,
        complement_bounded: complement_bounded(mask, DEFAULT_MARGIN_CELLS).unwrap_or(false),
        refinement_radius: best.dist(raster_witness),
    })
}

/// Maximizes `f` over boundary points of the complement near `start`.
fn boundary_polish<F: ScalarField2 + ?Sized>(
    field: &F,
    grid: &GridSpec,
    start: Point2,
    in_complement: &impl Fn(Point2) -> bool,
    iters: usize,
) -> Option<(Point2, f64)> {
    let g = field.gradient(start);
    let gn = norm2(g);
    if gn == 0.0 || iters == 0 {
        return None;
    }
    let cell = grid.cell_diagonal();
    let mut radius = 4.0 * cell;
    let center = loop {
        let c = start.offset(-radius * g[0] / gn, -radius * g[1] / gn);
        if in_complement(c) {
            break c;
        }
        radius *= 0.5;
        if radius < 1e-6 * cell {
            return None;
        }
    };
    let reach = radius + 8.0 * cell;

    // First exit from the complement along the ray at angle `th`.
    let exit = |th: f64| -> Option<Point2> {
        let dir = (th.cos(), th.sin());
        let at = |t: f64| center.offset(t * dir.0, t * dir.1);
        let march = 0.25 * cell.min(radius);
        let mut t_in = 0.0;
        let mut t = march;
        while t <= reach {
            if !in_complement(at(t)) {
                let mut t_out = t;
                for _ in 0..64 {
                    let mid = 0.5 * (t_in + t_out);
                    if in_complement(at(mid)) {
                        t_in = mid;
                    } else {
                        t_out = mid;
                    }
                }
                return Some(at(t_in));
            }
            t_in = t;
            t += march;
        }
        None
    };
    let score = |th: f64| exit(th).map(|p| (p, field.value(p)));

    let th0 = (start.y - center.y).atan2(start.x - center.x);
    let span = std::f64::consts::FRAC_PI_3;
    let (mut lo, mut hi) = (th0 - span, th0 + span);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let val = |th: f64| score(th).map(|(_, v)| v).unwrap_or(f64::NEG_INFINITY);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (val(x1), val(x2));
    for _ in 0..iters {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = val(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = val(x1);
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    [x1, x2, th0]
        .into_iter()
        .filter_map(score)
        .max_by(|a, b| a.1.total_cmp(&b.1))
}

/// Outcome of comparing `h_max` with `ν_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NuVsH {
    pub h_max: f64,
    pub nu_max: f64,
    pub tol: f64,
    pub holds: bool,
}

/// Checks `h_max ≥ ν_max − tol`. A failure means a numerical fault, since the
/// inequality holds for every function with bounded complement.
pub fn nu_vs_h_check(h: &HMaxEstimate, nu: f64, tol: f64) -> Result<NuVsH> {
    if !h.value.is_finite() || !nu.is_finite() {
        return Err(invalid("h_max and ν_max must be finite"));
    }
    Ok(NuVsH {
        h_max: h.value,
        nu_max: nu,
        tol,
        holds: h.value >= nu - tol,
    })
}

/// Raster max of `‖∇f‖` over cell centers; a crude Lipschitz constant of `f`
/// on the window.
pub fn lipschitz_estimate<F: ScalarField2 + ?Sized>(field: &F, grid: &GridSpec) -> f64 {
    (0..grid.len())
        .into_par_iter()
        .map(|idx| norm2(field.gradient(grid.center_of(idx))))
        .reduce(|| 0.0, f64::max)
}

/// Minimum of `f` over the raster; a window-relative `inf f`.
pub fn window_min<F: ScalarField2 + ?Sized>(field: &F, grid: &GridSpec) -> f64 {
    raster_values(field, grid)
        .into_iter()
        .fold(f64::INFINITY, f64::min)
}
