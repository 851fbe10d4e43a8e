//! Critical points of `f` inside the window, their Morse indices, and
//! `ν_max(f)`, the largest critical value.

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{invalid, Result};
use crate::field::{is_positive_definite, norm2, GridSpec, Point2, ScalarField2, SymMat2};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MorseIndex {
    Index(u8),
    Degenerate,
}

impl Serialize for MorseIndex {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            MorseIndex::Index(k) => s.serialize_u8(*k),
            MorseIndex::Degenerate => s.serialize_str("degenerate"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalPoint {
    pub location: Point2,
    pub value: f64,
    pub grad_norm: f64,
    pub morse_index: MorseIndex,
    pub in_hess_plus: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalSetReport {
    pub points: Vec<CriticalPoint>,
    /// Largest critical value; `None` when no critical point was found.
    pub nu_max: Option<f64>,
    pub window: GridSpec,
    pub seeds_used: usize,
    pub seeds_discarded: usize,
    pub dedup_radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalOptions {
    pub newton_tol: f64,
    pub max_iters: usize,
    pub degen_tol: f64,
    /// Fraction of cells (lowest raster `‖∇f‖`) used as Newton seeds, on top
    /// of all strict raster local minima.
    pub seed_fraction: f64,
    /// Defaults to two cell diagonals.
    pub dedup_radius: Option<f64>,
}

impl Default for CriticalOptions {
    fn default() -> Self {
        Self {
            newton_tol: 1e-9,
            max_iters: 60,
            degen_tol: 1e-10,
            seed_fraction: 0.05,
            dedup_radius: None,
        }
    }
}

/// Number of negative Hessian eigenvalues at `p`, or `Degenerate` when
/// `|det H| ≤ degen_tol · ‖H‖²`.
pub fn morse_index<F: ScalarField2 + ?Sized>(field: &F, p: Point2, degen_tol: f64) -> MorseIndex {
    classify(&field.hessian(p), degen_tol)
}

fn classify(h: &SymMat2, degen_tol: f64) -> MorseIndex {
    let scale = h.frobenius().powi(2);
    if h.det().abs() <= degen_tol * scale || scale == 0.0 {
        return MorseIndex::Degenerate;
    }
    let (l1, l2) = h.eigenvalues();
    MorseIndex::Index((l1 < 0.0) as u8 + (l2 < 0.0) as u8)
}

pub fn find_critical_points<F: ScalarField2 + ?Sized>(
    field: &F,
    grid: &GridSpec,
    newton_tol: f64,
    max_iters: usize,
) -> Result<CriticalSetReport> {
    find_critical_points_with(
        field,
        grid,
        &CriticalOptions {
            newton_tol,
            max_iters,
            ..CriticalOptions::default()
        },
    )
}

/// Newton's method on `∇f = 0` from raster seeds, then deduplication.
///
/// Seeds whose Hessian is singular along the way fall back to damped descent
/// on `½‖∇f‖²`; seeds that fail to converge inside the window are discarded.
pub fn find_critical_points_with<F: ScalarField2 + ?Sized>(
    field: &F,
    grid: &GridSpec,
    opts: &CriticalOptions,
) -> Result<CriticalSetReport> {
    grid.validate()?;
    if !(opts.newton_tol > 0.0) {
        return Err(invalid(format!("newton_tol must be > 0, got {}", opts.newton_tol)));
    }
    let seeds = seed_cells(field, grid, opts.seed_fraction);
    let converged: Vec<Option<(Point2, f64)>> = seeds
        .par_iter()
        .map(|&idx| newton(field, grid, grid.center_of(idx), opts))
        .collect();
    let seeds_discarded = converged.iter().filter(|c| c.is_none()).count();

    let mut hits: Vec<(Point2, f64)> = converged.into_iter().flatten().collect();
    hits.sort_by(|a, b| a.0.lex_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let dedup_radius = opts.dedup_radius.unwrap_or(2.0 * grid.cell_diagonal());
    let mut reps: Vec<(Point2, f64)> = Vec::new();
    for (p, gn) in hits {
        match reps.iter_mut().find(|r| r.0.dist(p) < dedup_radius) {
            Some(r) if gn < r.1 => *r = (p, gn),
            Some(_) => {}
            None => reps.push((p, gn)),
        }
    }

    let points: Vec<CriticalPoint> = reps
        .into_iter()
        .map(|(p, gn)| {
            let h = field.hessian(p);
            CriticalPoint {
                location: p,
                value: field.value(p),
                grad_norm: gn,
                morse_index: classify(&h, opts.degen_tol),
                in_hess_plus: is_positive_definite(&h, 0.0).unwrap_or(false),
            }
        })
        .collect();
    let nu_max = points
        .iter()
        .map(|c| c.value)
        .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))));
    Ok(CriticalSetReport {
        points,
        nu_max,
        window: *grid,
        seeds_used: seeds.len(),
        seeds_discarded,
        dedup_radius,
    })
}

/// Largest critical value, `−∞` for an empty report.
pub fn nu_max(report: &CriticalSetReport) -> f64 {
    report.nu_max.unwrap_or(f64::NEG_INFINITY)
}

fn seed_cells<F: ScalarField2 + ?Sized>(field: &F, grid: &GridSpec, fraction: f64) -> Vec<usize> {
    let gnorm: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|idx| norm2(field.gradient(grid.center_of(idx))))
        .collect();
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&a, &b| gnorm[a].total_cmp(&gnorm[b]).then(a.cmp(&b)));
    let take = ((fraction.clamp(0.0, 1.0) * grid.len() as f64).ceil() as usize).max(1);
    let mut seeds: Vec<usize> = order[..take.min(order.len())].to_vec();

    let (nx, ny) = (grid.nx as isize, grid.ny as isize);
    for idx in 0..grid.len() {
        let (i, j) = grid.cell_coords(idx);
        let (i, j) = (i as isize, j as isize);
        let strict_min = (-1..=1)
            .flat_map(|di| (-1..=1).map(move |dj| (di, dj)))
            .filter(|&(di, dj)| (di, dj) != (0, 0))
            .all(|(di, dj)| {
                let (ni, nj) = (i + di, j + dj);
                if ni < 0 || nj < 0 || ni >= nx || nj >= ny {
                    return true;
                }
                gnorm[idx] < gnorm[grid.index(ni as usize, nj as usize)]
            });
        if strict_min {
            seeds.push(idx);
        }
    }
    seeds.sort_unstable();
    seeds.dedup();
    seeds
}

pub(crate) fn newton<F: ScalarField2 + ?Sized>(
    field: &F,
    grid: &GridSpec,
    start: Point2,
    opts: &CriticalOptions,
) -> Option<(Point2, f64)> {
    let pad = 0.1 * grid.diagonal();
    let inside = |p: Point2| {
        p.is_finite()
            && p.x >= grid.x_min - pad
            && p.x <= grid.x_max + pad
            && p.y >= grid.y_min - pad
            && p.y <= grid.y_max + pad
    };
    let mut x = start;
    let mut g = field.gradient(x);
    let mut gn = norm2(g);
    for _ in 0..opts.max_iters {
        if gn <= opts.newton_tol {
            break;
        }
        let h = field.hessian(x);
        let next = h
            .solve([-g[0], -g[1]])
            .and_then(|d| {
                let mut alpha = 1.0;
                for _ in 0..12 {
                    let trial = x.offset(alpha * d[0], alpha * d[1]);
                    let tg = field.gradient(trial);
                    if norm2(tg) < gn {
                        return Some((trial, tg));
                    }
                    alpha *= 0.5;
                }
                None
            })
            .or_else(|| {
                // Damped descent on ½‖∇f‖², whose gradient is H·∇f.
                let d = h.mul_vec(g);
                let dn = norm2(d);
                if dn == 0.0 {
                    return None;
                }
                let mut alpha = gn / dn;
                for _ in 0..40 {
                    let trial = x.offset(-alpha * d[0], -alpha * d[1]);
                    let tg = field.gradient(trial);
                    if norm2(tg) < gn {
                        return Some((trial, tg));
                    }
                    alpha *= 0.5;
                }
                None
            });
        let (nx, ng) = next?;
        if !inside(nx) {
            return None;
        }
        x = nx;
        g = ng;
        gn = norm2(g);
    }
    (gn <= opts.newton_tol && grid.contains(x)).then_some((x, gn))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins::{ExpSum, Quadratic, Saddle};
    use crate::cassini::{cassini_field, CassiniParams};

    #[test]
    fn cassini_critical_set() {
        let f = cassini_field(CassiniParams::new(1.0).unwrap());
        let r = find_critical_points(&f, &GridSpec::square(2.0, 200).unwrap(), 1e-10, 60).unwrap();
        let locs: Vec<Point2> = r.points.iter().map(|c| c.location).collect();
        assert_eq!(locs.len(), 3, "{locs:?}");
        let expected = [(-1.0, 0.0, -1.0, 0), (0.0, 0.0, 0.0, 1), (1.0, 0.0, -1.0, 0)];
        for (c, (x, y, v, k)) in r.points.iter().zip(expected) {
            assert!(c.location.dist(Point2::new(x, y)) < 1e-6, "{c:?}");
            assert!((c.value - v).abs() < 1e-9);
            assert_eq!(c.morse_index, MorseIndex::Index(k));
            assert_eq!(c.in_hess_plus, k == 0);
        }
        assert_eq!(nu_max(&r), r.nu_max.unwrap());
        assert!(nu_max(&r).abs() < 1e-9);
    }

    #[test]
    fn cassini_a2_nu_max() {
        let f = cassini_field(CassiniParams::new(2.0).unwrap());
        let r = find_critical_points(&f, &GridSpec::square(4.0, 200).unwrap(), 1e-9, 60).unwrap();
        assert_eq!(r.points.len(), 3);
        assert!(nu_max(&r).abs() < 1e-9);
        let mut vals: Vec<f64> = r.points.iter().map(|c| c.value).collect();
        vals.sort_by(f64::total_cmp);
        assert!((vals[0] + 16.0).abs() < 1e-9 && (vals[1] + 16.0).abs() < 1e-9);
    }

    #[test]
    fn quadratic_and_saddle() {
        let grid = GridSpec::square(2.0, 64).unwrap();
        let r = find_critical_points(&Quadratic, &grid, 1e-10, 50).unwrap();
        assert_eq!(r.points.len(), 1);
        assert!(r.points[0].location.dist(Point2::ORIGIN) < 1e-12);
        assert_eq!(r.points[0].value, 0.0);
        assert_eq!(nu_max(&r), 0.0);
        let s = find_critical_points(&Saddle, &grid, 1e-10, 50).unwrap();
        assert_eq!(s.points.len(), 1);
        assert_eq!(s.points[0].morse_index, MorseIndex::Index(1));
    }

    #[test]
    fn no_critical_points_gives_sentinel() {
        let r = find_critical_points(&ExpSum, &GridSpec::square(2.0, 32).unwrap(), 1e-10, 30).unwrap();
        assert!(r.points.is_empty());
        assert_eq!(nu_max(&r), f64::NEG_INFINITY);
        assert!(r.seeds_discarded > 0);
    }

    #[test]
    fn morse_indices() {
        let f = cassini_field(CassiniParams::new(1.0).unwrap());
        assert_eq!(morse_index(&f, Point2::new(1.0, 0.0), 1e-10), MorseIndex::Index(0));
        assert_eq!(morse_index(&f, Point2::new(-1.0, 0.0), 1e-10), MorseIndex::Index(0));
        assert_eq!(morse_index(&f, Point2::ORIGIN, 1e-10), MorseIndex::Index(1));
        assert_eq!(morse_index(&Quadratic, Point2::ORIGIN, 1e-10), MorseIndex::Index(0));
        assert_eq!(classify(&SymMat2::diag(-1.0, -2.0), 1e-10), MorseIndex::Index(2));
        assert_eq!(classify(&SymMat2::diag(1.0, 0.0), 1e-10), MorseIndex::Degenerate);
        assert_eq!(serde_json::to_string(&MorseIndex::Degenerate).unwrap(), "\"degenerate\"");
    }

    #[test]
    fn rejects_bad_tolerance() {
        assert!(find_critical_points(&Quadratic, &GridSpec::square(1.0, 8).unwrap(), 0.0, 10).is_err());
    }
}
