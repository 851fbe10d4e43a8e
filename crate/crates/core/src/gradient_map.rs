//! Injectivity and valence of the gradient map `∇f` on planar regions.
//!
//! Collisions are searched by hashing sampled gradient images. Exact hits
//! (image distance at most `image_tol`) are rare for any practical budget, so
//! pairs that land in the same coarse bucket are also polished: `p1` is kept
//! fixed and Newton's method solves `∇f(p2) = ∇f(p1)` from the sampled `p2`.

use std::collections::HashMap;

use nalgebra::{Matrix4, Vector4};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::cassini::{cassini_field, CassiniParams};
use crate::contour::level_curve;
use crate::critical::{CriticalSetReport, MorseIndex};
use crate::error::{invalid, Error, Result};
use crate::field::{norm2, GridSpec, Point2, ScalarField2, Vec2};
use crate::hess_region::{overlevel_mask, RegionMask};
use crate::sampling::{rng, DEFAULT_SEED};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CollisionPair {
    pub p1: Point2,
    pub p2: Point2,
    pub grad_image: Vec2,
    pub separation: f64,
    pub image_tol: f64,
    /// `‖∇f(p1) − ∇f(p2)‖` as reported.
    pub image_gap: f64,
    /// False for raw hash hits that were not refined.
    pub polished: bool,
    /// The pair moved onto a common level `f(p1) = f(p2)`, when that
    /// refinement converged.
    pub level_matched: Option<(Point2, Point2)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InjectivityVerdict {
    NoCollisionFound,
    CollisionsFound,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InjectivityReport {
    pub region_tag: String,
    pub samples: usize,
    pub collisions: Vec<CollisionPair>,
    pub verdict: InjectivityVerdict,
    /// Largest number of well-separated points sharing one gradient image.
    pub valence_lower_bound: usize,
    pub raw_hits: usize,
    pub candidates_polished: usize,
    pub image_tol: f64,
    pub min_separation: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanOptions {
    pub samples: usize,
    pub image_tol: f64,
    /// Defaults to four cell diagonals of the region's grid.
    pub min_separation: Option<f64>,
    /// Bucket side of the candidate hash, in units of `image_tol`.
    pub coarse_factor: f64,
    /// Cap on polished candidates and on stored raw hits (smallest gap first).
    pub max_candidates: usize,
    pub seed: u64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            samples: 200_000,
            image_tol: 1e-4,
            min_separation: None,
            coarse_factor: 64.0,
            max_candidates: 2000,
            seed: DEFAULT_SEED,
        }
    }
}

const SCAN_STREAM: u64 = 21;
const MONO_STREAM: u64 = 22;
/// Points examined per coarse bucket; bounds the cost on flat gradients.
const BUCKET_CAP: usize = 64;

pub fn gradient_collision_scan<F: ScalarField2 + ?Sized>(
    field: &F,
    region: &RegionMask,
    samples: usize,
    image_tol: f64,
    min_separation: f64,
) -> Result<InjectivityReport> {
    gradient_collision_scan_with(
        field,
        region,
        &ScanOptions {
            samples,
            image_tol,
            min_separation: Some(min_separation),
            ..ScanOptions::default()
        },
    )
}

pub fn gradient_collision_scan_with<F: ScalarField2 + ?Sized>(
    field: &F,
    region: &RegionMask,
    opts: &ScanOptions,
) -> Result<InjectivityReport> {
    let tol = opts.image_tol;
    if !(tol > 0.0) {
        return Err(invalid(format!("image_tol must be > 0, got {tol}")));
    }
    if !(opts.coarse_factor >= 1.0) {
        return Err(invalid("coarse_factor must be >= 1"));
    }
    let grid = &region.grid;
    let min_sep = opts.min_separation.unwrap_or(4.0 * grid.cell_diagonal());
    if !(min_sep >= 0.0) {
        return Err(invalid(format!("min_separation must be >= 0, got {min_sep}")));
    }
    let cells = region.true_indices();
    if cells.is_empty() {
        return Err(invalid("collision scan needs a nonempty region"));
    }

    let mut r = rng(opts.seed, SCAN_STREAM);
    let (dx, dy) = (grid.dx(), grid.dy());
    let points: Vec<Point2> = (0..opts.samples)
        .map(|_| {
            let c = grid.center_of(cells[r.gen_range(0..cells.len())]);
            c.offset(r.gen_range(-0.5..0.5) * dx, r.gen_range(-0.5..0.5) * dy)
        })
        .collect();
    let images: Vec<Vec2> = points.par_iter().map(|&p| field.gradient(p)).collect();
    let separated = |i: usize, j: usize| points[i].dist(points[j]) >= min_sep;
    let gap = |i: usize, j: usize| dist2(images[i], images[j]);

    let raw: Vec<(usize, usize)> = near_pairs(&images, tol)
        .into_iter()
        .filter(|&(i, j)| separated(i, j) && gap(i, j) <= tol)
        .collect();

    let mut coarse: Vec<(f64, usize, usize)> = near_pairs(&images, opts.coarse_factor * tol)
        .into_iter()
        .filter(|&(i, j)| separated(i, j))
        .map(|(i, j)| (gap(i, j), i, j))
        .collect();
    coarse.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    coarse.truncate(opts.max_candidates);

    let polished: Vec<Option<CollisionPair>> = coarse
        .par_iter()
        .map(|&(_, i, j)| {
            let (p1, p2) = (points[i], points[j]);
            let q2 = match_gradient(field, p1, p2)?;
            let g1 = field.gradient(p1);
            let g2 = field.gradient(q2);
            let image_gap = dist2(g1, g2);
            let ok = image_gap <= tol && p1.dist(q2) >= min_sep && region.contains_point(q2);
            ok.then(|| CollisionPair {
                p1,
                p2: q2,
                grad_image: g1,
                separation: p1.dist(q2),
                image_tol: tol,
                image_gap,
                polished: true,
                level_matched: level_match(field, p1, q2, tol, min_sep, region),
            })
        })
        .collect();

    let mut kept = raw.clone();
    kept.sort_by(|&(a, b), &(c, d)| gap(a, b).total_cmp(&gap(c, d)).then((a, b).cmp(&(c, d))));
    kept.truncate(opts.max_candidates);
    let mut collisions: Vec<CollisionPair> = kept
        .iter()
        .map(|&(i, j)| CollisionPair {
            p1: points[i],
            p2: points[j],
            grad_image: images[i],
            separation: points[i].dist(points[j]),
            image_tol: tol,
            image_gap: gap(i, j),
            polished: false,
            level_matched: None,
        })
        .chain(polished.into_iter().flatten())
        .collect();
    collisions.sort_by(|a, b| {
        a.grad_image[0]
            .total_cmp(&b.grad_image[0])
            .then(a.grad_image[1].total_cmp(&b.grad_image[1]))
            .then(a.p1.lex_cmp(&b.p1))
            .then(a.p2.lex_cmp(&b.p2))
    });

    let valence_lower_bound = multiplicity(&collisions, tol, min_sep);
    Ok(InjectivityReport {
        region_tag: region_label(region),
        samples: opts.samples,
        verdict: if collisions.is_empty() {
            InjectivityVerdict::NoCollisionFound
        } else {
            InjectivityVerdict::CollisionsFound
        },
        collisions,
        valence_lower_bound,
        raw_hits: raw.len(),
        candidates_polished: coarse.len(),
        image_tol: tol,
        min_separation: min_sep,
    })
}

fn region_label(region: &RegionMask) -> String {
    let tag = serde_json::to_value(region.property_tag)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_default();
    if region.param.is_finite() {
        format!("{tag}({})", region.param)
    } else {
        tag
    }
}

fn dist2(a: Vec2, b: Vec2) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Index pairs `i < j` whose images share a bucket of side `side` or a
/// neighbouring one.
fn near_pairs(images: &[Vec2], side: f64) -> Vec<(usize, usize)> {
    let key = |v: Vec2| ((v[0] / side).floor() as i64, (v[1] / side).floor() as i64);
    let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (i, &v) in images.iter().enumerate() {
        if v[0].is_finite() && v[1].is_finite() {
            let b = buckets.entry(key(v)).or_default();
            if b.len() < BUCKET_CAP {
                b.push(i);
            }
        }
    }
    let mut keys: Vec<(i64, i64)> = buckets.keys().copied().collect();
    keys.sort_unstable();
    let mut out = Vec::new();
    for k in keys {
        let here = &buckets[&k];
        for di in -1..=1 {
            for dj in -1..=1 {
                let Some(there) = buckets.get(&(k.0 + di, k.1 + dj)) else {
                    continue;
                };
                for &i in here {
                    for &j in there {
                        if i < j {
                            out.push((i, j));
                        }
                    }
                }
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// Newton's method for `∇f(q) = ∇f(p1)` starting at `start`.
fn match_gradient<F: ScalarField2 + ?Sized>(field: &F, p1: Point2, start: Point2) -> Option<Point2> {
    let target = field.gradient(p1);
    let scale = 1.0 + norm2(target);
    let mut q = start;
    for _ in 0..40 {
        let g = field.gradient(q);
        let res = [g[0] - target[0], g[1] - target[1]];
        if norm2(res) <= 1e-13 * scale {
            return Some(q);
        }
        let d = field.hessian(q).solve(res)?;
        q = q.offset(-d[0], -d[1]);
        if !q.is_finite() {
            return None;
        }
    }
    let g = field.gradient(q);
    (dist2(g, target) <= 1e-9 * scale).then_some(q)
}

/// Moves a colliding pair onto a common level: solves
/// `∇f(p1) = ∇f(p2)`, `f(p1) = f(p2) = c*` with `c*` the mean start value.
fn level_match<F: ScalarField2 + ?Sized>(
    field: &F,
    p1: Point2,
    p2: Point2,
    tol: f64,
    min_sep: f64,
    region: &RegionMask,
) -> Option<(Point2, Point2)> {
    let c = 0.5 * (field.value(p1) + field.value(p2));
    let mut z = Vector4::new(p1.x, p1.y, p2.x, p2.y);
    let residual = |z: &Vector4<f64>| {
        let (a, b) = (Point2::new(z[0], z[1]), Point2::new(z[2], z[3]));
        let (ga, gb) = (field.gradient(a), field.gradient(b));
        Vector4::new(ga[0] - gb[0], ga[1] - gb[1], field.value(a) - c, field.value(b) - c)
    };
    let scale = 1.0 + c.abs() + norm2(field.gradient(p1));
    for _ in 0..40 {
        let r = residual(&z);
        if r.norm() <= 1e-12 * scale {
            break;
        }
        let (a, b) = (Point2::new(z[0], z[1]), Point2::new(z[2], z[3]));
        let (ha, hb) = (field.hessian(a), field.hessian(b));
        let (ga, gb) = (field.gradient(a), field.gradient(b));
        #[rustfmt::skip]
        let j = Matrix4::new(
            ha.a11, ha.a12, -hb.a11, -hb.a12,
            ha.a12, ha.a22, -hb.a12, -hb.a22,
            ga[0], ga[1], 0.0, 0.0,
            0.0, 0.0, gb[0], gb[1],
        );
        let step = j.lu().solve(&r)?;
        z -= step;
        if !z.iter().all(|v| v.is_finite()) {
            return None;
        }
    }
    let r = residual(&z);
    let (a, b) = (Point2::new(z[0], z[1]), Point2::new(z[2], z[3]));
    let ok = r[0].hypot(r[1]) <= tol
        && r[2].abs().max(r[3].abs()) <= 1e-9 * (1.0 + c.abs())
        && a.dist(b) >= min_sep
        && region.contains_point(a)
        && region.contains_point(b);
    ok.then_some((a, b))
}

/// `1 +` the largest number of mutually separated partners sharing an image.
fn multiplicity(collisions: &[CollisionPair], tol: f64, min_sep: f64) -> usize {
    let ends: Vec<(Point2, Vec2)> = collisions
        .iter()
        .flat_map(|c| [(c.p1, c.grad_image), (c.p2, c.grad_image)])
        .collect();
    let mut best = 1;
    for c in collisions {
        let mut reps: Vec<Point2> = Vec::new();
        for &(p, img) in &ends {
            if dist2(img, c.grad_image) <= tol && reps.iter().all(|q| q.dist(p) >= min_sep) {
                reps.push(p);
            }
        }
        best = best.max(reps.len());
    }
    best
}

/// The explicit collision pair of `f_a` on the level `c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KnownCollision {
    pub p1: Point2,
    pub p2: Point2,
    pub image: Vec2,
}

/// `p± = (±√(3a⁴ − c)/(2a), √(c + a⁴)/(2a))`, both with gradient
/// `(0, 4a√(c + a⁴))` and value `c`, for `−a⁴ < c < 3a⁴`.
pub fn known_collision(a: f64, c: f64) -> Result<KnownCollision> {
    let params = CassiniParams::new(a)?;
    let a4 = a.powi(4);
    if !(c > -a4 && c < 3.0 * a4) {
        return Err(Error::Domain(format!(
            "level {c} must lie strictly between {} and {}",
            -a4,
            3.0 * a4
        )));
    }
    let x = (3.0 * a4 - c).sqrt() / (2.0 * a);
    let y = (c + a4).sqrt() / (2.0 * a);
    let kc = KnownCollision {
        p1: Point2::new(x, y),
        p2: Point2::new(-x, y),
        image: [0.0, 4.0 * a * (c + a4).sqrt()],
    };
    let f = cassini_field(params);
    let scale = 1.0 + a4 + kc.image[1];
    for p in [kc.p1, kc.p2] {
        let g = f.gradient(p);
        if dist2(g, kc.image) > 1e-9 * scale || (f.value(p) - c).abs() > 1e-9 * (1.0 + c.abs() + a4) {
            return Err(Error::Inconclusive(format!(
                "collision at {p:?} failed verification: ∇f = {g:?}, f = {}",
                f.value(p)
            )));
        }
    }
    Ok(kc)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonotonicityViolation {
    pub x: Point2,
    pub y: Point2,
    /// `⟨∇f(x) − ∇f(y), x − y⟩` when both points are in the overlevel set,
    /// `⟨∇f(x), x − y⟩` otherwise.
    pub value: f64,
    pub mixed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotonicityReport {
    pub level: f64,
    pub holds: bool,
    pub pairs_tested: usize,
    pub violations: usize,
    pub worst: Option<MonotonicityViolation>,
    pub mono_tol: f64,
}

pub fn monotonicity_check<F: ScalarField2 + ?Sized>(
    field: &F,
    level: f64,
    grid: &GridSpec,
    pairs: usize,
) -> Result<MonotonicityReport> {
    monotonicity_check_with(field, level, grid, pairs, None, DEFAULT_SEED)
}

/// Checks that `∇f` is monotone on `{f ≥ level}` and that `⟨∇f(x), x − y⟩ ≥ 0`
/// for `x` above and `y` below the level.
///
/// Half of the pairs are spread over the window, the other half are short
/// segments of up to eight cell diagonals. `mono_tol` defaults to
/// `1e-10 · (1 + max‖∇f‖ · diagonal)`.
pub fn monotonicity_check_with<F: ScalarField2 + ?Sized>(
    field: &F,
    level: f64,
    grid: &GridSpec,
    pairs: usize,
    mono_tol: Option<f64>,
    seed: u64,
) -> Result<MonotonicityReport> {
    grid.validate()?;
    let values: Vec<f64> = crate::sampling::raster_values(field, grid);
    let over: Vec<usize> = (0..grid.len()).filter(|&k| values[k] >= level).collect();
    if over.is_empty() {
        return Err(invalid(format!("overlevel set {{f >= {level}}} is empty in the window")));
    }
    let tol = mono_tol.unwrap_or_else(|| {
        let gmax = crate::hess_region::lipschitz_estimate(field, grid);
        1e-10 * (1.0 + gmax * grid.diagonal())
    });

    let mut r = rng(seed ^ level.to_bits(), MONO_STREAM);
    let diag = grid.cell_diagonal();
    let jitter = |r: &mut rand_chacha::ChaCha8Rng, k: usize| {
        grid.center_of(k)
            .offset(r.gen_range(-0.5..0.5) * grid.dx(), r.gen_range(-0.5..0.5) * grid.dy())
    };
    let mut cand: Vec<(Point2, Point2)> = Vec::with_capacity(2 * pairs);
    for n in 0..pairs {
        let kx = over[r.gen_range(0..over.len())];
        let x = jitter(&mut r, kx);
        let y = if n % 2 == 0 {
            let ky = r.gen_range(0..grid.len());
            jitter(&mut r, ky)
        } else {
            let rho = r.gen_range(0.5..8.0) * diag;
            let th = r.gen_range(0.0..std::f64::consts::TAU);
            x.offset(rho * th.cos(), rho * th.sin())
        };
        cand.push((x, y));
    }

    let checked: Vec<Option<MonotonicityViolation>> = cand
        .par_iter()
        .map(|&(x, y)| {
            let fx = field.value(x);
            let fy = field.value(y);
            if fx < level {
                return None;
            }
            let gx = field.gradient(x);
            let d = [x.x - y.x, x.y - y.y];
            let (value, mixed) = if fy >= level {
                let gy = field.gradient(y);
                ((gx[0] - gy[0]) * d[0] + (gx[1] - gy[1]) * d[1], false)
            } else {
                (gx[0] * d[0] + gx[1] * d[1], true)
            };
            (value < -tol).then_some(MonotonicityViolation { x, y, value, mixed })
        })
        .collect();
    let violations: Vec<MonotonicityViolation> = checked.into_iter().flatten().collect();
    let worst = violations.iter().copied().min_by(|a, b| a.value.total_cmp(&b.value));
    Ok(MonotonicityReport {
        level,
        holds: violations.is_empty(),
        pairs_tested: cand.len(),
        violations: violations.len(),
        worst,
        mono_tol: tol,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValenceBounds {
    pub lo: usize,
    /// Conjectural: the upper bound is an open problem, reported as evidence.
    pub hi_conjectural: usize,
    pub conjectural: bool,
    pub minima_in_hess_plus: usize,
    pub scan_multiplicity: usize,
    /// 4-connected components of `Hess⁺ \ {f > scl_hi}` on the raster.
    pub components: usize,
    pub complement_nonempty: bool,
}

/// `lo = max(#minima in Hess⁺, scan multiplicity)` and
/// `hi = #components(Hess⁺ \ {f > scl_hi}) + 1`.
///
/// The `+ 1` accounts for the part of the plane outside `Hess⁺`; when the
/// Hessian is positive definite on the whole window it is dropped, so a
/// globally convex field gets `hi = 1`.
pub fn valence_bounds<F: ScalarField2 + ?Sized>(
    field: &F,
    hess_mask: &RegionMask,
    scl_hi: f64,
    critical: &CriticalSetReport,
    scan: &ScanOptions,
) -> Result<ValenceBounds> {
    if critical.window != hess_mask.grid {
        return Err(invalid("critical set and Hess⁺ mask use different windows"));
    }
    let minima = critical
        .points
        .iter()
        .filter(|c| c.morse_index == MorseIndex::Index(0) && hess_mask.contains_point(c.location))
        .count();
    let scan_multiplicity = if hess_mask.count_true() == 0 {
        1
    } else {
        gradient_collision_scan_with(field, hess_mask, scan)?.valence_lower_bound
    };
    let over = overlevel_mask(field, &hess_mask.grid, scl_hi)?;
    let components = hess_mask.minus(&over)?.component_count();
    let complement_nonempty = hess_mask.cells.iter().any(|c| !c);
    let lo = minima.max(scan_multiplicity).max(1);
    Ok(ValenceBounds {
        lo,
        hi_conjectural: (components + complement_nonempty as usize).max(lo).max(1),
        conjectural: true,
        minima_in_hess_plus: minima,
        scan_multiplicity,
        components,
        complement_nonempty,
    })
}

/// `‖∇f_a(t, 0)‖² = 16(t⁶ − 2a²t⁴ + a⁴t²)`.
pub fn axis_grad_norm_sq(a: f64, t: f64) -> f64 {
    let (a2, t2) = (a * a, t * t);
    16.0 * (t2 * t2 * t2 - 2.0 * a2 * t2 * t2 + a2 * a2 * t2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaLevelScan {
    pub a: f64,
    pub k: f64,
    pub c: f64,
    /// `16a⁴(a² + √(a⁴ + k))`.
    pub max_grad_norm_sq_on_gamma_k: f64,
    /// `16a⁴(a² + √(a⁴ + c))`.
    pub probe_high: f64,
    /// `16a⁴(a² − √(a⁴ + c))`.
    pub probe_low: f64,
    /// Extremes of `‖∇f_a‖²` over the extracted left oval of `f_a⁻¹(k)`.
    pub measured_max: f64,
    pub measured_min: f64,
    /// Value of `‖∇f_a‖²` at the outer axis point of the left oval,
    /// `16(a⁴ + k)(a² + √(a⁴ + k))`.
    pub axis_value: f64,
    /// `measured_max` within `1e-3` relative of the closed form.
    pub closed_form_agrees: bool,
    pub two_intersections_expected: bool,
}

pub fn gamma_level_scan(a: f64, k: f64, c: f64) -> Result<GammaLevelScan> {
    let params = CassiniParams::new(a)?;
    let a4 = a.powi(4);
    for (name, v) in [("k", k), ("c", c)] {
        if !(v > -a4 && v < 0.0) {
            return Err(Error::Domain(format!("{name} = {v} must lie in ({}, 0)", -a4)));
        }
    }
    if !(k < c) {
        return Err(Error::Domain(format!("need k < c, got k = {k}, c = {c}")));
    }
    let a2 = a * a;
    let f = cassini_field(params);
    let grid = GridSpec::new(-2.0 * a, 0.0, -a, a, 800, 400)?;
    let curve = level_curve(&f, k, &grid)?;
    let sq: Vec<f64> = curve
        .vertices()
        .filter(|p| p.x < 0.0)
        .map(|p| {
            let g = f.gradient(p);
            g[0] * g[0] + g[1] * g[1]
        })
        .collect();
    if sq.is_empty() {
        return Err(Error::Inconclusive(format!("level {k} produced no left oval")));
    }
    let measured_max = sq.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let measured_min = sq.iter().copied().fold(f64::INFINITY, f64::min);
    let closed = 16.0 * a4 * (a2 + (a4 + k).sqrt());
    let probe_high = 16.0 * a4 * (a2 + (a4 + c).sqrt());
    let probe_low = 16.0 * a4 * (a2 - (a4 + c).sqrt());
    Ok(GammaLevelScan {
        a,
        k,
        c,
        max_grad_norm_sq_on_gamma_k: closed,
        probe_high,
        probe_low,
        measured_max,
        measured_min,
        axis_value: 16.0 * (a4 + k) * (a2 + (a4 + k).sqrt()),
        closed_form_agrees: ((measured_max - closed) / closed).abs() <= 1e-3,
        two_intersections_expected: probe_high > measured_max && probe_low < measured_min,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins::Quadratic;
    use crate::critical::find_critical_points;
    use crate::hess_region::hess_plus_mask;

    fn f1() -> crate::cassini::CassiniField {
        cassini_field(CassiniParams::new(1.0).unwrap())
    }

    #[test]
    fn known_collision_a1_c0() {
        let kc = known_collision(1.0, 0.0).unwrap();
        assert!(kc.p1.dist(Point2::new(3f64.sqrt() / 2.0, 0.5)) < 1e-15);
        assert_eq!(kc.p2.x, -kc.p1.x);
        assert!((kc.image[1] - 4.0).abs() < 1e-15);
        assert!(f1().value(kc.p1).abs() < 1e-12);
        assert!(matches!(known_collision(1.0, 3.0), Err(Error::Domain(_))));
        assert!(matches!(known_collision(1.0, -1.0), Err(Error::Domain(_))));
        assert!(known_collision(-1.0, 0.0).is_err());
    }

    #[test]
    fn quadratic_is_injective() {
        let grid = GridSpec::square(2.0, 100).unwrap();
        let all = RegionMask::from_predicate(&grid, crate::hess_region::PropertyTag::Custom, f64::NAN, |_| true)
            .unwrap();
        let rep = gradient_collision_scan(&Quadratic, &all, 20_000, 1e-4, 0.05).unwrap();
        assert_eq!(rep.verdict, InjectivityVerdict::NoCollisionFound);
        assert_eq!(rep.valence_lower_bound, 1);
    }

    #[test]
    fn cassini_overlevel_scans() {
        let f = f1();
        let grid = GridSpec::square(3.0, 300).unwrap();
        let high = overlevel_mask(&f, &grid, 3.05).unwrap();
        let rep = gradient_collision_scan(&f, &high, 50_000, 1e-4, 0.05).unwrap();
        assert_eq!(rep.verdict, InjectivityVerdict::NoCollisionFound, "{:?}", rep.collisions.first());
        let low = overlevel_mask(&f, &grid, 1.0).unwrap();
        let rep = gradient_collision_scan(&f, &low, 50_000, 1e-4, 0.05).unwrap();
        assert_eq!(rep.verdict, InjectivityVerdict::CollisionsFound);
        for c in &rep.collisions {
            assert!(c.image_gap <= 1e-4 && c.separation >= 0.05);
        }
    }

    #[test]
    fn cassini_valence() {
        let f = f1();
        let grid = GridSpec::square(3.0, 300).unwrap();
        let hess = hess_plus_mask(&f, &grid, 1e-9).unwrap();
        let crit = find_critical_points(&f, &grid, 1e-10, 60).unwrap();
        let scan = ScanOptions {
            samples: 50_000,
            ..ScanOptions::default()
        };
        let v = valence_bounds(&f, &hess, 3.0, &crit, &scan).unwrap();
        assert_eq!((v.components, v.lo, v.hi_conjectural), (2, 2, 3), "{v:?}");
        let q = valence_bounds(
            &Quadratic,
            &hess_plus_mask(&Quadratic, &grid, 1e-9).unwrap(),
            0.0,
            &find_critical_points(&Quadratic, &grid, 1e-10, 60).unwrap(),
            &scan,
        )
        .unwrap();
        assert_eq!((q.lo, q.hi_conjectural), (1, 1), "{q:?}");
    }

    #[test]
    fn monotonicity_examples() {
        let grid = GridSpec::square(3.0, 200).unwrap();
        assert!(monotonicity_check(&f1(), 3.0, &grid, 20_000).unwrap().holds);
        assert!(monotonicity_check(&Quadratic, 0.0, &grid, 5_000).unwrap().holds);
        let bad = monotonicity_check(&f1(), -1.0, &grid, 20_000).unwrap();
        assert!(!bad.holds && bad.worst.unwrap().value < 0.0);
    }

    #[test]
    fn axis_formula() {
        assert!((axis_grad_norm_sq(1.0, 0.5) - 2.25).abs() < 1e-14);
        let f = f1();
        for t in [-1.7, -0.3, 0.2, 1.1] {
            let g = f.gradient(Point2::new(t, 0.0));
            let n = g[0] * g[0] + g[1] * g[1];
            assert!((n - axis_grad_norm_sq(1.0, t)).abs() <= 1e-12 * (1.0 + n));
        }
    }

    #[test]
    fn gamma_scan_limits() {
        let s = gamma_level_scan(1.0, -0.5, -1e-9).unwrap();
        assert!((s.probe_high - 32.0).abs() < 1e-6);
        assert!(s.probe_low.abs() < 1e-6);
        assert!((s.max_grad_norm_sq_on_gamma_k - 16.0 * (1.0 + 0.5f64.sqrt())).abs() < 1e-12);
        assert!(((s.measured_max - s.axis_value) / s.axis_value).abs() < 1e-3, "{s:?}");
        assert!(gamma_level_scan(1.0, -0.2, -0.5).is_err());
        assert!(gamma_level_scan(1.0, -0.5, 0.1).is_err());
    }
}
