//! Level-curve extraction by marching squares.
//!
//! The raster nodes are the cell centers of the [`GridSpec`]. Every edge
//! crossing is polished by bisection on the edge, so vertices satisfy
//! `|f − c|` at the level of rounding error rather than of the grid spacing.
//! Ambiguous (saddle) squares are resolved with the field value at the
//! square center. Pinched curves through a critical point are returned as
//! they come out of the raster, with `regular = false`; polylines meeting at
//! the pinch are counted as one component.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::critical::{newton, CriticalOptions};
use crate::error::Result;
use crate::field::{norm2, GridSpec, Point2, ScalarField2};
use crate::sampling::raster_values;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Polyline {
    /// Serialized as `[[x, y], ...]`.
    #[serde(serialize_with = "as_pairs")]
    pub points: Vec<Point2>,
    /// Closed polylines do not repeat their first vertex.
    pub closed: bool,
}

fn as_pairs<S: serde::Serializer>(points: &[Point2], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(points.iter().map(|p| [p.x, p.y]))
}

impl Polyline {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelCurve {
    pub level: f64,
    pub polylines: Vec<Polyline>,
    pub regular: bool,
    /// Connected components after joining polylines at detected pinch points.
    pub components: usize,
    pub min_grad_norm: Option<f64>,
    /// Critical points found on the level.
    pub pinch_points: Vec<Point2>,
    /// Largest `|f − level|` over the vertices.
    pub max_residual: f64,
}

impl LevelCurve {
    pub fn is_empty(&self) -> bool {
        self.polylines.iter().all(Polyline::is_empty)
    }

    pub fn vertices(&self) -> impl Iterator<Item = Point2> + '_ {
        self.polylines.iter().flat_map(|p| p.points.iter().copied())
    }

    pub fn vertex_count(&self) -> usize {
        self.polylines.iter().map(Polyline::len).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourOptions {
    /// Levels where some vertex has `‖∇f‖` at or below this are non-regular.
    pub regularity_tol: f64,
    /// Number of smallest-`‖∇f‖` vertices used as seeds for the pinch search.
    pub pinch_seeds: usize,
}

impl Default for ContourOptions {
    fn default() -> Self {
        Self {
            regularity_tol: 1e-8,
            pinch_seeds: 16,
        }
    }
}

pub fn level_curve<F: ScalarField2 + ?Sized>(field: &F, c: f64, grid: &GridSpec) -> Result<LevelCurve> {
    level_curve_with(field, c, grid, &ContourOptions::default())
}

pub fn level_curve_with<F: ScalarField2 + ?Sized>(
    field: &F,
    c: f64,
    grid: &GridSpec,
    opts: &ContourOptions,
) -> Result<LevelCurve> {
    grid.validate()?;
    let values = raster_values(field, grid);
    let polylines = march(field, &values, grid, c);

    let verts: Vec<Point2> = polylines.iter().flat_map(|p| p.points.iter().copied()).collect();
    let gnorms: Vec<f64> = verts.par_iter().map(|&p| norm2(field.gradient(p))).collect();
    let min_grad_norm = gnorms.iter().copied().reduce(f64::min);
    let max_residual = verts
        .par_iter()
        .map(|&p| (field.value(p) - c).abs())
        .reduce(|| 0.0, f64::max);

    let pinch_points = find_pinches(field, grid, c, &verts, &gnorms, opts.pinch_seeds);
    let regular = pinch_points.is_empty() && min_grad_norm.map_or(true, |g| g > opts.regularity_tol);
    let components = count_components(&polylines, &pinch_points, 3.0 * grid.cell_diagonal());

    Ok(LevelCurve {
        level: c,
        polylines,
        regular,
        components,
        min_grad_norm,
        pinch_points,
        max_residual,
    })
}

/// Critical points at level `c` near the curve, found by Newton from the
/// vertices with the smallest gradient norm.
fn find_pinches<F: ScalarField2 + ?Sized>(
    field: &F,
    grid: &GridSpec,
    c: f64,
    verts: &[Point2],
    gnorms: &[f64],
    seeds: usize,
) -> Vec<Point2> {
    let mut order: Vec<usize> = (0..verts.len()).collect();
    order.sort_by(|&a, &b| gnorms[a].total_cmp(&gnorms[b]).then(a.cmp(&b)));
    order.truncate(seeds);
    let reach = 3.0 * grid.cell_diagonal();
    let level_tol = 1e-8 * (1.0 + c.abs());
    let opts = CriticalOptions {
        newton_tol: 1e-11,
        max_iters: 40,
        ..CriticalOptions::default()
    };
    let mut found: Vec<Point2> = Vec::new();
    for idx in order {
        let seed = verts[idx];
        let Some((p, _)) = newton(field, grid, seed, &opts) else {
            continue;
        };
        if p.dist(seed) <= reach
            && (field.value(p) - c).abs() <= level_tol
            && found.iter().all(|q| q.dist(p) > reach)
        {
            found.push(p);
        }
    }
    found.sort_by(Point2::lex_cmp);
    found
}

fn count_components(polylines: &[Polyline], pinches: &[Point2], radius: f64) -> usize {
    let n = polylines.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for pinch in pinches {
        let touching: Vec<usize> = (0..n)
            .filter(|&k| polylines[k].points.iter().any(|p| p.dist(*pinch) <= radius))
            .collect();
        for w in touching.windows(2) {
            let (a, b) = (root(&mut parent, w[0]), root(&mut parent, w[1]));
            parent[a] = b;
        }
    }
    (0..n).filter(|&k| root(&mut parent, k) == k).count()
}

/// Marching squares over precomputed cell-center values.
pub(crate) fn march<F: ScalarField2 + ?Sized>(
    field: &F,
    values: &[f64],
    grid: &GridSpec,
    c: f64,
) -> Vec<Polyline> {
    let nx = grid.nx;
    let below = |i: usize, j: usize| values[grid.index(i, j)] < c;
    // Edge ids: 2·node for the edge to the right of a node, 2·node + 1 for
    // the edge above it.
    let h_edge = |i: usize, j: usize| 2 * (j * nx + i);
    let v_edge = |i: usize, j: usize| 2 * (j * nx + i) + 1;

    let mut segments: Vec<(usize, usize)> = Vec::new();
    for j in 0..grid.ny - 1 {
        for i in 0..nx - 1 {
            let b00 = below(i, j);
            let b10 = below(i + 1, j);
            let b11 = below(i + 1, j + 1);
            let b01 = below(i, j + 1);
            let bottom = (b00 != b10).then(|| h_edge(i, j));
            let right = (b10 != b11).then(|| v_edge(i + 1, j));
            let top = (b01 != b11).then(|| h_edge(i, j + 1));
            let left = (b00 != b01).then(|| v_edge(i, j));
            match (bottom, right, top, left) {
                (Some(b), Some(r), Some(t), Some(l)) => {
                    let center = grid.center(i, j).offset(0.5 * grid.dx(), 0.5 * grid.dy());
                    if (field.value(center) < c) == b00 {
                        // Center joins the 00–11 diagonal: cut off corners 10 and 01.
                        segments.push((b, r));
                        segments.push((t, l));
                    } else {
                        segments.push((l, b));
                        segments.push((r, t));
                    }
                }
                edges => {
                    let mut it = [edges.0, edges.1, edges.2, edges.3].into_iter().flatten();
                    if let (Some(e1), Some(e2)) = (it.next(), it.next()) {
                        segments.push((e1, e2));
                    }
                }
            }
        }
    }
    if segments.is_empty() {
        return Vec::new();
    }

    let mut edge_ids: Vec<usize> = segments.iter().flat_map(|&(a, b)| [a, b]).collect();
    edge_ids.sort_unstable();
    edge_ids.dedup();
    let vertices: Vec<Point2> = edge_ids
        .par_iter()
        .map(|&e| {
            let node = e / 2;
            let (i, j) = grid.cell_coords(node);
            let (i2, j2) = if e % 2 == 0 { (i + 1, j) } else { (i, j + 1) };
            polish_on_edge(field, c, grid.center(i, j), grid.center(i2, j2), values[grid.index(i, j)])
        })
        .collect();
    let vertex_of: HashMap<usize, usize> = edge_ids.iter().enumerate().map(|(k, &e)| (e, k)).collect();

    let mut adj: HashMap<usize, Vec<usize>> = HashMap::new();
    for (s, &(a, b)) in segments.iter().enumerate() {
        adj.entry(a).or_default().push(s);
        adj.entry(b).or_default().push(s);
    }
    let mut used = vec![false; segments.len()];
    let mut polylines = Vec::new();

    let walk = |start_edge: usize, used: &mut Vec<bool>| -> (Vec<usize>, bool) {
        let mut chain = vec![start_edge];
        let mut cur = start_edge;
        loop {
            let next = adj[&cur].iter().copied().find(|&s| !used[s]);
            let Some(s) = next else { break };
            used[s] = true;
            let (a, b) = segments[s];
            cur = if a == cur { b } else { a };
            if cur == start_edge {
                return (chain, true);
            }
            chain.push(cur);
        }
        (chain, false)
    };

    // Open chains start at edges used by a single segment (window border).
    for &e in &edge_ids {
        if adj[&e].len() == 1 && !used[adj[&e][0]] {
            let (chain, closed) = walk(e, &mut used);
            polylines.push((chain, closed));
        }
    }
    for s in 0..segments.len() {
        if !used[s] {
            let (chain, closed) = walk(segments[s].0, &mut used);
            polylines.push((chain, closed));
        }
    }

    polylines
        .into_iter()
        .map(|(chain, closed)| Polyline {
            points: chain.iter().map(|e| vertices[vertex_of[e]]).collect(),
            closed,
        })
        .collect()
}

/// Bisection for `f = c` on the segment between two raster nodes that lie on
/// opposite sides of the level.
fn polish_on_edge<F: ScalarField2 + ?Sized>(field: &F, c: f64, p: Point2, q: Point2, fp: f64) -> Point2 {
    let (mut lo, mut hi) = if fp < c { (p, q) } else { (q, p) };
    for _ in 0..64 {
        let mid = lo.lerp(hi, 0.5);
        if mid == lo || mid == hi {
            break;
        }
        if field.value(mid) < c {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if (field.value(lo) - c).abs() < (field.value(hi) - c).abs() {
        lo
    } else {
        hi
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins::Quadratic;
    use crate::cassini::{cassini_field, CassiniParams};

    fn f1() -> crate::cassini::CassiniField {
        cassini_field(CassiniParams::new(1.0).unwrap())
    }

    #[test]
    fn circle() {
        let grid = GridSpec::square(2.0, 101).unwrap();
        let lc = level_curve(&Quadratic, 1.0, &grid).unwrap();
        assert_eq!(lc.polylines.len(), 1);
        assert!(lc.polylines[0].closed);
        assert!(lc.regular);
        assert_eq!(lc.components, 1);
        assert!(lc.max_residual < 1e-14);
        for p in lc.vertices() {
            assert!((p.dist(Point2::ORIGIN) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn empty_level() {
        let lc = level_curve(&f1(), -2.0, &GridSpec::square(2.0, 50).unwrap()).unwrap();
        assert!(lc.is_empty());
        assert_eq!(lc.components, 0);
        assert!(lc.regular);
    }

    #[test]
    fn cassini_two_ovals() {
        let lc = level_curve(&f1(), -0.5, &GridSpec::square(2.0, 400).unwrap()).unwrap();
        assert_eq!(lc.components, 2);
        assert!(lc.regular);
        assert!(lc.polylines.iter().all(|p| p.closed));
    }

    #[test]
    fn cassini_single_regular_oval() {
        let lc = level_curve(&f1(), 4.0, &GridSpec::square(2.0, 400).unwrap()).unwrap();
        assert_eq!(lc.components, 1);
        assert!(lc.regular);
    }

    #[test]
    fn lemniscate_is_pinched() {
        for n in [400, 401] {
            let lc = level_curve(&f1(), 0.0, &GridSpec::square(2.0, n).unwrap()).unwrap();
            assert!(!lc.regular, "n={n}");
            assert_eq!(lc.components, 1, "n={n}");
            assert_eq!(lc.pinch_points.len(), 1);
            assert!(lc.pinch_points[0].dist(Point2::ORIGIN) < 1e-9);
        }
    }

    #[test]
    fn clipped_curve_is_open() {
        let grid = GridSpec::new(0.0, 2.0, -2.0, 2.0, 60, 120).unwrap();
        let lc = level_curve(&Quadratic, 1.0, &grid).unwrap();
        assert_eq!(lc.polylines.len(), 1);
        assert!(!lc.polylines[0].closed);
    }
}
