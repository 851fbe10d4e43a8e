//! Truncations `T_q(f) = max(q, f)` and the levels above which they become
//! quasiconvex (`sql`) or convex (`scl`).
//!
//! The convexity probes are falsifiers: a `Convex` verdict means that no
//! violation was found among `samples_used` sampled pairs. Pairs come from
//! three pools. Chords between nearby vertices of the extracted level curve
//! catch shallow dents of the boundary, random pairs catch disconnected or
//! grossly nonconvex sets, and short random segments catch interior
//! nonconvexity of the truncation.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::contour::{march, Polyline};
use crate::error::{invalid, Error, Result};
use crate::field::{GridSpec, Point2, ScalarField2, SymMat2, Vec2};
use crate::sampling::{raster_values, rng, stratified, value_scale, DEFAULT_SEED};

/// `T_q(f)`. Derivatives are those of `f` where `f ≥ q` and zero below.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedField<F> {
    pub base: F,
    pub q: f64,
}

pub fn truncate<F: ScalarField2>(field: F, q: f64) -> Result<TruncatedField<F>> {
    if !q.is_finite() {
        return Err(invalid(format!("truncation level must be finite, got {q}")));
    }
    Ok(TruncatedField { base: field, q })
}

impl<F: ScalarField2> ScalarField2 for TruncatedField<F> {
    fn value(&self, p: Point2) -> f64 {
        self.base.value(p).max(self.q)
    }
    fn gradient(&self, p: Point2) -> Vec2 {
        if self.base.value(p) >= self.q {
            self.base.gradient(p)
        } else {
            [0.0, 0.0]
        }
    }
    fn hessian(&self, p: Point2) -> SymMat2 {
        if self.base.value(p) >= self.q {
            self.base.hessian(p)
        } else {
            SymMat2::ZERO
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictKind {
    Convex,
    QuasiconvexOnly,
    Neither,
}

/// A segment `[x, y]` along which the tested inequality fails.
///
/// For sublevel tests `f(x_t) > r + tol`. For chord tests `s < t < u` and
/// `T(x_t)` exceeds the chord through `T(x_s)` and `T(x_u)` by `excess`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Counterexample {
    pub x: Point2,
    pub y: Point2,
    pub t: f64,
    pub s: Option<f64>,
    pub u: Option<f64>,
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvexityVerdict {
    pub kind: VerdictKind,
    pub counterexample: Option<Counterexample>,
    pub samples_used: usize,
    pub level: f64,
    pub violation_tol: f64,
    /// The tested set had no sampled point; the verdict is vacuous.
    pub empty: bool,
}

impl ConvexityVerdict {
    pub fn passed(&self) -> bool {
        self.kind == VerdictKind::Convex
    }
}

/// Relative violation tolerance: `tol = DEFAULT_VIOLATION_REL · (1 + max|f|)`.
pub const DEFAULT_VIOLATION_REL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbeOptions {
    /// Random pairs per probe, on top of the systematic level-curve chords.
    pub pair_samples: usize,
    /// Interior parameters per segment.
    pub seg_samples: usize,
    /// Rungs above `q` probed by the bisection estimators.
    pub probe_levels: usize,
    pub seed: u64,
    /// Absolute tolerance; derived from the raster scale when `None`.
    pub violation_tol: Option<f64>,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        Self {
            pair_samples: 4000,
            seg_samples: 3,
            probe_levels: 8,
            seed: DEFAULT_SEED,
            violation_tol: None,
        }
    }
}

impl ProbeOptions {
    fn validate(&self) -> Result<()> {
        if self.pair_samples < 1 {
            return Err(invalid("pair_samples must be >= 1"));
        }
        if self.seg_samples < 3 {
            return Err(invalid("seg_samples must be >= 3"));
        }
        if self.probe_levels < 1 {
            return Err(invalid("probe_levels must be >= 1"));
        }
        if let Some(t) = self.violation_tol {
            if !(t > 0.0) {
                return Err(invalid(format!("violation_tol must be > 0, got {t}")));
            }
        }
        Ok(())
    }
}

/// Vertex offsets along a level curve used for chord pairs.
const CURVE_OFFSETS: [usize; 11] = [2, 3, 4, 6, 8, 12, 16, 24, 32, 48, 64];

const SUBLEVEL_STREAM: u64 = 11;
const CHORD_STREAM: u64 = 12;

/// Raster cache shared by all probes on one field and window.
pub struct LevelProber<'a, F: ?Sized> {
    field: &'a F,
    grid: GridSpec,
    values: Vec<f64>,
    window_min: f64,
    window_max: f64,
    tol: f64,
    opts: ProbeOptions,
}

impl<'a, F: ScalarField2 + ?Sized> LevelProber<'a, F> {
    pub fn new(field: &'a F, grid: &GridSpec, opts: &ProbeOptions) -> Result<Self> {
        grid.validate()?;
        opts.validate()?;
        let values = raster_values(field, grid);
        let finite = values.iter().copied().filter(|v| v.is_finite());
        let window_min = finite.clone().fold(f64::INFINITY, f64::min);
        let window_max = finite.fold(f64::NEG_INFINITY, f64::max);
        let tol = opts
            .violation_tol
            .unwrap_or(DEFAULT_VIOLATION_REL * (1.0 + value_scale(&values)));
        Ok(Self {
            field,
            grid: *grid,
            values,
            window_min,
            window_max,
            tol,
            opts: *opts,
        })
    }

    pub fn violation_tol(&self) -> f64 {
        self.tol
    }

    pub fn window_min(&self) -> f64 {
        self.window_min
    }

    pub fn window_max(&self) -> f64 {
        self.window_max
    }

    /// Sublevel set `{f ≤ r}` tested for convexity.
    pub fn sublevel(&self, r: f64) -> ConvexityVerdict {
        self.sublevel_where(r, &|_| true)
    }

    /// Sublevel set `{f ≤ r} ∩ region`; chord points must also stay in `region`.
    pub fn sublevel_where(&self, r: f64, region: &(dyn Fn(Point2) -> bool + Sync)) -> ConvexityVerdict {
        let cells: Vec<usize> = (0..self.grid.len())
            .filter(|&k| self.values[k] <= r && region(self.grid.center_of(k)))
            .collect();
        let curves = march(self.field, &self.values, &self.grid, r);
        let vertices: Vec<Point2> = curves
            .iter()
            .flat_map(|p| p.points.iter().copied())
            .filter(|&p| region(p))
            .collect();
        if cells.is_empty() && vertices.is_empty() {
            return self.verdict(r, None, 0, true);
        }

        let mut rng = rng(self.opts.seed ^ r.to_bits(), SUBLEVEL_STREAM);
        let mut pairs = curve_pairs(&curves, |p| region(p));
        let half = self.opts.pair_samples.div_ceil(2);
        if vertices.len() >= 2 {
            for _ in 0..half {
                pairs.push((
                    vertices[rng.gen_range(0..vertices.len())],
                    vertices[rng.gen_range(0..vertices.len())],
                ));
            }
        }
        if !cells.is_empty() {
            for _ in 0..self.opts.pair_samples - half {
                let a = cells[rng.gen_range(0..cells.len())];
                let b = cells[rng.gen_range(0..cells.len())];
                pairs.push((self.grid.center_of(a), self.grid.center_of(b)));
            }
        }
        let params: Vec<Vec<f64>> = pairs
            .iter()
            .map(|_| stratified(&mut rng, self.opts.seg_samples))
            .collect();

        let tol = self.tol;
        let hit = pairs.par_iter().zip(params.par_iter()).find_map_first(|(&(x, y), ts)| {
            ts.iter().find_map(|&t| {
                let p = x.lerp(y, t);
                let excess = self.field.value(p) - r;
                (excess > tol || !region(p)).then_some(Counterexample {
                    x,
                    y,
                    t,
                    s: None,
                    u: None,
                    excess,
                })
            })
        });
        self.verdict(r, hit, pairs.len(), false)
    }

    /// Chord test of `T_q(f)` along sampled segments.
    pub fn truncation(&self, q: f64) -> ConvexityVerdict {
        let grid = &self.grid;
        let curves = march(self.field, &self.values, grid, q);
        let mut rng = rng(self.opts.seed ^ q.to_bits(), CHORD_STREAM);
        let mut pairs = curve_pairs(&curves, |_| true);

        let half = self.opts.pair_samples.div_ceil(2);
        for _ in 0..half {
            let x = Point2::new(
                rng.gen_range(grid.x_min..=grid.x_max),
                rng.gen_range(grid.y_min..=grid.y_max),
            );
            let y = Point2::new(
                rng.gen_range(grid.x_min..=grid.x_max),
                rng.gen_range(grid.y_min..=grid.y_max),
            );
            pairs.push((x, y));
        }
        let over: Vec<usize> = (0..grid.len()).filter(|&k| self.values[k] > q).collect();
        let diag = grid.cell_diagonal();
        for _ in 0..self.opts.pair_samples - half {
            let k = if over.is_empty() {
                rng.gen_range(0..grid.len())
            } else {
                over[rng.gen_range(0..over.len())]
            };
            let x = grid.center_of(k);
            let rho = rng.gen_range(0.5..8.0) * diag;
            let theta = rng.gen_range(0.0..std::f64::consts::TAU);
            pairs.push((x, x.offset(rho * theta.cos(), rho * theta.sin())));
        }
        let params: Vec<Vec<f64>> = pairs
            .iter()
            .map(|_| stratified(&mut rng, self.opts.seg_samples))
            .collect();

        let tol = self.tol;
        let t_q = |p: Point2| self.field.value(p).max(q);
        let hit = pairs.par_iter().zip(params.par_iter()).find_map_first(|(&(x, y), ts)| {
            let mut knots = Vec::with_capacity(ts.len() + 2);
            knots.push(0.0);
            knots.extend_from_slice(ts);
            knots.push(1.0);
            let vals: Vec<f64> = knots.iter().map(|&t| t_q(x.lerp(y, t))).collect();
            let last = knots.len() - 1;
            let consecutive = (0..last - 1).map(|k| (k, k + 1, k + 2));
            let spanning = (1..last).map(|k| (0, k, last));
            consecutive.chain(spanning).find_map(|(a, b, c)| {
                let (s, t, u) = (knots[a], knots[b], knots[c]);
                let w = (t - s) / (u - s);
                let chord = (1.0 - w) * vals[a] + w * vals[c];
                let excess = vals[b] - chord;
                (excess > tol).then_some(Counterexample {
                    x,
                    y,
                    t,
                    s: Some(s),
                    u: Some(u),
                    excess,
                })
            })
        });
        self.verdict(q, hit, pairs.len(), false)
    }

    fn verdict(&self, level: f64, hit: Option<Counterexample>, samples: usize, empty: bool) -> ConvexityVerdict {
        ConvexityVerdict {
            kind: if hit.is_some() {
                VerdictKind::Neither
            } else {
                VerdictKind::Convex
            },
            counterexample: hit,
            samples_used: samples,
            level,
            violation_tol: self.tol,
            empty,
        }
    }

    fn ladder(&self, q: f64, top: f64) -> Vec<f64> {
        let n = self.opts.probe_levels;
        if !(top > q) {
            return vec![q];
        }
        (0..=n).map(|k| q + k as f64 * (top - q) / n as f64).collect()
    }

    /// First failing rung of the sublevel ladder on `[q, top]`, if any.
    /// `Err` when every rung was empty.
    pub fn sql_probe(&self, q: f64, top: f64) -> Result<Option<ConvexityVerdict>> {
        let mut all_empty = true;
        for r in self.ladder(q, top) {
            let v = self.sublevel(r);
            all_empty &= v.empty;
            if !v.passed() {
                return Ok(Some(v));
            }
        }
        if all_empty {
            return Err(Error::Inconclusive(format!(
                "every sublevel set on [{q}, {top}] is empty in the window"
            )));
        }
        Ok(None)
    }

    /// First failing rung of the truncation ladder on `[q, top]`, if any.
    /// A convex `T_r(f)` has convex sublevels, so each rung runs the sublevel
    /// test on `{f <= r}` before the chord test.
    pub fn scl_probe(&self, q: f64, top: f64) -> Result<Option<ConvexityVerdict>> {
        for r in self.ladder(q, top) {
            let s = self.sublevel(r);
            if !s.passed() {
                return Ok(Some(s));
            }
            let v = self.truncation(r);
            if !v.passed() {
                return Ok(Some(v));
            }
        }
        Ok(None)
    }

    pub fn estimate_sql(&self, bracket: (f64, f64), bisect_tol: f64) -> Result<LevelBracket> {
        self.bisect(bracket, bisect_tol, |q, top| self.sql_probe(q, top))
    }

    pub fn estimate_scl(&self, bracket: (f64, f64), bisect_tol: f64) -> Result<LevelBracket> {
        self.bisect(bracket, bisect_tol, |q, top| self.scl_probe(q, top))
    }

    fn bisect(
        &self,
        (lo, hi): (f64, f64),
        bisect_tol: f64,
        probe: impl Fn(f64, f64) -> Result<Option<ConvexityVerdict>>,
    ) -> Result<LevelBracket> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(invalid(format!("bracket must satisfy lo < hi, got ({lo}, {hi})")));
        }
        if !(bisect_tol > 0.0) {
            return Err(invalid(format!("bisect_tol must be > 0, got {bisect_tol}")));
        }
        if hi < self.window_min {
            return Err(Error::NotStraddling {
                lo,
                hi,
                reason: format!("upper end lies below the window minimum {}", self.window_min),
            });
        }
        // Below inf f the truncation is f itself, so the search starts there.
        let lo_eff = lo.max(self.window_min);
        let mut steps = Vec::new();

        let top = probe(hi, hi)?;
        steps.push(BisectionStep::new(hi, &top));
        if top.is_some() {
            return Err(Error::NotStraddling {
                lo,
                hi,
                reason: "the upper end fails the probe".into(),
            });
        }
        let bottom = probe(lo_eff, hi)?;
        steps.push(BisectionStep::new(lo_eff, &bottom));
        if bottom.is_none() {
            return Ok(LevelBracket {
                lo: lo_eff,
                hi: lo_eff,
                below_lower_end: true,
                bisect_tol,
                steps,
            });
        }

        let (mut a, mut b) = (lo_eff, hi);
        while b - a > bisect_tol {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            let out = probe(mid, b)?;
            steps.push(BisectionStep::new(mid, &out));
            if out.is_none() {
                b = mid;
            } else {
                a = mid;
            }
        }
        Ok(LevelBracket {
            lo: a,
            hi: b,
            below_lower_end: false,
            bisect_tol,
            steps,
        })
    }
}

fn curve_pairs(curves: &[Polyline], keep: impl Fn(Point2) -> bool) -> Vec<(Point2, Point2)> {
    let mut pairs = Vec::new();
    for line in curves {
        let n = line.points.len();
        for i in 0..n {
            for &o in CURVE_OFFSETS.iter().filter(|&&o| o < n) {
                let j = if line.closed {
                    (i + o) % n
                } else if i + o < n {
                    i + o
                } else {
                    continue;
                };
                let (x, y) = (line.points[i], line.points[j]);
                if keep(x) && keep(y) {
                    pairs.push((x, y));
                }
            }
        }
    }
    pairs
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BisectionStep {
    pub q: f64,
    pub passed: bool,
    /// Rung that failed, when the probe failed.
    pub failing_level: Option<f64>,
}

impl BisectionStep {
    fn new(q: f64, out: &Option<ConvexityVerdict>) -> Self {
        Self {
            q,
            passed: out.is_none(),
            failing_level: out.as_ref().map(|v| v.level),
        }
    }
}

/// Final bisection bracket `[lo, hi]` for a threshold level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelBracket {
    pub lo: f64,
    pub hi: f64,
    /// The probe already passed at the lower end: the threshold is at most
    /// `lo` and possibly `−∞`.
    pub below_lower_end: bool,
    pub bisect_tol: f64,
    pub steps: Vec<BisectionStep>,
}

impl LevelBracket {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }
}

pub fn sublevel_convex<F: ScalarField2 + ?Sized>(
    field: &F,
    r: f64,
    grid: &GridSpec,
    pair_samples: usize,
    seg_samples: usize,
) -> Result<ConvexityVerdict> {
    let opts = ProbeOptions {
        pair_samples,
        seg_samples,
        ..ProbeOptions::default()
    };
    Ok(LevelProber::new(field, grid, &opts)?.sublevel(r))
}

/// `{f ≤ r} ∩ region` tested for convexity.
pub fn sublevel_convex_within<F, R>(
    field: &F,
    r: f64,
    grid: &GridSpec,
    opts: &ProbeOptions,
    region: R,
) -> Result<ConvexityVerdict>
where
    F: ScalarField2 + ?Sized,
    R: Fn(Point2) -> bool + Sync,
{
    Ok(LevelProber::new(field, grid, opts)?.sublevel_where(r, &region))
}

pub fn truncation_convex<F: ScalarField2 + ?Sized>(
    field: &F,
    q: f64,
    grid: &GridSpec,
    pair_samples: usize,
    seg_samples: usize,
) -> Result<ConvexityVerdict> {
    let opts = ProbeOptions {
        pair_samples,
        seg_samples,
        ..ProbeOptions::default()
    };
    Ok(LevelProber::new(field, grid, &opts)?.truncation(q))
}

/// Convex, quasiconvex only, or neither, for the single truncation `T_q(f)`.
///
/// Quasiconvexity is probed on the sublevel ladder between `q` and the
/// window maximum of `f`.
pub fn classify_truncation<F: ScalarField2 + ?Sized>(
    field: &F,
    q: f64,
    grid: &GridSpec,
    opts: &ProbeOptions,
) -> Result<ConvexityVerdict> {
    let prober = LevelProber::new(field, grid, opts)?;
    let chord = prober.truncation(q);
    if chord.passed() {
        return Ok(chord);
    }
    let top = prober.window_max().max(q);
    let quasi = match prober.sql_probe(q.max(prober.window_min()), top) {
        Ok(v) => v,
        Err(Error::Inconclusive(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(match quasi {
        None => ConvexityVerdict {
            kind: VerdictKind::QuasiconvexOnly,
            ..chord
        },
        Some(v) => ConvexityVerdict {
            samples_used: chord.samples_used + v.samples_used,
            ..chord
        },
    })
}

pub fn estimate_sql<F: ScalarField2 + ?Sized>(
    field: &F,
    bracket: (f64, f64),
    grid: &GridSpec,
    bisect_tol: f64,
) -> Result<LevelBracket> {
    LevelProber::new(field, grid, &ProbeOptions::default())?.estimate_sql(bracket, bisect_tol)
}

pub fn estimate_scl<F: ScalarField2 + ?Sized>(
    field: &F,
    bracket: (f64, f64),
    grid: &GridSpec,
    bisect_tol: f64,
) -> Result<LevelBracket> {
    LevelProber::new(field, grid, &ProbeOptions::default())?.estimate_scl(bracket, bisect_tol)
}

/// Subdifferential of `T_q(f)` at a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Subdifferential {
    /// `{∇f(p)}`, above the level.
    SingletonGrad { grad: Vec2 },
    /// `{t·∇f(p) : t ∈ [0, 1]}`, on the level.
    SegmentZeroToGrad { grad: Vec2 },
    /// `{0}`, below the level.
    SingletonZero,
}

impl Subdifferential {
    pub fn contains(&self, v: Vec2, tol: f64) -> bool {
        match *self {
            Subdifferential::SingletonGrad { grad } => (v[0] - grad[0]).hypot(v[1] - grad[1]) <= tol,
            Subdifferential::SingletonZero => v[0].hypot(v[1]) <= tol,
            Subdifferential::SegmentZeroToGrad { grad } => {
                let gg = grad[0] * grad[0] + grad[1] * grad[1];
                let t = if gg > 0.0 {
                    ((v[0] * grad[0] + v[1] * grad[1]) / gg).clamp(0.0, 1.0)
                } else {
                    0.0
                };
                (v[0] - t * grad[0]).hypot(v[1] - t * grad[1]) <= tol
            }
        }
    }
}

pub fn subdifferential_of_truncation<F: ScalarField2 + ?Sized>(
    field: &F,
    q: f64,
    p: Point2,
    tol: f64,
) -> Result<Subdifferential> {
    if !q.is_finite() {
        return Err(invalid(format!("truncation level must be finite, got {q}")));
    }
    let v = field.value(p);
    Ok(if v > q + tol {
        Subdifferential::SingletonGrad { grad: field.gradient(p) }
    } else if v < q - tol {
        Subdifferential::SingletonZero
    } else {
        Subdifferential::SegmentZeroToGrad { grad: field.gradient(p) }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins::{ExpSum, Quadratic, Saddle};
    use crate::cassini::{cassini_field, CassiniField, CassiniParams};

    fn f(a: f64) -> CassiniField {
        cassini_field(CassiniParams::new(a).unwrap())
    }

    fn win(a: f64) -> GridSpec {
        GridSpec::square(3.0 * a, 600).unwrap()
    }

    #[test]
    fn truncated_values() {
        let t = truncate(Quadratic, 1.0).unwrap();
        assert_eq!(t.value(Point2::ORIGIN), 1.0);
        assert_eq!(t.value(Point2::new(2.0, 0.0)), 4.0);
        assert_eq!(truncate(f(1.0), 3.0).unwrap().value(Point2::new(1.0, 0.0)), 3.0);
        assert!(truncate(Quadratic, f64::NAN).is_err());
    }

    #[test]
    fn sublevel_examples() {
        let g = GridSpec::square(2.0, 200).unwrap();
        assert!(sublevel_convex(&Quadratic, 1.0, &g, 2000, 3).unwrap().passed());
        let two = sublevel_convex(&f(1.0), -0.5, &g, 2000, 3).unwrap();
        assert_eq!(two.kind, VerdictKind::Neither);
        let cx = two.counterexample.unwrap();
        assert!(f(1.0).value(cx.x.lerp(cx.y, cx.t)) > -0.5 + two.violation_tol);
        assert!(sublevel_convex(&f(1.0), 3.5, &win(1.0), 2000, 3).unwrap().passed());
        let empty = sublevel_convex(&f(1.0), -2.0, &g, 100, 3).unwrap();
        assert!(empty.empty && empty.passed());
        assert!(sublevel_convex(&f(1.0), 1.0, &g, 10, 2).is_err());
    }

    #[test]
    fn truncation_examples() {
        let g = win(1.0);
        assert!(truncation_convex(&Quadratic, 0.5, &g, 2000, 3).unwrap().passed());
        assert!(truncation_convex(&f(1.0), 3.2, &g, 2000, 3).unwrap().passed());
        let v = truncation_convex(&f(1.0), 1.0, &g, 2000, 3).unwrap();
        assert_eq!(v.kind, VerdictKind::Neither);
        assert!(v.counterexample.unwrap().excess > v.violation_tol);
        assert!(!truncation_convex(&Saddle, 0.0, &g, 2000, 3).unwrap().passed());
    }

    #[test]
    fn classify_single_truncations() {
        let g = GridSpec::square(3.0, 300).unwrap();
        let o = ProbeOptions::default();
        assert_eq!(classify_truncation(&f(1.0), 3.5, &g, &o).unwrap().kind, VerdictKind::Convex);
        assert_eq!(classify_truncation(&f(1.0), 1.0, &g, &o).unwrap().kind, VerdictKind::Neither);
        // Sublevels of a concave-in-places but radially increasing field.
        let bump = crate::field::Polynomial::parse("4,0,1;0,4,1;2,0,-1").unwrap();
        let k = classify_truncation(&bump, -0.2, &g, &o).unwrap().kind;
        assert_eq!(k, VerdictKind::Neither);
    }

    #[test]
    fn sql_scl_cassini_a1() {
        let field = f(1.0);
        let p = LevelProber::new(&field, &win(1.0), &ProbeOptions::default()).unwrap();
        let sql = p.estimate_sql((-1.0, 6.0), 1e-2).unwrap();
        assert!(sql.contains(3.0) && sql.width() <= 1e-2, "{sql:?}");
        let scl = p.estimate_scl((-1.0, 6.0), 1e-2).unwrap();
        assert!(scl.contains(3.0) && scl.width() <= 1e-2, "{scl:?}");
    }

    #[test]
    fn convex_fields_sit_at_the_lower_end() {
        let g = GridSpec::square(2.0, 101).unwrap();
        let sql = estimate_sql(&Quadratic, (-1.0, 1.0), &g, 1e-3).unwrap();
        assert!(sql.below_lower_end && sql.hi.abs() < 1e-3, "{sql:?}");
        let scl = estimate_scl(&Quadratic, (-1.0, 1.0), &g, 1e-3).unwrap();
        assert!(scl.below_lower_end && scl.hi.abs() < 1e-3);
        let e = estimate_scl(&ExpSum, (-1.0, 1.0), &g, 1e-3).unwrap();
        assert!(e.below_lower_end);
    }

    #[test]
    fn bracket_must_straddle() {
        let g = GridSpec::square(3.0, 200).unwrap();
        assert!(matches!(
            estimate_sql(&f(1.0), (-1.0, 2.0), &g, 1e-2),
            Err(Error::NotStraddling { .. })
        ));
        assert!(matches!(
            estimate_sql(&Saddle, (-1.0, 1.0), &g, 1e-2),
            Err(Error::NotStraddling { .. })
        ));
        assert!(estimate_sql(&f(1.0), (2.0, 1.0), &g, 1e-2).is_err());
    }

    #[test]
    fn subdifferential_cases() {
        let field = f(1.0);
        // f(0, y) = y⁴ + 2y².
        let above = Point2::new(0.0, (-1.0f64 + 6.0f64.sqrt()).sqrt());
        let on = Point2::new(0.0, 1.0);
        let below = Point2::new(0.0, (-1.0f64 + 2.0f64.sqrt()).sqrt());
        assert!((field.value(above) - 5.0).abs() < 1e-12);
        match subdifferential_of_truncation(&field, 3.0, above, 1e-9).unwrap() {
            Subdifferential::SingletonGrad { grad } => assert_eq!(grad, field.gradient(above)),
            other => panic!("{other:?}"),
        }
        assert_eq!(
            subdifferential_of_truncation(&field, 3.0, below, 1e-9).unwrap(),
            Subdifferential::SingletonZero
        );
        let seg = subdifferential_of_truncation(&field, 3.0, on, 1e-9).unwrap();
        let g = field.gradient(on);
        assert_eq!(seg, Subdifferential::SegmentZeroToGrad { grad: g });
        assert!(seg.contains([0.5 * g[0], 0.5 * g[1]], 1e-12));
        assert!(!seg.contains([2.0 * g[0], 2.0 * g[1]], 1e-12));
    }
}
