//! Planar scalar fields, symmetric 2×2 matrices and the sampling window.
//!
//! Every analysis in this crate works on a [`ScalarField2`]: something that can
//! report its value, gradient and Hessian at any point of the plane. Builtin
//! fields implement the derivatives in closed form; black-box fields can be
//! wrapped in [`FiniteDifferenceField`], and [`check_derivatives`] compares the
//! two routes against each other.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Like [`Point2::new`] but rejects NaN and infinite coordinates.
    pub fn try_new(x: f64, y: f64) -> Result<Self> {
        if x.is_finite() && y.is_finite() {
            Ok(Self { x, y })
        } else {
            Err(invalid(format!("non-finite point ({x}, {y})")))
        }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn dist(&self, other: Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Point on the segment from `self` to `other` at parameter `t`.
    pub fn lerp(&self, other: Point2, t: f64) -> Point2 {
        Point2::new(
            self.x + t * (other.x - self.x),
            self.y + t * (other.y - self.y),
        )
    }

    pub fn offset(&self, dx: f64, dy: f64) -> Point2 {
        Point2::new(self.x + dx, self.y + dy)
    }

    /// Lexicographic comparison used for deterministic tie-breaking.
    pub fn lex_cmp(&self, other: &Point2) -> std::cmp::Ordering {
        self.x
            .total_cmp(&other.x)
            .then_with(|| self.y.total_cmp(&other.y))
    }
}

impl From<(f64, f64)> for Point2 {
    fn from((x, y): (f64, f64)) -> Self {
        Point2::new(x, y)
    }
}

/// Gradient (or any planar vector) as `[d/dx, d/dy]`.
pub type Vec2 = [f64; 2];

pub fn norm2(v: Vec2) -> f64 {
    v[0].hypot(v[1])
}

/// Symmetric 2×2 matrix `[[a11, a12], [a12, a22]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymMat2 {
    pub a11: f64,
    pub a12: f64,
    pub a22: f64,
}

impl SymMat2 {
    pub const IDENTITY: SymMat2 = SymMat2::new(1.0, 0.0, 1.0);
    pub const ZERO: SymMat2 = SymMat2::new(0.0, 0.0, 0.0);

    pub const fn new(a11: f64, a12: f64, a22: f64) -> Self {
        Self { a11, a12, a22 }
    }

    pub const fn diag(d1: f64, d2: f64) -> Self {
        Self::new(d1, 0.0, d2)
    }

    pub fn is_finite(&self) -> bool {
        self.a11.is_finite() && self.a12.is_finite() && self.a22.is_finite()
    }

    pub fn det(&self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a12
    }

    pub fn trace(&self) -> f64 {
        self.a11 + self.a22
    }

    pub fn frobenius(&self) -> f64 {
        (self.a11 * self.a11 + 2.0 * self.a12 * self.a12 + self.a22 * self.a22).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.a11.abs().max(self.a12.abs()).max(self.a22.abs())
    }

    pub fn scaled(&self, t: f64) -> SymMat2 {
        SymMat2::new(t * self.a11, t * self.a12, t * self.a22)
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let mean = 0.5 * self.trace();
        let half_diff = 0.5 * (self.a11 - self.a22);
        let r = half_diff.hypot(self.a12);
        (mean - r, mean + r)
    }

    pub fn mul_vec(&self, v: Vec2) -> Vec2 {
        [
            self.a11 * v[0] + self.a12 * v[1],
            self.a12 * v[0] + self.a22 * v[1],
        ]
    }

    /// Solves `self · x = rhs`; `None` when the matrix is numerically singular.
    pub fn solve(&self, rhs: Vec2) -> Option<Vec2> {
        let det = self.det();
        if det.abs() <= f64::EPSILON * self.max_abs().powi(2) || !det.is_finite() {
            return None;
        }
        Some([
            (self.a22 * rhs[0] - self.a12 * rhs[1]) / det,
            (self.a11 * rhs[1] - self.a12 * rhs[0]) / det,
        ])
    }

    /// Scale used by the definiteness margins: `max(1, a11², a22²)`.
    fn margin_scale(&self) -> f64 {
        1f64.max(self.a11 * self.a11).max(self.a22 * self.a22)
    }
}

fn check_matrix(m: &SymMat2, eps: f64) -> Result<()> {
    if !m.is_finite() {
        return Err(invalid(format!("non-finite matrix entries {m:?}")));
    }
    if !(eps >= 0.0) {
        return Err(invalid(format!("eps must be >= 0, got {eps}")));
    }
    Ok(())
}

/// Strict positive definiteness with margin `eps` (Sylvester's criterion).
///
/// The determinant margin is `eps² · max(1, a11², a22²)` so that the test
/// does not misfire on badly scaled Hessians.
pub fn is_positive_definite(m: &SymMat2, eps: f64) -> Result<bool> {
    check_matrix(m, eps)?;
    Ok(m.a11 > eps && m.det() > eps * eps * m.margin_scale())
}

pub fn is_positive_semidefinite(m: &SymMat2, eps: f64) -> Result<bool> {
    check_matrix(m, eps)?;
    Ok(m.a11 >= -eps && m.a22 >= -eps && m.det() >= -eps * m.margin_scale())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DerivativeMode {
    Analytic,
    FiniteDifference,
}

/// A C² scalar field on the plane.
///
/// Implementations must be pure: the same point always yields the same
/// value, gradient and Hessian, and evaluation may happen from many threads.
pub trait ScalarField2: Send + Sync {
    fn value(&self, p: Point2) -> f64;
    fn gradient(&self, p: Point2) -> Vec2;
    fn hessian(&self, p: Point2) -> SymMat2;

    fn derivative_mode(&self) -> DerivativeMode {
        DerivativeMode::Analytic
    }
}

impl<F: ScalarField2 + ?Sized> ScalarField2 for &F {
    fn value(&self, p: Point2) -> f64 {
        (**self).value(p)
    }
    fn gradient(&self, p: Point2) -> Vec2 {
        (**self).gradient(p)
    }
    fn hessian(&self, p: Point2) -> SymMat2 {
        (**self).hessian(p)
    }
    fn derivative_mode(&self) -> DerivativeMode {
        (**self).derivative_mode()
    }
}

impl<F: ScalarField2 + ?Sized> ScalarField2 for Box<F> {
    fn value(&self, p: Point2) -> f64 {
        (**self).value(p)
    }
    fn gradient(&self, p: Point2) -> Vec2 {
        (**self).gradient(p)
    }
    fn hessian(&self, p: Point2) -> SymMat2 {
        (**self).hessian(p)
    }
    fn derivative_mode(&self) -> DerivativeMode {
        (**self).derivative_mode()
    }
}

impl<F: ScalarField2 + ?Sized> ScalarField2 for Arc<F> {
    fn value(&self, p: Point2) -> f64 {
        (**self).value(p)
    }
    fn gradient(&self, p: Point2) -> Vec2 {
        (**self).gradient(p)
    }
    fn hessian(&self, p: Point2) -> SymMat2 {
        (**self).hessian(p)
    }
    fn derivative_mode(&self) -> DerivativeMode {
        (**self).derivative_mode()
    }
}

fn central_gradient(f: &impl Fn(Point2) -> f64, p: Point2, h: f64) -> Vec2 {
    [
        (f(p.offset(h, 0.0)) - f(p.offset(-h, 0.0))) / (2.0 * h),
        (f(p.offset(0.0, h)) - f(p.offset(0.0, -h))) / (2.0 * h),
    ]
}

fn central_hessian(f: &impl Fn(Point2) -> f64, p: Point2, h: f64) -> SymMat2 {
    let f0 = f(p);
    let h2 = h * h;
    let fxx = (f(p.offset(h, 0.0)) - 2.0 * f0 + f(p.offset(-h, 0.0))) / h2;
    let fyy = (f(p.offset(0.0, h)) - 2.0 * f0 + f(p.offset(0.0, -h))) / h2;
    let fxy = (f(p.offset(h, h)) - f(p.offset(h, -h)) - f(p.offset(-h, h))
        + f(p.offset(-h, -h)))
        / (4.0 * h2);
    SymMat2::new(fxx, fxy, fyy)
}

/// A black-box field whose derivatives come from central differences of its
/// values.
pub struct FiniteDifferenceField<F> {
    f: F,
    step: f64,
}

impl<F: Fn(Point2) -> f64 + Send + Sync> FiniteDifferenceField<F> {
    pub fn new(f: F, step: f64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(invalid(format!("finite-difference step must be > 0, got {step}")));
        }
        Ok(Self { f, step })
    }

    /// Uses the default step `1e-5 · window diagonal`.
    pub fn for_window(f: F, grid: &GridSpec) -> Self {
        Self {
            f,
            step: 1e-5 * grid.diagonal(),
        }
    }

    pub fn step(&self) -> f64 {
        self.step
    }
}

impl<F: Fn(Point2) -> f64 + Send + Sync> ScalarField2 for FiniteDifferenceField<F> {
    fn value(&self, p: Point2) -> f64 {
        (self.f)(p)
    }
    fn gradient(&self, p: Point2) -> Vec2 {
        central_gradient(&self.f, p, self.step)
    }
    fn hessian(&self, p: Point2) -> SymMat2 {
        central_hessian(&self.f, p, self.step)
    }
    fn derivative_mode(&self) -> DerivativeMode {
        DerivativeMode::FiniteDifference
    }
}

/// Pointwise maximum of two fields.
///
/// Not differentiable where the branches cross; derivatives are taken from
/// whichever branch is active (the first one on ties).
pub struct MaxField<A, B> {
    pub first: A,
    pub second: B,
}

impl<A: ScalarField2, B: ScalarField2> MaxField<A, B> {
    pub fn new(first: A, second: B) -> Self {
        Self { first, second }
    }

    fn first_active(&self, p: Point2) -> bool {
        self.first.value(p) >= self.second.value(p)
    }
}

impl<A: ScalarField2, B: ScalarField2> ScalarField2 for MaxField<A, B> {
    fn value(&self, p: Point2) -> f64 {
        self.first.value(p).max(self.second.value(p))
    }
    fn gradient(&self, p: Point2) -> Vec2 {
        if self.first_active(p) {
            self.first.gradient(p)
        } else {
            self.second.gradient(p)
        }
    }
    fn hessian(&self, p: Point2) -> SymMat2 {
        if self.first_active(p) {
            self.first.hessian(p)
        } else {
            self.second.hessian(p)
        }
    }
}

/// Max-norm discrepancies between analytic and finite-difference derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivativeCheck {
    pub grad_err: f64,
    pub hess_err: f64,
}

/// Compares `field.gradient`/`field.hessian` at `p` against central
/// differences of `field.value` with step `h`.
pub fn check_derivatives<F: ScalarField2 + ?Sized>(
    field: &F,
    p: Point2,
    h: f64,
) -> Result<DerivativeCheck> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(invalid(format!("step must be > 0, got {h}")));
    }
    if !p.is_finite() {
        return Err(invalid("non-finite point"));
    }
    let value = |q: Point2| field.value(q);
    let g_fd = central_gradient(&value, p, h);
    let h_fd = central_hessian(&value, p, h);
    let g = field.gradient(p);
    let hm = field.hessian(p);
    let grad_err = (g[0] - g_fd[0]).abs().max((g[1] - g_fd[1]).abs());
    let hess_err = (hm.a11 - h_fd.a11)
        .abs()
        .max((hm.a12 - h_fd.a12).abs())
        .max((hm.a22 - h_fd.a22).abs());
    Ok(DerivativeCheck { grad_err, hess_err })
}

/// Rectangular sampling window split into `nx × ny` cells.
///
/// Rasters sample the field at cell centers; cell `(i, j)` has linear index
/// `j * nx + i` with `j` growing with `y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64, nx: usize, ny: usize) -> Result<Self> {
        let grid = Self {
            x_min,
            x_max,
            y_min,
            y_max,
            nx,
            ny,
        };
        grid.validate()?;
        Ok(grid)
    }

    /// Square window `[-half, half]²` with `n × n` cells.
    pub fn square(half: f64, n: usize) -> Result<Self> {
        Self::new(-half, half, -half, half, n, n)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.x_min, self.x_max, self.y_min, self.y_max]
            .iter()
            .all(|v| v.is_finite());
        if !finite || !(self.x_min < self.x_max) || !(self.y_min < self.y_max) {
            return Err(invalid(format!(
                "window bounds must be finite with min < max, got x [{}, {}], y [{}, {}]",
                self.x_min, self.x_max, self.y_min, self.y_max
            )));
        }
        if self.nx < 2 || self.ny < 2 {
            return Err(invalid(format!(
                "need at least 2 cells per axis, got {}×{}",
                self.nx, self.ny
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        (self.y_max - self.y_min) / self.ny as f64
    }

    pub fn cell_diagonal(&self) -> f64 {
        self.dx().hypot(self.dy())
    }

    pub fn diagonal(&self) -> f64 {
        (self.x_max - self.x_min).hypot(self.y_max - self.y_min)
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn cell_coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.nx, idx / self.nx)
    }

    pub fn center(&self, i: usize, j: usize) -> Point2 {
        Point2::new(
            self.x_min + (i as f64 + 0.5) * self.dx(),
            self.y_min + (j as f64 + 0.5) * self.dy(),
        )
    }

    pub fn center_of(&self, idx: usize) -> Point2 {
        let (i, j) = self.cell_coords(idx);
        self.center(i, j)
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    /// Cell containing `p`, if `p` lies inside the window.
    pub fn cell_of(&self, p: Point2) -> Option<(usize, usize)> {
        if !self.contains(p) {
            return None;
        }
        let i = (((p.x - self.x_min) / self.dx()) as usize).min(self.nx - 1);
        let j = (((p.y - self.y_min) / self.dy()) as usize).min(self.ny - 1);
        Some((i, j))
    }

    /// Same window with both cell counts doubled.
    pub fn refined(&self) -> GridSpec {
        GridSpec {
            nx: 2 * self.nx,
            ny: 2 * self.ny,
            ..*self
        }
    }
}

/// `Σ c · xⁱ yʲ` given as a dense list of monomial triples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    pub terms: Vec<Monomial>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub i: u32,
    pub j: u32,
    pub c: f64,
}

impl Polynomial {
    pub fn new(terms: Vec<Monomial>) -> Result<Self> {
        if let Some(m) = terms.iter().find(|m| !m.c.is_finite()) {
            return Err(invalid(format!("non-finite coefficient in term {m:?}")));
        }
        Ok(Self { terms })
    }

    /// Parses `"i,j,c;i,j,c;..."`.
    pub fn parse(spec: &str) -> Result<Self> {
        let mut terms = Vec::new();
        for chunk in spec.split(';').map(str::trim).filter(|s| !s.is_empty()) {
            let parts: Vec<&str> = chunk.split(',').map(str::trim).collect();
            if parts.len() != 3 {
                return Err(invalid(format!("monomial {chunk:?} must be `i,j,c`")));
            }
            let i = parts[0]
                .parse()
                .map_err(|_| invalid(format!("bad x exponent in {chunk:?}")))?;
            let j = parts[1]
                .parse()
                .map_err(|_| invalid(format!("bad y exponent in {chunk:?}")))?;
            let c = parts[2]
                .parse()
                .map_err(|_| invalid(format!("bad coefficient in {chunk:?}")))?;
            terms.push(Monomial { i, j, c });
        }
        if terms.is_empty() {
            return Err(invalid("polynomial has no terms"));
        }
        Self::new(terms)
    }
}

/// `d^k/dx^k xⁿ` as (coefficient, remaining exponent).
fn dpow(n: u32, k: u32) -> Option<(f64, i32)> {
    if k > n {
        return None;
    }
    let coeff = (0..k).map(|m| (n - m) as f64).product();
    Some((coeff, (n - k) as i32))
}

impl Polynomial {
    fn partial(&self, p: Point2, kx: u32, ky: u32) -> f64 {
        self.terms
            .iter()
            .filter_map(|m| {
                let (cx, ex) = dpow(m.i, kx)?;
                let (cy, ey) = dpow(m.j, ky)?;
                Some(m.c * cx * cy * p.x.powi(ex) * p.y.powi(ey))
            })
            .sum()
    }
}

impl ScalarField2 for Polynomial {
    fn value(&self, p: Point2) -> f64 {
        self.partial(p, 0, 0)
    }
    fn gradient(&self, p: Point2) -> Vec2 {
        [self.partial(p, 1, 0), self.partial(p, 0, 1)]
    }
    fn hessian(&self, p: Point2) -> SymMat2 {
        SymMat2::new(
            self.partial(p, 2, 0),
            self.partial(p, 1, 1),
            self.partial(p, 0, 2),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    #[test]
    fn definiteness_examples() {
        assert!(is_positive_definite(&SymMat2::IDENTITY, 0.0).unwrap());
        assert!(!is_positive_definite(&SymMat2::diag(-4.0, 4.0), 0.0).unwrap());
        assert!(is_positive_definite(&SymMat2::diag(8.0, 8.0), 0.0).unwrap());

        assert!(is_positive_semidefinite(&SymMat2::ZERO, 0.0).unwrap());
        assert!(is_positive_semidefinite(&SymMat2::diag(8.0, 8.0), 0.0).unwrap());
        assert!(!is_positive_semidefinite(&SymMat2::diag(-4.0, 4.0), 0.0).unwrap());
    }

    #[test]
    fn definiteness_rejects_bad_input() {
        let nan = SymMat2::new(f64::NAN, 0.0, 1.0);
        assert!(matches!(is_positive_definite(&nan, 0.0), Err(Error::InvalidInput(_))));
        assert!(is_positive_semidefinite(&SymMat2::new(1.0, f64::INFINITY, 1.0), 0.0).is_err());
        assert!(is_positive_definite(&SymMat2::IDENTITY, -1.0).is_err());
    }

    #[test]
    fn margin_shrinks_the_cone() {
        // det = 1e-6, below eps² · max(1, a11², a22²) = 1e-4.
        let m = SymMat2::diag(1.0, 1e-6);
        assert!(is_positive_definite(&m, 0.0).unwrap());
        assert!(!is_positive_definite(&m, 1e-2).unwrap());
    }

    #[test]
    fn eigenvalues_and_solve() {
        let m = SymMat2::new(2.0, 1.0, 2.0);
        let (l1, l2) = m.eigenvalues();
        assert!((l1 - 1.0).abs() < 1e-15 && (l2 - 3.0).abs() < 1e-15);
        let x = m.solve([3.0, 3.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
        assert!(SymMat2::new(1.0, 1.0, 1.0).solve([1.0, 0.0]).is_none());
    }

    #[test]
    fn grid_validation() {
        assert!(GridSpec::new(0.0, 1.0, 0.0, 1.0, 2, 2).is_ok());
        assert!(GridSpec::new(1.0, 0.0, 0.0, 1.0, 4, 4).is_err());
        assert!(GridSpec::new(0.0, 1.0, 0.0, 1.0, 1, 4).is_err());
        assert!(GridSpec::new(0.0, f64::NAN, 0.0, 1.0, 4, 4).is_err());
    }

    #[test]
    fn grid_cell_lookup_round_trips() {
        let g = GridSpec::new(-2.0, 2.0, -1.0, 3.0, 40, 20).unwrap();
        for idx in [0, 7, 399, 799] {
            let (i, j) = g.cell_coords(idx);
            assert_eq!(g.cell_of(g.center(i, j)), Some((i, j)));
        }
        assert_eq!(g.cell_of(Point2::new(2.0, 3.0)), Some((39, 19)));
        assert_eq!(g.cell_of(Point2::new(2.1, 0.0)), None);
    }

    #[test]
    fn polynomial_matches_finite_differences() {
        // 3x²y - y³ + 2xy + 1
        let p = Polynomial::parse("2,1,3; 0,3,-1; 1,1,2; 0,0,1").unwrap();
        let at = Point2::new(0.4, -1.3);
        assert!((p.value(at) - (3.0 * 0.16 * -1.3 + 2.197 + 2.0 * 0.4 * -1.3 + 1.0)).abs() < 1e-12);
        let chk = check_derivatives(&p, at, 1e-4).unwrap();
        assert!(chk.grad_err < 1e-6 && chk.hess_err < 1e-4, "{chk:?}");
    }

    #[test]
    fn polynomial_parse_errors() {
        assert!(Polynomial::parse("").is_err());
        assert!(Polynomial::parse("1,2").is_err());
        assert!(Polynomial::parse("a,0,1").is_err());
        assert!(Polynomial::parse("1,0,inf").is_err());
    }

    #[test]
    fn finite_difference_field_tracks_analytic() {
        let poly = Polynomial::parse("4,0,1; 0,4,1; 2,0,-2; 0,2,2").unwrap();
        let fd = FiniteDifferenceField::new(|p: Point2| poly.value(p), 1e-4).unwrap();
        assert_eq!(fd.derivative_mode(), DerivativeMode::FiniteDifference);
        let at = Point2::new(0.7, 0.2);
        let (g, ga) = (fd.gradient(at), poly.gradient(at));
        assert!((g[0] - ga[0]).abs() < 1e-6 && (g[1] - ga[1]).abs() < 1e-6);
        let (h, ha) = (fd.hessian(at), poly.hessian(at));
        assert!((h.a11 - ha.a11).abs() < 1e-4 && (h.a12 - ha.a12).abs() < 1e-4);
        assert!(FiniteDifferenceField::new(|_: Point2| 0.0, 0.0).is_err());
    }
}
