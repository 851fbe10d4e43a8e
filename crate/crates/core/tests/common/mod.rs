#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use truncvx::builtins::{ExpSum, Quadratic, Saddle};
use truncvx::cassini::{c_plus_minus_membership, cassini_field, g_field, CassiniParams, Lobe};
use truncvx::field::{
    check_derivatives, is_positive_semidefinite, GridSpec, MaxField, Point2, Polynomial, ScalarField2,
};
use truncvx::gradient_map::monotonicity_check;
use truncvx::truncation::{sublevel_convex_within, truncate, LevelProber, ProbeOptions};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_point(r: &mut ChaCha8Rng, half: f64) -> Point2 {
    Point2::new(r.gen_range(-half..half), r.gen_range(-half..half))
}

pub fn cassini(a: f64) -> truncvx::cassini::CassiniField {
    cassini_field(CassiniParams::new(a).unwrap())
}

/// Every analytic builtin plus a sample polynomial.
pub fn builtin_fields() -> Vec<(String, Box<dyn ScalarField2>)> {
    let mut out: Vec<(String, Box<dyn ScalarField2>)> = Vec::new();
    for a in [0.5, 1.0, 2.0] {
        out.push((format!("cassini(a={a})"), Box::new(cassini(a))));
    }
    out.push(("cassini-g(b=1)".into(), Box::new(g_field(1.0).unwrap())));
    out.push(("quadratic".into(), Box::new(Quadratic)));
    out.push(("saddle".into(), Box::new(Saddle)));
    out.push(("exp-sum".into(), Box::new(ExpSum)));
    out.push((
        "polynomial".into(),
        Box::new(Polynomial::parse("4,0,1; 0,4,1; 2,2,1; 2,0,-1; 1,1,0.5").unwrap()),
    ));
    out
}

fn frobenius(m: &truncvx::field::SymMat2) -> f64 {
    (m.a11 * m.a11 + 2.0 * m.a12 * m.a12 + m.a22 * m.a22).sqrt()
}

/// Analytic derivatives against central differences at 100 points per field.
pub fn derivative_violations() -> usize {
    let mut bad = 0;
    for (name, f) in builtin_fields() {
        let mut r = rng(101);
        for _ in 0..100 {
            let p = random_point(&mut r, 3.0);
            let c = check_derivatives(f.as_ref(), p, 1e-4).unwrap();
            let g = f.gradient(p);
            let gscale = 1.0 + g[0].hypot(g[1]);
            let hscale = 1.0 + frobenius(&f.hessian(p));
            if c.grad_err > 1e-4 * gscale || c.hess_err > 1e-2 * hscale {
                eprintln!("{name} at {p:?}: {c:?}");
                bad += 1;
            }
        }
    }
    bad
}

/// `T_q f ≥ f`, `T_q f ≥ q` and `T_{q1} f ≥ T_{q2} f` for `q1 ≥ q2`.
pub fn truncation_chain_violations() -> usize {
    let mut bad = 0;
    for (_, f) in builtin_fields() {
        let mut r = rng(102);
        for _ in 0..1000 {
            let p = random_point(&mut r, 3.0);
            let q2 = r.gen_range(-5.0..5.0);
            let q1 = q2 + r.gen_range(0.0..5.0);
            let v = f.value(p);
            let t1 = truncate(f.as_ref(), q1).unwrap().value(p);
            let t2 = truncate(f.as_ref(), q2).unwrap().value(p);
            if !(t1 >= v && t1 >= q1 && t2 >= v && t2 >= q2 && t1 >= t2) {
                bad += 1;
            }
        }
    }
    bad
}

/// `{T_q f ≤ r} = {f ≤ r}` for `r ≥ q`.
pub fn sublevel_identity_violations() -> usize {
    let mut bad = 0;
    for (_, f) in builtin_fields() {
        let mut r = rng(103);
        for _ in 0..1000 {
            let p = random_point(&mut r, 3.0);
            let q = r.gen_range(-5.0..5.0);
            let level = q + r.gen_range(0.0..5.0);
            let t = truncate(f.as_ref(), q).unwrap();
            if (t.value(p) <= level) != (f.value(p) <= level) {
                bad += 1;
            }
        }
    }
    bad
}

/// Points of `f_a` above `scl + 0.05` have a positive semidefinite Hessian.
pub fn hess0_inclusion_violations(a: f64, scl_hi: f64, psd_slack: f64) -> usize {
    let f = cassini(a);
    let mut r = rng(104);
    (0..20_000)
        .map(|_| random_point(&mut r, 3.0 * a))
        .filter(|&p| f.value(p) > scl_hi + 0.05)
        .filter(|&p| !is_positive_semidefinite(&f.hessian(p), psd_slack).unwrap())
        .count()
}

/// `⟨∇f(x) − ∇f(y), x − y⟩ ≥ 0` on `{f ≥ level}`.
pub fn monotonicity_violations(a: f64, level: f64) -> usize {
    let f = cassini(a);
    let grid = GridSpec::square(3.0 * a, 600).unwrap();
    monotonicity_check(&f, level, &grid, 20_000).unwrap().violations
}

/// Segments between points of `C⁻` (and of `C⁺`) stay in the same lobe.
pub fn lobe_convexity_violations(a: f64, pairs: usize) -> usize {
    let params = CassiniParams::new(a).unwrap();
    let mut r = rng(105);
    let mut bad = 0;
    for lobe in [Lobe::CMinus, Lobe::CPlus] {
        let mut pts = Vec::new();
        while pts.len() < 2 * pairs {
            let p = random_point(&mut r, 1.5 * a);
            if c_plus_minus_membership(params, p) == lobe {
                pts.push(p);
            }
        }
        for k in 0..pairs {
            let (x, y) = (pts[2 * k], pts[2 * k + 1]);
            for t in [0.1, 0.3, 0.5, 0.7, 0.9] {
                if c_plus_minus_membership(params, x.lerp(y, t)) != lobe {
                    bad += 1;
                }
            }
        }
    }
    bad
}

/// Sublevel sets of `f_a` restricted to `C⁻`, at `c ∈ {−0.9, −0.5, −0.1}·a⁴`.
pub fn lobe_quasiconvexity_violations(a: f64) -> usize {
    let f = cassini(a);
    let params = CassiniParams::new(a).unwrap();
    let grid = GridSpec::square(1.5 * a, 400).unwrap();
    let opts = ProbeOptions::default();
    [-0.9, -0.5, -0.1]
        .iter()
        .filter(|&&k| {
            let region = |p: Point2| c_plus_minus_membership(params, p) == Lobe::CMinus;
            !sublevel_convex_within(&f, k * a.powi(4), &grid, &opts, region)
                .unwrap()
                .passed()
        })
        .count()
}

/// `f_xx(t, 0)` changes sign across `t = −a/√3`.
pub fn axis_inflection_violations() -> usize {
    [0.5, 1.0, 2.0]
        .iter()
        .filter(|&&a| {
            let f = cassini(a);
            let t0 = -a / 3f64.sqrt();
            let left = f.hessian(Point2::new(t0 - 1e-3 * a, 0.0)).a11;
            let right = f.hessian(Point2::new(t0 + 1e-3 * a, 0.0)).a11;
            !(left > 0.0 && right < 0.0)
        })
        .count()
}

fn sql_hi<F: ScalarField2 + ?Sized>(f: &F, grid: &GridSpec, bracket: (f64, f64), tol: f64) -> f64 {
    let p = LevelProber::new(f, grid, &ProbeOptions::default()).unwrap();
    p.estimate_sql(bracket, tol).unwrap().hi
}

/// The quasiconvexity probe passes for `max{f, g}` at `max(sql_f, sql_g) + tol`.
pub fn max_of_two_violations() -> usize {
    let grid = GridSpec::square(3.0, 300).unwrap();
    let tol = 5e-3;
    let f1 = cassini(1.0);
    let s_c = sql_hi(&f1, &grid, (-1.0, 6.0), tol);
    let s_q = sql_hi(&Quadratic, &grid, (-1.0, 6.0), tol);
    let s_e = sql_hi(&ExpSum, &grid, (-1.0, 6.0), tol);
    let probe = |f: &dyn ScalarField2, q: f64| -> bool {
        let p = LevelProber::new(f, &grid, &ProbeOptions::default()).unwrap();
        p.sql_probe(q, p.window_max()).unwrap().is_none()
    };
    let cases = [
        probe(&MaxField::new(cassini(1.0), Quadratic), s_c.max(s_q) + tol),
        probe(&MaxField::new(cassini(1.0), ExpSum), s_c.max(s_e) + tol),
        probe(&MaxField::new(Quadratic, ExpSum), s_q.max(s_e) + tol),
    ];
    cases.iter().filter(|ok| !**ok).count()
}
