mod common;

use proptest::prelude::*;

use truncvx::builtins::{ExpSum, Quadratic};
use truncvx::cassini::{c_plus_minus_membership, CassiniParams, Lobe};
use truncvx::field::{is_positive_definite, is_positive_semidefinite, Point2, ScalarField2, SymMat2};
use truncvx::gradient_map::known_collision;
use truncvx::hess_region::{h_max, hess_plus_mask, lipschitz_estimate};
use truncvx::field::GridSpec;
use truncvx::truncation::{subdifferential_of_truncation, truncate};

use common::cassini;

fn point(half: f64) -> impl Strategy<Value = Point2> {
    (-half..half, -half..half).prop_map(|(x, y)| Point2::new(x, y))
}

fn sym() -> impl Strategy<Value = SymMat2> {
    (-10.0..10.0f64, -10.0..10.0f64, -10.0..10.0f64).prop_map(|(a, b, c)| SymMat2::new(a, b, c))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn pd_implies_psd(m in sym()) {
        if is_positive_definite(&m, 0.0).unwrap() {
            prop_assert!(is_positive_semidefinite(&m, 0.0).unwrap());
        }
    }

    #[test]
    fn pd_scale_invariant(m in sym(), t in 1e-3..1e3f64) {
        let scaled = SymMat2::new(t * m.a11, t * m.a12, t * m.a22);
        prop_assert_eq!(is_positive_definite(&m, 0.0).unwrap(), is_positive_definite(&scaled, 0.0).unwrap());
    }

    #[test]
    fn truncation_chain(p in point(3.0), q2 in -5.0..5.0f64, dq in 0.0..5.0f64, a in 0.5..2.0f64) {
        let f = cassini(a);
        let q1 = q2 + dq;
        let t1 = truncate(&f, q1).unwrap().value(p);
        let t2 = truncate(&f, q2).unwrap().value(p);
        let v = f.value(p);
        prop_assert!(t1 >= v && t1 >= q1);
        prop_assert!(t2 >= v && t2 >= q2);
        prop_assert!(t1 >= t2);
    }

    #[test]
    fn sublevel_identity(p in point(3.0), q in -2.0..5.0f64, dr in 0.0..5.0f64) {
        let f = cassini(1.0);
        let r = q + dr;
        let t = truncate(&f, q).unwrap();
        prop_assert_eq!(t.value(p) <= r, f.value(p) <= r);
    }

    #[test]
    fn known_collisions_verify(ai in 0..3usize, s in 0.01..0.99f64) {
        let a = [0.5, 1.0, 2.0][ai];
        let a4: f64 = a * a * a * a;
        let c = -a4 + s * 4.0 * a4;
        let k = known_collision(a, c).unwrap();
        let f = cassini(a);
        let (g1, g2) = (f.gradient(k.p1), f.gradient(k.p2));
        let scale = 1.0 + g1[0].hypot(g1[1]);
        prop_assert!((g1[0] - g2[0]).abs() <= 1e-9 * scale && (g1[1] - g2[1]).abs() <= 1e-9 * scale);
        prop_assert!((f.value(k.p1) - c).abs() <= 1e-9 * (1.0 + c.abs()));
        prop_assert!((f.value(k.p2) - c).abs() <= 1e-9 * (1.0 + c.abs()));
        prop_assert!(k.p1.dist(k.p2) > 0.0);
    }

    #[test]
    fn known_collision_rejects_outside_band(ai in 0..3usize, s in prop_oneof![-3.0..-0.0001f64, 1.0001..3.0f64]) {
        let a = [0.5, 1.0, 2.0][ai];
        let a4: f64 = a * a * a * a;
        prop_assert!(known_collision(a, -a4 + s * 4.0 * a4).is_err());
    }

    #[test]
    fn lobes_are_mirror_images(p in point(1.5)) {
        let params = CassiniParams::new(1.0).unwrap();
        let m = c_plus_minus_membership(params, p);
        let mirrored = c_plus_minus_membership(params, Point2::new(-p.x, p.y));
        let expect = match m {
            Lobe::CMinus => Lobe::CPlus,
            Lobe::CPlus => Lobe::CMinus,
            Lobe::Neither => Lobe::Neither,
        };
        prop_assert_eq!(mirrored, expect);
    }

    #[test]
    fn truncation_subdifferential(p in point(2.0), q in -0.9..5.0f64) {
        let f = cassini(1.0);
        let v = f.value(p);
        prop_assume!((v - q).abs() > 1e-6);
        let d = subdifferential_of_truncation(&f, q, p, 1e-9).unwrap();
        if v > q {
            prop_assert!(d.contains(f.gradient(p), 1e-9));
        } else {
            prop_assert!(d.contains([0.0, 0.0], 1e-9));
        }
    }

    #[test]
    fn max_field_dominates(p in point(3.0)) {
        let m = truncvx::field::MaxField::new(Quadratic, ExpSum);
        prop_assert!(m.value(p) >= Quadratic.value(p) && m.value(p) >= ExpSum.value(p));
    }
}

#[test]
fn derivative_checks() {
    assert_eq!(common::derivative_violations(), 0);
}

#[test]
fn truncation_chain_on_builtins() {
    assert_eq!(common::truncation_chain_violations(), 0);
}

#[test]
fn sublevel_identity_on_builtins() {
    assert_eq!(common::sublevel_identity_violations(), 0);
}

#[test]
fn overlevel_in_hess_plus0() {
    assert_eq!(common::hess0_inclusion_violations(1.0, 3.0, 1e-6), 0);
}

#[test]
fn gradient_monotone_on_closed_overlevel() {
    assert_eq!(common::monotonicity_violations(1.0, 3.0), 0);
}

#[test]
fn lobes_convex() {
    assert_eq!(common::lobe_convexity_violations(1.0, 10_000), 0);
}

#[test]
fn lobes_quasiconvex() {
    assert_eq!(common::lobe_quasiconvexity_violations(1.0), 0);
}

#[test]
fn axis_second_derivative_flips() {
    assert_eq!(common::axis_inflection_violations(), 0);
}

#[test]
fn max_of_two_bound() {
    assert_eq!(common::max_of_two_violations(), 0);
}

#[test]
fn h_max_refinement_monotone() {
    // Doubling the resolution loses at most one Lipschitz step of the raster maximum.
    let f = cassini(1.0);
    let coarse = GridSpec::square(2.0, 100).unwrap();
    let fine = coarse.refined();
    let l = lipschitz_estimate(&f, &fine);
    let hc = h_max(&f, &hess_plus_mask(&f, &coarse, 0.0).unwrap(), 0).unwrap();
    let hf = h_max(&f, &hess_plus_mask(&f, &fine, 0.0).unwrap(), 0).unwrap();
    assert!(hf.raster_value >= hc.raster_value - l * coarse.cell_diagonal());
    let refined = h_max(&f, &hess_plus_mask(&f, &coarse, 0.0).unwrap(), 60).unwrap();
    assert!(refined.value >= refined.raster_value);
}
