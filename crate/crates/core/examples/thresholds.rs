//! Bisection for the quasiconvexity and convexity levels of truncations.

use truncvx::cassini::{cassini_field, CassiniParams};
use truncvx::field::{GridSpec, Point2, ScalarField2};
use truncvx::truncation::{classify_truncation, estimate_scl, estimate_sql, truncate, ProbeOptions};

fn main() -> truncvx::error::Result<()> {
    let f = cassini_field(CassiniParams::new(1.0)?);
    let grid = GridSpec::square(3.0, 600)?;
    for q in [1.0, 3.2] {
        let v = classify_truncation(&f, q, &grid, &ProbeOptions::default())?;
        println!("T_{q}(f): {:?}", v.kind);
    }
    let sql = estimate_sql(&f, (-1.0, 6.0), &grid, 5e-3)?;
    let scl = estimate_scl(&f, (-1.0, 6.0), &grid, 5e-3)?;
    let t = truncate(f, 3.0)?;
    println!("T_3(f) at the minimum (1, 0): {}", t.value(Point2::new(1.0, 0.0)));
    println!("sql in [{}, {}]", sql.lo, sql.hi);
    println!("scl in [{}, {}]", scl.lo, scl.hi);
    Ok(())
}
