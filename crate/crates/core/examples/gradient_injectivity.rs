//! Gradient collisions above and below the convexity level, and monotonicity of the gradient.

use truncvx::cassini::{cassini_field, CassiniParams};
use truncvx::field::GridSpec;
use truncvx::gradient_map::{gamma_level_scan, gradient_collision_scan, monotonicity_check};
use truncvx::hess_region::overlevel_mask;

fn main() -> truncvx::error::Result<()> {
    let f = cassini_field(CassiniParams::new(1.0)?);
    let grid = GridSpec::square(3.0, 600)?;
    for level in [3.05, 1.0] {
        let region = overlevel_mask(&f, &grid, level)?;
        let r = gradient_collision_scan(&f, &region, 200_000, 1e-4, 4.0 * grid.cell_diagonal())?;
        println!(
            "{{f > {level}}}: {:?}, {} collisions, multiplicity >= {}",
            r.verdict,
            r.collisions.len(),
            r.valence_lower_bound
        );
    }
    let m = monotonicity_check(&f, 3.0, &grid, 20_000)?;
    println!("gradient monotone on {{f >= 3}}: {} ({} pairs)", m.holds, m.pairs_tested);
    let g = gamma_level_scan(1.0, -0.5, -0.25)?;
    println!(
        "max |grad f|^2 on the left oval of f = -0.5: measured {:.6}, axis value {:.6}",
        g.measured_max, g.axis_value
    );
    Ok(())
}
