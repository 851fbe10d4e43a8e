//! Which Cassini levels bound convex regions: nonempty, regular, one curvature sign.
//!
//! Pass a path to also write the curves as SVG.

use truncvx::cassini::{cassini_field, CassiniParams};
use truncvx::contour::level_curve;
use truncvx::curvature::classify_levels;
use truncvx::field::GridSpec;
use truncvx::report::levels_table;
use truncvx::svg::level_curves_svg;

fn main() -> truncvx::error::Result<()> {
    let f = cassini_field(CassiniParams::new(1.0)?);
    let grid = GridSpec::square(3.0, 600)?;
    let levels = [-0.5, -0.1, 0.0, 0.5, 1.0, 2.0, 3.0, 4.0, 6.0];
    print!("{}", levels_table(&classify_levels(&f, &levels, &grid)?));
    if let Some(path) = std::env::args().nth(1) {
        let curves = levels
            .iter()
            .map(|&c| level_curve(&f, c, &grid))
            .collect::<Result<Vec<_>, _>>()?;
        std::fs::write(&path, level_curves_svg(&curves, &grid))?;
        println!("wrote {path}");
    }
    Ok(())
}
