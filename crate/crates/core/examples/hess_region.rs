//! Rasterize Hess+ of the Cassini field and estimate h_max.
//!
//! Pass a path to also write the mask as PGM.

use truncvx::cassini::{cassini_field, CassiniParams};
use truncvx::field::GridSpec;
use truncvx::hess_region::{complement_bounded, h_max, hess_plus_mask};

fn main() -> truncvx::error::Result<()> {
    let f = cassini_field(CassiniParams::new(1.0)?);
    let grid = GridSpec::square(2.0, 400)?;
    let mask = hess_plus_mask(&f, &grid, 0.0)?;
    let h = h_max(&f, &mask, 60)?;
    println!("Hess+ cells: {} of {}", mask.count_true(), grid.len());
    println!("complement bounded in window: {}", complement_bounded(&mask, 5)?);
    println!("h_max = {} at ({:.6}, {:.6}), raster {}", h.value, h.witness.x, h.witness.y, h.raster_value);
    if let Some(path) = std::env::args().nth(1) {
        mask.write_pgm(path.as_ref())?;
        println!("wrote {path}");
    }
    Ok(())
}
