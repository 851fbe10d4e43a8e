//! Critical points of the Cassini field with Morse indices.

use truncvx::cassini::{cassini_field, CassiniParams};
use truncvx::critical::find_critical_points;
use truncvx::field::GridSpec;

fn main() -> truncvx::error::Result<()> {
    let f = cassini_field(CassiniParams::new(1.0)?);
    let report = find_critical_points(&f, &GridSpec::square(3.0, 200)?, 1e-10, 60)?;
    for p in &report.points {
        println!(
            "({:+.9}, {:+.9})  f = {:+.9}  index {:?}",
            p.location.x, p.location.y, p.value, p.morse_index
        );
    }
    println!("nu_max = {:?}", report.nu_max);
    Ok(())
}
